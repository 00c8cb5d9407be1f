//! Deferred acceptance, its efficiency adjustment, and top trading cycles.
//!
//! All three run on strict reports. Reports may be truncated: a school
//! missing from a student's list is never proposed to or pointed at.

mod da;
mod eadam;
mod ttc;

pub use da::{hopeless_students, interrupters, sosm, sosm_with_lists, DaStep, DaTrace, InterrupterPair};
pub use eadam::{eadam, EadamOutcome, EadamRound};
pub use ttc::{ttc, ttc_with_lists};

use crate::error::Result;
use crate::instance::{Instance, SchoolId};

/// Strict lists plus priority ranks, the common input of the mechanisms.
#[derive(Clone, Debug)]
pub(crate) struct Market {
    pub lists: Vec<Vec<SchoolId>>,
    /// `prio_rank[s][i]`, lower is better.
    pub prio_rank: Vec<Vec<u32>>,
    pub capacity: Vec<u32>,
}

impl Market {
    pub fn new(instance: &Instance) -> Result<Market> {
        instance.require_strict()?;
        let lists = instance.students().map(|i| instance.pref(i).flatten()).collect();
        Ok(Market::with_lists(instance, lists))
    }

    /// Uses the given student lists; priorities must be strict.
    pub fn with_lists(instance: &Instance, lists: Vec<Vec<SchoolId>>) -> Market {
        let n = instance.num_students();
        let prio_rank = instance
            .schools()
            .map(|s| {
                let mut rank = vec![u32::MAX; n];
                for (r, i) in instance.prio(s).flatten().into_iter().enumerate() {
                    rank[i.0] = r as u32;
                }
                rank
            })
            .collect();
        Market {
            lists,
            prio_rank,
            capacity: instance.capacities().to_vec(),
        }
    }

    pub fn num_students(&self) -> usize {
        self.lists.len()
    }

    pub fn num_schools(&self) -> usize {
        self.capacity.len()
    }
}
