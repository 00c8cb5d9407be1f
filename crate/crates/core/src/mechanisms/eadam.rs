use std::collections::BTreeSet;

use super::da::{interrupters, run, DaTrace};
use super::Market;
use crate::error::Result;
use crate::instance::{Instance, Matching, SchoolId, StudentId};

/// One deferred-acceptance rerun and the pairs removed after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EadamRound {
    pub matching: Matching,
    pub trace: DaTrace,
    /// Consenting interrupters of the last such step, with their schools.
    /// Empty in the final round.
    pub removed: Vec<(StudentId, SchoolId)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EadamOutcome {
    pub matching: Matching,
    pub rounds: Vec<EadamRound>,
}

impl EadamOutcome {
    /// Every removal in the order it happened.
    pub fn removals(&self) -> Vec<(StudentId, SchoolId)> {
        self.rounds.iter().flat_map(|r| r.removed.iter().copied()).collect()
    }
}

/// Efficiency-adjusted deferred acceptance.
///
/// Each round reruns deferred acceptance and finds the latest step at which
/// a consenting interrupter is rejected from the school it interrupted.
/// Every consenting pair of that step loses the school from its list.
pub fn eadam(instance: &Instance, consenters: &BTreeSet<StudentId>) -> Result<EadamOutcome> {
    let mut market = Market::new(instance)?;
    let mut rounds = Vec::new();
    loop {
        let (matching, trace) = run(&market);
        let pairs: Vec<_> = interrupters(&trace)
            .into_iter()
            .filter(|p| consenters.contains(&p.student))
            .collect();
        let Some(last) = pairs.iter().map(|p| p.rejection_step).max() else {
            rounds.push(EadamRound {
                matching: matching.clone(),
                trace,
                removed: Vec::new(),
            });
            return Ok(EadamOutcome { matching, rounds });
        };
        let removed: Vec<(StudentId, SchoolId)> = pairs
            .iter()
            .filter(|p| p.rejection_step == last)
            .map(|p| (p.student, p.school))
            .collect();
        for &(i, s) in &removed {
            market.lists[i.0].retain(|&x| x != s);
        }
        rounds.push(EadamRound {
            matching,
            trace,
            removed,
        });
    }
}
