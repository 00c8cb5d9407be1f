//! School-choice matching with weak preferences and priorities.
//!
//! The crate covers student-proposing deferred acceptance with a full step
//! trace, efficiency-adjusted deferred acceptance, top trading cycles,
//! coalitional improvement through cabal loops, and trading-clique
//! improvement on the deferred-acceptance baseline. [`oracle`] enumerates
//! every matching of a small instance and is the ground truth the rest is
//! tested against; [`strategy`] samples random problems to probe incentive
//! properties.

pub mod analysis;
pub mod coalitions;
pub mod error;
pub mod format;
pub mod instance;
pub mod mechanisms;
pub mod oracle;
pub mod random;
pub mod strategy;
pub mod tadam;

pub use error::{Error, Result};
pub use instance::{
    Instance, Matching, Preference, PreferenceProfile, PriorityStructure, Rank, SchoolId,
    StudentId, Violation, WeakOrder,
};
