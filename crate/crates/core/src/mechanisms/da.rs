use std::collections::BTreeSet;

use super::Market;
use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, SchoolId, StudentId};

/// One proposal wave. Per-school vectors are indexed by school id and
/// sorted by student id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaStep {
    /// New proposals received this step.
    pub proposals: Vec<Vec<StudentId>>,
    /// Tentatively accepted students after the step.
    pub held: Vec<Vec<StudentId>>,
    pub rejected: Vec<Vec<StudentId>>,
    pub proposers: Vec<StudentId>,
    /// Students rejected this step whose lists are now used up.
    pub exhausted: Vec<StudentId>,
}

impl DaStep {
    pub fn has_rejections(&self) -> bool {
        self.rejected.iter().any(|r| !r.is_empty())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DaTrace {
    pub steps: Vec<DaStep>,
}

impl DaTrace {
    /// Step `t`, counting from 1.
    pub fn step(&self, t: usize) -> &DaStep {
        &self.steps[t - 1]
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Student-proposing deferred acceptance on a strict instance.
pub fn sosm(instance: &Instance) -> Result<(Matching, DaTrace)> {
    let market = Market::new(instance)?;
    Ok(run(&market))
}

/// Deferred acceptance where each student proposes down `lists[i]` only.
/// Priorities must be strict; lists may omit schools.
pub fn sosm_with_lists(instance: &Instance, lists: Vec<Vec<SchoolId>>) -> Result<(Matching, DaTrace)> {
    if let Some(s) = instance.schools().find(|&s| !instance.prio(s).is_strict()) {
        return Err(Error::NonStrict(format!(
            "priority of {} has ties",
            instance.school_name(s)
        )));
    }
    for list in &lists {
        if let Some(s) = list.iter().find(|s| s.0 >= instance.num_schools()) {
            return Err(Error::UnknownSchool(s.0));
        }
    }
    Ok(run(&Market::with_lists(instance, lists)))
}

pub(crate) fn run(market: &Market) -> (Matching, DaTrace) {
    let (n, m) = (market.num_students(), market.num_schools());
    let mut next = vec![0usize; n];
    let mut engaged = vec![false; n];
    let mut held: Vec<Vec<StudentId>> = vec![Vec::new(); m];
    let mut steps = Vec::new();

    loop {
        let proposers: Vec<StudentId> = (0..n)
            .filter(|&i| !engaged[i] && next[i] < market.lists[i].len())
            .map(StudentId)
            .collect();
        if proposers.is_empty() {
            break;
        }
        let mut proposals: Vec<Vec<StudentId>> = vec![Vec::new(); m];
        for &i in &proposers {
            let s = market.lists[i.0][next[i.0]];
            next[i.0] += 1;
            proposals[s.0].push(i);
        }
        let mut rejected: Vec<Vec<StudentId>> = vec![Vec::new(); m];
        for s in 0..m {
            if proposals[s].is_empty() {
                continue;
            }
            let mut pool: Vec<StudentId> = held[s].iter().chain(&proposals[s]).copied().collect();
            pool.sort_by_key(|i| market.prio_rank[s][i.0]);
            let keep = (market.capacity[s] as usize).min(pool.len());
            let mut out = pool.split_off(keep);
            pool.sort();
            out.sort();
            for i in &pool {
                engaged[i.0] = true;
            }
            for i in &out {
                engaged[i.0] = false;
            }
            held[s] = pool;
            rejected[s] = out;
        }
        let exhausted = rejected
            .iter()
            .flatten()
            .filter(|i| next[i.0] >= market.lists[i.0].len())
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        steps.push(DaStep {
            proposals,
            held: held.clone(),
            rejected,
            proposers,
            exhausted,
        });
    }

    let mut matching = Matching::unassigned(n);
    for (s, students) in held.iter().enumerate() {
        for &i in students {
            matching.set(i, Some(SchoolId(s)));
        }
    }
    (matching, DaTrace { steps })
}

/// A student held at a school and later rejected from it after the school
/// had rejected someone else in between.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InterrupterPair {
    pub student: StudentId,
    pub school: SchoolId,
    /// Step (from 1) at which the student is rejected from the school.
    pub rejection_step: usize,
    /// Step at which the student was first held there.
    pub held_from: usize,
}

/// All interrupter pairs of a trace, ordered by rejection step, then
/// student, then school.
pub fn interrupters(trace: &DaTrace) -> Vec<InterrupterPair> {
    let mut out = Vec::new();
    for (k, step) in trace.steps.iter().enumerate() {
        let t_rej = k + 1;
        for (s, rejected) in step.rejected.iter().enumerate() {
            for &i in rejected {
                // A student proposes to a school once, so they were accepted at
                // the step of that proposal if they were ever held there.
                let Some(t_held) = (1..t_rej).find(|&t| trace.step(t).proposals[s].contains(&i)) else {
                    continue;
                };
                if !trace.step(t_held).held[s].contains(&i) {
                    continue;
                }
                let interrupted =
                    (t_held..t_rej).any(|t| trace.step(t).rejected[s].iter().any(|&j| j != i));
                if interrupted {
                    out.push(InterrupterPair {
                        student: i,
                        school: SchoolId(s),
                        rejection_step: t_rej,
                        held_from: t_held,
                    });
                }
            }
        }
    }
    out.sort_by_key(|p| (p.rejection_step, p.student, p.school));
    out
}

/// Students who propose in the final step.
///
/// They cannot gain from any Pareto improvement when the final step rejects
/// nobody. A final-step rejection that leaves a student unassigned breaks
/// that guarantee; see `fixtures/hopeless_counterexample.txt`.
pub fn hopeless_students(trace: &DaTrace) -> Vec<StudentId> {
    trace.steps.last().map(|s| s.proposers.clone()).unwrap_or_default()
}
