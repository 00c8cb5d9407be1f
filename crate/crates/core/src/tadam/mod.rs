//! Trading-clique improvement of the deferred-acceptance outcome.
//!
//! Starting from the student-optimal stable matching, students who all
//! weakly prefer the seat of the next student on a cycle of the
//! [`MatchGraph`] trade seats along it. A cycle with at least one strict
//! preference is a trading clique; an all-indifferent one is a null clique.
//! Null cliques change no ranks and are never applied by [`tadam_run`].

mod cycles;
mod graph;

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use graph::{build_graph, has_trading_clique, MatchGraph};

use crate::analysis::weakly_dominates;
use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, StudentId};
use crate::mechanisms::sosm;

pub const DEFAULT_CYCLE_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CliqueKind {
    Trading,
    Null,
}

/// A cycle of the graph; `cycle[k]` takes the seat of `cycle[k + 1]`, the
/// last student that of the first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clique {
    pub cycle: Vec<StudentId>,
    pub kind: CliqueKind,
}

impl Clique {
    pub fn contains(&self, i: StudentId) -> bool {
        self.cycle.contains(&i)
    }

    /// `i1 -> i4 -> i2 -> i1`.
    pub fn display(&self, instance: &Instance) -> String {
        let mut names: Vec<&str> = self.cycle.iter().map(|&i| instance.student_name(i)).collect();
        if let Some(&first) = names.first() {
            names.push(first);
        }
        names.join(" -> ")
    }
}

/// Every elementary cycle of `graph`, rotated to start at its smallest
/// student and sorted.
pub fn find_cliques(graph: &MatchGraph, limit: usize) -> Result<Vec<Clique>> {
    let classify = |cycle: Vec<StudentId>| {
        let strict = (0..cycle.len()).any(|k| graph.weight(cycle[k], cycle[(k + 1) % cycle.len()]) == Some(1));
        Clique {
            cycle,
            kind: if strict { CliqueKind::Trading } else { CliqueKind::Null },
        }
    };
    match cycles::elementary_cycles(graph, limit) {
        Ok(found) => Ok(found.into_iter().map(classify).collect()),
        Err(partial) => Err(Error::CycleLimitExceeded {
            limit,
            partial: partial.into_iter().map(classify).collect(),
        }),
    }
}

/// Moves every member of the clique into the seat of their successor.
/// Fails if some edge of the cycle no longer exists under `m`.
pub fn apply_clique(instance: &Instance, m: &Matching, clique: &Clique) -> Result<Matching> {
    let k = clique.cycle.len();
    let mut out = m.clone();
    for (pos, &i) in clique.cycle.iter().enumerate() {
        let j = clique.cycle[(pos + 1) % k];
        if i.0 >= instance.num_students() || j.0 >= instance.num_students() {
            return Err(Error::UnknownStudent(i.0.max(j.0)));
        }
        let p = instance.pref(i);
        let (own, theirs) = (p.rank_of(m.get(i)), p.rank_of(m.get(j)));
        if i == j || m.get(j).is_none() || theirs > own {
            return Err(Error::StaleClique(format!(
                "{} does not weakly prefer the seat of {}",
                instance.student_name(i),
                instance.student_name(j)
            )));
        }
        out.set(i, m.get(j));
    }
    Ok(out)
}

/// How a run picks among the trading cliques of a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliquePolicy {
    /// The least clique in canonical order.
    FirstCanonical,
    /// Uniformly at random from a generator seeded once per run.
    Seeded(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TadamOutcome {
    pub matching: Matching,
    /// Deferred acceptance on the tie-broken instance.
    pub baseline: Matching,
    /// Seed passed to [`Instance::tie_break`] for the baseline.
    pub tie_break_seed: u64,
    /// Applied cliques, in order.
    pub log: Vec<Clique>,
}

fn baseline(instance: &Instance) -> Result<Matching> {
    baseline_with(instance, 0)
}

fn baseline_with(instance: &Instance, tie_break_seed: u64) -> Result<Matching> {
    Ok(sosm(&instance.tie_break(tie_break_seed))?.0)
}

fn trading_cliques(instance: &Instance, m: &Matching, limit: usize) -> Result<Vec<Clique>> {
    let graph = build_graph(instance, m).prune();
    Ok(find_cliques(&graph, limit)?
        .into_iter()
        .filter(|c| c.kind == CliqueKind::Trading)
        .collect())
}

/// Deferred acceptance on the seed-0 tie-break, then trading cliques on
/// the true (weak) preferences until none is left.
pub fn tadam_run(instance: &Instance, policy: CliquePolicy) -> Result<TadamOutcome> {
    tadam_run_with(instance, policy, 0, DEFAULT_CYCLE_LIMIT)
}

/// [`tadam_run`] with a chosen baseline tie-break and cycle limit.
pub fn tadam_run_with(
    instance: &Instance,
    policy: CliquePolicy,
    tie_break_seed: u64,
    cycle_limit: usize,
) -> Result<TadamOutcome> {
    let base = baseline_with(instance, tie_break_seed)?;
    let mut rng = match policy {
        CliquePolicy::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        CliquePolicy::FirstCanonical => None,
    };
    let mut current = base.clone();
    let mut log = Vec::new();
    loop {
        let options = trading_cliques(instance, &current, cycle_limit)?;
        let pick = match (&mut rng, options.is_empty()) {
            (_, true) => break,
            (None, false) => &options[0],
            (Some(rng), false) => options.choose(rng).expect("nonempty"),
        };
        current = apply_clique(instance, &current, pick)?;
        log.push(pick.clone());
    }
    Ok(TadamOutcome {
        matching: current,
        baseline: base,
        tie_break_seed,
        log,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Distinct matchings visited before giving up.
    pub max_states: usize,
    pub cycle_limit: usize,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits {
            max_states: 200_000,
            cycle_limit: DEFAULT_CYCLE_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TadamEnumeration {
    /// Matchings reachable by trading cliques that admit none, sorted.
    pub terminals: Vec<Matching>,
    /// Null-clique closures of the terminals. Each class is sorted and
    /// contains at least one terminal; classes are disjoint.
    pub classes: Vec<Vec<Matching>>,
}

impl TadamEnumeration {
    /// Union of all classes.
    pub fn closure(&self) -> BTreeSet<Matching> {
        self.classes.iter().flatten().cloned().collect()
    }
}

/// Every terminal of every trading-clique sequence from the baseline.
pub fn tadam_enumerate(instance: &Instance, limits: EnumerationLimits) -> Result<TadamEnumeration> {
    let base = baseline(instance)?;
    let mut seen: HashSet<Matching> = HashSet::new();
    let mut terminals: BTreeSet<Matching> = BTreeSet::new();
    let mut stack = vec![base.clone()];
    seen.insert(base);
    while let Some(m) = stack.pop() {
        let options = trading_cliques(instance, &m, limits.cycle_limit)?;
        if options.is_empty() {
            terminals.insert(m);
            continue;
        }
        for c in &options {
            let next = apply_clique(instance, &m, c)?;
            if seen.insert(next.clone()) {
                if seen.len() > limits.max_states {
                    return Err(Error::SearchLimitExceeded {
                        limit: limits.max_states,
                        partial: terminals.into_iter().collect(),
                    });
                }
                stack.push(next);
            }
        }
    }

    let mut classes: Vec<Vec<Matching>> = Vec::new();
    let mut placed: HashSet<Matching> = HashSet::new();
    for t in &terminals {
        if placed.contains(t) {
            continue;
        }
        let mut class: BTreeSet<Matching> = [t.clone()].into();
        let mut work = vec![t.clone()];
        while let Some(m) = work.pop() {
            let graph = build_graph(instance, &m).prune();
            for c in find_cliques(&graph, limits.cycle_limit)? {
                debug_assert_eq!(c.kind, CliqueKind::Null, "terminal has no trading clique");
                let next = apply_clique(instance, &m, &c)?;
                if class.insert(next.clone()) {
                    work.push(next);
                }
            }
        }
        placed.extend(class.iter().cloned());
        classes.push(class.into_iter().collect());
    }
    classes.sort();
    Ok(TadamEnumeration {
        terminals: terminals.into_iter().collect(),
        classes,
    })
}

/// Clique sequence turning the baseline into `target`: the cycles of the
/// seat permutation between them, trading cliques first. Each student who
/// moves takes the seat of a student who left their new school, paired in id
/// order within each school.
pub fn realize_domination(instance: &Instance, target: &Matching) -> Result<Vec<Clique>> {
    target.validate(instance)?;
    let base = baseline(instance)?;
    if !weakly_dominates(instance, target, &base) {
        return Err(Error::NotDominating);
    }
    let movers: Vec<StudentId> = instance.students().filter(|&i| target.get(i) != base.get(i)).collect();
    let mut takes = vec![None; instance.num_students()];
    for s in instance.schools() {
        let entering: Vec<StudentId> = movers.iter().copied().filter(|&i| target.get(i) == Some(s)).collect();
        let leaving: Vec<StudentId> = movers.iter().copied().filter(|&i| base.get(i) == Some(s)).collect();
        if entering.len() != leaving.len() {
            return Err(Error::NotSeatPermutation);
        }
        for (i, j) in entering.into_iter().zip(leaving) {
            takes[i.0] = Some(j);
        }
    }
    if movers.iter().any(|i| takes[i.0].is_none()) {
        return Err(Error::NotSeatPermutation);
    }

    let graph = build_graph(instance, &base);
    let mut done = vec![false; instance.num_students()];
    let mut cliques = Vec::new();
    for &start in &movers {
        if done[start.0] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut v = start;
        while !done[v.0] {
            done[v.0] = true;
            cycle.push(v);
            v = takes[v.0].expect("every mover takes a seat");
        }
        let strict = (0..cycle.len()).any(|k| graph.weight(cycle[k], cycle[(k + 1) % cycle.len()]) == Some(1));
        cliques.push(Clique {
            cycle,
            kind: if strict { CliqueKind::Trading } else { CliqueKind::Null },
        });
    }
    cliques.sort_by_key(|c| c.kind);
    Ok(cliques)
}
