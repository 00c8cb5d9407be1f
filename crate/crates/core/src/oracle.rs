//! Brute-force ground truth for small instances.

use rayon::prelude::*;

use crate::analysis::{dominates, is_stable};
use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, SchoolId};

/// Size limits checked before any enumeration starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBound {
    pub max_students: usize,
    pub max_total_matchings: u128,
}

impl Default for OracleBound {
    fn default() -> Self {
        OracleBound {
            max_students: 8,
            max_total_matchings: 10_000_000,
        }
    }
}

/// Number of capacity-respecting matchings, unassigned included.
pub fn count_matchings(instance: &Instance) -> u128 {
    let n = instance.num_students();
    let mut binom = vec![vec![0u128; n + 1]; n + 1];
    for a in 0..=n {
        binom[a][0] = 1;
        for b in 1..=a {
            binom[a][b] = binom[a - 1][b - 1] + binom[a - 1][b];
        }
    }
    // ways[j]: ways to seat some j labelled students at the schools so far.
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for s in instance.schools() {
        let cap = instance.capacity(s) as usize;
        let mut next = vec![0u128; n + 1];
        for j in 0..=n {
            if ways[j] == 0 {
                continue;
            }
            for k in 0..=cap.min(n - j) {
                next[j + k] = next[j + k].saturating_add(ways[j].saturating_mul(binom[n - j][k]));
            }
        }
        ways = next;
    }
    ways.into_iter().fold(0u128, u128::saturating_add)
}

fn check(instance: &Instance, bound: OracleBound) -> Result<()> {
    if instance.num_students() > bound.max_students {
        return Err(Error::InstanceTooLarge(format!(
            "{} students exceed the oracle bound of {}",
            instance.num_students(),
            bound.max_students
        )));
    }
    let total = count_matchings(instance);
    if total > bound.max_total_matchings {
        return Err(Error::InstanceTooLarge(format!(
            "{total} matchings exceed the oracle bound of {}",
            bound.max_total_matchings
        )));
    }
    Ok(())
}

/// Streams every matching exactly once. Each student tries schools in id
/// order and then being unassigned.
#[derive(Clone, Debug)]
pub struct Matchings {
    capacity: Vec<u32>,
    load: Vec<u32>,
    choice: Vec<usize>,
    started: bool,
    done: bool,
}

impl Matchings {
    fn new(instance: &Instance) -> Self {
        Matchings {
            capacity: instance.capacities().to_vec(),
            load: vec![0; instance.num_schools()],
            choice: vec![0; instance.num_students()],
            started: false,
            done: false,
        }
    }

    fn unassigned(&self) -> usize {
        self.capacity.len()
    }

    /// First option at or after `from` with a free seat.
    fn first_open(&self, from: usize) -> usize {
        (from..self.unassigned())
            .find(|&s| self.load[s] < self.capacity[s])
            .unwrap_or(self.unassigned())
    }

    fn take(&mut self, k: usize, option: usize) {
        self.choice[k] = option;
        if option < self.unassigned() {
            self.load[option] += 1;
        }
    }

    fn fill_from(&mut self, k: usize) {
        for j in k..self.choice.len() {
            let o = self.first_open(0);
            self.take(j, o);
        }
    }

    fn current(&self) -> Matching {
        Matching::new(
            self.choice
                .iter()
                .map(|&o| (o < self.unassigned()).then_some(SchoolId(o)))
                .collect(),
        )
    }
}

impl Iterator for Matchings {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill_from(0);
            return Some(self.current());
        }
        for k in (0..self.choice.len()).rev() {
            let old = self.choice[k];
            if old == self.unassigned() {
                continue;
            }
            self.load[old] -= 1;
            let o = self.first_open(old + 1);
            self.take(k, o);
            self.fill_from(k + 1);
            return Some(self.current());
        }
        self.done = true;
        None
    }
}

/// Every capacity-respecting matching, unassigned included.
pub fn enumerate_matchings(instance: &Instance, bound: OracleBound) -> Result<Matchings> {
    check(instance, bound)?;
    Ok(Matchings::new(instance))
}

/// All stable matchings, sorted.
pub fn stable_set(instance: &Instance, bound: OracleBound) -> Result<Vec<Matching>> {
    let mut out: Vec<Matching> = enumerate_matchings(instance, bound)?
        .par_bridge()
        .filter(|m| is_stable(instance, m))
        .collect();
    out.sort();
    Ok(out)
}

/// Matchings that dominate or equal `m` and are themselves undominated,
/// sorted.
pub fn efficient_dominations_of(instance: &Instance, m: &Matching, bound: OracleBound) -> Result<Vec<Matching>> {
    m.validate(instance)?;
    let mut better: Vec<Matching> = enumerate_matchings(instance, bound)?
        .par_bridge()
        .filter(|t| t == m || dominates(instance, t, m))
        .collect();
    better.sort();
    // Anything dominating a candidate also dominates `m`, so maximality
    // within the candidates is maximality overall.
    let out = better
        .iter()
        .filter(|t| !better.iter().any(|u| dominates(instance, u, t)))
        .cloned()
        .collect();
    Ok(out)
}
