//! Seeded random instances for tests and sweeps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{Idx, Instance, SchoolId, StudentId, WeakOrder};

/// Uniform strict preferences and priorities; capacities uniform in
/// `1..=max_capacity`.
pub fn random_strict_instance(seed: u64, students: usize, schools: usize, max_capacity: u32) -> Instance {
    random_instance(seed, students, schools, max_capacity, 0.0)
}

/// Like [`random_strict_instance`], but each adjacent pair in every order
/// is merged into one indifference class with probability `tie_prob`.
pub fn random_instance(
    seed: u64,
    students: usize,
    schools: usize,
    max_capacity: u32,
    tie_prob: f64,
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let capacity = (0..schools).map(|_| rng.gen_range(1..=max_capacity.max(1))).collect();
    let prefs = (0..students)
        .map(|_| random_order::<SchoolId>(&mut rng, schools, tie_prob))
        .collect();
    let prios = (0..schools)
        .map(|_| random_order::<StudentId>(&mut rng, students, tie_prob))
        .collect();
    Instance::from_parts(
        (1..=students).map(|k| format!("i{k}")).collect(),
        (1..=schools).map(|k| format!("s{k}")).collect(),
        capacity,
        prefs,
        prios,
    )
}

pub(crate) fn random_order<T: Idx>(rng: &mut impl Rng, size: usize, tie_prob: f64) -> WeakOrder<T> {
    let mut order: Vec<usize> = (0..size).collect();
    order.shuffle(rng);
    let mut classes: Vec<Vec<T>> = Vec::new();
    for (k, x) in order.into_iter().enumerate() {
        if k == 0 || !(tie_prob > 0.0 && rng.gen_bool(tie_prob)) {
            classes.push(Vec::new());
        }
        classes.last_mut().expect("pushed").push(T::from_index(x));
    }
    WeakOrder::new(classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_instances_are_valid_and_reproducible() {
        for seed in 0..50 {
            let a = random_instance(seed, 5, 4, 3, 0.3);
            assert!(a.validate().is_empty());
            assert_eq!(a, random_instance(seed, 5, 4, 3, 0.3));
            assert!(random_strict_instance(seed, 5, 4, 2).is_strict());
        }
    }
}
