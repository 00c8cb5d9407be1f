//! Evaluative predicates and metrics over matchings.
//!
//! Ranks come from each student's own profile; being unassigned ranks
//! below every listed school.

use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, SchoolId, StudentId};
use crate::oracle::{self, OracleBound};
use crate::tadam;

/// `violator` holds a seat at `school`, which `victim` strictly prefers to
/// their own assignment and where they have strictly higher priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ViolationRecord {
    pub school: SchoolId,
    pub victim: StudentId,
    pub violator: StudentId,
}

fn rank(instance: &Instance, i: StudentId, s: Option<SchoolId>) -> u32 {
    instance.pref(i).rank_of(s)
}

/// Sum over students of rank minus one.
pub fn preference_index(instance: &Instance, m: &Matching) -> u64 {
    instance
        .students()
        .map(|i| u64::from(rank(instance, i, m.get(i)) - 1))
        .sum()
}

/// Every priority violation, sorted by school, victim, violator.
pub fn priority_violations(instance: &Instance, m: &Matching) -> Vec<ViolationRecord> {
    let mut out = Vec::new();
    for s in instance.schools() {
        let prio = instance.prio(s);
        let holders: Vec<StudentId> = instance.students().filter(|&j| m.get(j) == Some(s)).collect();
        for victim in instance.students() {
            if rank(instance, victim, Some(s)) >= rank(instance, victim, m.get(victim)) {
                continue;
            }
            for &violator in &holders {
                if prio.strictly_prefers(victim, violator) {
                    out.push(ViolationRecord {
                        school: s,
                        victim,
                        violator,
                    });
                }
            }
        }
    }
    out
}

/// Schools with seats left under `m`.
pub fn vacancies(instance: &Instance, m: &Matching) -> Vec<SchoolId> {
    let load = m.loads(instance.num_schools());
    instance.schools().filter(|s| load[s.0] < instance.capacity(*s)).collect()
}

/// No priority violation and no student strictly prefers a school that
/// still has a free seat.
pub fn is_stable(instance: &Instance, m: &Matching) -> bool {
    let open = vacancies(instance, m);
    let wasteful = instance.students().any(|i| {
        let own = rank(instance, i, m.get(i));
        open.iter().any(|&s| rank(instance, i, Some(s)) < own)
    });
    !wasteful && priority_violations(instance, m).is_empty()
}

/// `a` is weakly better for every student and strictly better for one.
pub fn dominates(instance: &Instance, a: &Matching, b: &Matching) -> bool {
    let mut strict = false;
    for i in instance.students() {
        let (ra, rb) = (rank(instance, i, a.get(i)), rank(instance, i, b.get(i)));
        if ra > rb {
            return false;
        }
        strict |= ra < rb;
    }
    strict
}

/// `a` dominates `b` or gives every student the same rank.
pub fn weakly_dominates(instance: &Instance, a: &Matching, b: &Matching) -> bool {
    instance
        .students()
        .all(|i| rank(instance, i, a.get(i)) <= rank(instance, i, b.get(i)))
}

/// True when no student weakly prefers some other school with a free seat
/// to their assignment. Under this condition every Pareto improvement of `m`
/// is a permutation of its seats.
pub fn seats_are_closed(instance: &Instance, m: &Matching) -> bool {
    let open = vacancies(instance, m);
    instance.students().all(|i| {
        let own = rank(instance, i, m.get(i));
        open.iter()
            .all(|&s| Some(s) == m.get(i) || rank(instance, i, Some(s)) > own)
    })
}

/// No valid matching dominates `m`.
///
/// When [`seats_are_closed`] holds, the answer is read off the graph of
/// `m`: it is efficient exactly when no trading clique exists. Otherwise
/// the oracle decides, within `bound`.
pub fn is_efficient(instance: &Instance, m: &Matching, bound: OracleBound) -> Result<bool> {
    m.validate(instance)?;
    if seats_are_closed(instance, m) {
        let graph = tadam::build_graph(instance, m);
        return Ok(!tadam::has_trading_clique(&graph));
    }
    match oracle::enumerate_matchings(instance, bound) {
        Ok(mut all) => Ok(!all.any(|t| dominates(instance, &t, m))),
        Err(Error::InstanceTooLarge(why)) => Err(Error::InstanceTooLarge(format!(
            "{why}; the graph test does not apply because a student weakly prefers a vacant school"
        ))),
        Err(e) => Err(e),
    }
}

/// No stable matching gives any student a strictly better school.
pub fn is_reasonably_fair(instance: &Instance, m: &Matching, bound: OracleBound) -> Result<bool> {
    let stable = oracle::stable_set(instance, bound)?;
    Ok(stable.iter().all(|t| {
        instance
            .students()
            .all(|i| rank(instance, i, m.get(i)) <= rank(instance, i, t.get(i)))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_instance;
    use crate::mechanisms::{sosm, ttc};
    use crate::random::{random_instance, random_strict_instance};
    use proptest::prelude::*;

    fn fixture(name: &str) -> Instance {
        parse_instance(
            &std::fs::read_to_string(format!("{}/fixtures/{name}.txt", env!("CARGO_MANIFEST_DIR")))
                .unwrap(),
        )
        .unwrap()
    }

    fn m(v: &[usize]) -> Matching {
        Matching::from_indices(v)
    }

    fn one_by_one() -> Instance {
        Instance::strict_from_lists(vec![1], vec![vec![0]], vec![vec![0]])
    }

    #[test]
    fn index_values_on_fixtures() {
        assert_eq!(preference_index(&fixture("scp2"), &m(&[4, 3, 0, 1, 2])), 10);
        assert_eq!(preference_index(&fixture("scp3"), &m(&[0, 1, 4, 3, 2])), 3);
        assert_eq!(preference_index(&fixture("scp1"), &m(&[1, 0, 2])), 2);
    }

    #[test]
    fn first_choices_have_index_zero() {
        let inst = Instance::strict_from_lists(vec![1, 1], vec![vec![1, 0], vec![0, 1]], vec![vec![0, 1], vec![0, 1]]);
        let mm = m(&[1, 0]);
        assert_eq!(preference_index(&inst, &mm), 0);
        assert!(is_stable(&inst, &mm));
    }

    #[test]
    fn unassigned_counts_below_the_list() {
        let inst = one_by_one();
        assert_eq!(preference_index(&inst, &Matching::unassigned(1)), 1);
        assert!(!is_stable(&inst, &Matching::unassigned(1)));
    }

    #[test]
    fn scp1_violations() {
        let inst = fixture("scp1");
        let v = priority_violations(&inst, &m(&[1, 0, 2]));
        assert!(v.contains(&ViolationRecord {
            school: SchoolId(0),
            victim: StudentId(2),
            violator: StudentId(1)
        }));
        assert!(priority_violations(&inst, &m(&[0, 1, 2])).is_empty());
        assert!(priority_violations(&one_by_one(), &m(&[0])).is_empty());
    }

    #[test]
    fn violations_are_sorted_and_sound() {
        for seed in 0..40 {
            let inst = random_strict_instance(seed, 5, 4, 2);
            let mm = ttc(&inst).unwrap();
            let v = priority_violations(&inst, &mm);
            let mut sorted = v.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(v, sorted);
            for r in v {
                assert_eq!(mm.get(r.violator), Some(r.school));
                assert!(inst.prio(r.school).strictly_prefers(r.victim, r.violator));
            }
        }
    }

    #[test]
    fn stability_examples() {
        let scp1 = fixture("scp1");
        assert!(is_stable(&scp1, &m(&[0, 1, 2])));
        assert!(!is_stable(&scp1, &m(&[1, 0, 2])));
        assert!(!is_stable(&fixture("scp4"), &m(&[1, 0, 1])));
    }

    #[test]
    fn domination_examples() {
        let scp1 = fixture("scp1");
        assert!(dominates(&scp1, &m(&[1, 0, 2]), &m(&[0, 1, 2])));
        assert!(!dominates(&scp1, &m(&[0, 1, 2]), &m(&[0, 1, 2])));
        let scp5 = fixture("scp5");
        let t = ttc(&scp5).unwrap();
        let s = sosm(&scp5).unwrap().0;
        assert!(!dominates(&scp5, &t, &s) && !dominates(&scp5, &s, &t));
    }

    #[test]
    fn efficiency_examples() {
        let b = OracleBound::default();
        assert!(is_efficient(&fixture("scp1"), &m(&[1, 0, 2]), b).unwrap());
        let scp5 = fixture("scp5");
        assert!(!is_efficient(&scp5, &sosm(&scp5).unwrap().0, b).unwrap());
        assert!(is_efficient(&one_by_one(), &m(&[0]), b).unwrap());
    }

    #[test]
    fn vacant_seat_needs_the_oracle() {
        // i1 is indifferent between their seat and a vacant school, and i2
        // wants their seat: a Pareto improvement that is no seat permutation.
        let text = "students i1 i2\nschools s1 s2 s3\n\
                    pref i1: s1 = s2 > s3\npref i2: s1 > s3 > s2\n\
                    prio s1: i1 > i2\nprio s2: i1 > i2\nprio s3: i1 > i2\n";
        let inst = parse_instance(text).unwrap();
        let mm = Matching::from_indices(&[0, 2]);
        assert!(!seats_are_closed(&inst, &mm));
        assert!(!tadam::has_trading_clique(&tadam::build_graph(&inst, &mm)));
        assert!(!is_efficient(&inst, &mm, OracleBound::default()).unwrap());
        let tiny = OracleBound {
            max_students: 1,
            ..OracleBound::default()
        };
        assert!(matches!(is_efficient(&inst, &mm, tiny), Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn reasonable_fairness_examples() {
        let b = OracleBound::default();
        let scp1 = fixture("scp1");
        assert!(is_reasonably_fair(&scp1, &m(&[1, 0, 2]), b).unwrap());
        assert!(is_reasonably_fair(&scp1, &m(&[0, 1, 2]), b).unwrap());
        assert!(!is_reasonably_fair(&scp1, &m(&[2, 1, 0]), b).unwrap());
    }

    proptest! {
        #[test]
        fn sosm_is_stable(seed in any::<u64>(), n in 1..8usize, k in 1..8usize) {
            let inst = random_strict_instance(seed, n, k, 3);
            prop_assert!(is_stable(&inst, &sosm(&inst).unwrap().0));
        }

        #[test]
        fn domination_order_laws(seed in any::<u64>()) {
            let inst = random_instance(seed, 4, 3, 2, 0.3);
            let all: Vec<Matching> = oracle::enumerate_matchings(&inst, OracleBound::default()).unwrap().collect();
            let pick = |k: u64| &all[(seed.rotate_left(k as u32 * 13) % all.len() as u64) as usize];
            let (a, b, c) = (pick(1), pick(2), pick(3));
            prop_assert!(!dominates(&inst, a, a));
            prop_assert!(!(dominates(&inst, a, b) && dominates(&inst, b, a)));
            if dominates(&inst, a, b) && dominates(&inst, b, c) {
                prop_assert!(dominates(&inst, a, c));
            }
            if dominates(&inst, a, b) {
                prop_assert!(preference_index(&inst, a) < preference_index(&inst, b));
            }
        }

        #[test]
        fn graph_route_agrees_with_oracle(seed in any::<u64>()) {
            let inst = random_instance(seed, 4, 4, 2, 0.3);
            let all: Vec<Matching> = oracle::enumerate_matchings(&inst, OracleBound::default()).unwrap().collect();
            let mm = &all[(seed % all.len() as u64) as usize];
            if seats_are_closed(&inst, mm) {
                let by_oracle = !all.iter().any(|t| dominates(&inst, t, mm));
                prop_assert_eq!(is_efficient(&inst, mm, OracleBound::default()).unwrap(), by_oracle);
            }
        }
    }
}
