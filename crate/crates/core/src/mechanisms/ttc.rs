use super::Market;
use crate::error::Result;
use crate::instance::{Instance, Matching, SchoolId, StudentId};

/// Top trading cycles on a strict instance.
pub fn ttc(instance: &Instance) -> Result<Matching> {
    Ok(run(&Market::new(instance)?))
}

/// Top trading cycles with explicit (possibly truncated) student lists.
pub fn ttc_with_lists(instance: &Instance, lists: Vec<Vec<SchoolId>>) -> Result<Matching> {
    if let Some(s) = instance.schools().find(|&s| !instance.prio(s).is_strict()) {
        return Err(crate::Error::NonStrict(format!(
            "priority of {} has ties",
            instance.school_name(s)
        )));
    }
    Ok(run(&Market::with_lists(instance, lists)))
}

/// Students point at their best school with seats left, schools at their
/// best active student. Every cycle of a round trades at once; a student
/// whose list has no open school leaves unassigned.
fn run(market: &Market) -> Matching {
    let (n, m) = (market.num_students(), market.num_schools());
    let mut seats = market.capacity.clone();
    let mut active = vec![true; n];
    let mut matching = Matching::unassigned(n);

    loop {
        let mut student_points = vec![usize::MAX; n];
        for i in 0..n {
            if !active[i] {
                continue;
            }
            match market.lists[i].iter().find(|s| seats[s.0] > 0) {
                Some(s) => student_points[i] = s.0,
                None => active[i] = false,
            }
        }
        if !active.iter().any(|&a| a) {
            break;
        }
        let school_points: Vec<usize> = (0..m)
            .map(|s| {
                (0..n)
                    .filter(|&i| active[i] && seats[s] > 0)
                    .min_by_key(|&i| market.prio_rank[s][i])
                    .unwrap_or(usize::MAX)
            })
            .collect();

        // Nodes 0..n are students, n..n+m schools; each active node has
        // exactly one successor, so every walk ends on a cycle.
        let next = |v: usize| -> usize {
            if v < n {
                n + student_points[v]
            } else {
                school_points[v - n]
            }
        };
        let mut state = vec![0u8; n + m]; // 0 unseen, 1 on current walk, 2 done
        let mut on_cycle = vec![false; n];
        for start in (0..n).filter(|&i| active[i]) {
            let mut path = Vec::new();
            let mut v = start;
            while state[v] == 0 {
                state[v] = 1;
                path.push(v);
                v = next(v);
            }
            if state[v] == 1 {
                let from = path.iter().position(|&x| x == v).expect("on path");
                for &u in &path[from..] {
                    if u < n {
                        on_cycle[u] = true;
                    }
                }
            }
            for u in path {
                state[u] = 2;
            }
        }
        for i in 0..n {
            if on_cycle[i] {
                let s = student_points[i];
                matching.set(StudentId(i), Some(SchoolId(s)));
                seats[s] -= 1;
                active[i] = false;
            }
        }
    }
    matching
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{dominates, is_stable};
    use crate::format::parse_instance;
    use crate::mechanisms::sosm;
    use crate::oracle::{efficient_dominations_of, OracleBound};
    use crate::random::random_strict_instance;
    use proptest::prelude::*;

    fn fixture(name: &str) -> Instance {
        parse_instance(
            &std::fs::read_to_string(format!("{}/fixtures/{name}.txt", env!("CARGO_MANIFEST_DIR")))
                .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fixture_outcomes() {
        assert_eq!(ttc(&fixture("scp1")).unwrap(), Matching::from_indices(&[1, 0, 2]));
        assert_eq!(ttc(&fixture("scp4")).unwrap(), Matching::from_indices(&[1, 0, 1]));
        assert_eq!(ttc(&fixture("scp5")).unwrap(), Matching::from_indices(&[0, 1, 2, 3]));
    }

    #[test]
    fn scp2_ttc_equals_the_coalition_outcome() {
        assert_eq!(ttc(&fixture("scp2")).unwrap(), Matching::from_indices(&[1, 4, 0, 3, 2]));
    }

    #[test]
    fn scp4_ttc_is_unstable_and_incomparable() {
        let inst = fixture("scp4");
        let t = ttc(&inst).unwrap();
        let s = sosm(&inst).unwrap().0;
        assert!(!is_stable(&inst, &t));
        assert!(!dominates(&inst, &t, &s) && !dominates(&inst, &s, &t));
    }

    #[test]
    fn short_lists_leave_students_out() {
        let inst = Instance::strict_from_lists(vec![1, 1], vec![vec![0, 1], vec![0, 1], vec![0, 1]], vec![vec![0, 1, 2], vec![2, 1, 0]]);
        let t = ttc(&inst).unwrap();
        assert_eq!(t, Matching::new(vec![Some(SchoolId(0)), None, Some(SchoolId(1))]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn ttc_is_efficient(seed in any::<u64>(), n in 1..5usize, m in 1..5usize) {
            let inst = random_strict_instance(seed, n, m, 2);
            let t = ttc(&inst).unwrap();
            t.validate(&inst).unwrap();
            let better = efficient_dominations_of(&inst, &t, OracleBound::default()).unwrap();
            prop_assert_eq!(better, vec![t]);
        }
    }
}
