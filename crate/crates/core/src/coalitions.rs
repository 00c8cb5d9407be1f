//! Coalitional improvement of deferred acceptance.
//!
//! A cabal loop is a cycle of students each of whom strictly prefers the
//! baseline school of the previous member. Accomplices move the schools
//! the cabal needs below their own baseline assignment; rerunning deferred
//! acceptance then rotates the cabal's seats and leaves everybody else in
//! place.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::weakly_dominates;
use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, PreferenceProfile, SchoolId, StudentId, WeakOrder};
use crate::mechanisms::{eadam, sosm};
use crate::tadam::{build_graph, find_cliques, DEFAULT_CYCLE_LIMIT};

/// Members in loop order: `members[k]` receives the baseline school of
/// `members[k - 1]`, the first member that of the last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CabalLoop {
    members: Vec<StudentId>,
}

impl CabalLoop {
    pub fn new(members: Vec<StudentId>) -> Self {
        CabalLoop { members }
    }

    /// From arrow form, where each student points at the one whose seat
    /// they take: `a -> b -> c -> a` means `a` takes `b`'s seat.
    pub fn from_arrow(arrow: &[StudentId]) -> Self {
        let mut members = Vec::with_capacity(arrow.len());
        if let Some((&first, rest)) = arrow.split_first() {
            members.push(first);
            members.extend(rest.iter().rev());
        }
        CabalLoop { members }
    }

    pub fn members(&self) -> &[StudentId] {
        &self.members
    }

    pub fn arrow(&self) -> Vec<StudentId> {
        CabalLoop::from_arrow(&self.members).members
    }

    /// Member who receives the baseline school of `members[k]`.
    pub fn receiver(&self, k: usize) -> StudentId {
        self.members[(k + 1) % self.members.len()]
    }

    pub fn display(&self, instance: &Instance) -> String {
        let mut a: Vec<&str> = self.arrow().iter().map(|&i| instance.student_name(i)).collect();
        if let Some(&first) = a.first() {
            a.push(first);
        }
        a.join(" -> ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coalition {
    pub loops: Vec<CabalLoop>,
    /// Accomplices and the schools each moves below their baseline school.
    pub accomplices: BTreeMap<StudentId, BTreeSet<SchoolId>>,
    /// Two cabal members share a baseline school (multi-seat schools only).
    pub seat_collision: bool,
}

impl Coalition {
    pub fn empty() -> Self {
        Coalition {
            loops: Vec::new(),
            accomplices: BTreeMap::new(),
            seat_collision: false,
        }
    }

    /// The loops with the accomplice set they define.
    pub fn new(instance: &Instance, baseline: &Matching, loops: Vec<CabalLoop>) -> Result<Self> {
        let accomplices = accomplice_set(instance, baseline, &loops)?;
        Ok(Coalition {
            seat_collision: seat_collision(baseline, &loops),
            loops,
            accomplices,
        })
    }

    /// The loops with a chosen accomplice list; each accomplice's displaced
    /// schools follow the same formula as for [`accomplice_set`].
    pub fn with_accomplices(
        instance: &Instance,
        baseline: &Matching,
        loops: Vec<CabalLoop>,
        accomplices: &[StudentId],
    ) -> Result<Self> {
        validate_loops(instance, baseline, &loops)?;
        let accomplices = accomplices
            .iter()
            .map(|&i| (i, displaced_schools(instance, baseline, &loops, i)))
            .collect();
        Ok(Coalition {
            seat_collision: seat_collision(baseline, &loops),
            loops,
            accomplices,
        })
    }

    pub fn cabal(&self) -> BTreeSet<StudentId> {
        self.loops.iter().flat_map(|l| l.members.iter().copied()).collect()
    }

    /// The matching the coalition aims for: loops rotated, others fixed.
    pub fn target(&self, baseline: &Matching) -> Matching {
        let mut out = baseline.clone();
        for l in &self.loops {
            for k in 0..l.members.len() {
                out.set(l.receiver(k), baseline.get(l.members[k]));
            }
        }
        out
    }
}

fn seat_collision(baseline: &Matching, loops: &[CabalLoop]) -> bool {
    let mut seen = BTreeSet::new();
    loops
        .iter()
        .flat_map(|l| l.members.iter())
        .any(|&i| !seen.insert(baseline.get(i)))
}

fn validate_loops(instance: &Instance, baseline: &Matching, loops: &[CabalLoop]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for l in loops {
        let k = l.members.len();
        if k < 2 {
            return Err(Error::InvalidCabalLoop("a loop needs at least two students".into()));
        }
        for (pos, &i) in l.members.iter().enumerate() {
            if i.0 >= instance.num_students() {
                return Err(Error::UnknownStudent(i.0));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidCabalLoop(format!(
                    "{} appears twice",
                    instance.student_name(i)
                )));
            }
            let prev = l.members[(pos + k - 1) % k];
            let p = instance.pref(i);
            if baseline.get(prev).is_none() || p.rank_of(baseline.get(prev)) >= p.rank_of(baseline.get(i)) {
                return Err(Error::InvalidCabalLoop(format!(
                    "{} does not prefer the school of {}",
                    instance.student_name(i),
                    instance.student_name(prev)
                )));
            }
        }
    }
    Ok(())
}

/// Baseline schools of cabal members that `i` prefers to their own and at
/// which they outrank the member who is to receive them.
pub fn displaced_schools(
    instance: &Instance,
    baseline: &Matching,
    loops: &[CabalLoop],
    i: StudentId,
) -> BTreeSet<SchoolId> {
    let p = instance.pref(i);
    let own = p.rank_of(baseline.get(i));
    let mut out = BTreeSet::new();
    for l in loops {
        for (k, &member) in l.members.iter().enumerate() {
            let Some(s) = baseline.get(member) else { continue };
            let receiver = l.receiver(k);
            if p.rank_of(Some(s)) < own && instance.prio(s).strictly_prefers(i, receiver) {
                out.insert(s);
            }
        }
    }
    out
}

/// Every student with a nonempty displaced set, with that set.
pub fn accomplice_set(
    instance: &Instance,
    baseline: &Matching,
    loops: &[CabalLoop],
) -> Result<BTreeMap<StudentId, BTreeSet<SchoolId>>> {
    validate_loops(instance, baseline, loops)?;
    Ok(instance
        .students()
        .map(|i| (i, displaced_schools(instance, baseline, loops, i)))
        .filter(|(_, x)| !x.is_empty())
        .collect())
}

/// `i`'s list with the schools of `displaced` moved from above their
/// baseline school to below it.
///
/// Seed 0 keeps the original order above the pivot and appends the moved
/// schools, in id order, after the original tail. Other seeds shuffle each
/// side.
pub fn falsified_profile(
    instance: &Instance,
    baseline: &Matching,
    i: StudentId,
    displaced: &BTreeSet<SchoolId>,
    seed: u64,
) -> Result<PreferenceProfile> {
    let p = instance.pref(i);
    if !p.is_strict() {
        return Err(Error::NonStrict(format!(
            "preference of {} has ties",
            instance.student_name(i)
        )));
    }
    let pivot = baseline.get(i);
    if let Some(s) = pivot.filter(|s| displaced.contains(s)) {
        return Err(Error::DisplacedOverlapsPivot(instance.school_name(s).to_string()));
    }
    let order = p.flatten();
    let cut = pivot.and_then(|s| order.iter().position(|&x| x == s)).unwrap_or(order.len());
    let mut left: Vec<SchoolId> = order[..cut].iter().copied().filter(|s| !displaced.contains(s)).collect();
    let mut right: Vec<SchoolId> = order[(cut + 1).min(order.len())..].to_vec();
    right.extend(displaced.iter().copied());
    if seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        left.shuffle(&mut rng);
        right.shuffle(&mut rng);
    }
    Ok(WeakOrder::strict(left.into_iter().chain(pivot).chain(right)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoalitionRun {
    pub matching: Matching,
    /// Cabal rotated and everyone else kept their baseline school.
    pub verified: bool,
}

/// Reruns deferred acceptance with the accomplices' falsified lists.
pub fn run_coalition(instance: &Instance, coalition: &Coalition, seed: u64) -> Result<CoalitionRun> {
    let (baseline, _) = sosm(instance)?;
    let mut reported = instance.clone();
    for (&i, x) in &coalition.accomplices {
        let profile = falsified_profile(instance, &baseline, i, x, seed)?;
        reported = reported.with_pref(i, profile);
    }
    let (matching, _) = sosm(&reported)?;
    let verified = matching == coalition.target(&baseline);
    Ok(CoalitionRun { matching, verified })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoalitionOutcome {
    pub coalition: Coalition,
    pub matching: Matching,
    pub verified: bool,
}

/// Runs every family of disjoint cabal loops of the baseline, the empty
/// family included, and keeps one coalition per distinct outcome. A
/// verified coalition is preferred, then the first family in canonical
/// order. Results are sorted by outcome.
pub fn enumerate_coalitions(instance: &Instance, max_students: usize) -> Result<Vec<CoalitionOutcome>> {
    if instance.num_students() > max_students {
        return Err(Error::InstanceTooLarge(format!(
            "{} students exceed the coalition search bound of {max_students}",
            instance.num_students()
        )));
    }
    let (baseline, _) = sosm(instance)?;
    let cycles: Vec<Vec<StudentId>> = find_cliques(&build_graph(instance, &baseline).strict_part(), DEFAULT_CYCLE_LIMIT)?
        .into_iter()
        .map(|c| c.cycle)
        .collect();

    let mut families: Vec<Vec<usize>> = Vec::new();
    disjoint_families(&cycles, 0, &mut Vec::new(), &mut vec![false; instance.num_students()], &mut families);

    let mut best: BTreeMap<Matching, CoalitionOutcome> = BTreeMap::new();
    for family in families {
        let loops = family.iter().map(|&c| CabalLoop::from_arrow(&cycles[c])).collect();
        let coalition = Coalition::new(instance, &baseline, loops)?;
        let run = run_coalition(instance, &coalition, 0)?;
        let replace = best
            .get(&run.matching)
            .map_or(true, |old| run.verified && !old.verified);
        if replace {
            best.insert(
                run.matching.clone(),
                CoalitionOutcome {
                    coalition,
                    matching: run.matching,
                    verified: run.verified,
                },
            );
        }
    }
    Ok(best.into_values().collect())
}

fn disjoint_families(
    cycles: &[Vec<StudentId>],
    from: usize,
    chosen: &mut Vec<usize>,
    used: &mut Vec<bool>,
    out: &mut Vec<Vec<usize>>,
) {
    out.push(chosen.clone());
    for c in from..cycles.len() {
        if cycles[c].iter().any(|i| used[i.0]) {
            continue;
        }
        for i in &cycles[c] {
            used[i.0] = true;
        }
        chosen.push(c);
        disjoint_families(cycles, c + 1, chosen, used, out);
        chosen.pop();
        for i in &cycles[c] {
            used[i.0] = false;
        }
    }
}

/// The coalition reproducing an efficiency-adjusted outcome: the students
/// whose school changes, split into loops by the seat permutation, with
/// the consenting interrupters of the removed pairs as accomplices.
pub fn eadam_as_coalition(instance: &Instance, consenters: &BTreeSet<StudentId>) -> Result<Coalition> {
    let (baseline, _) = sosm(instance)?;
    let outcome = eadam(instance, consenters)?;
    let target = &outcome.matching;
    debug_assert!(weakly_dominates(instance, target, &baseline));

    let movers: Vec<StudentId> = instance.students().filter(|&i| target.get(i) != baseline.get(i)).collect();
    // takes[i] = j: i's new school is the one j held in the baseline.
    let mut takes = vec![None; instance.num_students()];
    for s in instance.schools() {
        let entering = movers.iter().filter(|&&i| target.get(i) == Some(s));
        let leaving = movers.iter().filter(|&&i| baseline.get(i) == Some(s));
        for (&i, &j) in entering.zip(leaving) {
            takes[i.0] = Some(j);
        }
    }
    let mut done = vec![false; instance.num_students()];
    let mut loops = Vec::new();
    for &start in &movers {
        if done[start.0] {
            continue;
        }
        let mut arrow = Vec::new();
        let mut v = Some(start);
        while let Some(i) = v.filter(|i| !done[i.0]) {
            done[i.0] = true;
            arrow.push(i);
            v = takes[i.0];
        }
        loops.push(CabalLoop::from_arrow(&arrow));
    }
    let accomplices: Vec<StudentId> = outcome
        .removals()
        .into_iter()
        .map(|(i, _)| i)
        .filter(|i| consenters.contains(i))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Coalition::with_accomplices(instance, &baseline, loops, &accomplices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{dominates, preference_index};
    use crate::format::parse_instance;
    use crate::random::random_strict_instance;
    use proptest::prelude::*;

    fn fixture(name: &str) -> Instance {
        parse_instance(
            &std::fs::read_to_string(format!("{}/fixtures/{name}.txt", env!("CARGO_MANIFEST_DIR")))
                .unwrap(),
        )
        .unwrap()
    }

    fn ids(v: &[usize]) -> Vec<StudentId> {
        v.iter().map(|&k| StudentId(k - 1)).collect()
    }

    fn schools(v: &[usize]) -> BTreeSet<SchoolId> {
        v.iter().map(|&k| SchoolId(k - 1)).collect()
    }

    fn base(inst: &Instance) -> Matching {
        sosm(inst).unwrap().0
    }

    #[test]
    fn loop_orientation() {
        let l = CabalLoop::from_arrow(&ids(&[1, 4, 2]));
        assert_eq!(l.members(), ids(&[1, 2, 4]).as_slice());
        assert_eq!(l.arrow(), ids(&[1, 4, 2]));
        assert_eq!(l.receiver(0), StudentId(1));
    }

    #[test]
    fn scp2_accomplices() {
        let inst = fixture("scp2");
        let m = base(&inst);
        let loops = vec![CabalLoop::from_arrow(&ids(&[1, 4, 2]))];
        let a = accomplice_set(&inst, &m, &loops).unwrap();
        assert_eq!(a, [(StudentId(4), schools(&[2, 4]))].into());
        assert_eq!(loops[0].display(&inst), "i1 -> i4 -> i2 -> i1");
    }

    #[test]
    fn scp3_full_cabal_accomplices_by_definition() {
        // The definition admits four accomplices here; i5's displaced set is
        // the one shown for the coalition built from the EADAM run.
        let inst = fixture("scp3");
        let m = base(&inst);
        let loops = vec![
            CabalLoop::from_arrow(&ids(&[1, 3])),
            CabalLoop::from_arrow(&ids(&[2, 4])),
        ];
        let a = accomplice_set(&inst, &m, &loops).unwrap();
        assert_eq!(a.keys().copied().collect::<Vec<_>>(), ids(&[1, 2, 4, 5]));
        assert_eq!(a[&StudentId(4)], schools(&[2, 4, 5]));
        assert_eq!(a[&StudentId(0)], schools(&[2]));
    }

    #[test]
    fn empty_cabal() {
        let inst = fixture("scp2");
        assert!(accomplice_set(&inst, &base(&inst), &[]).unwrap().is_empty());
        let run = run_coalition(&inst, &Coalition::empty(), 0).unwrap();
        assert_eq!(run.matching, base(&inst));
        assert!(run.verified);
    }

    #[test]
    fn invalid_loop() {
        let inst = fixture("scp2");
        let bad = vec![CabalLoop::from_arrow(&ids(&[1, 2]))];
        assert!(matches!(accomplice_set(&inst, &base(&inst), &bad), Err(Error::InvalidCabalLoop(_))));
    }

    #[test]
    fn scp2_falsified_profile() {
        let inst = fixture("scp2");
        let m = base(&inst);
        let p = falsified_profile(&inst, &m, StudentId(4), &schools(&[2, 4]), 0).unwrap();
        assert_eq!(p.flatten(), ids(&[5, 3, 1, 2, 4]).iter().map(|i| SchoolId(i.0)).collect::<Vec<_>>());
        let same = falsified_profile(&inst, &m, StudentId(4), &BTreeSet::new(), 0).unwrap();
        assert_eq!(&same, inst.pref(StudentId(4)));
        assert!(matches!(
            falsified_profile(&inst, &m, StudentId(4), &schools(&[3]), 0),
            Err(Error::DisplacedOverlapsPivot(_))
        ));
    }

    #[test]
    fn seeds_only_permute_blocks() {
        let inst = fixture("scp2");
        let m = base(&inst);
        let x = schools(&[2, 4]);
        let pivot = SchoolId(2);
        let reference = falsified_profile(&inst, &m, StudentId(4), &x, 0).unwrap().flatten();
        let cut = reference.iter().position(|&s| s == pivot).unwrap();
        let mut variants = BTreeSet::new();
        for seed in 1..40 {
            let p = falsified_profile(&inst, &m, StudentId(4), &x, seed).unwrap().flatten();
            assert_eq!(p[cut], pivot);
            let (mut a, mut b) = (p[..cut].to_vec(), reference[..cut].to_vec());
            a.sort();
            b.sort();
            assert_eq!(a, b);
            let (mut a, mut b) = (p[cut + 1..].to_vec(), reference[cut + 1..].to_vec());
            a.sort();
            b.sort();
            assert_eq!(a, b);
            variants.insert(p);
        }
        assert!(variants.len() > 1);
    }

    #[test]
    fn scp2_coalition_run() {
        let inst = fixture("scp2");
        let c = Coalition::new(&inst, &base(&inst), vec![CabalLoop::from_arrow(&ids(&[1, 4, 2]))]).unwrap();
        let run = run_coalition(&inst, &c, 0).unwrap();
        assert_eq!(run.matching, Matching::from_indices(&[1, 4, 0, 3, 2]));
        assert_eq!(preference_index(&inst, &run.matching), 6);
        assert!(run.verified);
    }

    #[test]
    fn scp3_pair_cabal() {
        let inst = fixture("scp3");
        let m = base(&inst);
        let loops = vec![CabalLoop::from_arrow(&ids(&[2, 4]))];
        let c = Coalition::new(&inst, &m, loops.clone()).unwrap();
        assert_eq!(c.accomplices.keys().copied().collect::<Vec<_>>(), ids(&[1, 5]));
        assert_eq!(c.accomplices[&StudentId(4)], schools(&[2, 4]));
        let run = run_coalition(&inst, &c, 0).unwrap();
        assert!(run.verified);
        assert_eq!(run.matching, Matching::from_indices(&[4, 1, 0, 3, 2]));
        assert_eq!(preference_index(&inst, &run.matching), 7);

        // With i5 alone the rerun lands elsewhere.
        let only_i5 = Coalition::with_accomplices(&inst, &m, loops, &ids(&[5])).unwrap();
        let run = run_coalition(&inst, &only_i5, 0).unwrap();
        assert!(!run.verified);
    }

    #[test]
    fn scp1_enumeration() {
        let inst = fixture("scp1");
        let outcomes: Vec<Matching> = enumerate_coalitions(&inst, 8).unwrap().into_iter().map(|o| o.matching).collect();
        let mut expected = vec![Matching::from_indices(&[0, 1, 2]), Matching::from_indices(&[1, 0, 2])];
        expected.sort();
        assert_eq!(outcomes, expected);
    }

    #[test]
    fn scp3_enumeration_has_both_known_outcomes() {
        let inst = fixture("scp3");
        let found = enumerate_coalitions(&inst, 8).unwrap();
        let idx: BTreeSet<u64> = found.iter().filter(|o| o.verified).map(|o| preference_index(&inst, &o.matching)).collect();
        assert!(idx.contains(&3) && idx.contains(&7));
        assert!(matches!(enumerate_coalitions(&inst, 4), Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn acyclic_baseline_has_only_the_empty_coalition() {
        let inst = Instance::strict_from_lists(vec![1, 1], vec![vec![0, 1], vec![1, 0]], vec![vec![0, 1], vec![0, 1]]);
        let found = enumerate_coalitions(&inst, 8).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].matching, base(&inst));
        assert!(found[0].coalition.loops.is_empty());
    }

    #[test]
    fn eadam_coalitions_on_fixtures() {
        let scp3 = fixture("scp3");
        let all: BTreeSet<StudentId> = scp3.students().collect();
        let c = eadam_as_coalition(&scp3, &all).unwrap();
        let mut loops: Vec<Vec<StudentId>> = c.loops.iter().map(|l| l.arrow()).collect();
        loops.sort();
        assert_eq!(loops, vec![ids(&[1, 3]), ids(&[2, 4])]);
        assert_eq!(c.accomplices, [(StudentId(4), schools(&[2, 4, 5]))].into());
        let run = run_coalition(&scp3, &c, 0).unwrap();
        assert!(run.verified);
        assert_eq!(run.matching, eadam(&scp3, &all).unwrap().matching);

        assert_eq!(eadam_as_coalition(&scp3, &BTreeSet::new()).unwrap(), Coalition::empty());

        let scp2 = fixture("scp2");
        let all: BTreeSet<StudentId> = scp2.students().collect();
        let c = eadam_as_coalition(&scp2, &all).unwrap();
        assert_eq!(c.cabal(), ids(&[1, 2, 4]).into_iter().collect());
        assert_eq!(c.accomplices.keys().copied().collect::<Vec<_>>(), ids(&[5]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn enumerated_coalitions_behave(seed in any::<u64>(), n in 2..6usize) {
            let inst = random_strict_instance(seed, n, n, 1);
            let m = base(&inst);
            for o in enumerate_coalitions(&inst, 8).unwrap() {
                prop_assert!(o.verified, "unverified coalition {:?}", o.coalition);
                prop_assert!(o.matching == m || dominates(&inst, &o.matching, &m));
                let cabal = o.coalition.cabal();
                for i in inst.students().filter(|i| !cabal.contains(i)) {
                    prop_assert_eq!(o.matching.get(i), m.get(i));
                }
                if !cabal.is_empty() {
                    let outside: Vec<&StudentId> = o.coalition.accomplices.keys().filter(|i| !cabal.contains(i)).collect();
                    prop_assert!(!outside.is_empty());
                    for i in outside {
                        prop_assert_eq!(o.matching.get(*i), m.get(*i));
                    }
                }
                for seed in 1..4 {
                    prop_assert_eq!(&run_coalition(&inst, &o.coalition, seed).unwrap().matching, &o.matching);
                }
            }
        }

        #[test]
        fn eadam_replays_as_coalition(seed in any::<u64>(), n in 2..7usize, mask in any::<u8>()) {
            let inst = random_strict_instance(seed, n, n, 1);
            let consenters: BTreeSet<StudentId> = inst.students().filter(|i| mask >> i.0 & 1 == 1).collect();
            let c = eadam_as_coalition(&inst, &consenters).unwrap();
            let run = run_coalition(&inst, &c, 0).unwrap();
            prop_assert_eq!(run.matching, eadam(&inst, &consenters).unwrap().matching);
        }
    }
}
