//! Problem representation: students, schools, capacities, weak preference
//! profiles and weak priority structures.
//!
//! Ids are dense indices in declaration order. Names are kept only for
//! display and serialization; every deterministic tie-break in the crate
//! derives from the index order.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StudentId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchoolId(pub usize);

/// Dense index newtypes usable as members of a [`WeakOrder`].
pub trait Idx: Copy + Ord + fmt::Debug {
    fn index(self) -> usize;
    fn from_index(i: usize) -> Self;
}

impl Idx for StudentId {
    fn index(self) -> usize {
        self.0
    }
    fn from_index(i: usize) -> Self {
        StudentId(i)
    }
}

impl Idx for SchoolId {
    fn index(self) -> usize {
        self.0
    }
    fn from_index(i: usize) -> Self {
        SchoolId(i)
    }
}

const ABSENT: u32 = u32::MAX;

/// An ordered partition into indifference classes, earlier classes better.
///
/// The class table is precomputed so that rank lookups are O(1). A member
/// listed twice keeps its first class in the table; [`Instance::validate`]
/// reports the duplicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeakOrder<T> {
    classes: Vec<Vec<T>>,
    class_of: Vec<u32>,
}

/// A student's ranking of schools.
pub type PreferenceProfile = WeakOrder<SchoolId>;
/// A school's ranking of students.
pub type PriorityStructure = WeakOrder<StudentId>;

impl<T: Idx> WeakOrder<T> {
    pub fn new(classes: Vec<Vec<T>>) -> Self {
        let size = classes
            .iter()
            .flatten()
            .map(|x| x.index() + 1)
            .max()
            .unwrap_or(0);
        let mut class_of = vec![ABSENT; size];
        for (c, class) in classes.iter().enumerate() {
            for x in class {
                if class_of[x.index()] == ABSENT {
                    class_of[x.index()] = c as u32;
                }
            }
        }
        WeakOrder { classes, class_of }
    }

    /// A strict order listing `order` from best to worst.
    pub fn strict(order: impl IntoIterator<Item = T>) -> Self {
        Self::new(order.into_iter().map(|x| vec![x]).collect())
    }

    pub fn classes(&self) -> &[Vec<T>] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn is_strict(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    /// Zero-based class index of `x`, if listed.
    pub fn class_index(&self, x: T) -> Option<usize> {
        match self.class_of.get(x.index()) {
            Some(&c) if c != ABSENT => Some(c as usize),
            _ => None,
        }
    }

    /// Members from best to worst, classes flattened in stored order.
    pub fn flatten(&self) -> Vec<T> {
        self.classes.iter().flatten().copied().collect()
    }

    /// `true` when `a` sits in a strictly better class than `b`.
    pub fn strictly_prefers(&self, a: T, b: T) -> bool {
        match (self.class_index(a), self.class_index(b)) {
            (Some(x), Some(y)) => x < y,
            _ => false,
        }
    }
}

/// Position of a school in a profile: 1 is the top class. Being unassigned
/// ranks one below the last class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank(pub u32);

/// Three-way comparison of two outcomes from one student's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preference {
    Better,
    Tied,
    Worse,
}

impl PreferenceProfile {
    /// Rank of a school (or of being unassigned, `None`).
    pub fn rank(&self, s: Option<SchoolId>) -> Result<Rank> {
        match s {
            None => Ok(self.unassigned_rank()),
            Some(s) => self
                .class_index(s)
                .map(|c| Rank(c as u32 + 1))
                .ok_or(Error::UnknownSchool(s.0)),
        }
    }

    pub fn unassigned_rank(&self) -> Rank {
        Rank(self.classes.len() as u32 + 1)
    }

    /// Compares `a` against `b`; lower rank is better.
    pub fn prefers(&self, a: Option<SchoolId>, b: Option<SchoolId>) -> Result<Preference> {
        let (ra, rb) = (self.rank(a)?, self.rank(b)?);
        Ok(match ra.cmp(&rb) {
            std::cmp::Ordering::Less => Preference::Better,
            std::cmp::Ordering::Equal => Preference::Tied,
            std::cmp::Ordering::Greater => Preference::Worse,
        })
    }

    /// Rank without the unknown-id check. A school missing from a
    /// truncated report ranks one below being unassigned.
    pub(crate) fn rank_of(&self, s: Option<SchoolId>) -> u32 {
        let unassigned = self.classes.len() as u32 + 1;
        match s {
            None => unassigned,
            Some(s) => self.class_index(s).map_or(unassigned + 1, |c| c as u32 + 1),
        }
    }
}

/// A school choice problem. Construction does not check consistency; call
/// [`Instance::validate`] (the text parser does so automatically).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    students: Vec<String>,
    schools: Vec<String>,
    capacity: Vec<u32>,
    prefs: Vec<PreferenceProfile>,
    prios: Vec<PriorityStructure>,
}

/// A broken instance invariant, with its location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateStudent(String),
    DuplicateSchool(String),
    SharedId(String),
    ZeroCapacity(String),
    DuplicateInProfile { student: String, school: String },
    UnknownSchoolInProfile { student: String, index: usize },
    EmptyProfileClass { student: String },
    IncompleteProfile { student: String, missing: Vec<String> },
    DuplicateInPriority { school: String, student: String },
    UnknownStudentInPriority { school: String, index: usize },
    EmptyPriorityClass { school: String },
    IncompletePriority { school: String, missing: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateStudent(s) => write!(f, "duplicate student id {s}"),
            Violation::DuplicateSchool(s) => write!(f, "duplicate school id {s}"),
            Violation::SharedId(s) => write!(f, "id {s} names both a student and a school"),
            Violation::ZeroCapacity(s) => write!(f, "capacity must be ≥1 (school {s})"),
            Violation::DuplicateInProfile { student, school } => {
                write!(f, "duplicate school in profile of {student}: {school}")
            }
            Violation::UnknownSchoolInProfile { student, index } => {
                write!(f, "unknown school #{index} in profile of {student}")
            }
            Violation::EmptyProfileClass { student } => {
                write!(f, "empty indifference class in profile of {student}")
            }
            Violation::IncompleteProfile { student, missing } => {
                write!(f, "incomplete preference for {student}: missing {}", missing.join(", "))
            }
            Violation::DuplicateInPriority { school, student } => {
                write!(f, "duplicate student in priority of {school}: {student}")
            }
            Violation::UnknownStudentInPriority { school, index } => {
                write!(f, "unknown student #{index} in priority of {school}")
            }
            Violation::EmptyPriorityClass { school } => {
                write!(f, "empty class in priority of {school}")
            }
            Violation::IncompletePriority { school, missing } => {
                write!(f, "incomplete priority for {school}: missing {}", missing.join(", "))
            }
        }
    }
}

impl Instance {
    /// Assembles an instance from parts indexed by student and school.
    ///
    /// # Panics
    /// If `prefs` does not have one entry per student, or `capacity` and
    /// `prios` one entry per school.
    pub fn from_parts(
        students: Vec<String>,
        schools: Vec<String>,
        capacity: Vec<u32>,
        prefs: Vec<PreferenceProfile>,
        prios: Vec<PriorityStructure>,
    ) -> Self {
        assert_eq!(prefs.len(), students.len(), "one profile per student");
        assert_eq!(capacity.len(), schools.len(), "one capacity per school");
        assert_eq!(prios.len(), schools.len(), "one priority per school");
        Instance {
            students,
            schools,
            capacity,
            prefs,
            prios,
        }
    }

    /// Strict instance with generated names `i1..` and `s1..`.
    pub fn strict_from_lists(
        capacity: Vec<u32>,
        prefs: Vec<Vec<usize>>,
        prios: Vec<Vec<usize>>,
    ) -> Self {
        let students = (1..=prefs.len()).map(|k| format!("i{k}")).collect();
        let schools = (1..=capacity.len()).map(|k| format!("s{k}")).collect();
        Instance::from_parts(
            students,
            schools,
            capacity,
            prefs
                .into_iter()
                .map(|l| WeakOrder::strict(l.into_iter().map(SchoolId)))
                .collect(),
            prios
                .into_iter()
                .map(|l| WeakOrder::strict(l.into_iter().map(StudentId)))
                .collect(),
        )
    }

    pub fn num_students(&self) -> usize {
        self.students.len()
    }

    pub fn num_schools(&self) -> usize {
        self.schools.len()
    }

    pub fn students(&self) -> impl ExactSizeIterator<Item = StudentId> + Clone {
        (0..self.students.len()).map(StudentId)
    }

    pub fn schools(&self) -> impl ExactSizeIterator<Item = SchoolId> + Clone {
        (0..self.schools.len()).map(SchoolId)
    }

    pub fn student_name(&self, i: StudentId) -> &str {
        &self.students[i.0]
    }

    pub fn school_name(&self, s: SchoolId) -> &str {
        &self.schools[s.0]
    }

    pub fn student_names(&self) -> &[String] {
        &self.students
    }

    pub fn school_names(&self) -> &[String] {
        &self.schools
    }

    pub fn student_by_name(&self, name: &str) -> Option<StudentId> {
        self.students.iter().position(|n| n == name).map(StudentId)
    }

    pub fn school_by_name(&self, name: &str) -> Option<SchoolId> {
        self.schools.iter().position(|n| n == name).map(SchoolId)
    }

    pub fn capacity(&self, s: SchoolId) -> u32 {
        self.capacity[s.0]
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacity
    }

    pub fn pref(&self, i: StudentId) -> &PreferenceProfile {
        &self.prefs[i.0]
    }

    pub fn prio(&self, s: SchoolId) -> &PriorityStructure {
        &self.prios[s.0]
    }

    pub fn prefs(&self) -> &[PreferenceProfile] {
        &self.prefs
    }

    pub fn prios(&self) -> &[PriorityStructure] {
        &self.prios
    }

    /// Copy with one student's profile replaced.
    pub fn with_pref(&self, i: StudentId, profile: PreferenceProfile) -> Instance {
        let mut out = self.clone();
        out.prefs[i.0] = profile;
        out
    }

    pub(crate) fn parts_mut(
        &mut self,
    ) -> (&mut Vec<u32>, &mut Vec<PreferenceProfile>, &mut Vec<PriorityStructure>) {
        (&mut self.capacity, &mut self.prefs, &mut self.prios)
    }

    pub fn is_strict(&self) -> bool {
        self.prefs.iter().all(|p| p.is_strict()) && self.prios.iter().all(|p| p.is_strict())
    }

    pub(crate) fn require_strict(&self) -> Result<()> {
        if let Some(i) = self.students().find(|&i| !self.pref(i).is_strict()) {
            return Err(Error::NonStrict(format!(
                "preference of {} has ties",
                self.student_name(i)
            )));
        }
        if let Some(s) = self.schools().find(|&s| !self.prio(s).is_strict()) {
            return Err(Error::NonStrict(format!(
                "priority of {} has ties",
                self.school_name(s)
            )));
        }
        Ok(())
    }

    /// Every broken invariant; empty when the instance is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for name in &self.students {
            if !seen.insert(name.as_str()) {
                out.push(Violation::DuplicateStudent(name.clone()));
            }
        }
        let mut seen_schools = HashSet::new();
        for name in &self.schools {
            if !seen_schools.insert(name.as_str()) {
                out.push(Violation::DuplicateSchool(name.clone()));
            }
            if seen.contains(name.as_str()) {
                out.push(Violation::SharedId(name.clone()));
            }
        }
        for s in self.schools() {
            if self.capacity(s) == 0 {
                out.push(Violation::ZeroCapacity(self.school_name(s).to_string()));
            }
        }
        for i in self.students() {
            let student = self.student_name(i).to_string();
            check_partition(
                self.pref(i).classes(),
                self.num_schools(),
                |x| self.schools[x].clone(),
                &mut out,
                |kind| match kind {
                    PartitionIssue::Duplicate(x) => Violation::DuplicateInProfile {
                        student: student.clone(),
                        school: x,
                    },
                    PartitionIssue::Unknown(index) => Violation::UnknownSchoolInProfile {
                        student: student.clone(),
                        index,
                    },
                    PartitionIssue::EmptyClass => Violation::EmptyProfileClass {
                        student: student.clone(),
                    },
                    PartitionIssue::Missing(missing) => Violation::IncompleteProfile {
                        student: student.clone(),
                        missing,
                    },
                },
            );
        }
        for s in self.schools() {
            let school = self.school_name(s).to_string();
            check_partition(
                self.prio(s).classes(),
                self.num_students(),
                |x| self.students[x].clone(),
                &mut out,
                |kind| match kind {
                    PartitionIssue::Duplicate(x) => Violation::DuplicateInPriority {
                        school: school.clone(),
                        student: x,
                    },
                    PartitionIssue::Unknown(index) => Violation::UnknownStudentInPriority {
                        school: school.clone(),
                        index,
                    },
                    PartitionIssue::EmptyClass => Violation::EmptyPriorityClass {
                        school: school.clone(),
                    },
                    PartitionIssue::Missing(missing) => Violation::IncompletePriority {
                        school: school.clone(),
                        missing,
                    },
                },
            );
        }
        out
    }

    /// Refines every indifference class into a strict order.
    ///
    /// Seed 0 orders each class by declaration order; any other seed
    /// shuffles each class with a generator seeded from `seed`.
    pub fn tie_break(&self, seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut refine = |classes: &[Vec<usize>]| -> Vec<usize> {
            let mut out = Vec::new();
            for class in classes {
                let mut c = class.clone();
                c.sort_unstable();
                if seed != 0 && c.len() > 1 {
                    c.shuffle(&mut rng);
                }
                out.extend(c);
            }
            out
        };
        let prefs = self
            .prefs
            .iter()
            .map(|p| {
                if p.is_strict() {
                    p.clone()
                } else {
                    let raw: Vec<Vec<usize>> = p
                        .classes()
                        .iter()
                        .map(|c| c.iter().map(|s| s.0).collect())
                        .collect();
                    WeakOrder::strict(refine(&raw).into_iter().map(SchoolId))
                }
            })
            .collect();
        let prios = self
            .prios
            .iter()
            .map(|p| {
                if p.is_strict() {
                    p.clone()
                } else {
                    let raw: Vec<Vec<usize>> = p
                        .classes()
                        .iter()
                        .map(|c| c.iter().map(|s| s.0).collect())
                        .collect();
                    WeakOrder::strict(refine(&raw).into_iter().map(StudentId))
                }
            })
            .collect();
        Instance {
            students: self.students.clone(),
            schools: self.schools.clone(),
            capacity: self.capacity.clone(),
            prefs,
            prios,
        }
    }
}

enum PartitionIssue {
    Duplicate(String),
    Unknown(usize),
    EmptyClass,
    Missing(Vec<String>),
}

fn check_partition<T: Idx>(
    classes: &[Vec<T>],
    universe: usize,
    name: impl Fn(usize) -> String,
    out: &mut Vec<Violation>,
    make: impl Fn(PartitionIssue) -> Violation,
) {
    let mut seen = vec![false; universe];
    for class in classes {
        if class.is_empty() {
            out.push(make(PartitionIssue::EmptyClass));
        }
        for x in class {
            let k = x.index();
            if k >= universe {
                out.push(make(PartitionIssue::Unknown(k)));
            } else if seen[k] {
                out.push(make(PartitionIssue::Duplicate(name(k))));
            } else {
                seen[k] = true;
            }
        }
    }
    let missing: Vec<String> = (0..universe).filter(|&k| !seen[k]).map(&name).collect();
    if !missing.is_empty() {
        out.push(make(PartitionIssue::Missing(missing)));
    }
}

/// Total map from students to a school or to being unassigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    assignment: Vec<Option<SchoolId>>,
}

impl Matching {
    pub fn new(assignment: Vec<Option<SchoolId>>) -> Self {
        Matching { assignment }
    }

    pub fn unassigned(n: usize) -> Self {
        Matching {
            assignment: vec![None; n],
        }
    }

    /// Everyone assigned, `schools[k]` being student k's school index.
    pub fn from_indices(schools: &[usize]) -> Self {
        Matching::new(schools.iter().map(|&s| Some(SchoolId(s))).collect())
    }

    pub fn get(&self, i: StudentId) -> Option<SchoolId> {
        self.assignment[i.0]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[Option<SchoolId>] {
        &self.assignment
    }

    pub(crate) fn set(&mut self, i: StudentId, s: Option<SchoolId>) {
        self.assignment[i.0] = s;
    }

    /// Number of students holding a seat at each school.
    pub fn loads(&self, num_schools: usize) -> Vec<u32> {
        let mut load = vec![0u32; num_schools];
        for s in self.assignment.iter().flatten() {
            if s.0 < num_schools {
                load[s.0] += 1;
            }
        }
        load
    }

    /// Checks totality, known ids and capacities.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.len() != instance.num_students() {
            return Err(Error::InvalidMatching(format!(
                "matching covers {} students, instance has {}",
                self.len(),
                instance.num_students()
            )));
        }
        for s in self.assignment.iter().flatten() {
            if s.0 >= instance.num_schools() {
                return Err(Error::UnknownSchool(s.0));
            }
        }
        for (s, load) in self.loads(instance.num_schools()).into_iter().enumerate() {
            if load > instance.capacity(SchoolId(s)) {
                return Err(Error::InvalidMatching(format!(
                    "{} holds {load} students but has {} seats",
                    instance.school_name(SchoolId(s)),
                    instance.capacity(SchoolId(s))
                )));
            }
        }
        Ok(())
    }

    /// Human readable `i1:s2 i2:s1 i3:-` form.
    pub fn display<'a>(&'a self, instance: &'a Instance) -> impl fmt::Display + 'a {
        MatchingDisplay {
            matching: self,
            instance,
        }
    }
}

struct MatchingDisplay<'a> {
    matching: &'a Matching,
    instance: &'a Instance,
}

impl fmt::Display for MatchingDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.matching.assignment.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            let school = s.map_or("-", |s| self.instance.school_name(s));
            write!(f, "{}:{}", self.instance.student_name(StudentId(k)), school)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_instance;
    use proptest::prelude::*;

    fn fixture(name: &str) -> Instance {
        let text = std::fs::read_to_string(format!(
            "{}/fixtures/{name}.txt",
            env!("CARGO_MANIFEST_DIR")
        ))
        .unwrap();
        parse_instance(&text).unwrap()
    }

    #[test]
    fn scp1_is_valid() {
        assert!(fixture("scp1").validate().is_empty());
    }

    #[test]
    fn duplicate_school_is_reported() {
        let inst = fixture("scp1");
        let bad = inst.with_pref(
            StudentId(0),
            WeakOrder::strict([SchoolId(0), SchoolId(0), SchoolId(2)]),
        );
        let v = bad.validate();
        assert!(v.iter().any(|v| v.to_string().contains("duplicate school in profile")));
        assert!(v.iter().any(|v| matches!(v, Violation::IncompleteProfile { .. })));
    }

    #[test]
    fn zero_capacity_is_reported() {
        let mut inst = fixture("scp1");
        inst.parts_mut().0[0] = 0;
        let v = inst.validate();
        assert_eq!(v, vec![Violation::ZeroCapacity("s1".into())]);
        assert!(v[0].to_string().contains("capacity must be ≥1"));
    }

    #[test]
    fn unknown_ids_are_reported() {
        let inst = fixture("scp1").with_pref(
            StudentId(1),
            WeakOrder::strict([SchoolId(0), SchoolId(1), SchoolId(2), SchoolId(7)]),
        );
        assert!(inst
            .validate()
            .contains(&Violation::UnknownSchoolInProfile {
                student: "i2".into(),
                index: 7
            }));
        assert_eq!(
            inst.pref(StudentId(1)).rank(Some(SchoolId(9))),
            Err(Error::UnknownSchool(9))
        );
    }

    #[test]
    fn ranks_on_fixture_examples() {
        let scp2 = fixture("scp2");
        let s5 = scp2.school_by_name("s5").unwrap();
        assert_eq!(scp2.pref(StudentId(0)).rank(Some(s5)), Ok(Rank(2)));
        let top = scp2.pref(StudentId(3)).classes()[0][0];
        assert_eq!(scp2.pref(StudentId(3)).rank(Some(top)), Ok(Rank(1)));

        let scp6 = fixture("scp6");
        let p = scp6.pref(StudentId(0));
        assert_eq!(p.rank(Some(SchoolId(1))), Ok(Rank(1)));
        assert_eq!(p.rank(None), Ok(Rank(3)));
        assert_eq!(p.prefers(Some(SchoolId(0)), Some(SchoolId(1))), Ok(Preference::Tied));
    }

    #[test]
    fn prefers_three_way() {
        let scp1 = fixture("scp1");
        let p = scp1.pref(StudentId(0));
        assert_eq!(p.prefers(Some(SchoolId(1)), Some(SchoolId(0))), Ok(Preference::Better));
        assert_eq!(p.prefers(Some(SchoolId(0)), Some(SchoolId(1))), Ok(Preference::Worse));
        assert_eq!(p.prefers(Some(SchoolId(2)), Some(SchoolId(2))), Ok(Preference::Tied));
        assert_eq!(p.prefers(Some(SchoolId(2)), None), Ok(Preference::Better));
    }

    #[test]
    fn tie_break_seed_zero_uses_declaration_order() {
        let scp6 = fixture("scp6");
        let strict = scp6.tie_break(0);
        assert!(strict.is_strict());
        assert!(strict.validate().is_empty());
        assert_eq!(
            strict.pref(StudentId(0)).flatten(),
            vec![SchoolId(0), SchoolId(1), SchoolId(2)]
        );
        let scp1 = fixture("scp1");
        for i in 1..3 {
            assert_eq!(strict.pref(StudentId(i)), scp1.pref(StudentId(i)));
        }
        assert_eq!(strict.prios(), scp1.prios());
    }

    #[test]
    fn tie_break_is_identity_on_strict_instances() {
        let scp1 = fixture("scp1");
        for seed in [0, 1, 42, 9_999] {
            assert_eq!(scp1.tie_break(seed), scp1);
        }
    }

    #[test]
    fn tie_break_seeds_reach_both_refinements() {
        let scp6 = fixture("scp6");
        // Both refinements of i1's tie, enumerated directly.
        let both = [
            vec![SchoolId(0), SchoolId(1), SchoolId(2)],
            vec![SchoolId(1), SchoolId(0), SchoolId(2)],
        ];
        let mut reached = HashSet::new();
        for seed in 1..64 {
            let t = scp6.tie_break(seed);
            assert!(t.validate().is_empty());
            assert!(t.is_strict());
            let order = t.pref(StudentId(0)).flatten();
            assert!(both.contains(&order));
            reached.insert(order);
        }
        assert_eq!(reached.len(), 2);
        assert_eq!(scp6.tie_break(17), scp6.tie_break(17));
    }

    fn weak_profile(m: usize) -> impl Strategy<Value = PreferenceProfile> {
        (Just((0..m).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), m))
            .prop_map(|(order, cuts)| {
                let mut classes: Vec<Vec<SchoolId>> = Vec::new();
                for (k, s) in order.into_iter().enumerate() {
                    if k == 0 || cuts[k] {
                        classes.push(Vec::new());
                    }
                    classes.last_mut().unwrap().push(SchoolId(s));
                }
                WeakOrder::new(classes)
            })
    }

    proptest! {
        #[test]
        fn rank_is_bounded_and_constant_on_classes(p in weak_profile(6)) {
            for (c, class) in p.classes().iter().enumerate() {
                for &s in class {
                    let r = p.rank(Some(s)).unwrap();
                    prop_assert_eq!(r, Rank(c as u32 + 1));
                    prop_assert!(r.0 >= 1 && r.0 as usize <= p.num_classes());
                }
            }
        }

        #[test]
        fn prefers_is_antisymmetric_and_transitive(p in weak_profile(6), a in 0..6usize, b in 0..6usize, c in 0..6usize) {
            let (a, b, c) = (Some(SchoolId(a)), Some(SchoolId(b)), Some(SchoolId(c)));
            let ab = p.prefers(a, b).unwrap();
            let ba = p.prefers(b, a).unwrap();
            prop_assert_eq!(ab == Preference::Better, ba == Preference::Worse);
            prop_assert_eq!(ab == Preference::Tied, ba == Preference::Tied);
            if ab == Preference::Better && p.prefers(b, c).unwrap() == Preference::Better {
                prop_assert_eq!(p.prefers(a, c).unwrap(), Preference::Better);
            }
        }

        #[test]
        fn tie_break_yields_valid_strict_refinements(
            profiles in prop::collection::vec(weak_profile(4), 4),
            seed in any::<u64>(),
        ) {
            let prios = (0..4).map(|_| WeakOrder::new(vec![(0..4).map(StudentId).collect()])).collect();
            let inst = Instance::from_parts(
                (1..=4).map(|k| format!("i{k}")).collect(),
                (1..=4).map(|k| format!("s{k}")).collect(),
                vec![1; 4],
                profiles,
                prios,
            );
            let t = inst.tie_break(seed);
            prop_assert!(t.is_strict());
            prop_assert!(t.validate().is_empty());
            prop_assert_eq!(t.tie_break(seed ^ 1), t.clone());
            for i in inst.students() {
                for a in inst.schools() {
                    for b in inst.schools() {
                        if inst.pref(i).strictly_prefers(a, b) {
                            prop_assert!(t.pref(i).strictly_prefers(a, b));
                        }
                    }
                }
            }
        }
    }
}
