//! Incentive checks: school relabelings, positive association, perceived
//! quality classes, and sampled stochastic dominance of truthful reports.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{Instance, Matching, PreferenceProfile, SchoolId, StudentId, WeakOrder};
use crate::mechanisms::{eadam, sosm, ttc};
use crate::tadam::{apply_clique, build_graph, find_cliques, tadam_run, CliqueKind, CliquePolicy, DEFAULT_CYCLE_LIMIT};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mechanism {
    Sosm,
    Ttc,
    /// `None` means every student consents.
    Eadam(Option<BTreeSet<StudentId>>),
    Tadam(CliquePolicy),
}

impl Mechanism {
    pub fn run(&self, instance: &Instance) -> Result<Matching> {
        match self {
            Mechanism::Sosm => Ok(sosm(instance)?.0),
            Mechanism::Ttc => ttc(instance),
            Mechanism::Eadam(consent) => {
                let all: BTreeSet<StudentId>;
                let consent = match consent {
                    Some(c) => c,
                    None => {
                        all = instance.students().collect();
                        &all
                    }
                };
                Ok(eadam(instance, consent)?.matching)
            }
            Mechanism::Tadam(policy) => Ok(tadam_run(instance, *policy)?.matching),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mechanism::Sosm => f.write_str("sosm"),
            Mechanism::Ttc => f.write_str("ttc"),
            Mechanism::Eadam(_) => f.write_str("eadam"),
            Mechanism::Tadam(CliquePolicy::FirstCanonical) => f.write_str("tadam"),
            Mechanism::Tadam(CliquePolicy::Seeded(s)) => write!(f, "tadam(seed {s})"),
        }
    }
}

/// Exchange of two school labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchoolSwap {
    pub a: SchoolId,
    pub b: SchoolId,
}

impl SchoolSwap {
    pub fn new(a: SchoolId, b: SchoolId) -> Self {
        SchoolSwap { a, b }
    }

    pub fn school(&self, s: SchoolId) -> SchoolId {
        if s == self.a {
            self.b
        } else if s == self.b {
            self.a
        } else {
            s
        }
    }

    /// The profile with the positions of the two schools exchanged.
    pub fn profile(&self, p: &PreferenceProfile) -> PreferenceProfile {
        WeakOrder::new(
            p.classes()
                .iter()
                .map(|c| c.iter().map(|&s| self.school(s)).collect())
                .collect(),
        )
    }

    /// Every profile swapped, and the two schools' capacities and
    /// priorities exchanged.
    pub fn instance(&self, instance: &Instance) -> Instance {
        let mut out = instance.clone();
        let (capacity, prefs, prios) = out.parts_mut();
        for p in prefs.iter_mut() {
            *p = self.profile(p);
        }
        capacity.swap(self.a.0, self.b.0);
        prios.swap(self.a.0, self.b.0);
        out
    }

    pub fn matching(&self, m: &Matching) -> Matching {
        Matching::new(m.assignment().iter().map(|s| s.map(|s| self.school(s))).collect())
    }
}

/// Relabeling two schools relabels the outcome the same way.
pub fn check_anonymity(mechanism: &Mechanism, instance: &Instance, swap: SchoolSwap) -> Result<bool> {
    let original = mechanism.run(instance)?;
    let swapped = mechanism.run(&swap.instance(instance))?;
    Ok(swapped == swap.matching(&original))
}

/// Raising `s` into the position of a school `better` that `i` prefers to
/// their assigned school `s` keeps them at `s`.
pub fn check_positive_association(
    mechanism: &Mechanism,
    instance: &Instance,
    i: StudentId,
    s: SchoolId,
    better: SchoolId,
) -> Result<bool> {
    let m = mechanism.run(instance)?;
    if m.get(i) != Some(s) {
        return Err(Error::PreconditionUnmet(format!(
            "{} is not assigned {}",
            instance.student_name(i),
            instance.school_name(s)
        )));
    }
    let p = instance.pref(i);
    if p.rank_of(Some(better)) >= p.rank_of(Some(s)) {
        return Err(Error::PreconditionUnmet(format!(
            "{} does not prefer {} to {}",
            instance.student_name(i),
            instance.school_name(better),
            instance.school_name(s)
        )));
    }
    let report = SchoolSwap::new(s, better).profile(p);
    Ok(mechanism.run(&instance.with_pref(i, report))?.get(i) == Some(s))
}

/// Ordered perceived-quality classes of schools, best first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QualityPartition {
    classes: Vec<Vec<SchoolId>>,
    class_of: Vec<usize>,
}

impl QualityPartition {
    /// Fails unless the classes are nonempty, disjoint and cover
    /// `0..num_schools`.
    pub fn new(num_schools: usize, classes: Vec<Vec<SchoolId>>) -> Result<Self> {
        let mut class_of = vec![usize::MAX; num_schools];
        for (k, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::PreconditionUnmet("empty quality class".into()));
            }
            for s in class {
                match class_of.get_mut(s.0) {
                    None => return Err(Error::UnknownSchool(s.0)),
                    Some(c) if *c != usize::MAX => {
                        return Err(Error::PreconditionUnmet(format!("school {} in two classes", s.0 + 1)))
                    }
                    Some(c) => *c = k,
                }
            }
        }
        if class_of.contains(&usize::MAX) {
            return Err(Error::PreconditionUnmet("quality classes do not cover every school".into()));
        }
        Ok(QualityPartition { classes, class_of })
    }

    /// Consecutive blocks of the given sizes.
    pub fn consecutive(sizes: &[usize]) -> Self {
        let mut next = 0;
        let classes = sizes
            .iter()
            .map(|&k| {
                let c = (next..next + k).map(SchoolId).collect();
                next += k;
                c
            })
            .collect();
        QualityPartition::new(next, classes).expect("blocks partition the schools")
    }

    pub fn classes(&self) -> &[Vec<SchoolId>] {
        &self.classes
    }

    pub fn class_of(&self, s: SchoolId) -> usize {
        self.class_of[s.0]
    }

    /// Every listed school of a better class comes before every listed
    /// school of a worse one.
    pub fn respected_by(&self, p: &PreferenceProfile) -> bool {
        p.flatten().windows(2).all(|w| self.class_of(w[0]) <= self.class_of(w[1]))
    }
}

/// Explores every trading-clique sequence of the TADAM run and checks that
/// each clique trades seats of one quality class, and that every terminal
/// keeps each student in the class of their baseline school.
pub fn same_class_cliques(instance: &Instance, partition: &QualityPartition) -> Result<bool> {
    if !instance.prefs().iter().all(|p| partition.respected_by(p)) {
        return Err(Error::PreconditionUnmet("profiles do not respect the quality classes".into()));
    }
    let base = sosm(&instance.tie_break(0))?.0;
    let class = |m: &Matching, i: StudentId| m.get(i).map(|s| partition.class_of(s));
    let mut seen: HashSet<Matching> = [base.clone()].into();
    let mut stack = vec![base.clone()];
    while let Some(m) = stack.pop() {
        let graph = build_graph(instance, &m).prune();
        let cliques: Vec<_> = find_cliques(&graph, DEFAULT_CYCLE_LIMIT)?
            .into_iter()
            .filter(|c| c.kind == CliqueKind::Trading)
            .collect();
        if cliques.is_empty() && instance.students().any(|i| class(&m, i) != class(&base, i)) {
            return Ok(false);
        }
        for c in cliques {
            if !c.cycle.iter().map(|&i| class(&m, i)).all_equal() {
                return Ok(false);
            }
            let next = apply_clique(instance, &m, &c)?;
            if seen.insert(next.clone()) {
                stack.push(next);
            }
        }
    }
    Ok(true)
}

/// Seeded distribution of the other students' reports and all priorities,
/// symmetric within each quality class.
///
/// Other students order each class uniformly at random and keep the
/// classes in quality order; priorities are uniform strict orders; every
/// school of a class has that class's capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomProblemFamily {
    pub partition: QualityPartition,
    pub num_students: usize,
    /// One capacity per quality class.
    pub class_capacity: Vec<u32>,
    pub focal: StudentId,
}

impl RandomProblemFamily {
    pub fn num_schools(&self) -> usize {
        self.partition.class_of.len()
    }

    /// Draw number `trial` of the stream for `seed`, with the focal
    /// student reporting `report`.
    pub fn sample(&self, seed: u64, trial: u64, report: &PreferenceProfile) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let n = self.num_students;
        let m = self.num_schools();
        let prefs = (0..n)
            .map(|i| {
                if i == self.focal.0 {
                    return report.clone();
                }
                WeakOrder::strict(self.partition.classes.iter().flat_map(|c| {
                    let mut c = c.clone();
                    c.shuffle(&mut rng);
                    c
                }))
            })
            .collect();
        let prios = (0..m)
            .map(|_| {
                let mut order: Vec<StudentId> = (0..n).map(StudentId).collect();
                order.shuffle(&mut rng);
                WeakOrder::strict(order)
            })
            .collect();
        let capacity = (0..m)
            .map(|s| self.class_capacity[self.partition.class_of(SchoolId(s))])
            .collect();
        Instance::from_parts(
            (1..=n).map(|k| format!("i{k}")).collect(),
            (1..=m).map(|k| format!("s{k}")).collect(),
            capacity,
            prefs,
            prios,
        )
    }

    /// The focal student's truthful profile: schools in id order.
    pub fn id_order_profile(&self) -> PreferenceProfile {
        WeakOrder::strict(self.partition.classes.iter().flatten().copied())
    }
}

/// `classes=3+3,students=6,capacity=1,focal=i1`; `capacity` takes one
/// value for every class or a `+`-separated list.
impl FromStr for RandomProblemFamily {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse {
            line: 1,
            column: 1,
            message: msg,
        };
        let mut fields = BTreeMap::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            fields.insert(k.trim(), v.trim());
        }
        let list = |key: &str| -> Result<Vec<usize>> {
            fields
                .get(key)
                .ok_or_else(|| bad(format!("missing `{key}`")))?
                .split('+')
                .map(|x| x.trim().parse::<usize>().map_err(|e| bad(format!("{key}: {e}"))))
                .collect()
        };
        let sizes = list("classes")?;
        if sizes.iter().any(|&k| k == 0) {
            return Err(bad("class sizes must be positive".into()));
        }
        let num_students = list("students")?[0];
        let mut class_capacity: Vec<u32> = match fields.get("capacity") {
            Some(_) => list("capacity")?.into_iter().map(|c| c as u32).collect(),
            None => vec![1],
        };
        if class_capacity.len() == 1 {
            class_capacity = vec![class_capacity[0]; sizes.len()];
        }
        if class_capacity.len() != sizes.len() || class_capacity.contains(&0) {
            return Err(bad("one positive capacity per class expected".into()));
        }
        let focal = match fields.get("focal") {
            Some(f) => f
                .trim_start_matches('i')
                .parse::<usize>()
                .ok()
                .filter(|&k| (1..=num_students).contains(&k))
                .ok_or_else(|| bad(format!("bad focal student `{f}`")))?,
            None => 1,
        };
        Ok(RandomProblemFamily {
            partition: QualityPartition::consecutive(&sizes),
            num_students,
            class_capacity,
            focal: StudentId(focal - 1),
        })
    }
}

/// Largest absolute difference between the two school histograms of
/// `draws` samples, over every position a school can take in another
/// student's list or in a priority order. Samples are symmetric in `a` and
/// `b` exactly when both histograms agree up to sampling noise.
pub fn symmetry_gap(family: &RandomProblemFamily, swap: SchoolSwap, draws: u64, seed: u64) -> (f64, f64) {
    let n = family.num_students;
    let report = family.id_order_profile();
    let cells = n * family.num_schools() + n * n;
    let count = |s: SchoolId| -> Vec<u64> {
        (0..draws)
            .into_par_iter()
            .map(|t| {
                let inst = family.sample(seed, t, &report);
                let mut h = vec![0u64; cells];
                for i in inst.students().filter(|&i| i != family.focal) {
                    let pos = inst.pref(i).class_index(s).expect("complete list");
                    h[i.0 * family.num_schools() + pos] += 1;
                }
                for (pos, i) in inst.prio(s).flatten().into_iter().enumerate() {
                    h[n * family.num_schools() + i.0 * n + pos] += 1;
                }
                h
            })
            .reduce(|| vec![0; cells], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect())
    };
    let (ha, hb) = (count(swap.a), count(swap.b));
    let d = draws as f64;
    let mut gap: f64 = 0.0;
    let mut band: f64 = 0.0;
    for (x, y) in ha.iter().zip(&hb) {
        let (p, q) = (*x as f64 / d, *y as f64 / d);
        let pooled = (p + q) / 2.0;
        gap = gap.max((p - q).abs());
        band = band.max(3.0 * (2.0 * pooled * (1.0 - pooled) / d).sqrt());
    }
    (gap, band)
}

/// Placement frequencies of one student; `None` is staying unassigned.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementDistribution {
    pub probs: BTreeMap<Option<SchoolId>, f64>,
    pub trials: u64,
}

impl PlacementDistribution {
    fn from_counts(counts: &BTreeMap<Option<SchoolId>, u64>, trials: u64) -> Self {
        PlacementDistribution {
            probs: counts.iter().map(|(&s, &c)| (s, c as f64 / trials as f64)).collect(),
            trials,
        }
    }

    pub fn prob(&self, s: Option<SchoolId>) -> f64 {
        self.probs.get(&s).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Dominates,
    /// Truth falls short somewhere, but only inside the noise band.
    Inconclusive,
    NotDominated,
}

/// One point of the cumulative comparison along the true ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfPoint {
    /// The prefix ends at this school; `None` closes with unassigned.
    pub school: Option<SchoolId>,
    pub truth: f64,
    pub alt: f64,
    /// Three-sigma half-width; the band is `[-epsilon, epsilon]`.
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominanceResult {
    pub truth: PlacementDistribution,
    pub alt: PlacementDistribution,
    pub points: Vec<CdfPoint>,
    pub verdict: Verdict,
}

impl DominanceResult {
    /// Points where truth's cumulative frequency is below the alternative's.
    pub fn shortfalls(&self) -> impl Iterator<Item = &CdfPoint> {
        self.points.iter().filter(|p| p.truth < p.alt)
    }
}

/// Samples `trials` problems and runs the mechanism on each twice, once
/// with the focal student's `truth` and once with `alt`, on the same draw.
/// The verdict compares cumulative placement frequencies along the true
/// ranking.
pub fn dominance_trial(
    mechanism: &Mechanism,
    family: &RandomProblemFamily,
    truth: &PreferenceProfile,
    alt: &PreferenceProfile,
    trials: u64,
    seed: u64,
) -> Result<DominanceResult> {
    type Counts = (BTreeMap<Option<SchoolId>, u64>, BTreeMap<Option<SchoolId>, u64>);
    let focal = family.focal;
    let merge = |mut a: BTreeMap<Option<SchoolId>, u64>, b: BTreeMap<Option<SchoolId>, u64>| {
        for (k, v) in b {
            *a.entry(k).or_default() += v;
        }
        a
    };
    let (ct, ca): Counts = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Counts> {
            let a = mechanism.run(&family.sample(seed, t, truth))?.get(focal);
            let b = mechanism.run(&family.sample(seed, t, alt))?.get(focal);
            Ok(([(a, 1)].into(), [(b, 1)].into()))
        })
        .try_reduce(
            || (BTreeMap::new(), BTreeMap::new()),
            |x, y| Ok((merge(x.0, y.0), merge(x.1, y.1))),
        )?;
    let truth_dist = PlacementDistribution::from_counts(&ct, trials);
    let alt_dist = PlacementDistribution::from_counts(&ca, trials);

    let d = trials.max(1) as f64;
    let mut points = Vec::new();
    let (mut ft, mut fa) = (0.0, 0.0);
    for s in truth.flatten().into_iter().map(Some).chain([None]) {
        ft += truth_dist.prob(s);
        fa += alt_dist.prob(s);
        let p = ((ft + fa) / 2.0_f64).clamp(0.0, 1.0);
        points.push(CdfPoint {
            school: s,
            truth: ft,
            alt: fa,
            epsilon: 3.0 * (p * (1.0 - p) / d).sqrt(),
        });
    }
    let verdict = if points.iter().all(|p| p.truth >= p.alt) {
        Verdict::Dominates
    } else if points.iter().all(|p| p.truth >= p.alt - p.epsilon) {
        Verdict::Inconclusive
    } else {
        Verdict::NotDominated
    };
    Ok(DominanceResult {
        truth: truth_dist,
        alt: alt_dist,
        points,
        verdict,
    })
}

/// A report that gets a student a school they truly prefer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manipulation {
    pub student: StudentId,
    pub report: PreferenceProfile,
    pub truthful: Matching,
    pub manipulated: Matching,
}

/// Tries every reordering of each student's list, in student order, and
/// returns the first profitable one.
pub fn find_manipulation(mechanism: &Mechanism, instance: &Instance) -> Result<Option<Manipulation>> {
    let truthful = mechanism.run(instance)?;
    for i in instance.students() {
        let p = instance.pref(i);
        let listed = p.flatten();
        for order in listed.iter().copied().permutations(listed.len()) {
            let report = WeakOrder::strict(order);
            if &report == p {
                continue;
            }
            let manipulated = mechanism.run(&instance.with_pref(i, report.clone()))?;
            if p.rank_of(manipulated.get(i)) < p.rank_of(truthful.get(i)) {
                return Ok(Some(Manipulation {
                    student: i,
                    report,
                    truthful,
                    manipulated,
                }));
            }
        }
    }
    Ok(None)
}
