use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use schoolchoice::format::serialize_instance;
use schoolchoice::strategy::{
    check_anonymity, check_positive_association, dominance_trial, same_class_cliques, Mechanism, QualityPartition,
    RandomProblemFamily, SchoolSwap, Verdict,
};
use schoolchoice::tadam::CliquePolicy;
use schoolchoice::{Instance, PreferenceProfile, SchoolId, WeakOrder};

use crate::report::Report;
use crate::{CheckName, Done, MechanismName, StrategyArgs};

fn mechanism(name: MechanismName) -> Result<Mechanism, String> {
    match name {
        MechanismName::Da => Ok(Mechanism::Sosm),
        MechanismName::Ttc => Ok(Mechanism::Ttc),
        MechanismName::Eadam => Ok(Mechanism::Eadam(None)),
        MechanismName::Tadam => Ok(Mechanism::Tadam(CliquePolicy::FirstCanonical)),
        MechanismName::Cim => Err("strategy checks do not support cim".into()),
    }
}

fn check_name(c: CheckName) -> &'static str {
    match c {
        CheckName::Anonymity => "anonymity",
        CheckName::PositiveAssociation => "positive-association",
        CheckName::SameClass => "same-class",
        CheckName::Dominance => "dominance",
    }
}

/// Instances under test: the file alone, or `trials` draws of the family.
enum Source {
    File(Instance),
    Family(RandomProblemFamily),
}

struct Case {
    instance: Instance,
    trial: Option<u64>,
}

impl Source {
    fn cases(&self, trials: u64, seed: u64) -> Vec<Case> {
        match self {
            Source::File(instance) => vec![Case {
                instance: instance.clone(),
                trial: None,
            }],
            Source::Family(f) => {
                let report = f.id_order_profile();
                (0..trials)
                    .map(|t| Case {
                        instance: f.sample(seed, t, &report),
                        trial: Some(t),
                    })
                    .collect()
            }
        }
    }
}

struct Sweep {
    checks: u64,
    failures: Vec<Value>,
}

pub(crate) fn run(args: &StrategyArgs) -> Result<Done, String> {
    let mech = mechanism(args.mechanism)?;
    let family = args
        .family
        .as_deref()
        .map(|s| s.parse::<RandomProblemFamily>().map_err(|e| format!("--family: {e}")))
        .transpose()?;
    let source = match (&family, &args.file) {
        (Some(f), _) => Source::Family(f.clone()),
        (None, Some(path)) => Source::File(crate::load(path)?),
        (None, None) => return Err("give an instance file or --family".into()),
    };
    let mut r = Report::new();
    r.set("check", check_name(args.check)).set("mechanism", mech.to_string());

    if args.check == CheckName::Dominance {
        let Some(f) = family else {
            return Err("dominance needs --family".into());
        };
        return dominance(&mech, &f, args, r);
    }

    let sweep = match args.check {
        CheckName::Anonymity => anonymity(&mech, &source, args)?,
        CheckName::PositiveAssociation => positive_association(&mech, &source, args)?,
        CheckName::SameClass => same_class(&source, args)?,
        CheckName::Dominance => unreachable!("handled above"),
    };
    let failed = !sweep.failures.is_empty();
    r.set("checks", sweep.checks)
        .set("failures", sweep.failures.len())
        .set("verdict", if failed { "fails" } else { "holds" })
        .set("counterexamples", sweep.failures);
    Ok(Done { report: r, failed })
}

/// Records a counterexample, written to `--out` when given.
fn counterexample(args: &StrategyArgs, case: &Case, detail: String) -> Result<Value, String> {
    let provenance = match case.trial {
        Some(t) => format!("seed {}, trial {t}", args.seed),
        None => "input file".to_string(),
    };
    let mechanism = format!("{:?}", args.mechanism).to_lowercase();
    let text = format!(
        "# counterexample to {} under {mechanism}: {provenance}\n# {detail}\n{}",
        check_name(args.check),
        serialize_instance(&case.instance)
    );
    let mut v = json!({ "detail": detail, "provenance": provenance });
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let name = format!("{}-{}.txt", check_name(args.check), case.trial.map_or("file".into(), |t| format!("seed{}-trial{t}", args.seed)));
        let path = Path::new(dir).join(name);
        std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        v["fixture"] = path.display().to_string().into();
    }
    Ok(v)
}

fn anonymity(mech: &Mechanism, source: &Source, args: &StrategyArgs) -> Result<Sweep, String> {
    let mut sweep = Sweep { checks: 0, failures: Vec::new() };
    for case in source.cases(args.trials, args.seed) {
        let m = case.instance.num_schools();
        let swaps: Vec<SchoolSwap> = match case.trial {
            // Every pair of the file's schools.
            None => (0..m)
                .flat_map(|a| (a + 1..m).map(move |b| SchoolSwap::new(SchoolId(a), SchoolId(b))))
                .collect(),
            Some(t) => {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                rng.set_stream(t);
                vec![SchoolSwap::new(SchoolId(rng.gen_range(0..m)), SchoolId(rng.gen_range(0..m)))]
            }
        };
        for sw in swaps {
            sweep.checks += 1;
            if !check_anonymity(mech, &case.instance, sw).map_err(|e| e.to_string())? {
                let detail = format!(
                    "relabeling {} and {} changes the outcome",
                    case.instance.school_name(sw.a),
                    case.instance.school_name(sw.b)
                );
                sweep.failures.push(counterexample(args, &case, detail)?);
            }
        }
    }
    Ok(sweep)
}

fn positive_association(mech: &Mechanism, source: &Source, args: &StrategyArgs) -> Result<Sweep, String> {
    let mut sweep = Sweep { checks: 0, failures: Vec::new() };
    for case in source.cases(args.trials, args.seed) {
        let inst = &case.instance;
        let out = mech.run(inst).map_err(|e| e.to_string())?;
        for i in inst.students() {
            let Some(s) = out.get(i) else { continue };
            for better in inst.schools().filter(|&b| inst.pref(i).strictly_prefers(b, s)) {
                sweep.checks += 1;
                if !check_positive_association(mech, inst, i, s, better).map_err(|e| e.to_string())? {
                    let detail = format!(
                        "{} leaves {} after swapping it with {}",
                        inst.student_name(i),
                        inst.school_name(s),
                        inst.school_name(better)
                    );
                    sweep.failures.push(counterexample(args, &case, detail)?);
                }
            }
        }
    }
    Ok(sweep)
}

fn class_sizes(spec: &str) -> Result<Vec<usize>, String> {
    spec.split('+')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("--classes: {e}")))
        .collect()
}

fn same_class(source: &Source, args: &StrategyArgs) -> Result<Sweep, String> {
    let partition = match (source, &args.classes) {
        (Source::Family(f), _) => f.partition.clone(),
        (Source::File(inst), Some(spec)) => {
            let sizes = class_sizes(spec)?;
            if sizes.iter().sum::<usize>() != inst.num_schools() || sizes.contains(&0) {
                return Err("--classes must split every school into nonempty classes".into());
            }
            QualityPartition::consecutive(&sizes)
        }
        (Source::File(_), None) => return Err("same-class on a file needs --classes".into()),
    };
    let mut sweep = Sweep { checks: 0, failures: Vec::new() };
    for case in source.cases(args.trials, args.seed) {
        sweep.checks += 1;
        if !same_class_cliques(&case.instance, &partition).map_err(|e| e.to_string())? {
            let detail = "a clique or final seat crosses quality classes".to_string();
            sweep.failures.push(counterexample(args, &case, detail)?);
        }
    }
    Ok(sweep)
}

fn parse_report(spec: &str, f: &RandomProblemFamily) -> Result<PreferenceProfile, String> {
    let schools: Vec<SchoolId> = spec
        .split('>')
        .map(|t| {
            let t = t.trim();
            t.strip_prefix('s')
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| (1..=f.num_schools()).contains(&k))
                .map(|k| SchoolId(k - 1))
                .ok_or_else(|| format!("--alt: unknown school `{t}`"))
        })
        .collect::<Result<_, _>>()?;
    Ok(WeakOrder::strict(schools))
}

fn dominance(mech: &Mechanism, f: &RandomProblemFamily, args: &StrategyArgs, mut r: Report) -> Result<Done, String> {
    let truth = f.id_order_profile();
    let alt = match &args.alt {
        Some(spec) => parse_report(spec, f)?,
        None => {
            let class = f
                .partition
                .classes()
                .iter()
                .find(|c| c.len() > 1)
                .ok_or("every class has one school; give --alt")?;
            SchoolSwap::new(class[0], class[1]).profile(&truth)
        }
    };
    let res = dominance_trial(mech, f, &truth, &alt, args.trials, args.seed).map_err(|e| e.to_string())?;
    let name = |s: Option<SchoolId>| s.map_or("-".to_string(), |s| format!("s{}", s.0 + 1));
    let flatten = |p: &PreferenceProfile| p.flatten().iter().map(|&s| name(Some(s))).collect::<Vec<_>>().join(" > ");
    let points: Vec<Value> = res
        .points
        .iter()
        .map(|p| {
            json!({
                "through": name(p.school),
                "truth": round(p.truth),
                "alt": round(p.alt),
                "band": round(2.0 * p.epsilon),
            })
        })
        .collect();
    let verdict = match res.verdict {
        Verdict::Dominates => "dominates",
        Verdict::Inconclusive => "inconclusive",
        Verdict::NotDominated => "not-dominated",
    };
    r.set("trials", args.trials)
        .set("truth", flatten(&truth))
        .set("alt", flatten(&alt))
        .set("cdf", points)
        .set("verdict", verdict)
        .set("inconclusive", res.verdict == Verdict::Inconclusive);
    Ok(Done {
        report: r,
        failed: res.verdict == Verdict::NotDominated,
    })
}

fn round(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[test]
    fn counterexample_fixture_carries_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let cli = crate::Cli::parse_from([
            "schoolchoice", "strategy", "--check", "anonymity", "--family", "classes=2,students=2", "--seed", "5",
            "--out", dir.path().to_str().unwrap(),
        ]);
        let crate::Command::Strategy(args) = cli.command else { unreachable!() };
        let f: RandomProblemFamily = "classes=2,students=2".parse().unwrap();
        let case = Case {
            instance: f.sample(5, 7, &f.id_order_profile()),
            trial: Some(7),
        };
        let v = counterexample(&args, &case, "example".into()).unwrap();
        let path = v["fixture"].as_str().unwrap();
        assert!(path.ends_with("anonymity-seed5-trial7.txt"));
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("# counterexample to anonymity under tadam: seed 5, trial 7\n# example\n"));
        let parsed = schoolchoice::format::parse_instance(&text).unwrap();
        assert_eq!(parsed, case.instance);
    }

    #[test]
    fn alternative_reports() {
        let f: RandomProblemFamily = "classes=2+1,students=3".parse().unwrap();
        assert_eq!(parse_report("s2 > s1 > s3", &f).unwrap().flatten(), vec![SchoolId(1), SchoolId(0), SchoolId(2)]);
        assert!(parse_report("s2 > s7", &f).is_err());
    }
}
