use std::collections::BTreeSet;
use std::path::Path;

use serde_json::{json, Map, Value};

use schoolchoice::analysis::{
    dominates, is_efficient, is_reasonably_fair, is_stable, preference_index, priority_violations, vacancies,
};
use schoolchoice::coalitions::{enumerate_coalitions, run_coalition, CabalLoop, Coalition};
use schoolchoice::format::{parse_coalition, parse_matching};
use schoolchoice::mechanisms::{eadam, hopeless_students, sosm, ttc, DaTrace};
use schoolchoice::oracle::{efficient_dominations_of, stable_set, OracleBound};
use schoolchoice::tadam::{
    build_graph, has_trading_clique, tadam_enumerate, tadam_run_with, CliquePolicy, EnumerationLimits,
    DEFAULT_CYCLE_LIMIT,
};
use schoolchoice::{Instance, Matching, StudentId};

use crate::report::{indexed_matching, matching_value, violation_value, Report};
use crate::{read, MechanismName, SolveArgs};

/// Coalition search stops above this many students.
const COALITION_MAX_STUDENTS: usize = 8;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub(crate) fn parse_consent(instance: &Instance, spec: &str) -> Result<BTreeSet<StudentId>, String> {
    if spec.trim() == "all" {
        return Ok(instance.students().collect());
    }
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| instance.student_by_name(name).ok_or_else(|| format!("unknown student `{name}` in --consent")))
        .collect()
}

pub(crate) fn parse_policy(spec: &str) -> Result<CliquePolicy, String> {
    match spec.trim() {
        "canonical" => Ok(CliquePolicy::FirstCanonical),
        s => s
            .strip_prefix("seed:")
            .and_then(|n| n.parse().ok())
            .map(CliquePolicy::Seeded)
            .ok_or_else(|| format!("--policy must be `canonical` or `seed:N`, got `{s}`")),
    }
}

fn names(instance: &Instance, students: impl IntoIterator<Item = StudentId>) -> Vec<String> {
    students.into_iter().map(|i| instance.student_name(i).to_string()).collect()
}

fn outcome(report: &mut Report, instance: &Instance, m: &Matching) {
    report
        .set("matching", matching_value(instance, m))
        .set("index", preference_index(instance, m))
        .set("stable", is_stable(instance, m))
        .set(
            "violations",
            priority_violations(instance, m)
                .iter()
                .map(|v| violation_value(instance, v))
                .collect::<Vec<_>>(),
        );
}

fn coalition_value(instance: &Instance, c: &Coalition) -> Value {
    let accomplices: Map<String, Value> = c
        .accomplices
        .iter()
        .map(|(&i, x)| {
            let schools: Vec<&str> = x.iter().map(|&s| instance.school_name(s)).collect();
            (instance.student_name(i).to_string(), schools.into())
        })
        .collect();
    json!({
        "loops": c.loops.iter().map(|l| l.display(instance)).collect::<Vec<_>>(),
        "accomplices": accomplices,
    })
}

pub(crate) fn solve(args: &SolveArgs) -> Result<Report, String> {
    let instance = crate::load(&args.file)?;
    let strict = instance.tie_break(args.tiebreak);
    let mut r = Report::new();
    match args.mechanism {
        MechanismName::Da => {
            let (m, trace) = sosm(&strict).map_err(err)?;
            r.set("mechanism", "da");
            outcome(&mut r, &instance, &m);
            r.set("hopeless", names(&instance, hopeless_students(&trace)));
        }
        MechanismName::Ttc => {
            let m = ttc(&strict).map_err(err)?;
            r.set("mechanism", "ttc");
            outcome(&mut r, &instance, &m);
        }
        MechanismName::Eadam => {
            let consent = parse_consent(&instance, &args.consent)?;
            let out = eadam(&strict, &consent).map_err(err)?;
            r.set("mechanism", "eadam");
            outcome(&mut r, &instance, &out.matching);
            r.set("rounds", out.rounds.len());
            r.set(
                "removals",
                out.removals()
                    .iter()
                    .map(|&(i, s)| format!("({},{})", instance.student_name(i), instance.school_name(s)))
                    .collect::<Vec<_>>(),
            );
        }
        MechanismName::Tadam => {
            let policy = parse_policy(&args.policy)?;
            let out = tadam_run_with(&instance, policy, args.tiebreak, DEFAULT_CYCLE_LIMIT).map_err(err)?;
            r.set("mechanism", "tadam");
            outcome(&mut r, &instance, &out.matching);
            r.set("baseline_index", preference_index(&instance, &out.baseline));
            r.set("cliques", out.log.iter().map(|c| c.display(&instance)).collect::<Vec<_>>());
        }
        MechanismName::Cim => {
            r.set("mechanism", "cim");
            let (coalition, m, verified) = match &args.coalition {
                Some(path) => cim_from_file(&strict, path)?,
                None => cim_auto(&strict)?,
            };
            outcome(&mut r, &instance, &m);
            r.set("coalition", coalition_value(&instance, &coalition));
            r.set("verified", verified);
        }
    }
    Ok(r)
}

fn cim_from_file(strict: &Instance, path: &Path) -> Result<(Coalition, Matching, bool), String> {
    let spec = parse_coalition(strict, &read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    let baseline = sosm(strict).map_err(err)?.0;
    let loops: Vec<CabalLoop> = spec.arrows.iter().map(|a| CabalLoop::from_arrow(a)).collect();
    let coalition = match &spec.accomplices {
        Some(list) => Coalition::with_accomplices(strict, &baseline, loops, list),
        None => Coalition::new(strict, &baseline, loops),
    }
    .map_err(err)?;
    let run = run_coalition(strict, &coalition, 0).map_err(err)?;
    Ok((coalition, run.matching, run.verified))
}

/// The verified coalition outcome of least preference index, first in
/// outcome order among equals.
fn cim_auto(strict: &Instance) -> Result<(Coalition, Matching, bool), String> {
    let found = enumerate_coalitions(strict, COALITION_MAX_STUDENTS).map_err(err)?;
    let best = found
        .into_iter()
        .filter(|o| o.verified)
        .min_by_key(|o| preference_index(strict, &o.matching))
        .expect("the empty coalition always verifies");
    Ok((best.coalition, best.matching, best.verified))
}

pub(crate) fn trace(instance: &Instance, tiebreak: u64) -> Result<Report, String> {
    let (m, trace) = sosm(&instance.tie_break(tiebreak)).map_err(err)?;
    let mut r = Report::new();
    let steps: Vec<Value> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(t, step)| {
            let schools: Map<String, Value> = instance
                .schools()
                .filter(|s| !step.proposals[s.0].is_empty())
                .map(|s| {
                    let cell = json!({
                        "held": names(instance, step.held[s.0].iter().copied()),
                        "rejected": names(instance, step.rejected[s.0].iter().copied()),
                    });
                    (instance.school_name(s).to_string(), cell)
                })
                .collect();
            json!({ "step": t + 1, "schools": schools })
        })
        .collect();
    r.set("steps", steps)
        .set("matching", matching_value(instance, &m))
        .set("index", preference_index(instance, &m))
        .set("hopeless", names(instance, hopeless_students(&trace)));
    let mut text = step_table(instance, &trace);
    text.push_str(&format!("matching: {}\n", m.display(instance)));
    text.push_str(&format!("index: {}\n", preference_index(instance, &m)));
    text.push_str(&format!("hopeless: {}\n", names(instance, hopeless_students(&trace)).join(" ")));
    r.text = Some(text);
    Ok(r)
}

/// One row per step and one column per school. A cell lists, in id order,
/// the students a school considers at that step; rejected ones are struck
/// through as `~~i3~~`.
pub(crate) fn step_table(instance: &Instance, trace: &DaTrace) -> String {
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("step".to_string())
        .chain(instance.schools().map(|s| instance.school_name(s).to_string()))
        .collect()];
    for (t, step) in trace.steps.iter().enumerate() {
        let mut row = vec![(t + 1).to_string()];
        for s in instance.schools() {
            if step.proposals[s.0].is_empty() {
                row.push(String::new());
                continue;
            }
            let mut pool: Vec<(StudentId, bool)> = step.held[s.0].iter().map(|&i| (i, false)).collect();
            pool.extend(step.rejected[s.0].iter().map(|&i| (i, true)));
            pool.sort();
            let cell: Vec<String> = pool
                .into_iter()
                .map(|(i, out)| {
                    let name = instance.student_name(i);
                    if out {
                        format!("~~{name}~~")
                    } else {
                        name.to_string()
                    }
                })
                .collect();
            row.push(cell.join(", "));
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (k, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
        if k == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
        }
    }
    out
}

pub(crate) fn enumerate(instance: &Instance, what: crate::EnumerateWhat) -> Result<Report, String> {
    use crate::EnumerateWhat::*;
    let bound = OracleBound::default();
    let mut r = Report::new();
    let list = |ms: &[Matching]| ms.iter().map(|m| indexed_matching(instance, m)).collect::<Vec<_>>();
    match what {
        Stable => {
            let set = stable_set(instance, bound).map_err(err)?;
            r.set("what", "stable").set("count", set.len()).set("matchings", list(&set));
        }
        EfficientDominations => {
            let base = sosm(&instance.tie_break(0)).map_err(err)?.0;
            let set = efficient_dominations_of(instance, &base, bound).map_err(err)?;
            r.set("what", "efficient-dominations")
                .set("baseline_index", preference_index(instance, &base))
                .set("count", set.len())
                .set("matchings", list(&set));
        }
        Tadam => {
            let e = tadam_enumerate(instance, EnumerationLimits::default()).map_err(err)?;
            let all: Vec<Matching> = e.closure().into_iter().collect();
            r.set("what", "tadam")
                .set("count", all.len())
                .set("classes", e.classes.len())
                .set("matchings", list(&all));
        }
        Coalitions => {
            let strict = instance.tie_break(0);
            let found = enumerate_coalitions(&strict, COALITION_MAX_STUDENTS).map_err(err)?;
            let entries: Vec<Value> = found
                .iter()
                .map(|o| {
                    let mut v = indexed_matching(instance, &o.matching);
                    let obj = v.as_object_mut().expect("object");
                    obj.insert("verified".into(), o.verified.into());
                    obj.insert("coalition".into(), coalition_value(instance, &o.coalition));
                    v
                })
                .collect();
            r.set("what", "coalitions").set("count", entries.len()).set("matchings", entries);
        }
    }
    Ok(r)
}

pub(crate) fn analyze(instance: &Instance, matching: &Path) -> Result<Report, String> {
    let m = parse_matching(instance, &read(matching)?).map_err(|e| format!("{}: {e}", matching.display()))?;
    let base = sosm(&instance.tie_break(0)).map_err(err)?.0;
    let bound = OracleBound::default();
    let mut r = Report::new();
    outcome(&mut r, instance, &m);
    let vacant: Vec<&str> = vacancies(instance, &m).iter().map(|&s| instance.school_name(s)).collect();
    let versus = if m == base {
        "equal"
    } else if dominates(instance, &m, &base) {
        "dominates"
    } else if dominates(instance, &base, &m) {
        "dominated"
    } else {
        "incomparable"
    };
    let known = |v: schoolchoice::Result<bool>| match v {
        Ok(b) => Value::Bool(b),
        Err(e) => Value::String(format!("unknown ({e})")),
    };
    r.set("vacancies", vacant)
        .set("sosm_index", preference_index(instance, &base))
        .set("versus_sosm", versus)
        .set("efficient", known(is_efficient(instance, &m, bound)))
        .set("reasonably_fair", known(is_reasonably_fair(instance, &m, bound)));
    Ok(r)
}

pub(crate) fn graph(instance: &Instance, pruned: bool) -> Result<Report, String> {
    let base = sosm(&instance.tie_break(0)).map_err(err)?.0;
    let mut g = build_graph(instance, &base);
    if pruned {
        g = g.prune();
    }
    let mut r = Report::new();
    let edges: Vec<Value> = g
        .edges()
        .map(|(i, j, w)| json!({"from": instance.student_name(i), "to": instance.student_name(j), "weight": w}))
        .collect();
    r.set("vertices", names(instance, g.vertices()))
        .set("edges", edges)
        .set("has_trading_clique", has_trading_clique(&g));
    r.text = Some(g.to_dot(instance));
    Ok(r)
}
