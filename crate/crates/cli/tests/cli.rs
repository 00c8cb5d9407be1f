use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.txt"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_schoolchoice"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json-like"]);
    let (code, stdout, stderr) = run(&all);
    assert_eq!(code, 0, "{stderr}");
    serde_json::from_str(&stdout).unwrap()
}

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn eadam_on_scp3() {
    let v = json(&["solve", "--mechanism", "eadam", "--consent", "all", &path("scp3")]);
    assert_eq!(v["index"], 3);
    assert_eq!(v["removals"], serde_json::json!(["(i5,s4)", "(i5,s2)", "(i5,s5)"]));
    assert_eq!(v["rounds"], 4);
    assert_eq!(v["matching"]["i3"], "s5");
}

#[test]
fn eadam_with_partial_consent() {
    let v = json(&["solve", "--mechanism", "eadam", "--consent", "i3", &path("scp1")]);
    assert_eq!(v["index"], 2);
    let v = json(&["solve", "--mechanism", "eadam", "--consent", "i1,i2", &path("scp1")]);
    assert_eq!(v["index"], 4);
}

#[test]
fn da_and_ttc_on_scp1() {
    let v = json(&["solve", "--mechanism", "da", &path("scp1")]);
    assert_eq!(v["index"], 4);
    assert_eq!(v["stable"], true);
    assert_eq!(v["hopeless"], serde_json::json!(["i3"]));
    let v = json(&["solve", "--mechanism", "ttc", &path("scp1")]);
    assert_eq!(v["index"], 2);
    assert_eq!(v["stable"], false);
    assert_eq!(v["violations"].as_array().unwrap().len(), 1);
}

#[test]
fn tadam_enumeration_on_scp2() {
    let v = json(&["enumerate", "--what", "tadam", &path("scp2")]);
    assert_eq!(v["count"], 3);
    for m in v["matchings"].as_array().unwrap() {
        assert_eq!(m["index"], 6);
    }
    let v = json(&["enumerate", "--what", "efficient-dominations", &path("scp2")]);
    assert_eq!(v["count"], 3);
    assert_eq!(v["baseline_index"], 10);
}

#[test]
fn stable_and_coalition_enumerations() {
    let v = json(&["enumerate", "--what", "stable", &path("scp1")]);
    assert_eq!(v["count"], 1);
    let v = json(&["enumerate", "--what", "coalitions", &path("scp3")]);
    let idx: Vec<u64> = v["matchings"].as_array().unwrap().iter().map(|m| m["index"].as_u64().unwrap()).collect();
    assert!(idx.contains(&3) && idx.contains(&7) && idx.contains(&11));
}

#[test]
fn empty_instance() {
    let v = json(&["solve", "--mechanism", "da", &path("empty")]);
    assert_eq!(v["index"], 0);
    assert_eq!(v["matching"], serde_json::json!({}));
}

#[test]
fn tadam_on_scp6() {
    let v = json(&["solve", "--mechanism", "tadam", &path("scp6")]);
    assert_eq!(v["index"], 2);
    assert_eq!(v["baseline_index"], 3);
    let seeded = json(&["solve", "--mechanism", "tadam", "--policy", "seed:9", &path("scp6")]);
    assert_eq!(seeded["index"], 2);
}

#[test]
fn solve_is_deterministic() {
    let args = ["solve", "--mechanism", "tadam", "--policy", "seed:4", "--tiebreak", "3", &path("scp6")];
    assert_eq!(run(&args), run(&args));
}

#[test]
fn cim_auto_and_from_file() {
    let v = json(&["solve", "--mechanism", "cim", &path("scp2")]);
    assert_eq!(v["index"], 6);
    assert_eq!(v["verified"], true);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("coalition.txt");
    std::fs::write(&file, "loop i2 -> i4 -> i2\naccomplices i1, i5\n").unwrap();
    let v = json(&["solve", "--mechanism", "cim", "--coalition", file.to_str().unwrap(), &path("scp3")]);
    assert_eq!(v["index"], 7);
    assert_eq!(v["verified"], true);
    assert_eq!(v["coalition"]["loops"], serde_json::json!(["i2 -> i4 -> i2"]));

    std::fs::write(&file, "loop i1 -> i2 -> i1\n").unwrap();
    let (code, _, err) = run(&["solve", "--mechanism", "cim", "--coalition", file.to_str().unwrap(), &path("scp3")]);
    assert_eq!(code, 2);
    assert!(err.contains("invalid cabal loop"), "{err}");
}

#[test]
fn trace_table() {
    let (code, out, _) = run(&["trace", &path("scp3")]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("| step | s1"));
    assert_eq!(lines[2], "| 1    | i1         | i2         |    | i4         | ~~i3~~, i5 |");
    assert!(lines[13].starts_with("| 12   |"));
    assert!(out.contains("hopeless: i5\n"));
    let v = json(&["trace", &path("scp3")]);
    assert_eq!(v["steps"].as_array().unwrap().len(), 12);
    assert_eq!(v["steps"][0]["schools"]["s5"]["rejected"], serde_json::json!(["i3"]));
}

#[test]
fn analyze_matching() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.txt");
    std::fs::write(&file, "i1: s2\ni2: s1\ni3: s3\n").unwrap();
    let v = json(&["analyze", "--matching", file.to_str().unwrap(), &path("scp1")]);
    assert_eq!(v["index"], 2);
    assert_eq!(v["versus_sosm"], "dominates");
    assert_eq!(v["efficient"], true);
    assert_eq!(v["reasonably_fair"], true);

    std::fs::write(&file, "i1: s3\ni2: s2\ni3: s1\n").unwrap();
    let v = json(&["analyze", "--matching", file.to_str().unwrap(), &path("scp1")]);
    assert_eq!(v["reasonably_fair"], false);

    std::fs::write(&file, "i1: s3\ni2: s9\n").unwrap();
    let (code, _, err) = run(&["analyze", "--matching", file.to_str().unwrap(), &path("scp1")]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2, column 5"), "{err}");
}

#[test]
fn graph_export() {
    let (code, out, _) = run(&["graph", &path("scp2")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("digraph matching {"));
    assert!(out.contains("\"i1\" -> \"i4\" [w=1];"));
    let v = json(&["graph", "--pruned", &path("scp2")]);
    assert_eq!(v["vertices"], serde_json::json!(["i1", "i2", "i3", "i4"]));
    assert_eq!(v["has_trading_clique"], true);
}

#[test]
fn parse_errors_are_located() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(&file, "students i1\nschools s1\npref i1: s1 > s9\nprio s1: i1\n").unwrap();
    let (code, out, err) = run(&["solve", "--mechanism", "da", file.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("line 3, column 15"), "{err}");

    std::fs::write(&file, "students i1\nschools s1\npref i1: s1\n").unwrap();
    let (code, _, err) = run(&["solve", "--mechanism", "da", file.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("incomplete priority"), "{err}");
}

#[test]
fn usage_errors() {
    let (code, _, err) = run(&["solve", &path("scp1")]);
    assert_eq!(code, 2);
    assert!(err.contains("--mechanism"));
    let (code, _, err) = run(&["solve", "--mechanism", "tadam", "--policy", "random", &path("scp1")]);
    assert_eq!(code, 2);
    assert!(err.contains("seed:N"));
    let (code, _, _) = run(&["strategy", "--check", "dominance", &path("scp1")]);
    assert_eq!(code, 2);
}

#[test]
fn strategy_checks() {
    let v = json(&["strategy", "--check", "anonymity", "--mechanism", "da", &path("scp1")]);
    assert_eq!(v["checks"], 3);
    assert_eq!(v["verdict"], "holds");
    let v = json(&["strategy", "--check", "positive-association", &path("scp2")]);
    assert_eq!(v["verdict"], "holds");
    let v = json(&["strategy", "--check", "same-class", "--classes", "2+3", "--family", "classes=2+3,students=5", "--trials", "20"]);
    assert_eq!(v["checks"], 20);
    let v = json(&["strategy", "--check", "dominance", "--family", "classes=2+2,students=4", "--trials", "500", "--seed", "2"]);
    assert_ne!(v["verdict"], "not-dominated");
    assert_eq!(v["cdf"].as_array().unwrap().len(), 5);
}

#[test]
fn misreport_across_classes_is_dominated() {
    // Reporting the lower class first loses top seats.
    let (code, out, _) = run(&[
        "strategy", "--check", "dominance", "--mechanism", "da", "--family", "classes=2+2,students=4",
        "--alt", "s3 > s4 > s1 > s2", "--trials", "500",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("verdict: dominates"));
    assert!(out.contains("alt: s3 > s4 > s1 > s2"));
}

#[test]
fn same_class_requires_class_respecting_profiles() {
    let (code, _, err) = run(&["strategy", "--check", "same-class", "--classes", "1+1+1", &path("scp1")]);
    assert_eq!(code, 2);
    assert!(err.contains("quality classes"), "{err}");
    let (code, _, err) = run(&["strategy", "--check", "same-class", &path("scp1")]);
    assert_eq!(code, 2);
    assert!(err.contains("--classes"), "{err}");
}

#[test]
fn family_sweeps_hold() {
    for check in ["anonymity", "positive-association"] {
        for mech in ["da", "tadam"] {
            let v = json(&[
                "strategy", "--check", check, "--mechanism", mech, "--family", "classes=2+2,students=4", "--trials", "40",
            ]);
            assert_eq!(v["verdict"], "holds", "{check} {mech}");
            assert_eq!(v["failures"], 0);
        }
    }
}
