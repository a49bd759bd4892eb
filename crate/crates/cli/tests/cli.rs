use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_rdd-kit");
const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
const SCHEMAS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/schemas");

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_env(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("RDD_KIT_THREADS", t),
        None => cmd.env_remove("RDD_KIT_THREADS"),
    };
    let o = cmd.output().expect("binary runs");
    Output {
        code: o.status.code().expect("exit code"),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn run(args: &[&str]) -> Output {
    run_env(args, None)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn simulated(dir: &Path, extra: &[&str]) -> PathBuf {
    let path = dir.join("sim.csv");
    let mut args = vec!["simulate", "--output", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    assert_eq!(run(&args).code, 0);
    path
}

fn validate(schema_file: &str, doc: &Value) {
    let text = std::fs::read_to_string(Path::new(SCHEMAS).join(schema_file)).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

#[test]
fn ingestion_examples() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.csv",
        "outcome,assignment,treatment\n1.0,0.1,0\n1.2,0.15,0\n2.0,0.25,1\n2.1,0.3,1\n",
    );
    let o = run(&["estimate", "--input", good.to_str().unwrap(), "--threshold", "0.2", "--bandwidth", "0.2", "--design", "sharp", "--uncertainty", "delta", "--format", "json"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let doc: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(doc["provenance"]["rows_read"], 4);
    assert_eq!(doc["provenance"]["rows_dropped"], 0);
    assert!(o.stderr.is_empty());

    let bad = write(
        dir.path(),
        "bad.csv",
        "outcome,assignment,treatment\n1.0,0.1,0\n1.2,0.15,2\n1.3,0.16,0\n2.0,0.25,1\n2.1,0.3,1\n",
    );
    let o = run(&["estimate", "--input", bad.to_str().unwrap(), "--threshold", "0.2", "--bandwidth", "0.2", "--design", "sharp", "--uncertainty", "none"]);
    assert_eq!(o.code, 0);
    assert!(o.stderr.contains("dropped line 3"), "{}", o.stderr);

    let z = write(dir.path(), "z.csv", "outcome,assignment,treatment,z\n1.0,0.1,0,0\n1.1,0.12,0,0\n2.0,0.21,1,0\n");
    let o = run(&["estimate", "--input", z.to_str().unwrap(), "--threshold", "0.2", "--bandwidth", "0.2", "--design", "sharp"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("ZMismatch") && o.stderr.contains("line 4"), "{}", o.stderr);
    assert!(o.stdout.is_empty());

    let o = run(&["estimate", "--input", "/nonexistent.csv", "--threshold", "0.2", "--bandwidth", "0.1", "--design", "sharp"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("FileError"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), &["--n", "2000"]);
    let input = data.to_str().unwrap();
    let o = run(&["estimate", "--input", input, "--threshold", "0.2", "--bandwidth", "0.1", "--design", "sharp"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("NotSharp"));
    assert!(o.stdout.is_empty());

    let o = run(&["estimate", "--input", input, "--bandwidth", "0.1", "--design", "fuzzy"]);
    assert_eq!(o.code, 1, "missing threshold is a usage error");
    let o = run(&["estimate", "--input", input, "--threshold", "0.2", "--bandwidth", "-0.1", "--design", "fuzzy"]);
    assert_eq!(o.code, 1);
    let o = run(&["estimate", "--input", input, "--threshold", "0.2", "--bandwidth", "0.1", "--design", "fuzzy", "--replications", "10"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("InvalidConfig"));
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run_env(&["ci", "closure", "--premises", "x"], Some("lots")).code, 1);
}

#[test]
fn json_outputs_match_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), &["--n", "3000"]);
    let input = data.to_str().unwrap();
    let base = ["--input", input, "--threshold", "0.2", "--format", "json"];

    let mut args = vec!["estimate"];
    args.extend_from_slice(&base);
    args.extend_from_slice(&["--bandwidth", "0.05,0.1", "--design", "fuzzy", "--replications", "200", "--adjust", "C"]);
    let o = run(&args);
    assert_eq!(o.code, 0, "{}", o.stderr);
    validate("estimate.schema.json", &serde_json::from_str(&o.stdout).unwrap());

    let mut args = vec!["sweep"];
    args.extend_from_slice(&base);
    args.extend_from_slice(&["--bandwidth", "0.0000001,0.1", "--design", "fuzzy", "--uncertainty", "delta"]);
    let o = run(&args);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let doc: Value = serde_json::from_str(&o.stdout).unwrap();
    validate("sweep.schema.json", &doc);
    assert_eq!(doc["results"][0]["error"]["name"], "TooFewPoints");

    let mut args = vec!["balance"];
    args.extend_from_slice(&base);
    args.extend_from_slice(&["--bandwidth", "0.05,0.1,0.15", "--covariates", "C"]);
    let o = run(&args);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let doc: Value = serde_json::from_str(&o.stdout).unwrap();
    validate("balance.schema.json", &doc);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 6);

    let o = run(&["mc-study", "--n", "1000", "--repetitions", "10", "--uncertainty", "delta", "--format", "json"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    validate("mc-study.schema.json", &serde_json::from_str(&o.stdout).unwrap());

    let premises = format!("{FIXTURES}/sharp_identification.ci");
    for target in ["Y _||_ Sigma | X, T", "Y _||_ C"] {
        let o = run(&["ci", "derive", "--premises", &premises, "--target", target, "--format", "json"]);
        validate("ci-derive.schema.json", &serde_json::from_str(&o.stdout).unwrap());
    }
    let o = run(&["ci", "closure", "--premises", &premises, "--format", "json"]);
    assert_eq!(o.code, 0);
    validate("ci-closure.schema.json", &serde_json::from_str(&o.stdout).unwrap());
}

#[test]
fn plotdata_rows_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), &["--n", "1500"]);
    let input = data.to_str().unwrap();
    let plain = run(&["plotdata", "--input", input, "--threshold", "0.2"]);
    assert_eq!(plain.code, 0);
    assert_eq!(plain.stdout.lines().count(), 1501);
    assert_eq!(plain.stdout.lines().next(), Some("assignment,outcome,treatment,z"));

    let fitted = run(&["plotdata", "--input", input, "--threshold", "0.2", "--bandwidth", "0.1"]);
    let lines: Vec<&str> = fitted.stdout.lines().collect();
    assert_eq!(lines.len(), 1503);
    assert!(lines[1501].starts_with("#fit,above,") && lines[1502].starts_with("#fit,below,"));

    let replot = write(dir.path(), "plot.csv", &fitted.stdout);
    let est = |p: &str| {
        let o = run(&["estimate", "--input", p, "--threshold", "0.2", "--bandwidth", "0.1", "--design", "fuzzy", "--replications", "200", "--format", "json"]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        serde_json::from_str::<Value>(&o.stdout).unwrap()["estimates"].clone()
    };
    assert_eq!(est(input), est(replot.to_str().unwrap()));
}

#[test]
fn ci_commands() {
    let premises = format!("{FIXTURES}/sharp_identification.ci");
    let o = run(&["ci", "derive", "--premises", &premises, "--target", "Y _||_ Sigma | X, T"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.lines().last().unwrap().contains("Y _||_ Sigma | T, X"));

    let o = run(&["ci", "derive", "--premises", &premises, "--target", "T _||_ C | X, Sigma"]);
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout.lines().count(), 1);

    let fuzzy = format!("{FIXTURES}/fuzzy_threshold.ci");
    let o = run(&["ci", "derive", "--premises", &fuzzy, "--target", "Y _||_ Sigma | X, T"]);
    assert_eq!(o.code, 3);
    assert_eq!(o.stdout.trim(), "NOT DERIVABLE");

    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.ci", "A _||_ B\nA _||_ | C\n");
    let o = run(&["ci", "closure", "--premises", broken.to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("line 2"), "{}", o.stderr);

    let wide = write(dir.path(), "wide.ci", "A _||_ B, C, D, E, F, G, H, I\n");
    let o = run(&["ci", "closure", "--premises", wide.to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("UniverseTooLarge") && o.stderr.contains('9'), "{}", o.stderr);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), &["--n", "2000"]);
    let args = ["estimate", "--input", data.to_str().unwrap(), "--threshold", "0.2", "--bandwidth", "0.1", "--design", "fuzzy", "--replications", "300", "--format", "json"];
    let one = run_env(&args, Some("1"));
    let four = run_env(&args, Some("4"));
    let auto = run_env(&args, Some("0"));
    assert_eq!(one.code, 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, auto.stdout);
}

#[test]
fn scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--print-scenario", "--n", "800", "--scenario-design", "sharp"]);
    assert_eq!(o.code, 0);
    let file = write(dir.path(), "s.txt", &o.stdout);
    let again = run(&["simulate", "--print-scenario", "--scenario", file.to_str().unwrap()]);
    assert_eq!(o.stdout, again.stdout);
    let data = run(&["simulate", "--scenario", file.to_str().unwrap(), "--regime", "intervene-treat"]);
    assert_eq!(data.stdout.lines().count(), 801);
    assert!(data.stdout.lines().skip(1).all(|l| l.split(',').nth(2) == Some("1")));
    let bad = write(dir.path(), "bad.txt", "n = 10\nwhat = 1\n");
    let o = run(&["simulate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("line 2"));
}
