use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_padic-potts"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn schema_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(format!("{name}.schema.json"))
}

/// Runs with `--format json`, checks exit 0 and validates against the shipped schema.
fn json(schema: &str, args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let o = run(&full);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let value: Value = serde_json::from_slice(&o.stdout).unwrap();
    let raw = std::fs::read_to_string(schema_path(schema)).unwrap();
    let validator = jsonschema::validator_for(&serde_json::from_str(&raw).unwrap()).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(&value)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{args:?} vs {schema}: {errors:?}");
    value
}

#[test]
fn classify_outcomes() {
    let v = json(
        "verdict",
        &["classify", "--p", "3", "--q", "3", "--k", "2", "--J", "3"],
    );
    assert_eq!(v["outcome"], "PhaseTransition");
    assert_eq!(v["witnesses"]["roots"].as_array().unwrap().len(), 2);
    let v = json(
        "verdict",
        &["classify", "--p", "5", "--q", "3", "--k", "2", "--J", "5"],
    );
    assert_eq!(v["outcome"], "NoPhaseTransition");
    assert_eq!(v["witnesses"]["contraction"].as_array().unwrap().len(), 11);
    let v = json(
        "verdict",
        &["classify", "--p", "3", "--q", "3", "--k", "3", "--J", "3"],
    );
    assert_eq!(v["outcome"], "UnresolvedConjecture");
}

#[test]
fn roots_reports() {
    let v = json("roots", &["roots", "--p", "3", "--q", "3", "--J", "3"]);
    for r in v["solution"]["roots"].as_array().unwrap() {
        assert!(r["residual"].as_i64().unwrap() >= 28);
    }
    let v = json("roots", &["roots", "--p", "2", "--q", "6", "--J", "4"]);
    assert!(v["status"].as_str().unwrap().starts_with("no solution"));
    assert_eq!(v["norm_case"]["solvability"], "valuation-clash");
    let v = json("roots", &["roots", "--p", "3", "--q", "4", "--J", "3"]);
    assert!(v["status"].as_str().unwrap().starts_with("no solution"));
    assert_eq!(v["norm_case"]["solvability"], "unit-norms");
}

#[test]
fn verify_compat_root() {
    let args = [
        "verify-compat",
        "--p",
        "3",
        "--q",
        "3",
        "--k",
        "2",
        "--n",
        "2",
        "--J",
        "3",
        "--root",
        "1",
    ];
    let o = run(&args);
    assert!(o.status.success());
    assert!(
        stdout(&o).starts_with("compatible, max deviation 0 at precision 3^-26"),
        "{}",
        stdout(&o)
    );
    let v = json("compat", &args);
    assert_eq!(v["configs"], 59049);
}

#[test]
fn verify_compat_perturbed_fails() {
    let v = json(
        "compat",
        &[
            "verify-compat",
            "--p",
            "5",
            "--q",
            "3",
            "--J",
            "5",
            "--perturb",
            "--seed",
            "2",
        ],
    );
    assert_eq!(v["status"], "incompatible");
}

#[test]
fn bounded_and_contract() {
    let o = run(&["bounded", "--p", "3", "--q", "3", "--k", "2", "--n", "2"]);
    assert!(
        stdout(&o).starts_with("unbounded, max |mu| >= 3"),
        "{}",
        stdout(&o)
    );
    let v = json("bounded", &["bounded", "--p", "3", "--q", "4", "--n", "1"]);
    assert_eq!(v["verdict"], "Bounded");
    assert_eq!(v["evidence_agrees"], true);
    let v = json(
        "contract",
        &[
            "contract", "--p", "5", "--q", "3", "--k", "2", "--iters", "10", "--seed", "7",
        ],
    );
    let norms: Vec<i64> = v["norms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n.as_i64().unwrap())
        .collect();
    assert_eq!(norms.len(), 11);
    assert!(norms.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn measure_table_csv_and_json() {
    let o = run(&[
        "measure-table",
        "--p",
        "3",
        "--q",
        "3",
        "--n",
        "1",
        "--format",
        "csv",
    ]);
    let text = stdout(&o);
    assert!(text.starts_with("config_id,spins,weight,measure,measure_norm"));
    assert_eq!(text.lines().count(), 82);
    let v = json(
        "measure-table",
        &["measure-table", "--p", "3", "--q", "3", "--n", "1"],
    );
    assert_eq!(v["weights"].as_array().unwrap().len(), 81);
}

#[test]
fn cross_check_surfaces_discrepancy() {
    let v = json(
        "cross-check",
        &["cross-check", "--p", "2", "--q", "8", "--J", "4"],
    );
    assert_eq!(v["consistent"], false);
    assert_eq!(v["stated"], "PhaseTransition");
}

#[test]
fn exit_codes() {
    let bad_prime = run(&["classify", "--p", "4", "--q", "3", "--J", "1"]);
    assert_eq!(bad_prime.status.code(), Some(2));
    let outside = run(&["classify", "--p", "3", "--q", "3", "--J", "1"]);
    assert_eq!(outside.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&outside.stderr).contains("valuation >= 1"));
    let parse = run(&["classify", "--p", "3", "--q", "3", "--J", "x/y"]);
    assert_eq!(parse.status.code(), Some(2));
    let cap = run(&["measure-table", "--p", "3", "--q", "4", "--n", "2"]);
    assert_eq!(cap.status.code(), Some(4));
    // Z_2 has valuation 10, beyond 1 + guard digits.
    let exhausted = run(&[
        "bounded",
        "--p",
        "3",
        "--q",
        "3",
        "--n",
        "2",
        "--precision",
        "1",
    ]);
    assert_eq!(exhausted.status.code(), Some(3));
}

#[test]
fn deterministic_and_out_file() {
    let args = [
        "classify", "--p", "5", "--q", "4", "--k", "2", "--J", "5", "--format", "json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let dir = std::env::temp_dir().join(format!("padic-potts-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("verdict.json");
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let c = run(&with_out);
    assert!(c.status.success() && c.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn thread_env_respected() {
    let args = [
        "verify-compat",
        "--p",
        "3",
        "--q",
        "3",
        "--J",
        "3",
        "--root",
        "2",
        "--format",
        "json",
    ];
    let one = bin()
        .args(args)
        .env("PADIC_POTTS_THREADS", "1")
        .output()
        .unwrap();
    let many = bin()
        .args(args)
        .env("PADIC_POTTS_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
    let bad = bin()
        .args(args)
        .env("PADIC_POTTS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
