use std::process::{Command, Output};

use serde_json::Value;

fn pmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmt"))
        .args(args)
        .env_remove("PMT_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn verify_passes_with_exit_zero() {
    let out = pmt(&[
        "verify",
        "--case",
        "T2.13",
        "--param",
        "k=1",
        "--samples",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    let cases = v["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 1);
    assert_eq!(cases[0]["case_id"], "T2.13/equivalence");
    assert_eq!(cases[0]["params"]["k"], serde_json::json!([1.0, 0.0]));
    assert_eq!(cases[0]["samples"], 20);
}

#[test]
fn unreachable_tolerance_exits_one() {
    let out = pmt(&[
        "verify", "--case", "T2.18", "--param", "n=1", "--param", "mu=0.5", "--tol", "1e-30",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    assert!(!v["cases"][0]["failures"].as_array().unwrap().is_empty());
}

#[test]
fn unknown_case_suggests_nearest_id() {
    let out = pmt(&["verify", "--case", "T2.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("T2.10"), "{}", stderr(&out));
    assert_eq!(pmt(&["verify", "--case", "NOPE"]).status.code(), Some(2));
}

#[test]
fn usage_and_parameter_errors_exit_two() {
    assert_eq!(pmt(&["verify"]).status.code(), Some(2));
    assert_eq!(
        pmt(&["verify", "--case", "T2.13", "--param", "k"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pmt(&["verify", "--case", "T2.13", "--param", "k=abc"])
            .status
            .code(),
        Some(2)
    );
    // unknown parameter name
    assert_eq!(
        pmt(&["verify", "--case", "T2.13", "--param", "q=1"])
            .status
            .code(),
        Some(2)
    );
    // excluded value of the λ map
    let out = pmt(&[
        "verify", "--case", "T2.18", "--param", "n=1", "--param", "mu=-3",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn complex_parameters_parse() {
    let out = pmt(&[
        "cycle",
        "--case",
        "T2.10",
        "--param",
        "k=-1,1",
        "--samples",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let cyc = v["cases"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["case_id"] == "T2.10/cyclic")
        .expect("cyclic report");
    assert_eq!(cyc["params"]["k"], serde_json::json!([-1.0, 1.0]));
}

#[test]
fn sweep_runs_when_no_params_given() {
    let out = pmt(&[
        "verify",
        "--case",
        "T2.13",
        "--samples",
        "5",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("case_id"));
    assert!(lines.count() > 1);
}

#[test]
fn out_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["relation", "--case", "T2.15", "--samples", "15"];
    let direct = pmt(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let out = pmt(&with_out);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn dumped_config_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.cfg");
    let base = [
        "suite",
        "--cases",
        "T2.10,T3.15,S2",
        "--samples",
        "12",
        "--seed",
        "77",
    ];
    let mut dump = base.to_vec();
    dump.extend(["--dump-config", "--out", cfg.to_str().unwrap()]);
    assert_eq!(pmt(&dump).status.code(), Some(0));
    let text = std::fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("seed = 77"), "{text}");

    let direct = pmt(&base);
    let replayed = pmt(&["suite", "--config", cfg.to_str().unwrap()]);
    assert_eq!(direct.status.code(), Some(0));
    assert_eq!(direct.stdout, replayed.stdout);
    assert_eq!(json(&direct)["master_seed"], 77);
}

#[test]
fn malformed_config_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 3\nsamples = many\n").unwrap();
    let out = pmt(&["suite", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains('2'), "{}", stderr(&out));
}

#[test]
fn seed_comes_from_environment_unless_flagged() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pmt"));
        cmd.args([
            "verify",
            "--case",
            "T2.14",
            "--param",
            "k=2",
            "--samples",
            "8",
        ])
        .args(extra);
        match env {
            Some(s) => cmd.env("PMT_SEED", s),
            None => cmd.env_remove("PMT_SEED"),
        };
        cmd.output().unwrap()
    };
    let from_env = run(Some("99"), &[]);
    assert_eq!(json(&from_env)["master_seed"], 99);
    assert_eq!(from_env.stdout, run(None, &["--seed", "99"]).stdout);
    assert_eq!(json(&run(Some("99"), &["--seed", "5"]))["master_seed"], 5);
    assert_eq!(run(Some("nan"), &[]).status.code(), Some(2));
}

#[test]
fn list_formats() {
    let text = pmt(&["list"]);
    assert_eq!(text.status.code(), Some(0));
    let s = String::from_utf8(text.stdout).unwrap();
    assert!(s.lines().count() >= 24);
    assert!(s.lines().any(|l| l.starts_with("T3.12")));

    let v = json(&pmt(&["list", "--format", "json"]));
    let entries = v["entries"].as_array().unwrap();
    assert!(entries.iter().any(|e| e["id"] == "HGEN"));
    assert!(entries
        .iter()
        .all(|e| e["anchor"].as_str().is_some_and(|a| !a.is_empty())));
}

#[test]
fn replay_at_a_single_point() {
    let out = pmt(&[
        "verify",
        "--case",
        "T2.13",
        "--param",
        "k=1",
        "--at",
        "x=1.1,t=0.9,u=1.3,u_x=-0.7+0.1i,u_xx=1.9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&out)["cases"][0]["samples"], 1);
    let bad = pmt(&[
        "verify", "--case", "T2.13", "--param", "k=1", "--at", "x=oops",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn solution_map_and_text_output() {
    let out = pmt(&[
        "map-solution",
        "--case",
        "T2.13",
        "--param",
        "k=1",
        "--format",
        "text",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(
        s.lines()
            .next()
            .unwrap()
            .starts_with("PASS T2.13/solution-map"),
        "{s}"
    );
}
