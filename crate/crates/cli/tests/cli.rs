use std::path::Path;
use std::process::{Command, Output};

use cpsis_cli::{exit, RunConfig};
use serde_json::Value;

const TRIMODAL: &str = "2:850,3:100,4:50";

fn cpsis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpsis")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn moments_reports_threshold() {
    let out = cpsis(&["moments", "--degrees", TRIMODAL]);
    assert_eq!(out.status.code(), Some(exit::OK));
    let v = json(&out);
    assert_eq!(format!("{:.6}", v["tau_c"].as_f64().unwrap()), "0.758621");
    for key in ["n", "n2", "n3", "tau_c", "a", "B", "a1", "a2"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let v = json(&cpsis(&["moments", "--degrees", "4:1000"]));
    assert_eq!(format!("{:.6}", v["tau_c"].as_f64().unwrap()), "0.333333");
    assert_eq!(v["a1"], Value::Bool(true));
}

#[test]
fn malformed_input_exits_with_validation_code() {
    for args in [
        &["moments", "--degrees", "2:850,3"][..],
        &["moments", "--degrees", "two:850"],
        &["moments", "--degrees", "0:10,2:5"],
        &["moments", "--degrees", "1:100"],
        &["moments", "--degrees", "2:10,2:5"],
        &["moments"],
        &["equilibrium", "--degrees", TRIMODAL],
        &["equilibrium", "--degrees", TRIMODAL, "--tau", "-1"],
        &[
            "simulate",
            "--degrees",
            TRIMODAL,
            "--tau",
            "1",
            "--initial-infected",
            "1,2",
        ],
        &[
            "simulate",
            "--degrees",
            TRIMODAL,
            "--tau",
            "1",
            "--initial-infected",
            "900,0,0",
        ],
        &["sweep", "--degrees", TRIMODAL, "--tau-min", "1", "--tau-max", "0.5"],
        &["moments", "--bogus"],
    ] {
        let out = cpsis(args);
        assert_eq!(out.status.code(), Some(exit::VALIDATION), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
}

#[test]
fn equilibrium_below_threshold_is_not_applicable() {
    let out = cpsis(&["equilibrium", "--degrees", TRIMODAL, "--tau", "0.5"]);
    assert_eq!(out.status.code(), Some(exit::NOT_APPLICABLE));
    assert!(stderr(&out).contains("threshold"));

    let tau_c = json(&cpsis(&["moments", "--degrees", TRIMODAL]))["tau_c"]
        .as_f64()
        .unwrap();
    let out = cpsis(&["equilibrium", "--degrees", TRIMODAL, "--tau", &format!("{tau_c:?}")]);
    assert_eq!(out.status.code(), Some(exit::NOT_APPLICABLE));

    let out = cpsis(&["equilibrium", "--degrees", TRIMODAL, "--tau", "0.5", "--allow-virtual"]);
    assert_eq!(out.status.code(), Some(exit::OK));
    let v = json(&out);
    assert_eq!(v["kind"], "Virtual");
    assert!(v["total_infected"].as_f64().unwrap() < 0.0);
}

#[test]
fn equilibrium_above_threshold_is_stable_and_solved() {
    let v = json(&cpsis(&["equilibrium", "--degrees", TRIMODAL, "--tau", "1"]));
    assert_eq!(v["kind"], "Endemic");
    assert!(v["residual_norm"].as_f64().unwrap() < 1e-8 * 1000.0);
    assert_eq!(v["stability"]["verdict"], "Stable");
    assert_eq!(v["dfe_stability"]["verdict"], "Unstable");
}

#[test]
fn sweep_header_matches_golden_file() {
    let golden =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/sweep_header.csv")).unwrap();
    let out = cpsis(&[
        "sweep",
        "--degrees",
        TRIMODAL,
        "--tau-min",
        "0.5",
        "--tau-max",
        "1.5",
        "--steps",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(exit::OK));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), golden.trim_end());

    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 11);
    let taus: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(taus.windows(2).all(|w| w[1] > w[0]));
    let endemic: Vec<f64> = rows
        .iter()
        .filter(|r| !r[2].is_empty())
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert!(!endemic.is_empty() && endemic.windows(2).all(|w| w[1] > w[0]));
    assert!(rows.iter().filter(|r| r[2].is_empty()).all(|r| r[3].is_empty()));
}

#[test]
fn emitted_config_round_trips_and_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg_s = cfg_path.to_str().unwrap();
    let out = cpsis(&[
        "simulate",
        "--degrees",
        TRIMODAL,
        "--tau",
        "0.7",
        "--gamma",
        "1.1",
        "--initial-infected",
        "90,50,10",
        "--t-max",
        "20",
        "--emit-config",
        cfg_s,
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(exit::OK), "{}", stderr(&out));
    let summary = json(&out);
    assert_eq!(summary["nearest_equilibrium"], "DiseaseFree");

    let cfg = RunConfig::load(&cfg_path).unwrap();
    assert_eq!(cfg.tau, Some(0.7));
    assert_eq!(cfg.gamma, 1.1);
    assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap(), "mem").unwrap(), cfg);

    let out = cpsis(&["simulate", "--config", cfg_s, "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(exit::OK));
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let header = String::from_utf8(ta).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,I_1,I_2,I_3,S_1,S_2,S_3,SI,SS,II,theta");

    let out = cpsis(&["moments", "--config", cfg_s, "--gamma", "2"]);
    let v = json(&out);
    assert!((v["gamma"].as_f64().unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn simulate_summary_names_the_reached_state() {
    let out = cpsis(&[
        "simulate",
        "--degrees",
        TRIMODAL,
        "--tau",
        "1",
        "--initial-infected",
        "90,50,10",
        "--t-max",
        "150",
    ]);
    assert_eq!(out.status.code(), Some(exit::OK));
    let summary: Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert_eq!(summary["nearest_equilibrium"], "Endemic");
    assert_eq!(summary["converged"], Value::Bool(true));
    let total = summary["total_infected"].as_f64().unwrap();
    let expected = summary["endemic_total_infected"].as_f64().unwrap();
    assert!((total - expected).abs() / expected < 1e-4);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().count() > 100);
}

#[test]
fn certify_reports_verdicts_and_verification() {
    let v = json(&cpsis(&[
        "certify",
        "--degrees",
        "2:500,4:500",
        "--tau",
        "0.4",
        "--verify",
    ]));
    assert_eq!(v["verdict"], "Certified");
    assert_eq!(v["assumption"], "A2");
    assert!(v["final_x"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["verification"]["violation_count"], 0);
    let seq = v["sequence"].as_array().unwrap();
    assert!(seq.iter().all(|p| p[1].as_f64().unwrap() < p[0].as_f64().unwrap()));

    let v = json(&cpsis(&["certify", "--degrees", TRIMODAL, "--tau", "0.5", "--verify"]));
    assert_eq!(v["verdict"], "NotApplicable");
    assert_eq!(v["verification"], Value::Null);

    let v = json(&cpsis(&[
        "certify",
        "--degrees",
        "4:1000",
        "--tau",
        "0.3",
        "--max-iter",
        "1000",
    ]));
    assert_eq!(v["verdict"], "IterationCapReached");
}
