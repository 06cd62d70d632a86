use std::path::Path;
use std::process::{Command, Output};

use envkit::cli::{
    random_state, run, write_json, RandomSpec, Report, Scenario, ScenarioKind, StateSource,
    EXIT_CERTIFICATION, EXIT_INPUT, EXIT_OK,
};
use envkit::hilbert::BipartiteState;
use envkit::schmidt::canonical_schmidt;
use envkit::Tolerances;

fn envkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_envkit"))
        .args(args)
        .env_remove("ENVKIT_DEFAULT_TOL")
        .output()
        .expect("binary runs")
}

fn report_of(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).expect("report JSON on stdout")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn state_file_round_trip_preserves_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("state.json");
    let spec = RandomSpec { rank: Some(3), ..RandomSpec::new(3, 4) };
    let psi = random_state(&spec, 11).unwrap();
    write_json(&file, &psi).unwrap();
    let back: BipartiteState = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(back, psi);

    let t = Tolerances::default();
    let a = canonical_schmidt(&psi, &t).unwrap();
    let b = canonical_schmidt(&back, &t).unwrap();
    for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
        assert!((x - y).abs() <= 1e-15);
    }

    let out = envkit(&["schmidt", "--state", path(&file)]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let r = report_of(&out);
    assert_eq!(r.state_hash, psi.hash());
    let c: Vec<f64> = serde_json::from_value(r.data["coefficients"].clone()).unwrap();
    assert_eq!(c, a.coefficients);
}

#[test]
fn identical_seeds_give_identical_reports() {
    let args = ["group", "--d1", "3", "--d2", "3", "--seed", "7", "--samples", "100"];
    let a = envkit(&args);
    let b = envkit(&args);
    assert_eq!(a.status.code(), Some(EXIT_OK));
    assert_eq!(a.stdout, b.stdout);
    let r = report_of(&a);
    assert!(r.checks.iter().all(|c| c.value < 1e-9));
}

#[test]
fn born_pipeline_reports_exact_rationals() {
    let out = envkit(&["born", "pipeline", "--spectrum", "0.6666666666666666,0.3333333333333334", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let r = report_of(&out);
    assert_eq!(r.data["per_vector"][0]["exact_rational"], "2/3");
    assert_eq!(r.data["per_vector"][1]["exact_rational"], "1/3");
    assert_eq!(r.data["per_vector"][0]["route"], "stage-one-counting");
}

#[test]
fn exit_codes() {
    // Irrational spectrum: the counting stage cannot be certified.
    assert_eq!(envkit(&["born", "pipeline", "--seed", "3"]).status.code(), Some(EXIT_CERTIFICATION));
    assert_eq!(envkit(&["schmidt", "--d1", "3", "--rank", "4"]).status.code(), Some(EXIT_INPUT));
    assert_eq!(envkit(&["schmidt", "--state", "/nonexistent.json"]).status.code(), Some(EXIT_INPUT));
    assert_eq!(envkit(&["--tol", "bogus=1", "schmidt"]).status.code(), Some(EXIT_INPUT));
    assert_eq!(envkit(&[]).status.code(), Some(EXIT_INPUT));
}

#[test]
fn environment_tolerances_apply() {
    let out = Command::new(env!("CARGO_BIN_EXE_envkit"))
        .args(["schmidt"])
        .env("ENVKIT_DEFAULT_TOL", "tol_twin=1e-7")
        .output()
        .unwrap();
    assert_eq!(report_of(&out).tolerances.tol_twin, 1e-7);
    let out = Command::new(env!("CARGO_BIN_EXE_envkit"))
        .args(["--tol", "twin=1e-6", "schmidt"])
        .env("ENVKIT_DEFAULT_TOL", "tol_twin=1e-7")
        .output()
        .unwrap();
    assert_eq!(report_of(&out).tolerances.tol_twin, 1e-6);
}

#[test]
fn scenario_files_run_and_write_output() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let mut s = Scenario::new(
        ScenarioKind::Twins,
        StateSource::Random(RandomSpec { spectrum: Some(vec![0.4, 0.3, 0.3]), ..RandomSpec::new(3, 5) }),
        5,
    );
    s.output = Some(report_path.clone());
    let scenario_path = dir.path().join("scenario.json");
    write_json(&scenario_path, &s).unwrap();

    let out = envkit(&["report", "--scenario", path(&scenario_path)]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let written: Report = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let direct = run(&s, &Tolerances::default()).unwrap();
    assert_eq!(written, direct);
    assert!(written.check_named("swap-block-1").is_some_and(|c| c.passed));
}

#[test]
fn twin_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let pairs = dir.path().join("pairs.json");
    let pair = dir.path().join("pair.json");
    let u1 = dir.path().join("u1.json");
    assert!(envkit(&["state", "--spectrum", "0.5,0.5", "--seed", "1", "--out", path(&state)]).status.success());
    assert!(envkit(&["twin", "sample", "--state", path(&state), "--count", "2", "--out", path(&pairs)]).status.success());

    let list: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&pairs).unwrap()).unwrap();
    std::fs::write(&pair, list[0].to_string()).unwrap();
    std::fs::write(&u1, list[0]["U1"].to_string()).unwrap();
    let verify = envkit(&["twin", "verify", "--state", path(&state), "--pair", path(&pair)]);
    assert_eq!(verify.status.code(), Some(EXIT_OK));

    let of = envkit(&["twin", "of", "--state", path(&state), "--u1", path(&u1)]);
    assert_eq!(of.status.code(), Some(EXIT_OK));
    let twin: serde_json::Value = serde_json::from_slice(&of.stdout).unwrap();
    assert!(twin["residual"].as_f64().unwrap() < 1e-9);

    // Swapping the members breaks the relation for a generic state.
    let other = dir.path().join("other.json");
    assert!(envkit(&["state", "--d1", "2", "--d2", "2", "--spectrum", "0.7,0.3", "--seed", "2", "--out", path(&other)])
        .status
        .success());
    let verify = envkit(&["twin", "verify", "--state", path(&other), "--pair", path(&pair)]);
    assert_eq!(verify.status.code(), Some(EXIT_CERTIFICATION));
}

#[test]
fn isolated_writes_a_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let out = envkit(&["born", "isolated", "--dim", "4", "--seed", "3", "--csv", path(&csv)]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("n,value,deviation"));
}
