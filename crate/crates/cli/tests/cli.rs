use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stabsim"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bounds_prints_rhs_and_flags() {
    let cfg = config("acceptance.json");
    let out = run(&["bounds", "--theorem", "T1", "--config", path(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let points = v.as_array().unwrap();
    assert_eq!(points.len(), 3);
    let report = &points[0]["reports"][0];
    assert_eq!(report["theorem"], "T1");
    // eΛ₁R²·‖O‖·|supp O|·δ·t² with Λ₁ = 2 at t = 1, δ = 0.01
    let rhs = report["rhs"].as_f64().unwrap();
    assert!((rhs - 10.0 * std::f64::consts::E * 0.01).abs() < 1e-12, "{rhs}");
    assert_eq!(report["flags"]["vt_gt_1"], true);
}

#[test]
fn repeated_sweeps_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("white_noise.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["sweep", "--config", path(&cfg), "--override", "trials=2", "--out", path(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["results.csv", "results.jsonl", "summary.json"] {
        assert!(!fs::read(a.join(file)).unwrap().is_empty());
    }
    assert_eq!(fs::read(a.join("results.csv")).unwrap(), fs::read(b.join("results.csv")).unwrap());
    assert_eq!(fs::read(a.join("summary.json")).unwrap(), fs::read(b.join("summary.json")).unwrap());
    let csv = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 2);

    // rerunning into a finished directory changes nothing
    let o = run(&["sweep", "--config", path(&cfg), "--override", "trials=2", "--out", path(&a)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(a.join("results.csv")).unwrap(), csv);
}

#[test]
fn fit_and_report_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("white_noise.json");
    let out = dir.path().join("wn");
    assert!(run(&["sweep", "--config", path(&cfg), "--override", "trials=8", "--out", path(&out)]).status.success());

    let o = run(&["fit", "--out", path(&out), "--axis", "t", "--window", "all"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fits: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fits.json")).unwrap()).unwrap();
    let fit = &fits[0]["fit"];
    assert_eq!(fit["axis"], "t");
    assert_eq!(fit["window"], serde_json::json!([0, 5]));
    assert!(fit["exponent"].as_f64().unwrap().is_finite());
    assert!(fit["r2"].as_f64().is_some());

    let o = run(&["report", "--out", path(&out), "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let data = fs::read_to_string(out.join("report/t_0.csv")).unwrap();
    let mut lines = data.lines();
    assert_eq!(lines.next(), Some("x,y,yerr,bound_rhs"));
    assert_eq!(lines.count(), 5);
    assert!(fs::read_to_string(out.join("report/t_0.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn check_passes_on_shipped_acceptance_config() {
    let cfg = config("acceptance.json");
    let o = run(&["check", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let audit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(audit["violations"].as_array().unwrap().len(), 0);
    assert_eq!(audit["checked"], 3);
}

#[test]
fn check_exits_three_on_violation() {
    // a much larger perturbation than the bound allows for, audited against
    // the truncation bound with the whole lattice retained
    let cfg = config("acceptance.json");
    let o = run(&[
        "check",
        "--config",
        path(&cfg),
        "--override",
        "noise.delta=0.5",
        "--override",
        r#"theorems=["Truncation"]"#,
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_and_capacity_errors_have_distinct_codes() {
    let cfg = config("acceptance.json");
    let o = run(&["check", "--config", path(&cfg), "--override", "unknown_key=1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["check", "--config", path(&cfg), "--override", "trials=\"many\""]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["bounds", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["check", "--config", path(&cfg), "--override", "model.extent=[40]"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn single_trial_is_reproducible() {
    let cfg = config("m1_trotter.json");
    let a = run(&["trial", "--config", path(&cfg), "--point", "2", "--trial", "5"]);
    let b = run(&["trial", "--config", path(&cfg), "--point", "2", "--trial", "5"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["n"], 64);
    assert_eq!(v["trial"], 5);
}
