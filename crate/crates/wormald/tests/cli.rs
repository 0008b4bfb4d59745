use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use wormald::parallel;
use wormald_core::analysis::{self, default_config};
use wormald_core::coupon::TruncationLevel;
use wormald_core::mc::{self, RunPlan};

fn wormald(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wormald")).args(args).env_remove("WORMALD_OUT_DIR").output().unwrap()
}

fn wormald_in(out: &Path, args: &[&str]) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    wormald(&full)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn compare_writes_its_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wormald_in(tmp.path(), &["compare", "--n", "100000", "--l", "10", "--s-max", "4", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["trajectory.csv", "ode.csv", "deviation.csv", "manifest.json"] {
        assert!(tmp.path().join(name).is_file(), "{name} missing");
    }
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let header = traj.lines().next().unwrap();
    assert_eq!(header, "s,z0,z1,z2,z3,z4,z5,z6,z7,z8,z9,z10,z11");
    assert!(!traj.contains('\r'));
    let dev = fs::read_to_string(tmp.path().join("deviation.csv")).unwrap();
    assert!(dev.starts_with("run,sup_dev,argmax_s,z0_dev,"));
    assert_eq!(dev.lines().count(), 2);
    let sup: f64 = dev.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(sup < 0.02);

    let m = manifest(tmp.path());
    assert_eq!(m["subcommand"], "compare");
    assert_eq!(m["domain_exited"], false);
    assert_eq!(m["config"]["seed"], 42);
    assert_eq!(m["seeds"]["runs"].as_array().unwrap().len(), 1);
}

#[test]
fn gumbel_has_one_row_per_c() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wormald_in(tmp.path(), &["gumbel", "--n", "10000", "--trials", "10000", "--cs", "-1,0,1,2", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("gumbel.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "c,empirical,stderr,ref_paper,ref_classical,exact");
    assert_eq!(lines.len(), 5);
    // n above the exact-oracle limit leaves the column empty.
    assert!(lines[1..].iter().all(|l| l.ends_with(',')));
}

#[test]
fn gumbel_small_n_fills_exact_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wormald_in(tmp.path(), &["gumbel", "--n", "100", "--trials", "500", "--cs", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("gumbel.csv")).unwrap();
    let exact: f64 = csv.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((exact - 0.632).abs() < 0.01);
}

#[test]
fn invalid_configuration_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wormald_in(tmp.path(), &["simulate", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    assert_eq!(wormald(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(wormald_in(tmp.path(), &["solve", "--h", "-1"]).status.code(), Some(2));
    assert_eq!(wormald_in(tmp.path(), &["scaling", "--ns", "1000"]).status.code(), Some(2));

    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"n": 100, "colour": "blue"}"#).unwrap();
    let out = wormald_in(tmp.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn precision_loss_exits_3() {
    // Far below n ln n the alternating series cancels catastrophically.
    let tmp = tempfile::tempdir().unwrap();
    let out = wormald_in(tmp.path(), &["gumbel", "--n", "2000", "--trials", "100", "--cs=-6"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 50, "runs": 2, "seed": 11, "s_max": 1.0}"#).unwrap();
    let out = wormald_in(tmp.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--n", "80"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(tmp.path());
    assert_eq!(m["config"]["n"], 80);
    assert_eq!(m["config"]["seed"], 11);
    assert_eq!(m["summary"]["horizon_steps"], 80);
    assert!(tmp.path().join("trajectory_1.csv").is_file());
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wormald"))
        .args(["solve", "--s-max", "1"])
        .env("WORMALD_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("ode.csv").is_file());
    assert_eq!(manifest(tmp.path())["domain_exited"], false);
}

#[test]
fn check_passes_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wormald_in(tmp.path(), &["check", "--n", "500", "--runs", "5", "--state-samples", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("check.json")).unwrap()).unwrap();
    assert_eq!(report["increment"]["max_observed"], 1);
    assert_eq!(report["drift"]["states"].as_array().unwrap().len(), 10);
    assert_eq!(report["lipschitz"]["passed"], true);
    assert_eq!(manifest(tmp.path())["summary"]["all_passed"], true);
}

#[test]
fn parallel_matches_sequential() {
    let l = TruncationLevel::new(6).unwrap();
    let plan = RunPlan::with_scaled_horizon(3000, l, 3.0, default_config(1e-3, 3.0).unwrap(), 9, 6).unwrap();
    let par = parallel::simulate_all(&plan).unwrap();
    for (i, traj) in par.iter().enumerate() {
        assert_eq!(traj, &mc::simulate(&plan, i).unwrap());
    }
    let ode = analysis::coupon_reference(&plan).unwrap();
    let devs = parallel::sup_deviations(&plan).unwrap();
    for (i, d) in devs.iter().enumerate() {
        let seq = analysis::sup_deviation(&par[i], &ode).unwrap().sup_deviation;
        assert_eq!(d.to_bits(), seq.to_bits());
    }
    assert_eq!(
        parallel::gumbel_experiment(50, 300, &[0.0, 1.0], 4).unwrap(),
        analysis::gumbel_experiment(50, 300, &[0.0, 1.0], 4).unwrap()
    );
    let config = default_config(1e-3, 2.0).unwrap();
    assert_eq!(
        parallel::scaling_study(&[100, 400], 4, 3, l, 2.0, config).unwrap(),
        analysis::scaling_study_with(&[100, 400], 4, 3, l, 2.0, config).unwrap()
    );
}
