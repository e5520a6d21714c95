use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn guarpriv(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_guarpriv"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_guarpriv")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_is_required_outside_the_bundled_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = guarpriv(&["design"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn missing_config_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    let o = guarpriv(&["sweep", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.json"));
}

#[test]
fn unknown_algorithm_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("zero_config.json");
    let o = guarpriv(
        &["sweep", "--config", cfg.to_str().unwrap(), "--algorithms", "dgd,newton"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_bounds_fail_soundness_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("corrupted_config.json");
    let o = guarpriv(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    let p = &report["properties"][0];
    assert_eq!(p["name"], "inclusion_soundness");
    let witness = &p["counterexample"];
    assert_eq!(witness["agent"], 0);
    let value = witness["value"].as_f64().unwrap();
    let lo = witness["interval"][0].as_f64().unwrap();
    let hi = witness["interval"][1].as_f64().unwrap();
    assert!(value < lo || value > hi);
    assert!(witness["x"].is_array());
}

#[test]
fn example_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/example_config.json");
    let o = guarpriv(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    for name in ["privacy_inequality", "inclusion_soundness", "remainder_tightness"] {
        assert!(stdout.contains(name) && !stdout.contains("FAIL"), "{stdout}");
    }
}

#[test]
fn zero_bound_design_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("zero_config.json");
    let o = guarpriv(&["design", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for agent in report["agents"].as_array().unwrap() {
        assert_eq!(agent["verbatim"]["m_tilde_star"], serde_json::json!([0.0, 0.0]));
        assert_eq!(agent["verbatim"]["solver_status"], "optimal");
    }
    let lp = std::fs::read_to_string(dir.path().join("lp_agent1.txt")).unwrap();
    assert!(lp.starts_with("minimize"));
    assert!(dir.path().join("lp_agent2.txt").exists());
}

#[test]
fn singleton_domain_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("singleton_config.json");
    let o = guarpriv(&["privacy", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("singleton"));
    assert!(!dir.path().join("privacy.json").exists());
}

#[test]
fn privacy_table_lists_every_agent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/example_config.json");
    let o = guarpriv(&["privacy", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with(['1', '2', '3'])).count(), 3);
    assert!(stdout.contains("PASS-WITH-DISCREPANCY"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("privacy.json")).unwrap()).unwrap();
    assert_eq!(report["delta_star"], serde_json::json!([5.2, 7.3, 3.8]));
}

#[test]
fn small_sweep_writes_csv_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("zero_config.json");
    let o = guarpriv(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--samples",
            "3",
            "--algorithms",
            "tracking",
            "--seed",
            "11",
            "--trace",
        ],
        dir.path(),
    );
    // outputs are written before the dominance check decides the exit code
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sample,eps,ub,err_dgd,err_tracking,err_zo,mtilde_1,mtilde_2"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.len(), 8);
        assert!(r[3].is_empty() && r[5].is_empty());
        let e: f64 = r[4].parse().unwrap();
        assert!(e.is_finite() && e >= 0.0);
        assert_eq!(r[6].split(';').count(), 2);
    }
    let traces: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("trace_sample0_gradient_tracking_start"))
        .collect();
    assert_eq!(traces.len(), 5);
}
