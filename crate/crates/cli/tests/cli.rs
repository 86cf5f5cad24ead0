//! End-to-end tests of the binary: exit codes, file contracts, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdscbf"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn simulate_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--scenario", "feedback-opt", "--kind", "pds", "--out", "t.csv"],
    );
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(csv.starts_with("t,z1,z2,x1,h\n"), "header was {:?}", csv.lines().next());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.csv.manifest.json")).unwrap())
            .unwrap();
    for listed in manifest["outputs"].as_array().unwrap() {
        assert!(dir.path().join(listed.as_str().unwrap()).exists());
    }
    assert_eq!(manifest["subcommand"], "simulate");
}

#[test]
fn simulate_cbf_requires_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--scenario", "feedback-opt", "--kind", "cbf", "--out", "t.csv"],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn simulate_cbf_manifest_reports_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "simulate",
            "--scenario",
            "feedback-opt",
            "--kind",
            "cbf",
            "--alpha",
            "100",
            "--out",
            "c.csv",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.csv.manifest.json")).unwrap())
            .unwrap();
    let min_h = manifest["summary"]["min_h"].as_f64().unwrap();
    assert!(min_h >= -1e-6, "min_h = {min_h}");
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--scenario", "nope", "--kind", "pds", "--out", "t.csv"],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn sweep_emits_csv_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sweep", "--scenario", "saturating-1d", "--out-dir", "sw"],
    );
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "alpha,sup_distance,invariance_margin,containment");
    assert_eq!(rows.len(), 5);
    let distances: Vec<f64> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(distances.iter().all(|d| *d > 0.0));
    assert!(distances.windows(2).all(|w| w[1] < w[0]), "{distances:?}");
    assert!(dir.path().join("sw/distance_vs_alpha.svg").exists());
    assert!(dir.path().join("sw/overlay_x1.svg").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sw/manifest.json")).unwrap())
            .unwrap();
    for listed in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(listed.as_str().unwrap()).exists() ||
                dir.path().join(listed.as_str().unwrap()).exists());
    }
}

#[test]
fn sweep_rejects_empty_alpha_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sweep", "--scenario", "saturating-1d", "--alphas", "", "--out-dir", "sw"],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn bounds_report_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["bounds", "--scenario", "feedback-opt", "--out", "b.json"],
    );
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    assert!((report["m1"].as_f64().unwrap() - 1.2).abs() < 1e-9);
    let alpha_star = report["alpha_star"].as_f64().unwrap();
    assert!(alpha_star > 0.0 && alpha_star.is_finite());
    for key in [
        "eps",
        "m2",
        "m3",
        "l_f",
        "l_grad_h",
        "l1",
        "delta",
        "sigma_table",
        "grid_resolution",
        "boundary_samples",
    ] {
        assert!(!report[key].is_null(), "missing field {key}");
    }
}

#[test]
fn verify_passes_on_shipped_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["verify", "--scenario", "saturating-1d", "--grid-res", "9"],
    );
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("check perturbation-certificate: ok"));
}

#[test]
fn verify_flags_injected_gradient_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "name": "broken",
        "dynamics": {"type": "constant-input", "value": [1.0]},
        "set": {"shape": "custom", "name": "broken-gradient-fixture"},
        "z0": [0.0], "x0": [0.0],
        "z_box_lo": [-1.0], "z_box_hi": [1.0],
        "t_end": 1.0, "dt": 0.001, "record_stride": 10,
        "alpha_grid": [1.0, 10.0]
    });
    std::fs::write(dir.path().join("broken.json"), config.to_string()).unwrap();
    let out = run_in(
        dir.path(),
        &["verify", "--config", "broken.json", "--grid-res", "9"],
    );
    assert_eq!(out.status.code(), Some(4), "{out:?}");
    assert!(
        stdout(&out).contains("check gradient-consistency: FAILED"),
        "stdout: {}",
        stdout(&out)
    );
}

/// Identical configuration and version produce byte-identical CSV and JSON.
#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out_name in ["a.csv", "b.csv"] {
        let out = run_in(
            dir.path(),
            &["simulate", "--scenario", "disk-rotation", "--kind", "pds", "--out", out_name],
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    for out_name in ["r1.json", "r2.json"] {
        let out = run_in(
            dir.path(),
            &["bounds", "--scenario", "saturating-1d", "--grid-res", "9", "--out", out_name],
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("r1.json")).unwrap();
    let b = std::fs::read(dir.path().join("r2.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn thread_cap_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("PDSCBF_THREADS", "not-a-number")
        .args(["bounds", "--scenario", "saturating-1d", "--out", "b.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    let out = bin()
        .current_dir(dir.path())
        .env("PDSCBF_THREADS", "2")
        .args(["bounds", "--scenario", "saturating-1d", "--grid-res", "9", "--out", "b.json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
}
