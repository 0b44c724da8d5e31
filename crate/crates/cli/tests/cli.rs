//! End-to-end tests of the `oamsim` binary: exit codes, artifact formats,
//! provenance, and the documented pipelines.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oamsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oamsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper.json")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_subcommand_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = oamsim(&["frobnicate"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2_with_a_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = oamsim(
        &["--config", bad.to_str().unwrap(), "hist", "simulate"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = read_json(&bundled_config());
    cfg.as_object_mut()
        .unwrap()
        .insert("typo_field".into(), serde_json::json!(1));
    let path = tmp.path().join("typo.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = oamsim(
        &["--config", path.to_str().unwrap(), "hist", "simulate"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_background_is_a_numerical_failure_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("bin_width_ns,duration_s\n2,1000\nbin_index,tau_ns,counts\n");
    for i in 0..160 {
        csv.push_str(&format!("{i},{},0\n", 2 * i));
    }
    let hist = tmp.path().join("dead.csv");
    std::fs::write(&hist, csv).unwrap();
    let out = oamsim(
        &[
            "--out",
            tmp.path().to_str().unwrap(),
            "hist",
            "analyze",
            "--input",
            hist.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{:?}", out);
}

#[test]
fn bundled_config_matches_the_builtin_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = oamsim(&["config"], tmp.path());
    assert!(out.status.success());
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let bundled = read_json(&bundled_config());
    assert_eq!(
        printed, bundled,
        "configs/paper.json drifted from the code defaults"
    );
}

#[test]
fn hist_pipeline_reports_g_near_target() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let cfgpath = bundled_config();
    let cfg = cfgpath.to_str().unwrap();

    let out = oamsim(
        &["--config", cfg, "--out", dir, "hist", "simulate"],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(tmp.path().join("histogram.csv")).unwrap();
    assert!(csv.starts_with("# config_sha256="));
    assert!(csv.contains("bin_index,tau_ns,counts"));

    let out = oamsim(
        &["--config", cfg, "--out", dir, "hist", "analyze"],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let analysis = read_json(&tmp.path().join("hist_analysis.json"));
    let g = analysis["g"].as_f64().unwrap();
    assert!((g - 1.57).abs() <= 0.04, "g = {g}");
    assert_eq!(analysis["tau_ns"].as_f64().unwrap(), 12.0);
    assert!(analysis["config_sha256"].is_string());
    assert_eq!(analysis["seed"].as_u64().unwrap(), 7);
}

#[test]
fn noiseless_sweep_fit_recovers_the_waist() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();

    let out = oamsim(
        &[
            "--out",
            dir,
            "sweep",
            "simulate",
            "--noiseless",
            "--points",
            "21",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");

    let out = oamsim(
        &[
            "--out", dir, "sweep", "fit", "--theta0", "1.2", "--w0", "0.6",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let fit = read_json(&tmp.path().join("sweep_fit.json"));
    let w = fit["w"].as_f64().unwrap();
    assert!((w - 0.8).abs() <= 1e-3, "w = {w}");
    let theta = fit["theta"].as_f64().unwrap();
    assert!(
        (theta.abs() - std::f64::consts::FRAC_PI_2).abs() <= 1e-3,
        "theta = {theta}"
    );
    assert!(fit["converged"].as_bool().unwrap());
    assert!(fit["residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn tomo_pipeline_reproduces_the_state_measures() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();

    let out = oamsim(
        &[
            "--out",
            dir,
            "tomo",
            "simulate",
            "--counts-per-setting",
            "100000",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let records = read_json(&tmp.path().join("tomo_records.json"));
    assert_eq!(records["records"].as_array().unwrap().len(), 16);
    assert!(records["records"][0]["stokes"]["theta_bloch"].is_number());

    let out = oamsim(&["--out", dir, "tomo", "reconstruct"], tmp.path());
    assert!(out.status.success(), "{out:?}");
    let tomo = read_json(&tmp.path().join("tomography.json"));
    assert!((tomo["fidelity_to_bell"].as_f64().unwrap() - 0.89).abs() < 0.02);
    assert!((tomo["concurrence"].as_f64().unwrap() - 0.81).abs() < 0.02);
    assert!((tomo["entanglement_of_formation"].as_f64().unwrap() - 0.74).abs() < 0.02);
    assert!(tomo["converged"].as_bool().unwrap());
    assert!(tomo["rho"]["real"].is_array());

    // A bare record list (without the provenance wrapper) is accepted too.
    let bare = tmp.path().join("bare.json");
    std::fs::write(&bare, serde_json::to_string(&records["records"]).unwrap()).unwrap();
    let out = oamsim(
        &[
            "--out",
            dir,
            "tomo",
            "reconstruct",
            "--input",
            bare.to_str().unwrap(),
            "--output",
            "tomography_bare.json",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
}

#[test]
fn report_contains_the_full_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = oamsim(
        &["--out", dir, "report", "--counts-per-setting", "20000"],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let report = read_json(&tmp.path().join("report.json"));
    assert!((report["state"]["fidelity_to_bell"].as_f64().unwrap() - 0.89).abs() < 1e-9);
    assert!((report["state"]["concurrence"].as_f64().unwrap() - 0.81).abs() < 1e-9);
    assert!(
        (report["state"]["entanglement_of_formation"]
            .as_f64()
            .unwrap()
            - 0.735)
            .abs()
            < 5e-3
    );
    assert!((report["g"].as_f64().unwrap() - 1.57).abs() <= 0.04);
    assert!(report["tomography"]["concurrence"].as_f64().unwrap() > 0.7);
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    for (dir, seed) in [(&dir_a, "1"), (&dir_b, "2")] {
        let out = oamsim(
            &[
                "--out",
                dir.to_str().unwrap(),
                "--seed",
                seed,
                "hist",
                "simulate",
            ],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir_a.join("histogram.csv")).unwrap();
    let b = std::fs::read(dir_b.join("histogram.csv")).unwrap();
    assert_ne!(a, b, "different seeds must change the sampled histogram");
}

#[test]
fn balanced_and_far_sweep_paths_work_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();

    // A pure pair-state configuration so the balanced curve is exactly the
    // single-θ model (the bundled mixed state adds symmetric components).
    let mut cfg = read_json(&bundled_config());
    cfg["state"] = serde_json::json!({"type": "pair_alpha1", "re": 1.0, "im": 0.0});
    let cfg_path = tmp.path().join("bell.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let cfg_arg = cfg_path.to_str().unwrap();

    // Balanced Stokes analyzer: the noiseless curve fits to θ = -π/4.
    let out = oamsim(
        &[
            "--config",
            cfg_arg,
            "--out",
            dir,
            "sweep",
            "simulate",
            "--noiseless",
            "--stokes-balanced",
            "plus",
            "--points",
            "17",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let out = oamsim(
        &[
            "--config", cfg_arg, "--out", dir, "sweep", "fit", "--theta0", "-0.5", "--w0", "0.7",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let fit = read_json(&tmp.path().join("sweep_fit.json"));
    let theta = fit["theta"].as_f64().unwrap();
    assert!(
        (theta + std::f64::consts::FRAC_PI_4).abs() < 2e-3,
        "theta = {theta}"
    );
    assert!((fit["w"].as_f64().unwrap() - 0.8).abs() < 2e-3);

    // Far-displaced Stokes analyzer: central zero (θ ≈ 0 curve).
    let out = oamsim(
        &[
            "--config",
            cfg_arg,
            "--out",
            dir,
            "sweep",
            "simulate",
            "--noiseless",
            "--stokes-far",
            "--points",
            "17",
            "--output",
            "sweep_far.csv",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(tmp.path().join("sweep_far.csv")).unwrap();
    // The row nearest x0 = 0 has a vanishing signal relative to the edges.
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("x0"))
        .map(|l| {
            let mut parts = l.split(',');
            let x0: f64 = parts.next().unwrap().parse().unwrap();
            let s: f64 = parts.next().unwrap().parse().unwrap();
            (x0, s)
        })
        .collect();
    let mid = rows
        .iter()
        .min_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap())
        .unwrap();
    let edge = rows.first().unwrap();
    assert!(
        mid.1 < 5e-3 * edge.1,
        "central signal {} vs edge {}",
        mid.1,
        edge.1
    );
}
