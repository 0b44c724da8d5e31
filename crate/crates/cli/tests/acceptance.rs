//! CLI-level acceptance: every simulate command is byte-identical across two
//! runs with the same seed (the library-level determinism checks live in the
//! core crate's acceptance suite).

use std::path::Path;
use std::process::Command;
use std::time::Instant;

fn run(args: &[&str], dir: &Path) {
    let out = Command::new(env!("CARGO_BIN_EXE_oamsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?}: {out:?}");
}

#[test]
fn criterion_7_simulate_commands_are_byte_identical() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let sub_a = tmp.path().join("a");
    let sub_b = tmp.path().join("b");

    for dir in [&sub_a, &sub_b] {
        let d = dir.to_str().unwrap();
        run(&["--out", d, "hist", "simulate"], tmp.path());
        run(
            &[
                "--out", d, "sweep", "simulate", "--points", "7", "--x0-min", "-1.6", "--x0-max",
                "1.6",
            ],
            tmp.path(),
        );
        run(
            &[
                "--out",
                d,
                "tomo",
                "simulate",
                "--counts-per-setting",
                "50000",
            ],
            tmp.path(),
        );
        run(
            &["--out", d, "report", "--counts-per-setting", "20000"],
            tmp.path(),
        );
    }

    for name in [
        "histogram.csv",
        "sweep.csv",
        "tomo_records.json",
        "report.json",
    ] {
        let a = std::fs::read(sub_a.join(name)).unwrap();
        let b = std::fs::read(sub_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "runtime budget exceeded: {elapsed:.1} s");
    println!(
        "[criterion 7] PASS ({elapsed:.2} s) — simulate artifacts byte-identical across reruns"
    );
}
