use std::fs;
use std::process::{Command, Output};

use svea::experiments::CSV_HEADER;

fn svea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svea"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_exits_cleanly() {
    let o = svea(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["simulate", "sweep", "symbols", "compare", "validate"] {
        assert!(stdout(&o).contains(sub), "missing {sub}");
    }
}

#[test]
fn bad_usage_exits_with_one() {
    assert_eq!(svea(&["symbols", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(svea(&["symbols", "--eps", "-1"]).status.code(), Some(1));
    assert_eq!(svea(&["sweep", "--eps", "0.01"]).status.code(), Some(1));
}

#[test]
fn symbols_table_has_the_default_window() {
    let o = svea(&["symbols"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("xi,m_exact,m_taylor2,m_pade,c_schrod,c_improved,ratio")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2001);
    assert_eq!(rows[0][0], -50.0);
    assert_eq!(rows[2000][0], 50.0);
    assert!(rows.iter().all(|r| r.len() == 7));
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# symbols window\nsamples = 11\nxi-min = -1\nxi-max = 1\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = svea(&["--config", cfg, "symbols"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o).lines().count(), 12);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("-1,"));

    let o = svea(&["--config", cfg, "symbols", "--samples", "3"]);
    assert_eq!(stdout(&o).lines().count(), 4);

    fs::write(dir.path().join("bad.cfg"), "samples\n").unwrap();
    let o = svea(&[
        "--config",
        dir.path().join("bad.cfg").to_str().unwrap(),
        "symbols",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn small_sweep_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = svea(&[
        "sweep",
        "--eps",
        "0.1",
        "--beta",
        "1,0.5",
        "--T",
        "2",
        "--no-timing",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(out.join("custom.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.lines().any(|l| l == "plan=custom"));
    assert!(manifest.lines().any(|l| l.starts_with("polarization=")));
    assert!(!out.join("failures.txt").exists());
}

#[test]
fn simulate_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = svea(&[
        "simulate",
        "--model",
        "nls",
        "--eps",
        "0.1",
        "--N",
        "256",
        "--T",
        "1",
        "--binary",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in [
        "initial_f.csv",
        "final_f.csv",
        "final_f.bin",
        "manifest.txt",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let grid = svea::spectral::PeriodicGrid::standard(256).unwrap();
    let csv = svea::spectral::Field::read_csv(
        &grid,
        fs::read_to_string(out.join("final_f.csv"))
            .unwrap()
            .as_bytes(),
    )
    .unwrap();
    let bin = svea::spectral::Field::read_binary(
        &grid,
        fs::read(out.join("final_f.bin")).unwrap().as_slice(),
    )
    .unwrap();
    assert!(csv.sub(&bin).unwrap().linf_norm() < 1e-11);
}

#[test]
fn quick_validation_passes() {
    let o = svea(&["validate", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
