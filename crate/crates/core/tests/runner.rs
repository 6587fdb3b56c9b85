use std::path::Path;
use std::process::Command;

use selforg::runner::{
    config_from_metadata, parse_config, run_task, Axis, RunOptions, RunStatus, Sweep, SweepParam, Task, TruncationFlag,
};

const TINY: &str = r#"{
    "params": {"n": 1, "statistics": "boson", "m": 1, "n_c": 6, "n_ph": 5,
               "eta": 0.4, "delta_c": -1.0, "u0": 0.0, "kappa": 1.0},
    "task": "steady"
}"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn reproducible() -> RunOptions {
    RunOptions { reproducible: true, ..RunOptions::default() }
}

#[test]
fn reruns_are_byte_identical() {
    for task in [Task::Evolve, Task::Steady, Task::Qfunc, Task::Spectrum] {
        let mut cfg = parse_config(TINY).unwrap();
        cfg.task = task;
        cfg.numerics.t_end = 5.0;
        cfg.numerics.t_max_corr = Some(10.0);
        let a = run_task(&cfg, &reproducible()).unwrap();
        let b = run_task(&cfg, &reproducible()).unwrap();
        assert_eq!(a.status, RunStatus::Ok, "{:?}", task);
        assert_eq!(a.files, b.files, "{:?}", task);
        assert_eq!(a.metadata().to_string(), b.metadata().to_string());
        for (name, text) in &a.files {
            assert!(text.ends_with('\n') && !text.contains('\r'), "{}", name);
        }
    }
}

#[test]
fn metadata_recreates_the_config() {
    let mut cfg = parse_config(TINY).unwrap();
    cfg.task = Task::PhaseDiagram;
    cfg.sweep = Some(Sweep {
        axis1: Axis { name: SweepParam::Eta, values: vec![0.1, 0.3] },
        axis2: Axis { name: SweepParam::DeltaC, values: vec![-2.0, -1.0] },
    });
    let dir = tempfile::tempdir().unwrap();
    let ds = run_task(&cfg, &reproducible()).unwrap();
    ds.write(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("metadata.json")).unwrap();
    assert_eq!(config_from_metadata(&text).unwrap(), cfg);
    let meta: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(meta["truncation"]["top_photon_population"].is_number());
    assert!(meta["truncation"]["top_mode_population"].is_number());
    // four records in grid order, axis1 outer
    let csv = ds.file("phase_diagram.csv").unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(keys, vec![(0.1, -2.0), (0.1, -1.0), (0.3, -2.0), (0.3, -1.0)]);
    assert!(rows.iter().all(|r| *r.last().unwrap() == "ok"));
}

#[test]
fn failed_point_does_not_corrupt_neighbours() {
    // without pump every particle state ⊗ vacuum is stationary, so the
    // null-space solver sees a degenerate kernel at eta = 0 only
    let text = TINY
        .replace("\"task\": \"steady\"", "\"task\": \"phase_diagram\", \"numerics\": {\"steady_method\": \"null_space\"}")
        .replace("\"n_c\": 6, \"n_ph\": 5", "\"n_c\": 2, \"n_ph\": 3");
    let mut cfg = parse_config(&text.replace("\"phase_diagram\"", "\"steady\"")).unwrap();
    cfg.task = Task::PhaseDiagram;
    cfg.sweep = Some(Sweep {
        axis1: Axis { name: SweepParam::Eta, values: vec![0.3, 0.0, 0.5] },
        axis2: Axis { name: SweepParam::Kappa, values: vec![1.0] },
    });
    let ds = run_task(&cfg, &reproducible()).unwrap();
    assert!(matches!(ds.status, RunStatus::Failed(_)));
    let csv = ds.file("phase_diagram.csv").unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains("failed"));
    for k in [0, 2] {
        let mut single = cfg.clone();
        single.sweep.as_mut().unwrap().axis1.values = vec![cfg.sweep.as_ref().unwrap().axis1.values[k]];
        let alone = run_task(&single, &reproducible()).unwrap();
        let alone_row = alone.file("phase_diagram.csv").unwrap().lines().nth(1).unwrap().to_string();
        assert_eq!(rows[k], alone_row);
    }
}

#[test]
fn tiny_photon_cutoff_is_flagged() {
    let strong = TINY.replace("\"n_ph\": 5", "\"n_ph\": 1").replace("\"eta\": 0.4", "\"eta\": 3.0");
    let ds = run_task(&parse_config(&strong).unwrap(), &reproducible()).unwrap();
    assert_eq!(ds.truncation.photon_flag, TruncationFlag::Fail);
    let vacuum = TINY.replace("\"eta\": 0.4", "\"eta\": 0.0").replace("\"task\": \"steady\"", "\"task\": \"evolve\"");
    let ds = run_task(&parse_config(&vacuum).unwrap(), &reproducible()).unwrap();
    assert_eq!(ds.truncation.top_photon_population, 0.0);
    assert_eq!(ds.truncation.photon_flag, TruncationFlag::Ok);
}

#[test]
fn unpumped_evolution_is_flat() {
    let text = TINY.replace("\"eta\": 0.4", "\"eta\": 0.0").replace("\"task\": \"steady\"", "\"task\": \"evolve\"");
    let mut cfg = parse_config(&text).unwrap();
    cfg.numerics.t_end = 3.0;
    cfg.numerics.samples = 7;
    let ds = run_task(&cfg, &reproducible()).unwrap();
    let csv = ds.file("trajectory.csv").unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 7);
    for r in &rows {
        assert_eq!(&r[1..], &rows[0][1..]);
    }
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_selforg")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), TINY);
    let ok = cli(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--reproducible", "--threads", "1"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("steady.csv").exists() && out.join("metadata.json").exists());

    let qf = cli(&["--config", cfg.to_str().unwrap(), "--task", "qfunc", "--out", out.to_str().unwrap(), "--dump-operators"]);
    assert_eq!(qf.status.code(), Some(0));
    assert!(out.join("qgrid.csv").exists() && out.join("operators/hamiltonian.txt").exists());

    let bad = write_config(dir.path(), &TINY.replace("\"kappa\": 1.0", "\"kappa\": 0.0"));
    assert_eq!(cli(&["--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(2));
    let typo = write_config(dir.path(), &TINY.replace("\"task\"", "\"temprature\": 0, \"task\""));
    let typo_run = cli(&["--config", typo.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(typo_run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&typo_run.stderr).contains("temprature"));

    let trunc = write_config(dir.path(), &TINY.replace("\"n_ph\": 5", "\"n_ph\": 1").replace("\"eta\": 0.4", "\"eta\": 3.0"));
    assert_eq!(cli(&["--config", trunc.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(4));

    let degenerate = write_config(
        dir.path(),
        &TINY
            .replace("\"eta\": 0.4", "\"eta\": 0.0")
            .replace("\"n_c\": 6, \"n_ph\": 5", "\"n_c\": 2, \"n_ph\": 3")
            .replace("\"task\": \"steady\"", "\"task\": \"steady\", \"numerics\": {\"steady_method\": \"null_space\"}"),
    );
    let failed = cli(&["--config", degenerate.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(failed.status.code(), Some(3));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["run_status"]["status"], "failed");
}
