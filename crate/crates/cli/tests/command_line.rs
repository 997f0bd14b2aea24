use std::path::Path;
use std::process::{Command, Output};

fn eife(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eife")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SPATIAL: &str = r#"
mode = "convergence"

[problem]
name = "linear_rd"

[mesh]
n = [8, 4]

[time]
scheme = "eife2"
nt = 64

[study]
kind = "spatial"
levels = 2
"#;

#[test]
fn converge_writes_reproducible_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "spatial.toml", SPATIAL);
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let res = eife(&["converge", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        assert!(res.stdout.is_empty());
        reports.push(std::fs::read(out.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let text = String::from_utf8(reports[0].clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "nt,resolution,err_l2,cr_l2,err_h1,cr_h1,sec_per_step,growth");
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[..2], ["64", "8x4"]);
    assert_eq!(first[3], "");
    let second: Vec<&str> = lines[2].split(',').collect();
    let (e0, e1): (f64, f64) = (first[2].parse().unwrap(), second[2].parse().unwrap());
    let rate: f64 = second[3].parse().unwrap();
    assert!((rate - (e0 / e1).log2()).abs() < 1e-4);
}

#[test]
fn mode_must_match_command() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "spatial.toml", SPATIAL);
    let res = eife(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("mode"));
}

#[test]
fn bench_reports_timings() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SPATIAL.replace("convergence", "timing").replace("nt = 64", "nt = 5");
    let cfg = write_config(tmp.path(), "bench.toml", &text);
    let res = eife(&[
        "bench",
        "--config",
        &cfg,
        "--out",
        tmp.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert!(last[6].parse::<f64>().unwrap() > 0.0);
    assert!(last[7].parse::<f64>().is_ok());
}

const RUN: &str = r#"
[problem]
name = "linear_rd"

[mesh]
n = [4, 4]

[time]
scheme = "eife1"
nt = 8

[output]
observe_every = 2
snapshot_every = 4
"#;

#[test]
fn run_writes_series_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", RUN);
    let res = eife(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("errors at T"));
    let series = std::fs::read_to_string(tmp.path().join("series.csv")).unwrap();
    let steps: Vec<&str> = series.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["0", "2", "4", "6", "8"]);
    assert!(series.lines().nth(1).unwrap().ends_with(','));
    for step in [0, 4, 8] {
        let snap = std::fs::read_to_string(tmp.path().join(format!("snapshot_{step:06}.vtk"))).unwrap();
        assert!(snap.contains("DATASET STRUCTURED_POINTS"));
        assert!(snap.contains("DIMENSIONS 5 5 1"));
        assert_eq!(snap.lines().skip(10).count(), 25);
    }
    assert!(!tmp.path().join("snapshot_000002.vtk").exists());
}

const COARSENING: &str = r#"
[problem]
name = "flory_huggins"
seed = 5

[mesh]
n = [8, 8, 8]

[time]
scheme = "eife2"
t_end = 0.02
nt = 4

[output]
observe_every = 2
snapshot_every = 4
"#;

#[test]
fn seeds_control_the_initial_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "fh.toml", COARSENING);
    let mut snaps = Vec::new();
    for (dir, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let out = tmp.path().join(dir);
        let res = eife(&[
            "run",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--quiet",
        ]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        snaps.push(std::fs::read(out.join("snapshot_000004.vtk")).unwrap());
        let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
        assert!(series.lines().all(|l| !l.ends_with(',')));
    }
    assert_eq!(snaps[0], snaps[1]);
    assert_ne!(snaps[0], snaps[2]);
}

#[test]
fn maximum_bound_violation_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let text = COARSENING.replace("t_end = 0.02\nnt = 4", "t_end = 4.0\nnt = 4");
    let cfg = write_config(tmp.path(), "fh.toml", &text);
    let res = eife(&[
        "run",
        "--config",
        &cfg,
        "--out",
        tmp.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(res.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("step 1") && msg.contains("u = "), "{msg}");
}

#[test]
fn config_problems_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "zero.toml",
        &RUN.replace("observe_every = 2\nsnapshot_every = 4", "observe_every = 0"),
    );
    let res = eife(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("observe_every"));
    let res = eife(&["run", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = eife(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
}
