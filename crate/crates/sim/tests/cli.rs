use std::path::Path;
use std::process::{Command, Output};

use nsch_sim::cli::{EXIT_ERROR, EXIT_OK, EXIT_VIOLATION};
use nsch_sim::{snapshot, timeseries};

const SMALL: &str = r#"
mode = "coupled"
[grid]
nx = 16
ny = 16
[model]
n_phases = 3
rho_tilde = [1.0, 2.0, 3.0]
viscosity = [0.5, 1.0, 2.0]
[velocity]
preset = "vortex"
[time]
h = 1e-3
t_end = 0.01
[output]
snapshot_every = 5
"#;

fn nsch(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsch-sim")).args(args).env("NSCH_OUT_DIR", out).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("case.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_outputs_and_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = nsch(&["run", &cfg], &out);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    for f in ["timeseries.csv", "snapshot_00000.vtk", "snapshot_00001.vtk", "snapshot_00002.vtk"] {
        assert!(names.iter().any(|n| n == f), "missing {f} in {names:?}");
    }
    let rows = timeseries::read_timeseries(&out.join("timeseries.csv")).unwrap();
    assert_eq!(rows.len(), 10);
    let csv = out.join("timeseries.csv");
    assert_eq!(nsch(&["check", csv.to_str().unwrap()], &out).status.code(), Some(EXIT_OK));
}

#[test]
fn snapshot_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert_eq!(nsch(&["run", &cfg, "--snapshot-every", "10"], &out).status.code(), Some(EXIT_OK));
    let path = out.join("snapshot_00001.vtk");
    let s = snapshot::read_snapshot(&path).unwrap();
    assert_eq!(s.step, 10);
    assert_eq!(s.phi.n, 3);
    let again = snapshot::render(s.step, s.t, &s.phi, &s.state);
    assert_eq!(again, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn corrupted_slack_is_a_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert_eq!(nsch(&["run", &cfg], &out).status.code(), Some(EXIT_OK));
    let csv = out.join("timeseries.csv");
    let mut rows = timeseries::read_timeseries(&csv).unwrap();
    rows[3].slack = -1e-4;
    timeseries::write_timeseries(&csv, &rows).unwrap();
    let o = nsch(&["check", csv.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(EXIT_VIOLATION));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 4"));
}

#[test]
fn bad_inputs_exit_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(nsch(&["run", "/does/not/exist.toml"], &out).status.code(), Some(EXIT_ERROR));
    let cfg = write_config(dir.path(), "[grid]\nnx = 2\n");
    let o = nsch(&["run", &cfg], &out);
    assert_eq!(o.status.code(), Some(EXIT_ERROR));
    assert!(!o.stderr.is_empty());
    assert_eq!(nsch(&["frobnicate"], &out).status.code(), Some(EXIT_ERROR));
    let bad_csv = dir.path().join("bad.csv");
    std::fs::write(&bad_csv, "t,E\n1,2\n").unwrap();
    assert_eq!(nsch(&["check", bad_csv.to_str().unwrap()], &out).status.code(), Some(EXIT_ERROR));
}

#[test]
fn seed_changes_the_run_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let csv = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        assert_eq!(nsch(&["run", &cfg, "--seed", seed, "--t-end", "0.003"], &out).status.code(), Some(EXIT_OK));
        std::fs::read(out.join("timeseries.csv")).unwrap()
    };
    let a = csv("1", "a");
    assert_eq!(a, csv("1", "b"));
    assert_ne!(a, csv("2", "c"));
}

#[test]
fn stationary_and_reduce2_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "[grid]\nnx = 16\nny = 16\n[model]\nn_phases = 2\n[stationary]\nforcing_amplitude = [0.0, 0.5]\nkx = 1\nmean_from_initial = true\n");
    let o = nsch(&["stationary", &cfg], &out);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("stationary:"));
    let o = nsch(&["reduce2", &cfg, "--steps", "5"], &out);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
}
