use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sqg_core::persistence::{read_diagnostics, read_snapshot, read_table};

fn sqg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqg"))
        .args(args)
        .output()
        .expect("sqg binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let out = dir.join("out");
    let text = format!("{body}\n[output]\ndir = {:?}\n", out.display().to_string());
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

const SMALL: &str = r#"
[grid]
n = 16
[model]
gamma = 1.0
epsilon = 0.01
[time]
dt = 0.01
t_end = 0.5
[ic]
kind = "random_band"
k_min = 1.0
k_max = 3.0
l2_norm = 1.0
seed = 3
[forcing]
kind = "modes"
[[forcing.modes]]
k1 = 1
k2 = 1
amplitude = 0.5
[quad]
h_grid = 16
"#;

#[test]
fn verify_spectral_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = sqg(&[
        "verify",
        "--suite",
        "spectral",
        "--n",
        "64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    for name in [
        "eigenfunction PASS",
        "semigroup PASS",
        "riesz_transform PASS",
        "singular_integral[sigma=1.5] PASS",
    ] {
        assert!(text.contains(name), "{text}");
    }
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(summary.lines().count(), 6);
    assert!(summary.lines().all(|l| l.contains(" PASS ")));
}

#[test]
fn missing_config_is_exit_2() {
    let o = sqg(&["simulate", "--config", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.cfg"), "{}", stderr(&o));
    assert!(stderr(&o).contains("No such file"), "{}", stderr(&o));
}

#[test]
fn single_epsilon_is_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = sqg(&["vv-study", "--config", &cfg, "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("need ≥ 3 epsilon values"), "{}", stderr(&o));
}

#[test]
fn usage_errors_are_exit_2() {
    assert_eq!(sqg(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sqg(&["verify", "--bogus"]).status.code(), Some(2));
    assert_eq!(sqg(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(sqg(&[]).status.code(), Some(2));
    let help = sqg(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("restart-check"));
}

#[test]
fn bad_config_value_is_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("gamma = 1.0", "gamma = 2.5"));
    let o = sqg(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.gamma out of (0,2]"), "{}", stderr(&o));
}

#[test]
fn simulate_writes_outputs_and_info_reads_them() {
    let tmp = tempfile::tempdir().unwrap();
    // dt = 0.01 leaves a second-order energy residual just above 1e-4
    let cfg = write_config(tmp.path(), &SMALL.replace("dt = 0.01", "dt = 0.005"));
    let text = fs::read_to_string(&cfg).unwrap().replace(
        "[output]\n",
        "[output]\nsnapshot_every = 0.1\ndiagnostics_every = 0.25\n",
    );
    fs::write(&cfg, text).unwrap();
    let o = sqg(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let out = tmp.path().join("out");

    let records = read_diagnostics(&out.join("diagnostics.csv")).unwrap();
    assert_eq!(records.len(), 3);
    assert!((records[2].t - 0.5).abs() < 1e-12);
    let (cols, rows) = read_table(&out.join("decay.csv")).unwrap();
    assert_eq!(cols, ["t", "l2", "envelope"]);
    assert_eq!(rows.len(), 6);
    let (cols, _) = read_table(&out.join("sob_audit.csv")).unwrap();
    assert_eq!(cols, ["t", "L", "R"]);

    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.starts_with("energy_balance PASS residual="), "{summary}");
    assert!(summary.contains("decay_envelope PASS"), "{summary}");

    let snap_path = out.join("snapshot_00005.sqg1");
    let snap = read_snapshot(&snap_path).unwrap();
    assert!((snap.t - 0.5).abs() < 1e-12);
    let info = sqg(&["info", snap_path.to_str().unwrap()]);
    assert_eq!(info.status.code(), Some(0));
    assert!(stdout(&info).contains("n        16"), "{}", stdout(&info));
}

#[test]
fn info_on_garbage_is_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("x.sqg1");
    fs::write(&path, b"XXXXnot a snapshot at all, clearly").unwrap();
    let o = sqg(&["info", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("magic"), "{}", stderr(&o));
}

#[test]
fn blow_up_is_exit_1_with_last_valid_state() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
[grid]
n = 16
[model]
gamma = 0.5
epsilon = 0.0
[time]
dt = 0.5
t_end = 50.0
[ic]
kind = "random_band"
k_min = 1.0
k_max = 5.0
l2_norm = 200.0
seed = 1
"#;
    let cfg = write_config(tmp.path(), body);
    let o = sqg(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stderr(&o).contains("blow-up at t ="), "{}", stderr(&o));
    let snap = read_snapshot(&tmp.path().join("out").join("last_valid.sqg1")).unwrap();
    assert!(snap.values.values().iter().all(|v| v.is_finite()));
}

#[test]
fn restart_check_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = sqg(&["restart-check", "--config", &cfg, "--t-split", "0.2"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("restart_concatenation PASS"));
    assert!(tmp.path().join("out").join("restart.sqg1").exists());
}

#[test]
fn vv_study_writes_gap_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = sqg(&["vv-study", "--config", &cfg, "--eps", "0.1,0.05,0.025,0.0125"]);
    assert_ne!(o.status.code(), Some(2), "{}", stderr(&o));
    let (cols, rows) = read_table(&tmp.path().join("out").join("vv.csv")).unwrap();
    assert_eq!(cols[0], "t");
    assert_eq!(cols.len(), 4);
    assert!(!rows.is_empty());
}

#[test]
fn attractor_writes_ensemble_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("[quad]", "[quad]\nsamples = 10"));
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("[output]\n", "[output]\nsnapshot_every = 0.5\n");
    fs::write(&cfg, text).unwrap();
    let o = sqg(&[
        "attractor",
        "--config",
        &cfg,
        "--members",
        "3",
        "--seed",
        "2",
        "--t-end",
        "4",
    ]);
    assert_ne!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("absorbing_set"), "{}", stdout(&o));
    let (cols, rows) = read_table(&tmp.path().join("out").join("ensemble.csv")).unwrap();
    assert_eq!(
        cols,
        ["t", "semidistance", "sup_l2", "sup_h_half", "sup_h1", "sup_c_beta"]
    );
    assert_eq!(rows.len(), 9);
}
