//! Exit-code contract and artifact checks for the `krflow` binary.

use std::path::Path;
use std::process::{Command, Output};

fn krflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krflow"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("config written");
    path.to_str().unwrap().to_string()
}

fn fixed_point_config(t_end: f64) -> String {
    format!(
        "[run]\nn = 1\ngrid_n = 32\ns_max = 0.9\ns_buf = 0.6\ncfl_safety = 0.5\nt_end = {t_end}\nsnapshot_cadence = 0.25\nearly_stop_residual = 0\nseed = 42\nforce = false\n\n[family]\nkind = model_ball\nc = 2\n"
    )
}

fn flat_config() -> &'static str {
    "[run]\nn = 1\ngrid_n = 32\ns_max = 0.9\ns_buf = 0.6\ncfl_safety = 0.5\nt_end = 0.5\nsnapshot_cadence = 0.25\nearly_stop_residual = 0\nseed = 42\nforce = false\n\n[family]\nkind = flat\n"
}

#[test]
fn run_fixed_point_exits_zero_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", &fixed_point_config(0.5));
    let out = krflow(&["run", "--config", &cfg, "--out", "artifacts"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("criterion=schwarz_bound pass=true"));
    let artifacts = dir.path().join("artifacts");
    assert!(artifacts.join("config.echo").exists());
    assert!(artifacts.join("verdict.txt").exists());
    let csv = std::fs::read_to_string(artifacts.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,sup_S,schwarz_threshold,sup_phidot,einstein_residual,"));
    assert!(artifacts.join("snapshot_0.500000.state").exists());
}

#[test]
fn run_with_svg_emits_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", &fixed_point_config(0.5));
    let out = krflow(
        &["run", "--config", &cfg, "--out", "artifacts", "--svg"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("artifacts/plots/sup_S.svg").exists());
    assert!(dir.path().join("artifacts/plots/einstein_residual.svg").exists());
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // unreadable path
    let out = krflow(&["run", "--config", "missing.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // malformed key
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        &fixed_point_config(0.5).replace("grid_n = 32", "grid_n = thirty"),
    );
    let out = krflow(&["run", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // validation failure
    let cfg = write_config(
        dir.path(),
        "coarse.cfg",
        &fixed_point_config(0.5).replace("grid_n = 32", "grid_n = 8"),
    );
    let out = krflow(&["run", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flat_family_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.cfg", flat_config());
    // refused without --force: hypothesis violation
    let out = krflow(&["run", "--config", &cfg, "--out", "a"], dir.path());
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // forced: runs, but the hypothesis verdict line fails
    let out = krflow(&["run", "--config", &cfg, "--out", "b", "--force"], dir.path());
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion=hypothesis_negative_hsc pass=false"));
}

#[test]
fn poisoned_snapshot_resume_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", &fixed_point_config(0.5));
    let out = krflow(&["run", "--config", &cfg, "--out", "artifacts"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let snap = dir.path().join("artifacts/snapshot_0.250000.state");
    let text = std::fs::read_to_string(&snap).unwrap();
    let marker = text.find("[phi]").unwrap();
    let (head, tail) = text.split_at(marker);
    let poisoned =
        format!("{head}{}", tail.replacen("0x0000000000000000", "0x7ff8000000000000", 1));
    std::fs::write(&snap, poisoned).unwrap();
    let out = krflow(
        &[
            "resume",
            "--snapshot",
            snap.to_str().unwrap(),
            "--out",
            dir.path().join("resumed").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn resume_continues_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", &fixed_point_config(1.0));
    let out = krflow(&["run", "--config", &cfg, "--out", "full"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let snap = dir.path().join("full/snapshot_0.500000.state");
    let out = krflow(
        &[
            "resume",
            "--snapshot",
            snap.to_str().unwrap(),
            "--out",
            dir.path().join("tail").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // the resumed segment reaches the same final snapshot, byte for byte
    let a = std::fs::read(dir.path().join("full/snapshot_1.000000.state")).unwrap();
    let b = std::fs::read(dir.path().join("tail/snapshot_1.000000.state")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn proptest_subcommand_reports_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out = krflow(
        &["proptest", "--samples", "100", "--seed", "7", "--out", "rep"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("suite=royden n=1 samples=100 failures=0"));
    assert!(stdout.contains("suite=tensor_symmetry n=3"));

    // vacuous run is flagged
    let out = krflow(&["proptest", "--samples", "0", "--out", "rep"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("vacuous=true"));

    // planted violation: exit 1 plus a replay file that reproduces it
    let out = krflow(
        &["proptest", "--samples", "10", "--plant-violation", "--out", "rep"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let replay = dir.path().join("rep/replay_tensor_symmetry_n1.txt");
    assert!(replay.exists());
    let out = krflow(
        &["proptest", "--replay", replay.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violation reproduces"));
}

#[test]
fn refine_subcommand_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", &fixed_point_config(0.25));
    // one rung is a config error
    let out = krflow(
        &["refine", "--config", &cfg, "--ladder", "32"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    // fixed-point ladder: degenerate, passes
    let out = krflow(
        &["refine", "--config", &cfg, "--ladder", "16,32,64"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("degenerate = true"));
}

#[test]
fn oracle_subcommand_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", &fixed_point_config(0.5));
    let out = krflow(
        &["oracle", "--config", &cfg, "--s-values", "0.0,0.3,0.6"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("kappa_est="));
    assert!(stdout.contains("hypothesis_ok=true"));
    assert!(stdout.contains("fd_delta="));

    let flat = write_config(dir.path(), "flat.cfg", flat_config());
    let out = krflow(&["oracle", "--config", &flat], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("hypothesis_ok=false"));
}
