//! Black-box tests of the `ramp` binary: argument handling, the run →
//! plotdata pipeline, and sweep orchestration in both serial and
//! child-process modes.

use std::fs;
use std::process::Command;

fn ramp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ramp"))
}

const TINY: &str = r#"
variant = "kl"
beta = 0.05
seed = 11

[env]
maze = "easy"
horizon = 40

[buffers]
past_size = 400

[reward]
hidden = [16, 16]
lr = 1e-3
batch_size = 64
steps_per_epoch = 40

[sac]
hidden = [16, 16]
batch_size = 32
updates_per_env_step = 0.25

[trainer]
n_epochs = 2
episodes_per_epoch = 2
eval_interval = 1
checkpoint_interval = 1
"#;

#[test]
fn test_verify_single_audit_and_unknown_name() {
    let out = ramp().args(["verify", "--only", "prop1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("PASS prop1"), "unexpected report: {text}");

    let out = ramp().args(["verify", "--only", "zzz"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("available"), "should list the audit names: {err}");
}

#[test]
fn test_run_rejects_bad_config_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "variant = \"kl\"\nbeta = 7.0\n[env]\nmaze = \"easy\"\n").unwrap();
    let out = ramp().args(["run", "--config"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("beta"), "error should name the field: {err}");
}

#[test]
fn test_run_plotdata_sweep_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("tiny.toml");
    fs::write(&cfg_path, TINY).unwrap();

    // Training run with a seed override.
    let run_dir = dir.path().join("run");
    let out = ramp()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--seed", "5", "--out"])
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "run failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("epoch    1/3"), "progress lines missing: {stdout}");
    assert!(run_dir.join("epochs.csv").is_file());
    let snapshot = fs::read_to_string(run_dir.join("config.snapshot")).unwrap();
    assert!(snapshot.contains("seed = 5"), "override must reach the snapshot");

    // plotdata rebuilds the trainer's scatter byte for byte.
    let expected = fs::read(run_dir.join("states_epoch_3.csv")).unwrap();
    let out = ramp()
        .args(["plotdata", "--run"])
        .arg(&run_dir)
        .args(["--epoch", "3"])
        .output()
        .unwrap();
    assert!(out.status.success(), "plotdata failed: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(out.stdout, expected, "stdout scatter must match the checkpointed one");

    let scatter_path = dir.path().join("scatter.csv");
    let out = ramp()
        .args(["plotdata", "--run"])
        .arg(&run_dir)
        .args(["--epoch", "2", "--out"])
        .arg(&scatter_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        fs::read(&scatter_path).unwrap(),
        fs::read(run_dir.join("states_epoch_2.csv")).unwrap()
    );

    // Missing checkpoint epoch fails with a useful message.
    let out = ramp()
        .args(["plotdata", "--run"])
        .arg(&run_dir)
        .args(["--epoch", "9"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    // Serial sweep over two seeds.
    let sweep_dir = dir.path().join("sweep");
    let out = ramp()
        .args(["sweep", "--config"])
        .arg(&cfg_path)
        .args(["--seeds", "1,2", "--out"])
        .arg(&sweep_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "sweep failed: {}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(sweep_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3, "header plus one row per run: {summary}");
    assert!(summary.starts_with("beta,seed,coverage_pct,entropy_est,dir"));
    assert!(sweep_dir.join("beta0.05_seed1").join("epochs.csv").is_file());

    // Child-process sweep must reproduce the serial results exactly, and
    // RAMP_THREADS caps the requested parallelism without changing them.
    let par_dir = dir.path().join("sweep_par");
    let out = ramp()
        .env("RAMP_THREADS", "2")
        .args(["sweep", "--config"])
        .arg(&cfg_path)
        .args(["--seeds", "1,2", "--jobs", "8", "--out"])
        .arg(&par_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "parallel sweep failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("2 worker(s)"), "cap not applied: {stdout}");
    for seed in [1, 2] {
        let name = format!("beta0.05_seed{seed}");
        assert_eq!(
            fs::read(sweep_dir.join(&name).join("epochs.csv")).unwrap(),
            fs::read(par_dir.join(&name).join("epochs.csv")).unwrap(),
            "serial and parallel sweeps diverged for {name}"
        );
    }
}
