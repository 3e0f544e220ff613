//! End-to-end checks of the command line interface: exit codes, run
//! directory contents, determinism of persisted artifacts.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_doobgen"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("doobgen-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn unknown_key_is_usage_error_naming_the_key() {
    let out = bin().args(["generate", "--bogus.key=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bogus.key"), "stderr: {stderr}");
}

#[test]
fn unknown_command_is_usage_error() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_succeeds() {
    let out = bin().arg("help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sampler.steps"));
}

#[test]
fn generate_writes_samples_and_metadata() {
    let dir = temp_dir("generate");
    let out = bin()
        .args([
            "generate",
            &format!("--out.dir={}", dir.display()),
            "--process.d=8",
            "--sampler.n=100",
            "--sampler.steps=250",
            "--sampler.langevin_steps=50",
            "--seed=5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let samples = read(&dir.join("samples.csv"));
    let lines: Vec<&str> = samples.lines().collect();
    assert_eq!(lines.len(), 101, "header plus 100 rows");
    assert_eq!(lines[0].split(',').count(), 8);

    // Every run carries config echo, seed and version string.
    let config = read(&dir.join("config.txt"));
    assert!(config.contains("seed = 5"));
    let version = read(&dir.join("version.txt"));
    assert!(version.starts_with("doobgen-v"));

    // Metadata records the step counts.
    let meta = read(&dir.join("run_meta.txt"));
    assert!(meta.contains("\"euler_steps\": 250"));
    assert!(meta.contains("\"langevin_steps\": 50"));
}

#[test]
fn generate_missing_checkpoint_fails() {
    let dir = temp_dir("generate-missing");
    let out = bin()
        .args([
            "generate",
            &format!("--out.dir={}", dir.display()),
            "--sampler.steering=network",
            "--sampler.checkpoint=/nonexistent/ckpt.txt",
            "--sampler.n=10",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_writes_checkpoint_and_traces_deterministically() {
    let dir_a = temp_dir("train-a");
    let dir_b = temp_dir("train-b");
    let run = |dir: &Path| {
        let out = bin()
            .args([
                "train",
                &format!("--out.dir={}", dir.display()),
                "--process.d=8",
                "--train.iters=60",
                "--train.batch=8",
                "--train.diag_every=30",
                "--train.diag_points=32",
                "--schedule.kind=linear",
                "--schedule.reversed=true",
                "--seed=9",
                "--deterministic=true",
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&dir_a);
    run(&dir_b);

    for file in ["checkpoint.txt", "loss.csv", "score_error.csv"] {
        let a = read(&dir_a.join(file));
        let b = read(&dir_b.join(file));
        assert_eq!(a, b, "{file} differs between identical runs");
        assert!(!a.is_empty());
    }
    // FNS configuration is echoed.
    let config = read(&dir_a.join("config.txt"));
    assert!(config.contains("schedule.kind = linear"));
    assert!(config.contains("schedule.reversed = true"));
}

#[test]
fn trained_checkpoint_drives_generation() {
    let dir = temp_dir("train-then-generate");
    let out = bin()
        .args([
            "train",
            &format!("--out.dir={}", dir.display()),
            "--process.d=8",
            "--train.iters=40",
            "--train.batch=8",
            "--train.diag_every=40",
            "--train.diag_points=16",
            "--seed=3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let gen_dir = temp_dir("train-then-generate-out");
    let out = bin()
        .args([
            "generate",
            &format!("--out.dir={}", gen_dir.display()),
            &format!("--sampler.checkpoint={}", dir.join("checkpoint.txt").display()),
            "--sampler.steering=network",
            "--process.d=8",
            "--sampler.n=50",
            "--sampler.steps=40",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&gen_dir.join("samples.csv")).lines().count(), 51);

    // Dimension mismatch between checkpoint and process is a usage error.
    let bad_dir = temp_dir("train-then-generate-bad");
    let out = bin()
        .args([
            "generate",
            &format!("--out.dir={}", bad_dir.display()),
            &format!("--sampler.checkpoint={}", dir.join("checkpoint.txt").display()),
            "--sampler.steering=network",
            "--process.d=16",
            "--sampler.n=10",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_is_reproducible_from_files() {
    let dir = temp_dir("evaluate");
    let out = bin()
        .args([
            "generate",
            &format!("--out.dir={}", dir.display()),
            "--process.d=8",
            "--sampler.n=200",
            "--sampler.steps=64",
            "--seed=8",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let eval = |out_dir: &Path| {
        let out = bin()
            .args([
                "evaluate",
                &format!("--out.dir={}", out_dir.display()),
                &format!("--metrics.samples={}", dir.join("samples.csv").display()),
                "--process.d=8",
                "--metrics.slices=32",
                "--seed=8",
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        read(&out_dir.join("metrics.csv"))
    };
    let a = eval(&temp_dir("evaluate-a"));
    let b = eval(&temp_dir("evaluate-b"));
    assert_eq!(a, b, "evaluate must be bit-reproducible from files + seed");
    assert!(a.starts_with("sw,mode_fraction,ks_max,"));
}

#[test]
fn simulate_writes_paths() {
    let dir = temp_dir("simulate");
    let out = bin()
        .args([
            "simulate",
            &format!("--out.dir={}", dir.display()),
            "--process.d=4",
            "--sim.n=3",
            "--sim.steps=5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let paths = read(&dir.join("paths.csv"));
    // 3 paths × 6 grid points + header.
    assert_eq!(paths.lines().count(), 19);
    assert!(paths.starts_with("path,t,x1,x2,x3,x4"));
}

#[test]
fn sweep_grid_rows_in_order() {
    let dir = temp_dir("sweep");
    let out = bin()
        .args([
            "sweep",
            &format!("--out.dir={}", dir.display()),
            "--process.d=8",
            "--sampler.n=200",
            "--sweep.t=1.0,0.2",
            "--sweep.schedule=fcn,fns",
            "--sampler.steps=40",
            "--sampler.langevin_steps=10",
            "--metrics.slices=16",
            "--seed=4",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = read(&dir.join("sweep.csv"));
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines.len(), 5, "header + 4 cells:\n{sweep}");
    assert_eq!(lines[0], "d,t,k,l,schedule,sw,score_error,mode_fraction,wall_ms");
    assert!(lines[1].starts_with("8,1,40,10,fcn"));
    assert!(lines[2].starts_with("8,1,40,10,fns"));
    assert!(lines[3].starts_with("8,0.2,40,10,fcn"));
    assert!(lines[4].starts_with("8,0.2,40,10,fns"));
}

#[test]
fn sweep_empty_axis_entry_is_usage_error() {
    let dir = temp_dir("sweep-bad");
    let out = bin()
        .args([
            "sweep",
            &format!("--out.dir={}", dir.display()),
            "--sweep.schedule=warp",
            "--sampler.n=10",
            "--sampler.steps=4",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
