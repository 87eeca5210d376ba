//! Process-level checks of the command-line surface: exit codes, error
//! reporting, and the verify subcommand's mismatch behavior.

use std::path::Path;
use std::process::{Command, Output};

fn driftbench(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftbench"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) {
    std::fs::write(dir.join(name), contents).unwrap();
}

const VALID_GENERATE: &str = r#"{
  "master_seed": 3,
  "n": 5000,
  "num_keys": 50,
  "drifts": [
    {"len": 0, "mid_x2": 2,
     "p1": {"kind": "zipf", "exponent": 1.0},
     "p2": {"kind": "zipf", "exponent": 1.0}}
  ]
}"#;

#[test]
fn generate_succeeds_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.json", VALID_GENERATE);
    let out = driftbench(
        &["generate", "--config", "gen.json", "--out", "run"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("run/stream.bin").exists());
    assert!(dir.path().join("run/metadata.json").exists());
}

#[test]
fn invalid_drift_set_exits_one_and_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    // Odd length with an integer midpoint, and no drift at position 1.
    write(
        dir.path(),
        "bad.json",
        r#"{
  "master_seed": 3, "n": 100, "num_keys": 10,
  "drifts": [
    {"len": 3, "mid_x2": 8,
     "p1": {"kind": "zipf", "exponent": 1.0},
     "p2": {"kind": "zipf", "exponent": 1.0}}
  ]
}"#,
    );
    let out = driftbench(
        &["generate", "--config", "bad.json", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("parity"), "stderr: {stderr}");
    assert!(stderr.contains("position 1"), "stderr: {stderr}");
}

#[test]
fn zero_length_stream_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "zero.json",
        r#"{"master_seed": 3, "n": 0, "num_keys": 10, "drifts": []}"#,
    );
    let out = driftbench(
        &["generate", "--config", "zero.json", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_files_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "burst.json",
        r#"{"master_seed": 3, "batch_size": 100,
            "burst": {"bsp": 0.5, "kbp": 0.1, "bl_min": 1, "bl_max": 2},
            "stream": "nope/stream.bin", "metadata": "nope/metadata.json"}"#,
    );
    let out = driftbench(
        &["burst", "--config", "burst.json", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_flag_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftbench(&["generate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_preset_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = driftbench(
        &["generate", "--preset", "nope", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("paper-sec6"));
}

#[test]
fn verify_detects_fingerprint_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.json", VALID_GENERATE);
    let out = driftbench(
        &["generate", "--config", "gen.json", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));

    let ok = driftbench(
        &[
            "verify",
            "--command",
            "generate",
            "--config",
            "gen.json",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );

    // The same config under a different seed must not verify.
    let mismatch = driftbench(
        &[
            "verify",
            "--command",
            "generate",
            "--config",
            "gen.json",
            "--seed",
            "4",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(mismatch.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("fingerprint mismatch"));
}

#[test]
fn optimize_with_no_training_streams_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "opt.json",
        r#"{
  "master_seed": 3, "batch_size": 1000, "top_k": 20,
  "streams": [],
  "template": {"algorithm": "lossy-counting", "epsilon": 0.01},
  "space": [{"name": "epsilon", "kind": "real", "min": 0.001, "max": 0.1,
             "step": 0.001, "scale": "linear"}],
  "initial": [{"epsilon": 0.01}],
  "generations": 2, "survivors": 1, "children_per_survivor": 2
}"#,
    );
    let out = driftbench(
        &["optimize", "--config", "opt.json", "--out", "opt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("training streams"));
}

#[test]
fn seed_override_changes_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.json", VALID_GENERATE);
    driftbench(
        &["generate", "--config", "gen.json", "--out", "a"],
        dir.path(),
    );
    driftbench(
        &[
            "generate", "--config", "gen.json", "--seed", "4", "--out", "b",
        ],
        dir.path(),
    );
    let a = std::fs::read(dir.path().join("a/stream.bin")).unwrap();
    let b = std::fs::read(dir.path().join("b/stream.bin")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn rank_distance_runs_from_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gen.json", VALID_GENERATE);
    driftbench(
        &["generate", "--config", "gen.json", "--out", "run"],
        dir.path(),
    );
    write(
        dir.path(),
        "rank.json",
        r#"{
  "master_seed": 3, "batch_size": 1000, "top_k": 20,
  "samplers": [{"algorithm": "oracle"}, {"algorithm": "exact-counting"}]
}"#,
    );
    let out = driftbench(
        &[
            "rank-distance",
            "--config",
            "rank.json",
            "--stream",
            "run/stream.bin",
            "--metadata",
            "run/metadata.json",
            "--out",
            "rank",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("oracle"), "stdout: {stdout}");
    let csv = std::fs::read_to_string(dir.path().join("rank/distance.csv")).unwrap();
    assert!(csv.starts_with("# fingerprint: "));
    assert!(csv.contains("batch_index,algorithm,metric,value"));
}
