//! End-to-end checks of the `noiseout` binary: artifacts, determinism, and
//! exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noiseout"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn noiseout");
    assert!(
        out.status.success(),
        "noiseout {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

/// Small, fast XOR pruning setup shared by most tests.
const XOR_CFG: &str = "\
data.xor_n = 64
arch.hidden = 6
arch.activation = tanh
train.learning_rate = 1.0
train.batch_size = 16
train.iterations = 150
noise.kind = gaussian
noise.k = 8
prune.accuracy_threshold = 0.9
prune.check_interval = 50
";

#[test]
fn run_writes_all_artifacts_and_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), XOR_CFG);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy().into_owned();

    run_ok(&["run", "--config", &cfg, "--out", &out_s, "--seed", "11"]);
    let first_summary = std::fs::read(out.join("summary.json")).unwrap();
    let first_history = std::fs::read(out.join("history.csv")).unwrap();
    let first_events = std::fs::read(out.join("prune_events.csv")).unwrap();
    let first_model = std::fs::read(out.join("model.nout")).unwrap();

    run_ok(&["run", "--config", &cfg, "--out", &out_s, "--seed", "11"]);
    assert_eq!(first_summary, std::fs::read(out.join("summary.json")).unwrap());
    assert_eq!(first_history, std::fs::read(out.join("history.csv")).unwrap());
    assert_eq!(first_events, std::fs::read(out.join("prune_events.csv")).unwrap());
    assert_eq!(first_model, std::fs::read(out.join("model.nout")).unwrap());

    let summary: serde_json::Value = serde_json::from_slice(&first_summary).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["dataset"], "xor");
    let header = String::from_utf8_lossy(&first_history);
    assert!(header.starts_with("iteration,task_loss,noise_loss,train_acc,val_acc\n"));
    assert_eq!(header.lines().count(), 151);
}

#[test]
fn summary_parameter_count_matches_the_reloaded_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), XOR_CFG);
    let out = dir.path().join("out");
    run_ok(&["run", "--config", &cfg, "--out", &out.to_string_lossy(), "--seed", "3"]);

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let net = noiseout::Network::load_model(&out.join("model.nout")).unwrap();
    assert_eq!(
        summary["final_params"].as_u64().unwrap() as usize,
        net.count_parameters()
    );
    // The saved model is the stripped network: no noise head remains.
    assert!(net.noise_head.is_none());
}

#[test]
fn an_unreachable_threshold_removes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), XOR_CFG);
    let out = dir.path().join("out");
    run_ok(&[
        "run",
        "--config",
        &cfg,
        "--out",
        &out.to_string_lossy(),
        "--threshold",
        "1.01",
    ]);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["removed_fraction"], 0.0);
    assert_eq!(summary["hidden_initial"], summary["hidden_final"]);
}

#[test]
fn single_threshold_sweep_matches_its_own_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), XOR_CFG);
    let out = dir.path().join("out");
    run_ok(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        &out.to_string_lossy(),
        "--threshold",
        "0.9",
    ]);
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = sweep.lines();
    assert_eq!(lines.next(), Some("threshold,final_params,train_acc,test_acc"));
    let row = lines.next().unwrap();
    assert!(lines.next().is_none());

    let summary: serde_json::Value = serde_json::from_slice(
        &std::fs::read(out.join("threshold-0.9").join("summary.json")).unwrap(),
    )
    .unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[0], "0.9");
    assert_eq!(
        cells[1].parse::<u64>().unwrap(),
        summary["final_params"].as_u64().unwrap()
    );
}

#[test]
fn eval_reproduces_the_summary_train_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), XOR_CFG);
    let out = dir.path().join("out");
    run_ok(&["run", "--config", &cfg, "--out", &out.to_string_lossy(), "--seed", "5"]);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();

    let model = out.join("model.nout");
    let eval_out = run_ok(&[
        "eval",
        &model.to_string_lossy(),
        "--config",
        &cfg,
        "--seed",
        "5",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&eval_out.stdout).unwrap();
    assert_eq!(report["accuracy"], summary["train_accuracy"]);
    assert_eq!(report["parameters"], summary["final_params"]);
}

#[test]
fn inspect_prints_the_model_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), XOR_CFG);
    let out = dir.path().join("out");
    run_ok(&["run", "--config", &cfg, "--out", &out.to_string_lossy()]);
    let model = out.join("model.nout");
    let inspect = run_ok(&["inspect", &model.to_string_lossy()]);
    let report: serde_json::Value = serde_json::from_slice(&inspect.stdout).unwrap();
    assert_eq!(report["input_dim"], 2);
    assert_eq!(report["task_outputs"], 1);
    assert_eq!(report["task_activation"], "sigmoid");
    assert!(report["noise_outputs"].is_null());
    assert!(report["parameters"].as_u64().unwrap() > 0);
}

#[test]
fn correlate_writes_both_csvs_with_all_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "\
data.xor_n = 32
arch.hidden = 2
arch.activation = sigmoid
train.learning_rate = 1.0
train.batch_size = 8
train.iterations = 40
noise.k = 4
correlate.record_interval = 20
",
    );
    let out = dir.path().join("out");
    run_ok(&[
        "correlate",
        "--config",
        &cfg,
        "--out",
        &out.to_string_lossy(),
        "--runs",
        "2",
    ]);

    let mean = std::fs::read_to_string(out.join("corr_mean.csv")).unwrap();
    let mut lines = mean.lines();
    assert_eq!(lines.next(), Some("iteration,kind,mean_abs_r"));
    // Recorded at 0, 20, 40 for four kinds each.
    assert_eq!(lines.count(), 3 * 4);
    for kind in ["none", "gaussian", "binomial", "constant"] {
        assert!(mean.contains(&format!("\n0,{kind},")), "missing kind {kind}");
    }

    let finals = std::fs::read_to_string(out.join("corr_final.csv")).unwrap();
    assert_eq!(finals.lines().next(), Some("kind,seed,final_abs_r"));
    assert_eq!(finals.lines().count(), 1 + 4 * 2);
}

#[test]
fn exit_codes_separate_usage_from_io_failures() {
    // Unknown config key: usage error.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "prune.nope = 1\n").unwrap();
    let out = bin()
        .args(["run", "--config", &bad.to_string_lossy()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Missing model file: IO error, message names the path.
    let out = bin().args(["eval", "/definitely/missing.nout"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/missing.nout"));

    // Sweep without thresholds: usage error from argument parsing.
    let out = bin().args(["sweep"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Help is a success.
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    // A config whose dataset points at a missing file: IO error.
    let mnist = dir.path().join("mnist.cfg");
    std::fs::write(&mnist, "data.kind = mnist\ndata.mnist_images = /nope/img\n").unwrap();
    let out = bin()
        .args(["run", "--config", &mnist.to_string_lossy()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nope/img"));
}
