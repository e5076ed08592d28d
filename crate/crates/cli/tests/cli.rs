//! The `qcloud` binary: exit codes and output locations.

use std::path::Path;
use std::process::{Command, Output};

fn qcloud(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcloud"))
        .args(args)
        .current_dir(cwd)
        .env_remove("QCLOUD_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn fixture(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/qasm")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn gen_workload_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcloud(&["gen-workload", "--n-tasks", "12", "--seed", "4", "--out", "w.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn unknown_config_key_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "episodez = 3\n").unwrap();
    let out = qcloud(&["train", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("episodez"));
}

#[test]
fn unsupported_gate_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcloud(&["parse-qasm", &fixture("invalid/toffoli.qasm")], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ccx"));
}

#[test]
fn parse_qasm_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcloud(&["parse-qasm", &fixture("circuits/ghz3.qasm")], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "n_qubits 3\ndepth 3\ngate_count 3\n");
}

#[test]
fn train_then_eval_with_mismatched_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcloud(&["train", "--episodes", "2", "--layers", "1", "--output-dir", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["reinforce-pqc_checkpoint.json", "reinforce-pqc_train_log.csv", "reinforce-pqc_train_curve.csv"] {
        assert!(dir.path().join("run").join(f).is_file(), "{f}");
    }
    let inspect = qcloud(&["inspect-checkpoint", "run/reinforce-pqc_checkpoint.json"], dir.path());
    assert!(String::from_utf8_lossy(&inspect.stdout).contains("layers 1"));

    // a PQC checkpoint offered as an MLP agent
    let out = qcloud(
        &["eval", "--episodes", "2", "--output-dir", "run", "--agent", "dqn-mlp:run/reinforce-pqc_checkpoint.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    // two nodes means a five-qubit circuit, not the trained eight-qubit one
    std::fs::write(dir.path().join("two.toml"), "n_nodes = 2\n").unwrap();
    let out = qcloud(
        &["eval", "--config", "two.toml", "--episodes", "2", "--output-dir", "run", "--agent", "reinforce-pqc:run/reinforce-pqc_checkpoint.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inputs"));
}

#[test]
fn output_dir_falls_back_to_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qcloud"))
        .args(["eval", "--episodes", "2"])
        .current_dir(dir.path())
        .env("QCLOUD_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from-env/eval_summary.csv").is_file());
}
