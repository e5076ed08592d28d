//! QASM summaries against a dependency-graph oracle, directory ingestion,
//! and manifest and generator invariants.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use qcloud_core::workload::{
    generate_workload, ingest_directory, parse_qasm_subset, GeneratorConfig, TaskManifest, TaskRecord,
    MAX_LAYERS, MAX_WIDTH, MIN_LAYERS, MIN_WIDTH,
};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/qasm")
}

struct Oracle {
    width: usize,
    depth: usize,
    gates: usize,
}

/// One statement per line, explicit `reg[i]` operands. Each gate is a graph
/// node with an edge from the previous gate on every qubit it touches; depth
/// is the node count of the longest path.
fn oracle(text: &str) -> Oracle {
    let mut offsets = HashMap::new();
    let mut width = 0;
    let mut ops: Vec<Vec<usize>> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let line = line.trim_end_matches(';');
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match head {
            "OPENQASM" | "include" | "creg" | "measure" => {}
            "qreg" => {
                let (name, size) = rest.trim().trim_end_matches(']').split_once('[').unwrap();
                offsets.insert(name.to_string(), width);
                width += size.parse::<usize>().unwrap();
            }
            _ => {
                let qubits = rest
                    .split(',')
                    .map(|o| {
                        let (name, idx) = o.trim().trim_end_matches(']').split_once('[').unwrap();
                        offsets[name] + idx.parse::<usize>().unwrap()
                    })
                    .collect();
                ops.push(qubits);
            }
        }
    }
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); ops.len()];
    for (j, qs) in ops.iter().enumerate() {
        for q in qs {
            if let Some(i) = (0..j).rev().find(|&i| ops[i].contains(q)) {
                edges[i].push(j);
            }
        }
    }
    // gates are listed in a topological order
    let mut longest = vec![1; ops.len()];
    for i in 0..ops.len() {
        for &j in &edges[i] {
            longest[j] = longest[j].max(longest[i] + 1);
        }
    }
    Oracle {
        width,
        depth: longest.iter().copied().max().unwrap_or(0),
        gates: ops.len(),
    }
}

fn fixture_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(fixtures().join("circuits"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}

#[test]
fn fixtures_match_longest_path_oracle() {
    let files = fixture_files();
    assert_eq!(files.len(), 25);
    for path in files {
        let text = fs::read_to_string(&path).unwrap();
        let want = oracle(&text);
        assert!(want.gates <= 6, "{}", path.display());
        let got = parse_qasm_subset(&text).unwrap();
        assert_eq!(got.n_qubits, want.width, "{}", path.display());
        assert_eq!(got.depth, want.depth, "{}", path.display());
        assert_eq!(got.gate_count, want.gates, "{}", path.display());
    }
}

#[test]
fn ghz_and_bell() {
    let ghz = parse_qasm_subset(&fs::read_to_string(fixtures().join("circuits/ghz3.qasm")).unwrap()).unwrap();
    assert_eq!((ghz.n_qubits, ghz.depth, ghz.gate_count), (3, 3, 3));
    let bell = parse_qasm_subset(&fs::read_to_string(fixtures().join("circuits/bell.qasm")).unwrap()).unwrap();
    assert_eq!((bell.n_qubits, bell.depth, bell.gate_count), (2, 2, 2));
}

#[test]
fn unsupported_gate_is_reported_with_its_line() {
    let text = fs::read_to_string(fixtures().join("invalid/toffoli.qasm")).unwrap();
    let err = parse_qasm_subset(&text).unwrap_err().to_string();
    assert!(err.contains("line 5") && err.contains("ccx"), "{err}");
}

fn staging(files: &[&str]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for f in files {
        let src = fixtures().join(f);
        fs::copy(&src, dir.path().join(src.file_name().unwrap())).unwrap();
    }
    dir
}

#[test]
fn ingest_is_strict_by_default() {
    let dir = staging(&["circuits/ghz3.qasm", "circuits/bell.qasm", "invalid/toffoli.qasm"]);
    let err = ingest_directory(dir.path(), false).unwrap_err().to_string();
    assert!(err.contains("toffoli.qasm"), "{err}");
}

#[test]
fn permissive_ingest_skips_and_lists_failures() {
    let dir = staging(&["circuits/ghz3.qasm", "circuits/bell.qasm", "invalid/toffoli.qasm"]);
    let (manifest, failures) = ingest_directory(dir.path(), true).unwrap();
    // files are taken in name order
    assert_eq!(
        manifest.records,
        vec![
            TaskRecord { id: 0, n_qubits: 2, layers: 2, gate_count: 2, shots: 1024 },
            TaskRecord { id: 1, n_qubits: 3, layers: 3, gate_count: 3, shots: 1024 },
        ]
    );
    assert_eq!(failures.len(), 1);
    assert!(failures[0].path.ends_with("toffoli.qasm"));
}

#[test]
fn ingest_of_only_failures_is_empty_workload() {
    let dir = staging(&["invalid/toffoli.qasm"]);
    assert!(ingest_directory(dir.path(), true).is_err());
}

fn record() -> impl Strategy<Value = TaskRecord> {
    (MIN_WIDTH..=MAX_WIDTH, MIN_LAYERS..=MAX_LAYERS, 1usize..=MAX_WIDTH, 1u64..100_000).prop_map(|(w, l, per, shots)| {
        TaskRecord {
            id: 0,
            n_qubits: w,
            layers: l,
            gate_count: l * per.min(w),
            shots,
        }
    })
}

proptest! {
    #[test]
    fn manifest_csv_round_trip(mut records in prop::collection::vec(record(), 1..40)) {
        for (i, r) in records.iter_mut().enumerate() {
            r.id = i as u64 * 3;
        }
        let m = TaskManifest::new(records).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        prop_assert_eq!(TaskManifest::read_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn generated_tasks_respect_bounds(n in 1usize..300, seed in any::<u64>()) {
        let m = generate_workload(n, seed, &GeneratorConfig::default()).unwrap();
        prop_assert_eq!(m.len(), n);
        for r in &m.records {
            prop_assert!((MIN_WIDTH..=MAX_WIDTH).contains(&r.n_qubits));
            prop_assert!((MIN_LAYERS..=MAX_LAYERS).contains(&r.layers));
            prop_assert!(r.gate_count >= r.layers && r.gate_count <= r.layers * r.n_qubits);
        }
        prop_assert_eq!(generate_workload(n, seed, &GeneratorConfig::default()).unwrap(), m);
    }
}
