//! Task sources: the manifest CSV, a synthetic generator and a directory
//! ingester for OpenQASM files.

mod qasm;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use qasm::{parse_qasm_subset, QasmCircuitSummary, QasmError};

pub const MIN_WIDTH: usize = 2;
pub const MAX_WIDTH: usize = 50;
pub const MIN_LAYERS: usize = 2;
pub const MAX_LAYERS: usize = 17_598;
pub const DEFAULT_SHOTS: u64 = 1024;

/// One manifest row. Column order is the CSV header order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: u64,
    pub n_qubits: usize,
    pub layers: usize,
    pub gate_count: usize,
    pub shots: u64,
}

impl TaskRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, value: String| Err(Error::Config(format!("task {}: {what} {value} out of bounds", self.id)));
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&self.n_qubits) {
            return bad("n_qubits", self.n_qubits.to_string());
        }
        if !(MIN_LAYERS..=MAX_LAYERS).contains(&self.layers) {
            return bad("layers", self.layers.to_string());
        }
        if self.shots == 0 {
            return bad("shots", "0".into());
        }
        if self.gate_count < self.layers {
            return bad("gate_count below layers:", self.gate_count.to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaskManifest {
    pub records: Vec<TaskRecord>,
}

impl TaskManifest {
    pub fn new(records: Vec<TaskRecord>) -> Result<Self> {
        let m = TaskManifest { records };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.records.iter().try_for_each(TaskRecord::validate)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn max_layers(&self) -> Option<usize> {
        self.records.iter().map(|r| r.layers).max()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        if self.records.is_empty() {
            w.write_record(["id", "n_qubits", "layers", "gate_count", "shots"])?;
        }
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["id", "n_qubits", "layers", "gate_count", "shots"] {
            return Err(Error::Config(format!(
                "manifest header must be `id,n_qubits,layers,gate_count,shots`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let records = r.deserialize().collect::<std::result::Result<Vec<TaskRecord>, _>>()?;
        TaskManifest::new(records)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        TaskManifest::read_csv(std::io::BufReader::new(file))
    }
}

/// Widths uniform over `[min_width, max_width]`; depths log-uniform over
/// `[min_layers, max_layers]`, rescaled so the sample mean lands on
/// `target_mean_layers`, then rounded and clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub min_width: usize,
    pub max_width: usize,
    pub min_layers: usize,
    pub max_layers: usize,
    pub target_mean_layers: f64,
    pub shots: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            min_width: MIN_WIDTH,
            max_width: MAX_WIDTH,
            min_layers: MIN_LAYERS,
            max_layers: MAX_LAYERS,
            target_mean_layers: 400.0,
            shots: DEFAULT_SHOTS,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.min_width < MIN_WIDTH || self.max_width > MAX_WIDTH || self.min_width > self.max_width {
            return fail(format!(
                "width range [{}, {}] must lie within [{MIN_WIDTH}, {MAX_WIDTH}]",
                self.min_width, self.max_width
            ));
        }
        if self.min_layers < MIN_LAYERS || self.max_layers > MAX_LAYERS || self.min_layers > self.max_layers {
            return fail(format!(
                "layer range [{}, {}] must lie within [{MIN_LAYERS}, {MAX_LAYERS}]",
                self.min_layers, self.max_layers
            ));
        }
        let (lo, hi) = (self.min_layers as f64, self.max_layers as f64);
        if !(self.target_mean_layers >= lo && self.target_mean_layers <= hi) {
            return fail(format!(
                "target mean depth {} outside [{lo}, {hi}]",
                self.target_mean_layers
            ));
        }
        if self.shots == 0 {
            return fail("shots must be at least 1".into());
        }
        Ok(())
    }
}

pub fn generate_workload(n_tasks: usize, seed: u64, config: &GeneratorConfig) -> Result<TaskManifest> {
    if n_tasks == 0 {
        return Err(Error::EmptyWorkload);
    }
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ln_lo, ln_hi) = ((config.min_layers as f64).ln(), (config.max_layers as f64).ln());
    let widths: Vec<usize> = (0..n_tasks)
        .map(|_| rng.gen_range(config.min_width..=config.max_width))
        .collect();
    let raw: Vec<f64> = (0..n_tasks)
        .map(|_| if ln_hi > ln_lo { rng.gen_range(ln_lo..ln_hi).exp() } else { ln_lo.exp() })
        .collect();
    let per_layer: Vec<f64> = (0..n_tasks).map(|_| rng.gen::<f64>()).collect();

    let depths_for = |scale: f64| -> Vec<usize> {
        raw.iter()
            .map(|d| ((d * scale).round() as usize).clamp(config.min_layers, config.max_layers))
            .collect()
    };
    let mean = |d: &[usize]| d.iter().sum::<usize>() as f64 / d.len() as f64;
    // Clamping shifts the mean, so refine the scale a few times.
    let mut scale = config.target_mean_layers / (raw.iter().sum::<f64>() / n_tasks as f64);
    let mut depths = depths_for(scale);
    for _ in 0..32 {
        let m = mean(&depths);
        if (m - config.target_mean_layers).abs() <= 0.5 {
            break;
        }
        scale *= config.target_mean_layers / m;
        depths = depths_for(scale);
    }

    let records = (0..n_tasks)
        .map(|i| {
            let width = widths[i];
            let layers = depths[i];
            // between one gate per layer and a full layer of two-qubit pairs or singles
            let per = 1 + (per_layer[i] * width as f64) as usize;
            TaskRecord {
                id: i as u64,
                n_qubits: width,
                layers,
                gate_count: layers * per.min(width),
                shots: config.shots,
            }
        })
        .collect();
    TaskManifest::new(records)
}

/// A file that failed to parse during ingest.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestFailure {
    pub path: PathBuf,
    pub message: String,
}

/// Parses every `*.qasm` file in `dir` into a manifest row, in filename
/// order. Strict mode fails on any bad file; permissive mode skips them.
pub fn ingest_directory(dir: &Path, permissive: bool) -> Result<(TaskManifest, Vec<IngestFailure>)> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::file(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::file(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "qasm") {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        let outcome = std::fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|text| parse_qasm_subset(&text).map_err(|e| e.to_string()))
            .and_then(|s| {
                let record = TaskRecord {
                    id: records.len() as u64,
                    n_qubits: s.n_qubits,
                    layers: s.depth,
                    gate_count: s.gate_count,
                    shots: DEFAULT_SHOTS,
                };
                record.validate().map(|_| record).map_err(|e| e.to_string())
            });
        match outcome {
            Ok(record) => records.push(record),
            Err(message) => {
                log::warn!("{}: {message}", path.display());
                failures.push(IngestFailure { path, message });
            }
        }
    }
    if !failures.is_empty() && !permissive {
        let listing = failures
            .iter()
            .map(|f| format!("{}: {}", f.path.display(), f.message))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Config(format!("{} file(s) failed to ingest: {listing}", failures.len())));
    }
    if records.is_empty() {
        return Err(Error::EmptyWorkload);
    }
    Ok((TaskManifest::new(records)?, failures))
}
