use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use odtalloc_core::measures::{load_agents_csv, load_tasks_csv};
use odtalloc_core::{DiscreteMeasure, DualPotentials, TaskSet};

use crate::Failure;

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanEntryFile {
    pub task: String,
    pub agent: String,
    pub mass: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanFile {
    pub objective: f64,
    pub entries: Vec<PlanEntryFile>,
    pub duals: Option<DualPotentials>,
    pub method: String,
    pub unique: bool,
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
pub struct Manifest {
    command: Vec<String>,
    inputs: Vec<InputDigest>,
    seed: u64,
    method: String,
    timings_ms: BTreeMap<String, f64>,
    version: &'static str,
}

impl Manifest {
    pub fn new(seed: u64, method: &str) -> Self {
        Self {
            command: std::env::args().collect(),
            inputs: Vec::new(),
            seed,
            method: method.to_string(),
            timings_ms: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    /// Runs `f` and records its wall time under `phase`.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record(phase, start);
        out
    }

    pub fn record(&mut self, phase: &str, start: Instant) {
        self.timings_ms
            .insert(phase.to_string(), start.elapsed().as_secs_f64() * 1e3);
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Loads both instance files, recording their digests.
pub fn load_instance(
    tasks: &Path,
    agents: &Path,
    manifest: &mut Manifest,
) -> Result<(TaskSet, DiscreteMeasure), Failure> {
    for path in [tasks, agents] {
        let bytes = read_input(path)?;
        manifest.add_input(path, &bytes);
    }
    let t = load_tasks_csv(tasks).map_err(Failure::input)?;
    let a = load_agents_csv(agents).map_err(Failure::input)?;
    if t.dim() != a.dim() {
        return Err(Failure::Usage(format!(
            "DimensionMismatch: tasks have dimension {}, agents {}",
            t.dim(),
            a.dim()
        )));
    }
    Ok((t, a))
}

pub fn out_dir(dir: &Path) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}
