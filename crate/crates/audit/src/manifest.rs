//! Run manifests: what a subcommand read, what it wrote, and the digests
//! that let a re-run skip work that is already done.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::store::{file_digest, read_json, write_json};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub code_version: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Paths relative to the output directory where possible.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn relative_key(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

pub fn digests(root: &Path, paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((relative_key(root, p), file_digest(p)?)))
        .collect()
}

/// Outcome of [`run_step`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepStatus {
    Ran(RunManifest),
    UpToDate(RunManifest),
}

impl StepStatus {
    pub fn manifest(&self) -> &RunManifest {
        match self {
            StepStatus::Ran(m) | StepStatus::UpToDate(m) => m,
        }
    }
}

/// True when `manifest` was produced from the same configuration and
/// inputs and every recorded output still has its recorded digest.
pub fn is_current(
    root: &Path,
    manifest: &RunManifest,
    config_digest: &str,
    inputs: &BTreeMap<String, String>,
) -> bool {
    manifest.config_digest == config_digest
        && manifest.inputs == *inputs
        && manifest.outputs.iter().all(|(rel, digest)| {
            let p = root.join(rel);
            p.exists() && file_digest(&p).map(|d| d == *digest).unwrap_or(false)
        })
}

/// Runs `body` unless a current manifest says its outputs are already in
/// place. `body` returns the paths it wrote.
pub fn run_step(
    root: &Path,
    step: &str,
    config_digest: &str,
    seed: u64,
    inputs: &[PathBuf],
    overwrite: bool,
    body: impl FnOnce() -> Result<Vec<PathBuf>>,
) -> Result<StepStatus> {
    let manifest_path = root.join("manifests").join(format!("{step}.json"));
    let input_digests = digests(root, inputs)?;
    if !overwrite && manifest_path.exists() {
        if let Ok(m) = read_json::<RunManifest>(&manifest_path) {
            if is_current(root, &m, config_digest, &input_digests) {
                return Ok(StepStatus::UpToDate(m));
            }
        }
    }
    let started_unix = unix_now();
    let outputs = body()?;
    let manifest = RunManifest {
        command: step.to_string(),
        config_digest: config_digest.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        started_unix,
        finished_unix: unix_now(),
        inputs: input_digests,
        outputs: digests(root, &outputs)?,
    };
    write_json(&manifest_path, &manifest)?;
    Ok(StepStatus::Ran(manifest))
}

/// Every manifest under `root/manifests`, keyed by step name.
pub fn load_all(root: &Path) -> Result<BTreeMap<String, RunManifest>> {
    let dir = root.join("manifests");
    let mut out = BTreeMap::new();
    let Ok(entries) = std::fs::read_dir(&dir) else {
        return Ok(out);
    };
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for p in paths {
        if p.extension().is_some_and(|x| x == "json") {
            let m: RunManifest = read_json(&p)?;
            out.insert(m.command.clone(), m);
        }
    }
    Ok(out)
}
