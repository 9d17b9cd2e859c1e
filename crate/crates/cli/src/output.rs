//! Artifacts on disk: `summary.json`, `rows.csv`, experiment extras and a
//! `manifest.json` with SHA-256 checksums of all of them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// One threshold evaluated by an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Everything an experiment produces; deterministic given the config.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub results: Value,
    /// Contents of `rows.csv`, one line per replica.
    pub rows: String,
    /// Additional files as `(name, bytes)`.
    pub extra: Vec<(String, Vec<u8>)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    /// True when every check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `summary.json`: the config without its output directory, the results
    /// and the checks. Contains nothing that depends on timing or workers.
    pub fn summary_json(&self, config: &RunConfig) -> Result<String> {
        let mut echo = serde_json::to_value(config).map_err(json_err)?;
        if let Value::Object(map) = &mut echo {
            map.remove("out");
        }
        let doc = serde_json::json!({
            "experiment": config.experiment.name(),
            "config": echo,
            "results": self.results,
            "checks": self.checks,
            "passed": self.passed(),
        });
        let mut s = serde_json::to_string_pretty(&doc).map_err(json_err)?;
        s.push('\n');
        Ok(s)
    }
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Usage(format!("cannot serialize: {e}"))
}

/// Checksum entry of one artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance record written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub config: RunConfig,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub passed: bool,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Lowercase hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Writes all artifacts of `outcome` and the manifest into `config.out`.
pub fn write_outputs(
    config: &RunConfig,
    outcome: &Outcome,
    workers: usize,
    wall_time_seconds: f64,
) -> Result<PathBuf> {
    let dir = &config.out;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.clone(), e))?;
    let mut files: Vec<(String, Vec<u8>)> = vec![
        (
            "summary.json".to_string(),
            outcome.summary_json(config)?.into_bytes(),
        ),
        ("rows.csv".to_string(), outcome.rows.clone().into_bytes()),
    ];
    files.extend(outcome.extra.iter().cloned());
    let mut artifacts = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        write_file(&dir.join(name), bytes)?;
        artifacts.push(ArtifactEntry {
            file: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        tool: "dbmlab".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        core_version: dbmlab_core::VERSION.to_string(),
        config: config.clone(),
        workers,
        wall_time_seconds,
        passed: outcome.passed(),
        artifacts,
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(json_err)?;
    text.push('\n');
    write_file(&path, text.as_bytes())?;
    Ok(path)
}

/// Recomputes the checksum of every artifact listed in `dir/manifest.json`.
/// Returns the manifest on success and lists every mismatch otherwise.
pub fn verify_outputs(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.clone(), e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Verify(format!("{}: {e}", path.display())))?;
    let mut bad = Vec::new();
    for a in &manifest.artifacts {
        let p = dir.join(&a.file);
        match std::fs::read(&p) {
            Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {}
            Ok(_) => bad.push(format!("{}: checksum mismatch", a.file)),
            Err(e) => bad.push(format!("{}: {e}", a.file)),
        }
    }
    if bad.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::Verify(bad.join("; ")))
    }
}
