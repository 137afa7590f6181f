//! Verdicts and artifact emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentName;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `measured ≤ bound`.
    pub fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            bound,
            pass: measured <= bound,
        }
    }

    /// Passes when `measured ≥ bound`.
    pub fn at_least(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            bound,
            pass: measured >= bound,
        }
    }

    /// A yes/no condition, reported as `1` or `0` against the bound `1`.
    pub fn holds(label: impl Into<String>, ok: bool) -> Self {
        Self {
            label: label.into(),
            measured: if ok { 1.0 } else { 0.0 },
            bound: 1.0,
            pass: ok,
        }
    }

    /// Exact equality of two integers.
    pub fn equal(label: impl Into<String>, measured: f64, expected: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            bound: expected,
            pass: measured == expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub experiment: ExperimentName,
    pub config_sha256: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

impl Verdict {
    pub fn new(
        experiment: ExperimentName,
        config_sha256: String,
        seed: u64,
        mut checks: Vec<Check>,
        artifacts: Vec<String>,
        wall_time_s: f64,
    ) -> Self {
        // Non-finite measurements never pass.
        for c in &mut checks {
            if !c.measured.is_finite() {
                c.pass = false;
            }
        }
        let pass = checks.iter().all(|c| c.pass);
        Self {
            experiment,
            config_sha256,
            seed,
            checks,
            pass,
            artifacts,
            wall_time_s,
        }
    }
}

/// A file produced by an experiment, kept in memory until emitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn config_hash(raw: &str) -> String {
    let digest = Sha256::digest(raw.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug)]
pub enum EmitError {
    Exists(PathBuf),
    Io(std::io::Error),
}

impl std::fmt::Display for EmitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmitError::Exists(p) => write!(f, "{} exists; pass --force to overwrite", p.display()),
            EmitError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for EmitError {}

impl From<std::io::Error> for EmitError {
    fn from(e: std::io::Error) -> Self {
        EmitError::Io(e)
    }
}

/// Writes every artifact into `dir` through a temporary file and a rename.
/// Existing files are only replaced with `force`; nothing is written unless
/// every target is writable.
pub fn emit_artifacts(artifacts: &[Artifact], dir: &Path, force: bool) -> Result<Vec<PathBuf>, EmitError> {
    fs::create_dir_all(dir)?;
    let targets: Vec<PathBuf> = artifacts.iter().map(|a| dir.join(&a.name)).collect();
    if !force {
        if let Some(p) = targets.iter().find(|p| p.exists()) {
            return Err(EmitError::Exists(p.clone()));
        }
    }
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&a.bytes)?;
        tmp.as_file().sync_all()?;
        staged.push(tmp);
    }
    for (tmp, target) in staged.into_iter().zip(&targets) {
        tmp.persist(target).map_err(|e| EmitError::Io(e.error))?;
    }
    Ok(targets)
}
