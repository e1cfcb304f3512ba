//! Run manifests: the resolved config, pulse parameters in both unit
//! systems, scalar results and a checksummed index of every output file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use kickshift_core::SingleCyclePulse;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::units::{au_to_as, au_to_fs};

pub const SCHEMA_ID: &str = "kickshift-run-manifest/1";

/// The published JSON schema for [`RunManifest`].
pub const SCHEMA: &str = include_str!("../schema/manifest.schema.json");

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub e0_au: f64,
    pub intensity_wpcm2: f64,
    pub omega_au: f64,
    pub direction: i8,
    pub t_start_au: f64,
    pub t_start_fs: f64,
    pub duration_au: f64,
    pub duration_fs: f64,
    pub duration_as: f64,
    pub ponderomotive_au: f64,
    pub final_displacement_au: f64,
}

impl PulseRecord {
    pub fn of(p: &SingleCyclePulse) -> Self {
        PulseRecord {
            e0_au: p.e0,
            intensity_wpcm2: p.intensity(),
            omega_au: p.omega,
            direction: p.direction.sign() as i8,
            t_start_au: p.t_start,
            t_start_fs: au_to_fs(p.t_start),
            duration_au: p.duration(),
            duration_fs: au_to_fs(p.duration()),
            duration_as: au_to_as(p.duration()),
            ponderomotive_au: p.ponderomotive(),
            final_displacement_au: p.final_displacement(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub preset: String,
    pub pipeline: String,
    pub code_version: String,
    pub config: serde_json::Value,
    pub config_toml: String,
    pub pulses: Vec<PulseRecord>,
    /// FNV-1a hash of the propagation plan, hex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_hash: Option<String>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub results: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn result(&self, key: &str) -> Option<f64> {
        self.results.get(key).copied()
    }

    pub fn output(&self, kind: &str) -> Option<&OutputEntry> {
        self.outputs.iter().find(|o| o.kind == kind)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: invalid manifest: {e}", path.display())))
    }

    /// Recompute every checksum under `dir`; returns the mismatching paths.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for entry in &self.outputs {
            let (digest, bytes) = sha256_file(&dir.join(&entry.path))?;
            if digest != entry.sha256 || bytes != entry.bytes {
                bad.push(entry.path.clone());
            }
        }
        Ok(bad)
    }
}

/// Hex SHA-256 and size of a file.
pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buffer = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = reader
            .read(&mut buffer)
            .map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buffer[..n]);
        total += n as u64;
    }
    let digest = hasher.finalize();
    Ok((digest.iter().map(|b| format!("{b:02x}")).collect(), total))
}
