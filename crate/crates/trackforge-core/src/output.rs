//! Run directory layout and manifests.
//!
//! Every command writes into `<out_dir>/<run-id>/` where the run id is a UTC
//! timestamp plus the seed. File contents never embed timestamps, so two
//! runs with the same inputs produce byte-identical files in differently
//! named directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Record of what produced a run directory: enough to regenerate every file
/// in it. Deliberately excludes wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: impl Into<String>, seed: u64, config: RunConfig) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            seed,
            config,
            outputs: Vec::new(),
        }
    }
}

/// A created run directory; files are written relative to it and recorded
/// for the manifest.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    /// Creates `<out_dir>/<timestamp>-seed<seed>/`, appending a suffix if a
    /// same-second directory already exists.
    pub fn create(out_dir: &Path, seed: u64) -> Result<Self, OutputError> {
        let base = format!("{}-seed{}", utc_timestamp_compact(), seed);
        let mut candidate = out_dir.join(&base);
        let mut n = 1;
        while candidate.exists() {
            candidate = out_dir.join(format!("{base}-{n}"));
            n += 1;
        }
        fs::create_dir_all(&candidate).map_err(|source| OutputError::Io {
            path: candidate.display().to_string(),
            source,
        })?;
        Ok(RunDir {
            root: candidate,
            outputs: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Writes a file under the run directory (creating subdirectories) and
    /// records its relative path.
    pub fn write(&mut self, relative: &str, contents: &str) -> Result<PathBuf, OutputError> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| OutputError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
        fs::write(&path, contents).map_err(|source| OutputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.outputs.push(relative.to_string());
        Ok(path)
    }

    /// Writes `manifest.json` recording everything written so far.
    pub fn finish(mut self, mut manifest: Manifest) -> Result<PathBuf, OutputError> {
        manifest.outputs = self.outputs.clone();
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        self.write("manifest.json", &json)
    }
}

/// Compact UTC timestamp like `20260808T141509Z`, derived from the civil
/// calendar without a timezone dependency.
pub fn utc_timestamp_compact() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .expect("clock before 1970")
        .as_secs();
    let days = (secs / 86_400) as i64;
    let (year, month, day) = civil_from_days(days);
    let rem = secs % 86_400;
    format!(
        "{year:04}{month:02}{day:02}T{:02}{:02}{:02}Z",
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}

/// Days-since-epoch to (year, month, day); Gregorian, valid for the era of
/// interest.
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}
