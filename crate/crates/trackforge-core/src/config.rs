//! The run configuration document shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ActionBounds, SimParams};
use crate::rewards::RewardConfig;
use crate::train::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid config fields:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Everything a run needs: the track, the simulator, the reward family, the
/// training budget, and a single master seed that all randomness flows from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub track: PathBuf,
    /// Track half width in meters; the track file carries only geometry.
    pub half_width: f64,
    pub sim: SimParams,
    pub bounds: ActionBounds,
    pub reward: RewardConfig,
    pub train: TrainConfig,
    pub out_dir: PathBuf,
    pub master_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            track: PathBuf::from("tracks/oval.csv"),
            half_width: 0.6,
            sim: SimParams::default(),
            bounds: ActionBounds::default(),
            reward: RewardConfig::default(),
            train: TrainConfig::default(),
            out_dir: PathBuf::from("runs"),
            master_seed: 42,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("config serializes");
        json.push('\n');
        json
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let path = path.as_ref();
        fs::write(path, self.to_json_pretty()).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Checks every field invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        check(self.half_width > 0.0, "half_width must be > 0");
        check(self.sim.dt > 0.0, "sim.dt must be > 0");
        check(self.sim.wheelbase > 0.0, "sim.wheelbase must be > 0");
        check(self.sim.max_accel > 0.0, "sim.max_accel must be > 0");
        check(
            self.sim.off_track_tolerance >= 0.0,
            "sim.off_track_tolerance must be >= 0",
        );
        check(self.bounds.speed_min > 0.0, "bounds.speed_min must be > 0");
        check(
            self.bounds.speed_max > self.bounds.speed_min,
            "bounds.speed_max must exceed bounds.speed_min",
        );
        check(
            self.bounds.steering_limit_deg > 0.0 && self.bounds.steering_limit_deg < 90.0,
            "bounds.steering_limit_deg must be in (0, 90)",
        );
        errs.extend(self.reward.validation_errors());
        errs.extend(self.train.validation_errors());
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}
