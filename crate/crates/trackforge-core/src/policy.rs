//! Linear squashed policy over ground-truth track features, plus the JSON
//! checkpoint format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{wrap_angle, Action, ActionBounds, VehicleState};
use crate::track::TrackModel;

/// Observation of the vehicle relative to the track: lateral offset,
/// heading error, current speed, and curvature probes at fixed lookahead
/// arc distances. A constant bias feature is appended when flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub lateral_offset: f64,
    pub heading_error: f64,
    pub speed: f64,
    pub curvature_ahead: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        4 + self.curvature_ahead.len()
    }

    /// Flattens to `[lateral, heading_error, speed, curvature..., 1.0]`.
    pub fn to_values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.lateral_offset);
        v.push(self.heading_error);
        v.push(self.speed);
        v.extend_from_slice(&self.curvature_ahead);
        v.push(1.0);
        v
    }
}

/// Ground-truth features of `state` on `track`. Heading error is wrapped to
/// the minimal signed angle between the vehicle heading and the local track
/// tangent.
pub fn featurize(track: &TrackModel, state: &VehicleState, lookaheads: &[f64]) -> FeatureVector {
    let projection = track.project(state.x, state.y);
    let (tx, ty) = track.tangent_at(projection.s);
    let heading_error = wrap_angle(state.heading - ty.atan2(tx));
    let curvature_ahead = lookaheads
        .iter()
        .map(|&ahead| track.curvature_at(projection.s + ahead))
        .collect();
    FeatureVector {
        lateral_offset: projection.lateral_offset,
        heading_error,
        speed: state.speed,
        curvature_ahead,
    }
}

/// Linear map from features to pre-squash outputs, squashed into the action
/// bounds: sigmoid for the speed setpoint, tanh for steering. Finite weights
/// can never leave the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    /// Row-major `2 x dim`: row 0 drives target speed, row 1 steering.
    weights: Vec<f64>,
    lookaheads: Vec<f64>,
    bounds: ActionBounds,
}

impl Policy {
    pub fn new(weights: Vec<f64>, lookaheads: Vec<f64>, bounds: ActionBounds) -> Self {
        let dim = 4 + lookaheads.len();
        assert_eq!(weights.len(), 2 * dim, "weight matrix must be 2 x {dim}");
        Policy {
            weights,
            lookaheads,
            bounds,
        }
    }

    pub fn zeros(lookaheads: Vec<f64>, bounds: ActionBounds) -> Self {
        let dim = 4 + lookaheads.len();
        Policy {
            weights: vec![0.0; 2 * dim],
            lookaheads,
            bounds,
        }
    }

    pub fn feature_dim(&self) -> usize {
        4 + self.lookaheads.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lookaheads(&self) -> &[f64] {
        &self.lookaheads
    }

    pub fn bounds(&self) -> ActionBounds {
        self.bounds
    }

    pub fn act(&self, features: &FeatureVector) -> Action {
        let dim = self.feature_dim();
        assert_eq!(
            features.dim(),
            dim,
            "feature dimension {} does not match policy dimension {dim}",
            features.dim()
        );
        let values = features.to_values();
        let pre_speed: f64 = self.weights[..dim]
            .iter()
            .zip(&values)
            .map(|(w, v)| w * v)
            .sum();
        let pre_steer: f64 = self.weights[dim..]
            .iter()
            .zip(&values)
            .map(|(w, v)| w * v)
            .sum();
        let b = self.bounds;
        Action {
            target_speed: b.speed_min + (b.speed_max - b.speed_min) * sigmoid(pre_speed),
            steering_angle: b.steering_limit_deg * pre_steer.tanh(),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("failed to read checkpoint {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid checkpoint {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("checkpoint weight matrix has {found} entries, expected {expected} for {lookaheads} lookaheads")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        lookaheads: usize,
    },
}

/// On-disk policy format: feature config, row-major weights, action bounds,
/// and the master seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyCheckpoint {
    pub lookaheads: Vec<f64>,
    pub weights: Vec<f64>,
    pub bounds: ActionBounds,
    pub master_seed: u64,
}

impl PolicyCheckpoint {
    pub fn from_policy(policy: &Policy, master_seed: u64) -> Self {
        PolicyCheckpoint {
            lookaheads: policy.lookaheads.clone(),
            weights: policy.weights.clone(),
            bounds: policy.bounds,
            master_seed,
        }
    }

    pub fn into_policy(self) -> Result<Policy, CheckpointError> {
        let expected = 2 * (4 + self.lookaheads.len());
        if self.weights.len() != expected {
            return Err(CheckpointError::DimensionMismatch {
                expected,
                found: self.weights.len(),
                lookaheads: self.lookaheads.len(),
            });
        }
        Ok(Policy::new(self.weights, self.lookaheads, self.bounds))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        fs::write(path, json + "\n").map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CheckpointError::Json {
            path: path.display().to_string(),
            source,
        })
    }
}
