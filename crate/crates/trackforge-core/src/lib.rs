//! Desk-scale laboratory for reward shaping in low-speed track following:
//! a closed-track simulator, the full shaped-reward family, a seeded
//! cross-entropy policy trainer, and deterministic comparison experiments.

pub mod config;
pub mod dynamics;
pub mod experiments;
pub mod output;
pub mod policy;
pub mod rewards;
pub mod rollout;
pub mod track;
pub mod train;

pub use config::{ConfigError, RunConfig};
pub use dynamics::{Action, ActionBounds, SimParams, VehicleState};
pub use policy::{FeatureVector, Policy, PolicyCheckpoint};
pub use rewards::{RewardBreakdown, RewardConfig, RewardContext, RewardError};
pub use rollout::{EpisodeTrace, EvalReport, Termination};
pub use track::{Projection, SegmentClass, TrackModel, Waypoint};
pub use train::{TrainConfig, TrainResult};
