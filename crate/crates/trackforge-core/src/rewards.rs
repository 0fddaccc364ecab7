//! The reward family: exponential velocity reward, progress-per-distance
//! with selectable regularization, curvature-weighted steering penalties,
//! and the segment-weighted composite.
//!
//! Every function here is a pure map from its arguments; time-dependent
//! regularization takes the step index explicitly instead of holding state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::track::SegmentClass;

/// Floor applied to the adaptive epsilon so the regularized denominator
/// stays positive even on a stationary trace.
pub const ADAPTIVE_EPSILON_FLOOR: f64 = 1e-9;

/// Floor applied to the adaptive gamma on curvature-free tracks.
pub const ADAPTIVE_GAMMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("progress reward undefined: step distance {d_l} is not positive")]
    UndefinedReward { d_l: f64 },
    #[error("invalid reward parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityRewardParams {
    /// Decay steepness of the exponential.
    pub alpha_v: f64,
    pub v_target: f64,
}

impl Default for VelocityRewardParams {
    fn default() -> Self {
        VelocityRewardParams {
            alpha_v: 3.0,
            v_target: 1.0,
        }
    }
}

/// `exp(-alpha_v * |v_target - v_actual|)`; equals 1 only at zero error.
pub fn velocity_reward(v_actual: f64, params: &VelocityRewardParams) -> f64 {
    (-params.alpha_v * (params.v_target - v_actual).abs()).exp()
}

/// How the progress-per-distance denominator is stabilized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProgressMode {
    /// Raw `d_progress / d_l`; undefined when the step distance vanishes.
    Unregularized,
    FixedEpsilon {
        epsilon: f64,
    },
    /// Epsilon proportional to the episode's mean step distance.
    AdaptiveEpsilon {
        alpha_eps: f64,
    },
    /// Epsilon decaying geometrically with the step index.
    DecayingEpsilon {
        epsilon0: f64,
        beta: f64,
    },
}

impl Default for ProgressMode {
    fn default() -> Self {
        ProgressMode::FixedEpsilon { epsilon: 0.01 }
    }
}

/// Raw progress-per-distance. A non-positive step distance has no defined
/// value and reports an error instead of returning an unbounded ratio.
pub fn progress_reward_raw(d_progress: f64, d_l: f64) -> Result<f64, RewardError> {
    if d_l <= 0.0 {
        Err(RewardError::UndefinedReward { d_l })
    } else {
        Ok(d_progress / d_l)
    }
}

/// Regularized progress-per-distance, finite for every `d_l >= 0` and
/// bounded by `|d_progress| / epsilon`.
pub fn progress_reward_regularized(
    d_progress: f64,
    d_l: f64,
    epsilon: f64,
) -> Result<f64, RewardError> {
    if epsilon <= 0.0 {
        return Err(RewardError::InvalidParameter("epsilon must be > 0"));
    }
    Ok(d_progress / (d_l + epsilon))
}

/// `alpha_eps * mean_dl`, floored so the result stays positive.
pub fn epsilon_adaptive(mean_dl: f64, alpha_eps: f64) -> f64 {
    (alpha_eps * mean_dl).max(ADAPTIVE_EPSILON_FLOOR)
}

/// `epsilon0 * exp(-beta * t)`: geometric decay over training steps.
pub fn epsilon_decayed(epsilon0: f64, beta: f64, t: u64) -> f64 {
    epsilon0 * (-beta * t as f64).exp()
}

/// Unweighted steering penalty `-k * |d_steer|`, in reward units per degree.
pub fn steering_penalty(d_steer: f64, k: f64) -> f64 {
    -k * d_steer.abs()
}

/// Saturating curvature weight `min(gamma * curvature, 1)`.
pub fn curve_weight_min(curvature: f64, gamma: f64) -> f64 {
    (gamma * curvature).min(1.0)
}

/// Asymptotic curvature weight `curvature / (curvature + gamma)`, strictly
/// below 1 and equal to 0.5 at `curvature == gamma`.
pub fn curve_weight_rational(curvature: f64, gamma: f64) -> f64 {
    curvature / (curvature + gamma)
}

/// `alpha_gamma * mean_curvature`, floored to keep gamma positive on
/// straight-only windows.
pub fn gamma_adaptive(mean_curvature: f64, alpha_gamma: f64) -> f64 {
    (alpha_gamma * mean_curvature).max(ADAPTIVE_GAMMA_FLOOR)
}

/// Curvature-weighted, speed-scaled steering penalty
/// `-k * |d_steer| * (1 - w_curve) * v_scale`.
pub fn steering_penalty_weighted(d_steer: f64, k: f64, w_curve: f64, v_scale: f64) -> f64 {
    -k * d_steer.abs() * (1.0 - w_curve) * v_scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveWeighting {
    /// No curvature relief; the penalty reduces to `-k * |d_steer| * v_scale`.
    None,
    MinForm,
    RationalForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GammaMode {
    Fixed { gamma: f64 },
    Adaptive { alpha_gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteeringPenaltyParams {
    /// Reward units per degree of steering change.
    pub k: f64,
    pub weighting: CurveWeighting,
    pub gamma: GammaMode,
    /// Speed-dependent scaling factor; 1 in the low-speed regime.
    pub v_scale: f64,
    /// Arc-length window, in meters, over which the mean curvature feeding
    /// the adaptive gamma is taken.
    pub mean_curvature_window: f64,
}

impl Default for SteeringPenaltyParams {
    fn default() -> Self {
        SteeringPenaltyParams {
            k: 0.01,
            weighting: CurveWeighting::RationalForm,
            gamma: GammaMode::Adaptive { alpha_gamma: 2.0 },
            v_scale: 1.0,
            mean_curvature_window: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightTriple {
    pub w_progress: f64,
    pub w_steer: f64,
    pub w_velocity: f64,
}

/// Composite weights, one triple per segment class, plus the curvature
/// threshold that separates the classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeWeights {
    pub straight: WeightTriple,
    pub curved: WeightTriple,
    pub curvature_threshold: f64,
}

impl Default for CompositeWeights {
    fn default() -> Self {
        CompositeWeights {
            straight: WeightTriple {
                w_progress: 1.0,
                w_steer: 0.1,
                w_velocity: 1.0,
            },
            curved: WeightTriple {
                w_progress: 1.0,
                w_steer: 0.5,
                w_velocity: 0.3,
            },
            curvature_threshold: 0.05,
        }
    }
}

impl CompositeWeights {
    pub fn weights_for(&self, segment: SegmentClass) -> WeightTriple {
        match segment {
            SegmentClass::Straight => self.straight,
            SegmentClass::Curved => self.curved,
        }
    }
}

/// Everything a single reward evaluation consumes, gathered per step by the
/// rollout loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardContext {
    /// Lap-fraction change since the previous step (negative when moving
    /// backward along the route).
    pub d_progress: f64,
    /// Euclidean distance traveled since the previous step, meters.
    pub d_l: f64,
    /// Steering change since the previous step, degrees, signed.
    pub d_steer: f64,
    pub v_actual: f64,
    pub curvature: f64,
    /// Mean step distance over the episode so far.
    pub mean_dl: f64,
    /// Mean curvature around the current position.
    pub mean_curvature: f64,
    /// Step index.
    pub t: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub r_total: f64,
    pub r_progress: f64,
    pub r_steer: f64,
    pub r_velocity: f64,
}

/// Full parameterization of the reward family. Serialized as one JSON key
/// per parameter group; unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub velocity: VelocityRewardParams,
    pub progress: ProgressMode,
    pub steering: SteeringPenaltyParams,
    pub composite: CompositeWeights,
}

impl RewardConfig {
    /// Collects every invalid field as a `field: problem` message.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        check(
            self.velocity.alpha_v > 0.0,
            "reward.velocity.alpha_v must be > 0",
        );
        check(
            self.velocity.v_target > 0.0,
            "reward.velocity.v_target must be > 0",
        );
        match self.progress {
            ProgressMode::Unregularized => {}
            ProgressMode::FixedEpsilon { epsilon } => {
                check(epsilon > 0.0, "reward.progress.epsilon must be > 0")
            }
            ProgressMode::AdaptiveEpsilon { alpha_eps } => {
                check(alpha_eps > 0.0, "reward.progress.alpha_eps must be > 0")
            }
            ProgressMode::DecayingEpsilon { epsilon0, beta } => {
                check(epsilon0 > 0.0, "reward.progress.epsilon0 must be > 0");
                check(beta > 0.0, "reward.progress.beta must be > 0");
            }
        }
        check(self.steering.k > 0.0, "reward.steering.k must be > 0");
        match self.steering.gamma {
            GammaMode::Fixed { gamma } => check(gamma > 0.0, "reward.steering.gamma must be > 0"),
            GammaMode::Adaptive { alpha_gamma } => {
                check(alpha_gamma > 1.0, "reward.steering.alpha_gamma must be > 1")
            }
        }
        check(
            self.steering.v_scale > 0.0,
            "reward.steering.v_scale must be > 0",
        );
        check(
            self.steering.mean_curvature_window > 0.0,
            "reward.steering.mean_curvature_window must be > 0",
        );
        check(
            self.composite.curvature_threshold > 0.0,
            "reward.composite.curvature_threshold must be > 0",
        );
        for (name, triple) in [
            ("straight", self.composite.straight),
            ("curved", self.composite.curved),
        ] {
            let all_nonneg =
                triple.w_progress >= 0.0 && triple.w_steer >= 0.0 && triple.w_velocity >= 0.0;
            let any_positive =
                triple.w_progress > 0.0 || triple.w_steer > 0.0 || triple.w_velocity > 0.0;
            if !all_nonneg {
                errs.push(format!("reward.composite.{name}: weights must be >= 0"));
            }
            if !any_positive {
                errs.push(format!(
                    "reward.composite.{name}: at least one weight must be > 0"
                ));
            }
        }
        errs
    }
}

/// Weighted sum of the three components for one step. The components are
/// exactly what the standalone operations return for the same context; the
/// only error path is the unregularized progress mode on a zero-distance
/// step.
pub fn composite_reward(
    ctx: &RewardContext,
    weights: WeightTriple,
    config: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    let r_progress = match config.progress {
        ProgressMode::Unregularized => progress_reward_raw(ctx.d_progress, ctx.d_l)?,
        ProgressMode::FixedEpsilon { epsilon } => {
            progress_reward_regularized(ctx.d_progress, ctx.d_l, epsilon)?
        }
        ProgressMode::AdaptiveEpsilon { alpha_eps } => progress_reward_regularized(
            ctx.d_progress,
            ctx.d_l,
            epsilon_adaptive(ctx.mean_dl, alpha_eps),
        )?,
        ProgressMode::DecayingEpsilon { epsilon0, beta } => progress_reward_regularized(
            ctx.d_progress,
            ctx.d_l,
            epsilon_decayed(epsilon0, beta, ctx.t),
        )?,
    };

    let gamma = match config.steering.gamma {
        GammaMode::Fixed { gamma } => gamma,
        GammaMode::Adaptive { alpha_gamma } => gamma_adaptive(ctx.mean_curvature, alpha_gamma),
    };
    let w_curve = match config.steering.weighting {
        CurveWeighting::None => 0.0,
        CurveWeighting::MinForm => curve_weight_min(ctx.curvature, gamma),
        CurveWeighting::RationalForm => curve_weight_rational(ctx.curvature, gamma),
    };
    let r_steer = steering_penalty_weighted(
        ctx.d_steer,
        config.steering.k,
        w_curve,
        config.steering.v_scale,
    );
    let r_velocity = velocity_reward(ctx.v_actual, &config.velocity);
    let r_total = weights.w_progress * r_progress
        + weights.w_steer * r_steer
        + weights.w_velocity * r_velocity;
    Ok(RewardBreakdown {
        r_total,
        r_progress,
        r_steer,
        r_velocity,
    })
}
