//! Deterministic comparison tables and training ablations. Every table is
//! regenerated from documented, seeded generators; nothing depends on wall
//! clock or thread schedule, so identical inputs produce identical bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{ActionBounds, SimParams};
use crate::rewards::{
    curve_weight_rational, progress_reward_raw, progress_reward_regularized, steering_penalty,
    steering_penalty_weighted, velocity_reward, ProgressMode, RewardConfig, VelocityRewardParams,
};
use crate::rollout::{evaluate_policy, rollout, EpisodeTrace};
use crate::track::TrackModel;
use crate::train::{train_cem, TrainConfig};

// ---------------------------------------------------------------------------
// Velocity reward tables

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySweepRow {
    pub alpha: f64,
    pub error: f64,
    pub reward: f64,
}

/// Cartesian sweep of the exponential velocity reward over decay steepness
/// and absolute speed error.
pub fn sweep_velocity_reward(alphas: &[f64], error_grid: &[f64]) -> Vec<VelocitySweepRow> {
    let mut rows = Vec::with_capacity(alphas.len() * error_grid.len());
    for &alpha in alphas {
        assert!(alpha > 0.0, "alpha must be positive");
        let params = VelocityRewardParams {
            alpha_v: alpha,
            v_target: 1.0,
        };
        for &error in error_grid {
            rows.push(VelocitySweepRow {
                alpha,
                error,
                reward: velocity_reward(params.v_target - error, &params),
            });
        }
    }
    rows
}

pub fn velocity_sweep_csv(rows: &[VelocitySweepRow]) -> String {
    let mut out = String::from("alpha,error,reward\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.alpha, r.error, r.reward));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityScatterRow {
    pub v_actual: f64,
    pub error: f64,
    pub reward: f64,
}

/// Scatter of rewards for `n` uniformly sampled actual speeds in
/// [0, 1] m/s against a 1 m/s target.
pub fn scatter_velocity_reward(alpha: f64, n: usize, seed: u64) -> Vec<VelocityScatterRow> {
    assert!(n > 0, "need at least one sample");
    let params = VelocityRewardParams {
        alpha_v: alpha,
        v_target: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v_actual: f64 = rng.random();
            VelocityScatterRow {
                v_actual,
                error: (params.v_target - v_actual).abs(),
                reward: velocity_reward(v_actual, &params),
            }
        })
        .collect()
}

pub fn velocity_scatter_csv(rows: &[VelocityScatterRow]) -> String {
    let mut out = String::from("v_actual,error,reward\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.v_actual, r.error, r.reward));
    }
    out
}

// ---------------------------------------------------------------------------
// Progress regularization comparison

/// Per-step progress increment of the synthetic trace.
pub const SYNTHETIC_D_PROGRESS: f64 = 0.001;

/// Largest step distance of the synthetic trace, meters.
pub const SYNTHETIC_D_L_MAX: f64 = 0.06;

/// Smallest step distance: the dips that break the raw ratio.
pub const SYNTHETIC_D_L_MIN: f64 = 1e-6;

/// The documented synthetic trace: constant progress increments with a
/// sinusoidal step distance dipping to `SYNTHETIC_D_L_MIN` every 50 steps
/// (at t = 0, 50, 100, ...). Returns `(d_progress, d_l)` pairs.
pub fn sinusoidal_dl_trace(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|t| {
            let phase = std::f64::consts::TAU * t as f64 / 50.0;
            let d_l = SYNTHETIC_D_L_MIN
                + (SYNTHETIC_D_L_MAX - SYNTHETIC_D_L_MIN) * (1.0 - phase.cos()) / 2.0;
            (SYNTHETIC_D_PROGRESS, d_l)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressCompareRow {
    pub t: usize,
    pub d_l: f64,
    /// Undefined (None) when the step distance is exactly zero.
    pub r_raw: Option<f64>,
    pub r_regularized: f64,
}

/// Evaluates the raw and regularized progress rewards side by side on a
/// `(d_progress, d_l)` trace.
pub fn compare_progress_rewards(trace: &[(f64, f64)], epsilon: f64) -> Vec<ProgressCompareRow> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    trace
        .iter()
        .enumerate()
        .map(|(t, &(d_progress, d_l))| ProgressCompareRow {
            t,
            d_l,
            r_raw: progress_reward_raw(d_progress, d_l).ok(),
            r_regularized: progress_reward_regularized(d_progress, d_l, epsilon)
                .expect("epsilon checked above"),
        })
        .collect()
}

pub fn progress_compare_csv(rows: &[ProgressCompareRow]) -> String {
    let mut out = String::from("t,dl,r_raw,r_regularized\n");
    for r in rows {
        let raw = match r.r_raw {
            Some(v) => v.to_string(),
            None => "undefined".to_string(),
        };
        out.push_str(&format!("{},{},{},{}\n", r.t, r.d_l, raw, r.r_regularized));
    }
    out
}

// ---------------------------------------------------------------------------
// Steering penalty comparisons

/// Smooth scenario: gentle 2-degree sinusoidal steering changes.
pub fn smooth_steering_profile(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| 2.0 * (std::f64::consts::TAU * t as f64 / 50.0).sin())
        .collect()
}

/// Abrupt scenario: seeded uniform steering changes in [-25, 25] degrees.
pub fn abrupt_steering_profile(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-25.0..25.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringCompareRow {
    pub t: usize,
    pub d_steer_smooth: f64,
    pub r_smooth: f64,
    pub d_steer_abrupt: f64,
    pub r_abrupt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringCompareTable {
    pub rows: Vec<SteeringCompareRow>,
    pub mean_abs_smooth: f64,
    pub mean_abs_abrupt: f64,
}

/// Unweighted steering penalties under the smooth and abrupt generators.
pub fn compare_steering_penalties(k: f64, n_steps: usize, seed: u64) -> SteeringCompareTable {
    let smooth = smooth_steering_profile(n_steps);
    let abrupt = abrupt_steering_profile(n_steps, seed);
    let rows: Vec<SteeringCompareRow> = (0..n_steps)
        .map(|t| SteeringCompareRow {
            t,
            d_steer_smooth: smooth[t],
            r_smooth: steering_penalty(smooth[t], k),
            d_steer_abrupt: abrupt[t],
            r_abrupt: steering_penalty(abrupt[t], k),
        })
        .collect();
    let mean = |vals: &dyn Fn(&SteeringCompareRow) -> f64| -> f64 {
        if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|r| vals(r).abs()).sum::<f64>() / rows.len() as f64
        }
    };
    SteeringCompareTable {
        mean_abs_smooth: mean(&|r| r.r_smooth),
        mean_abs_abrupt: mean(&|r| r.r_abrupt),
        rows,
    }
}

pub fn steering_compare_csv(table: &SteeringCompareTable) -> String {
    let mut out = String::from("t,dsteer_smooth,r_smooth,dsteer_abrupt,r_abrupt\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.t, r.d_steer_smooth, r.r_smooth, r.d_steer_abrupt, r.r_abrupt
        ));
    }
    out.push_str(&format!(
        "# mean_abs_penalty_smooth={} mean_abs_penalty_abrupt={}\n",
        table.mean_abs_smooth, table.mean_abs_abrupt
    ));
    out
}

/// Curvature profile alternating straight (0) and arc (0.2 1/m) blocks of
/// `block` steps each.
pub fn alternating_curvature_profile(n: usize, block: usize) -> Vec<f64> {
    assert!(block > 0);
    (0..n)
        .map(|t| {
            if (t / block).is_multiple_of(2) {
                0.0
            } else {
                0.2
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSteeringRow {
    pub t: usize,
    pub curvature: f64,
    pub w_curve: f64,
    pub r_unweighted: f64,
    pub r_weighted: f64,
}

/// Unweighted versus curvature-weighted penalties (rational weighting) over
/// paired curvature and steering profiles.
pub fn compare_weighted_steering(
    k: f64,
    gamma: f64,
    curvature_profile: &[f64],
    steering_profile: &[f64],
) -> Vec<WeightedSteeringRow> {
    assert_eq!(curvature_profile.len(), steering_profile.len());
    curvature_profile
        .iter()
        .zip(steering_profile)
        .enumerate()
        .map(|(t, (&curvature, &d_steer))| {
            let w_curve = curve_weight_rational(curvature, gamma);
            WeightedSteeringRow {
                t,
                curvature,
                w_curve,
                r_unweighted: steering_penalty(d_steer, k),
                r_weighted: steering_penalty_weighted(d_steer, k, w_curve, 1.0),
            }
        })
        .collect()
}

pub fn weighted_steering_csv(rows: &[WeightedSteeringRow]) -> String {
    let mut out = String::from("t,curvature,w_curve,r_unweighted,r_weighted\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.t, r.curvature, r.w_curve, r.r_unweighted, r.r_weighted
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Training ablations

#[derive(Debug, Clone)]
pub struct AblationVariant {
    pub name: String,
    pub reward: RewardConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSummary {
    pub name: String,
    pub train_ok: bool,
    pub completion_rate: f64,
    /// Seconds over completed laps only; None when no lap completed.
    pub mean_lap_time: Option<f64>,
    pub mean_speed: f64,
    /// Mean |steering change| per step, degrees.
    pub smoothness_index: f64,
    /// Population variance of the per-step total reward, pooled over all
    /// evaluation traces.
    pub reward_variance: f64,
    /// Fraction of steps whose |progress reward| exceeds the spike
    /// threshold (a multiple of the per-trace median), averaged over traces.
    pub spike_fraction: f64,
}

/// Default spike threshold: 10x the per-trace median |progress reward|.
pub const DEFAULT_SPIKE_MULTIPLIER: f64 = 10.0;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Fraction of steps with |r_progress| above `multiplier` times the trace's
/// median |r_progress|.
pub fn spike_fraction(trace: &EpisodeTrace, multiplier: f64) -> f64 {
    if trace.steps.is_empty() {
        return 0.0;
    }
    let mut magnitudes: Vec<f64> = trace.steps.iter().map(|s| s.r_progress.abs()).collect();
    magnitudes.sort_by(f64::total_cmp);
    let threshold = multiplier * median(&magnitudes);
    let spikes = trace
        .steps
        .iter()
        .filter(|s| s.r_progress.abs() > threshold)
        .count();
    spikes as f64 / trace.steps.len() as f64
}

/// Aggregates evaluation traces into an `AblationSummary`. Also used to
/// recompute summaries from persisted trace files.
pub fn summarize_traces(
    name: &str,
    train_ok: bool,
    traces: &[EpisodeTrace],
    dt: f64,
    spike_multiplier: f64,
) -> AblationSummary {
    let episodes = traces.len().max(1) as f64;
    let completed: Vec<&EpisodeTrace> = traces.iter().filter(|t| t.completed()).collect();
    let completion_rate = completed.len() as f64 / episodes;
    let mean_lap_time = if completed.is_empty() {
        None
    } else {
        Some(
            completed
                .iter()
                .map(|t| t.steps.len() as f64 * dt)
                .sum::<f64>()
                / completed.len() as f64,
        )
    };
    let mean_speed = traces.iter().map(|t| t.mean_speed()).sum::<f64>() / episodes;
    let smoothness_index = traces.iter().map(|t| t.smoothness_index()).sum::<f64>() / episodes;

    let all_rewards: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.steps.iter().map(|s| s.r_total))
        .collect();
    let reward_variance = if all_rewards.is_empty() {
        0.0
    } else {
        let mean = all_rewards.iter().sum::<f64>() / all_rewards.len() as f64;
        all_rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / all_rewards.len() as f64
    };
    let spike = traces
        .iter()
        .map(|t| spike_fraction(t, spike_multiplier))
        .sum::<f64>()
        / episodes;

    AblationSummary {
        name: name.to_string(),
        train_ok,
        completion_rate,
        mean_lap_time,
        mean_speed,
        smoothness_index,
        reward_variance,
        spike_fraction: spike,
    }
}

#[derive(Debug, Clone)]
pub struct AblationRun {
    pub summaries: Vec<AblationSummary>,
    /// (variant name, eval seed, trace) for every evaluated episode.
    pub traces: Vec<(String, u64, EpisodeTrace)>,
}

/// Trains one policy per reward variant under an identical budget and seed,
/// evaluates each on the same held-out seeds, and summarizes. A variant
/// whose training collapses (non-finite best return) is still summarized,
/// with `train_ok` false.
pub fn run_ablation(
    track: &TrackModel,
    variants: &[AblationVariant],
    train: &TrainConfig,
    params: &SimParams,
    bounds: ActionBounds,
    eval_seeds: &[u64],
    spike_multiplier: f64,
) -> AblationRun {
    assert!(
        variants.len() >= 2,
        "an ablation needs at least two variants"
    );
    assert!(!eval_seeds.is_empty());
    let mut summaries = Vec::with_capacity(variants.len());
    let mut traces = Vec::with_capacity(variants.len() * eval_seeds.len());
    for variant in variants {
        let result = train_cem(track, &variant.reward, params, bounds, train);
        let train_ok = result
            .history
            .last()
            .map(|h| h.best_return.is_finite())
            .unwrap_or(false);
        let mut variant_traces = Vec::with_capacity(eval_seeds.len());
        for &seed in eval_seeds {
            let trace = rollout(&result.best, track, &variant.reward, params, seed);
            variant_traces.push(trace.clone());
            traces.push((variant.name.clone(), seed, trace));
        }
        summaries.push(summarize_traces(
            &variant.name,
            train_ok,
            &variant_traces,
            params.dt,
            spike_multiplier,
        ));
    }
    AblationRun { summaries, traces }
}

pub fn ablation_summary_csv(summaries: &[AblationSummary]) -> String {
    let mut out = String::from(
        "variant,train_ok,completion_rate,mean_lap_time,mean_speed,smoothness_index,reward_variance,spike_fraction\n",
    );
    for s in summaries {
        let lap = s.mean_lap_time.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.name,
            s.train_ok,
            s.completion_rate,
            lap,
            s.mean_speed,
            s.smoothness_index,
            s.reward_variance,
            s.spike_fraction
        ));
    }
    out
}

/// Regularized-versus-unregularized progress ablation: same base config,
/// only the progress mode differs.
pub fn progress_regularization_variants(base: &RewardConfig) -> Vec<AblationVariant> {
    let regularized_mode = match base.progress {
        ProgressMode::Unregularized => ProgressMode::FixedEpsilon { epsilon: 0.01 },
        other => other,
    };
    vec![
        AblationVariant {
            name: "unregularized".to_string(),
            reward: RewardConfig {
                progress: ProgressMode::Unregularized,
                ..*base
            },
        },
        AblationVariant {
            name: "regularized".to_string(),
            reward: RewardConfig {
                progress: regularized_mode,
                ..*base
            },
        },
    ]
}

/// Weighted-versus-unweighted steering ablation variants.
pub fn steering_weighting_variants(base: &RewardConfig) -> Vec<AblationVariant> {
    let mut unweighted = *base;
    unweighted.steering.weighting = crate::rewards::CurveWeighting::None;
    let mut weighted = *base;
    weighted.steering.weighting = crate::rewards::CurveWeighting::RationalForm;
    vec![
        AblationVariant {
            name: "unweighted".to_string(),
            reward: unweighted,
        },
        AblationVariant {
            name: "weighted".to_string(),
            reward: weighted,
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringStudyRow {
    pub train_seed: u64,
    pub smoothness_unweighted: f64,
    pub smoothness_weighted: f64,
    pub completion_unweighted: f64,
    pub completion_weighted: f64,
}

/// Direction and effect size of curvature weighting on smoothness, across
/// independent training seeds. Reported, not asserted: training outcomes
/// are stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringStudy {
    pub rows: Vec<SteeringStudyRow>,
    /// Mean of (weighted - unweighted) smoothness; negative means the
    /// weighted variant steered more smoothly.
    pub mean_smoothness_difference: f64,
    pub seeds_weighted_smoother: usize,
}

/// Runs the steering-weighting ablation once per training seed and collects
/// the per-seed smoothness comparison.
#[allow(clippy::too_many_arguments)]
pub fn steering_weighting_study(
    track: &TrackModel,
    base: &RewardConfig,
    train: &TrainConfig,
    params: &SimParams,
    bounds: ActionBounds,
    train_seeds: &[u64],
    eval_seeds: &[u64],
    spike_multiplier: f64,
) -> (Vec<AblationRun>, SteeringStudy) {
    assert!(!train_seeds.is_empty());
    let variants = steering_weighting_variants(base);
    let mut runs = Vec::with_capacity(train_seeds.len());
    let mut rows = Vec::with_capacity(train_seeds.len());
    for &seed in train_seeds {
        let train = TrainConfig {
            master_seed: seed,
            ..train.clone()
        };
        let run = run_ablation(
            track,
            &variants,
            &train,
            params,
            bounds,
            eval_seeds,
            spike_multiplier,
        );
        let unweighted = &run.summaries[0];
        let weighted = &run.summaries[1];
        rows.push(SteeringStudyRow {
            train_seed: seed,
            smoothness_unweighted: unweighted.smoothness_index,
            smoothness_weighted: weighted.smoothness_index,
            completion_unweighted: unweighted.completion_rate,
            completion_weighted: weighted.completion_rate,
        });
        runs.push(run);
    }
    let mean_smoothness_difference = rows
        .iter()
        .map(|r| r.smoothness_weighted - r.smoothness_unweighted)
        .sum::<f64>()
        / rows.len() as f64;
    let seeds_weighted_smoother = rows
        .iter()
        .filter(|r| r.smoothness_weighted < r.smoothness_unweighted)
        .count();
    (
        runs,
        SteeringStudy {
            rows,
            mean_smoothness_difference,
            seeds_weighted_smoother,
        },
    )
}

pub fn steering_study_csv(study: &SteeringStudy) -> String {
    let mut out = String::from(
        "train_seed,smoothness_unweighted,smoothness_weighted,completion_unweighted,completion_weighted\n",
    );
    for r in &study.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.train_seed,
            r.smoothness_unweighted,
            r.smoothness_weighted,
            r.completion_unweighted,
            r.completion_weighted
        ));
    }
    out.push_str(&format!(
        "# mean_smoothness_difference={} seeds_weighted_smoother={}/{}\n",
        study.mean_smoothness_difference,
        study.seeds_weighted_smoother,
        study.rows.len()
    ));
    out
}

/// Convenience wrapper for policy evaluation used by the ablation CLI
/// output; re-exported so callers need not assemble it by hand.
pub fn evaluate_variant(
    policy: &crate::policy::Policy,
    track: &TrackModel,
    reward: &RewardConfig,
    params: &SimParams,
    seeds: &[u64],
) -> crate::rollout::EvalReport {
    evaluate_policy(policy, track, reward, params, seeds)
}
