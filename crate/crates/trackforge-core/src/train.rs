//! Cross-entropy method over the linear policy's weight matrix.
//!
//! Each iteration samples a population from an isotropic Gaussian around the
//! current mean, evaluates every candidate on the same per-iteration episode
//! seeds (common random numbers), refits the mean to the elite set, and
//! shrinks the noise scale. Candidate evaluations run in parallel; the
//! reduction order is fixed, so results match the single-threaded schedule.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ActionBounds, SimParams};
use crate::policy::Policy;
use crate::rewards::RewardConfig;
use crate::rollout::rollout;
use crate::track::TrackModel;

/// The sampling noise never shrinks below this.
pub const NOISE_STD_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub population_size: usize,
    /// Fraction of the population kept as elites, in (0, 1].
    pub elite_fraction: f64,
    pub noise_std_init: f64,
    /// Multiplicative noise shrink per iteration, in (0, 1].
    pub noise_decay: f64,
    pub iterations: usize,
    pub episodes_per_candidate: usize,
    pub master_seed: u64,
    /// Curvature probe distances for the policy features, meters.
    pub lookaheads: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            population_size: 32,
            elite_fraction: 0.25,
            noise_std_init: 0.5,
            noise_decay: 0.92,
            iterations: 40,
            episodes_per_candidate: 2,
            master_seed: 42,
            lookaheads: vec![0.5, 1.5, 3.0],
        }
    }
}

impl TrainConfig {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        check(
            self.population_size >= 4,
            "train.population_size must be >= 4",
        );
        check(
            self.elite_fraction > 0.0 && self.elite_fraction <= 1.0,
            "train.elite_fraction must be in (0, 1]",
        );
        check(
            self.noise_std_init > 0.0,
            "train.noise_std_init must be > 0",
        );
        check(
            self.noise_decay > 0.0 && self.noise_decay <= 1.0,
            "train.noise_decay must be in (0, 1]",
        );
        check(self.iterations >= 1, "train.iterations must be >= 1");
        check(
            self.episodes_per_candidate >= 1,
            "train.episodes_per_candidate must be >= 1",
        );
        check(
            self.lookaheads.iter().all(|l| l.is_finite() && *l >= 0.0),
            "train.lookaheads must be finite and >= 0",
        );
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean_return: f64,
    pub elite_mean_return: f64,
    /// Running maximum over all candidates seen so far.
    pub best_return: f64,
    /// Noise scale used to sample this iteration's population.
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub best: Policy,
    pub history: Vec<IterationStats>,
    pub total_episodes: usize,
}

/// Knobs for the generic optimizer, detached from rollouts so tests can
/// drive it with an injected objective.
#[derive(Debug, Clone, Copy)]
pub struct CemOptions {
    pub population_size: usize,
    pub elite_fraction: f64,
    pub noise_std_init: f64,
    pub noise_decay: f64,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CemOutcome {
    pub mean: Vec<f64>,
    pub best: Vec<f64>,
    pub best_value: f64,
    pub history: Vec<IterationStats>,
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniform draws per sample keeps the stream stable.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// NaN-safe ranking score: broken candidates sort below every finite one.
fn score(value: f64) -> f64 {
    if value.is_nan() {
        f64::NEG_INFINITY
    } else {
        value
    }
}

/// Generic cross-entropy loop maximizing `objective(weights, iteration)`.
pub fn cem_optimize(
    dim: usize,
    options: &CemOptions,
    objective: impl Fn(&[f64], usize) -> f64 + Sync,
) -> CemOutcome {
    assert!(options.population_size >= 1 && options.iterations >= 1);
    let elite_count = ((options.population_size as f64 * options.elite_fraction).floor() as usize)
        .clamp(1, options.population_size);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut mean = vec![0.0; dim];
    let mut noise_std = options.noise_std_init;
    let mut best = mean.clone();
    let mut best_value = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(options.iterations);

    for iteration in 0..options.iterations {
        // Sampling stays sequential so the stream is independent of the
        // evaluation schedule.
        let candidates: Vec<Vec<f64>> = (0..options.population_size)
            .map(|_| {
                mean.iter()
                    .map(|&m| m + noise_std * standard_normal(&mut rng))
                    .collect()
            })
            .collect();

        let values: Vec<f64> = candidates
            .par_iter()
            .map(|c| objective(c, iteration))
            .collect();

        let mut order: Vec<usize> = (0..options.population_size).collect();
        order.sort_by(|&a, &b| {
            score(values[b])
                .total_cmp(&score(values[a]))
                .then(a.cmp(&b))
        });

        let top = order[0];
        if score(values[top]) > best_value {
            best_value = score(values[top]);
            best = candidates[top].clone();
        }

        let elites = &order[..elite_count];
        for d in 0..dim {
            mean[d] = elites.iter().map(|&i| candidates[i][d]).sum::<f64>() / elite_count as f64;
        }

        let mean_return = values.iter().copied().sum::<f64>() / options.population_size as f64;
        let elite_mean_return = elites.iter().map(|&i| values[i]).sum::<f64>() / elite_count as f64;
        history.push(IterationStats {
            iteration,
            mean_return,
            elite_mean_return,
            best_return: best_value,
            noise_std,
        });

        noise_std = (noise_std * options.noise_decay).max(NOISE_STD_FLOOR);
    }

    CemOutcome {
        mean,
        best,
        best_value,
        history,
    }
}

/// Episode seed for candidate evaluation: shared by every candidate within
/// an iteration so selection compares like against like.
fn episode_seed(base: u64, iteration: usize, episode: usize) -> u64 {
    base ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (episode as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Trains a policy against the configured reward on the given track.
/// Fully reproducible from `config.master_seed`.
pub fn train_cem(
    track: &TrackModel,
    reward: &RewardConfig,
    params: &SimParams,
    bounds: ActionBounds,
    config: &TrainConfig,
) -> TrainResult {
    let dim = 2 * (4 + config.lookaheads.len());
    let mut seed_rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    let sampling_seed = seed_rng.random::<u64>();
    let episode_base = seed_rng.random::<u64>();

    let options = CemOptions {
        population_size: config.population_size,
        elite_fraction: config.elite_fraction,
        noise_std_init: config.noise_std_init,
        noise_decay: config.noise_decay,
        iterations: config.iterations,
        seed: sampling_seed,
    };
    let episodes = config.episodes_per_candidate;
    let objective = |weights: &[f64], iteration: usize| -> f64 {
        let policy = Policy::new(weights.to_vec(), config.lookaheads.clone(), bounds);
        let mut total = 0.0;
        for episode in 0..episodes {
            let seed = episode_seed(episode_base, iteration, episode);
            total += rollout(&policy, track, reward, params, seed).episode_return();
        }
        total / episodes as f64
    };

    let outcome = cem_optimize(dim, &options, objective);
    TrainResult {
        best: Policy::new(outcome.best, config.lookaheads.clone(), bounds),
        history: outcome.history,
        total_episodes: config.iterations * config.population_size * episodes,
    }
}

pub const TRAIN_STATS_CSV_HEADER: &str =
    "iteration,mean_return,elite_mean_return,best_return,noise_std";

/// Per-iteration statistics as CSV, one row per iteration.
pub fn training_stats_csv(history: &[IterationStats]) -> String {
    let mut out = String::from(TRAIN_STATS_CSV_HEADER);
    out.push('\n');
    for s in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.iteration, s.mean_return, s.elite_mean_return, s.best_return, s.noise_std
        ));
    }
    out
}
