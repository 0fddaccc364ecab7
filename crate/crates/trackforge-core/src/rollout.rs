//! Seeded episode rollouts, trace recording, and policy evaluation.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::{step, Action, SimParams, VehicleState};
use crate::policy::{featurize, Policy};
use crate::rewards::{composite_reward, RewardConfig, RewardContext};
use crate::track::{wrap_progress_delta, TrackModel};

pub const TRACE_CSV_HEADER: &str = "t,x,y,heading,speed,target_speed,steering,s,dprogress,dl,dsteer,curvature,r_velocity,r_progress,r_steer,r_total";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    OffTrack,
    MaxSteps,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Termination::Completed => "Completed",
            Termination::OffTrack => "OffTrack",
            Termination::MaxSteps => "MaxSteps",
        };
        f.write_str(name)
    }
}

impl FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Completed" => Ok(Termination::Completed),
            "OffTrack" => Ok(Termination::OffTrack),
            "MaxSteps" => Ok(Termination::MaxSteps),
            other => Err(format!("unknown termination reason '{other}'")),
        }
    }
}

/// One transition: the state and action after applying step `t`, the arc
/// coordinate of the new position, the per-step deltas, and the reward
/// breakdown evaluated on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub state: VehicleState,
    pub action: Action,
    pub s: f64,
    pub d_progress: f64,
    pub d_l: f64,
    pub d_steer: f64,
    pub curvature: f64,
    pub r_velocity: f64,
    pub r_progress: f64,
    pub r_steer: f64,
    pub r_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<TraceStep>,
    pub termination: Termination,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("failed to access trace {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl EpisodeTrace {
    pub fn episode_return(&self) -> f64 {
        self.steps.iter().map(|s| s.r_total).sum()
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Mean absolute steering change per step, in degrees.
    pub fn smoothness_index(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.d_steer.abs()).sum::<f64>() / self.steps.len() as f64
    }

    pub fn mean_speed(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.state.speed).sum::<f64>() / self.steps.len() as f64
    }

    /// Serializes to the trace CSV format; floats use the shortest
    /// round-trip representation so identical traces produce identical
    /// bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.steps.len() + 2));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                s.t,
                s.state.x,
                s.state.y,
                s.state.heading,
                s.state.speed,
                s.action.target_speed,
                s.action.steering_angle,
                s.s,
                s.d_progress,
                s.d_l,
                s.d_steer,
                s.curvature,
                s.r_velocity,
                s.r_progress,
                s.r_steer,
                s.r_total,
            ));
        }
        out.push_str(&format!("# terminated={}\n", self.termination));
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self, TraceError> {
        let mut steps = Vec::new();
        let mut termination = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed == TRACE_CSV_HEADER {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("# terminated=") {
                termination = Some(
                    rest.parse::<Termination>()
                        .map_err(|message| TraceError::Parse { line, message })?,
                );
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 16 {
                return Err(TraceError::Parse {
                    line,
                    message: format!("expected 16 fields, got {}", fields.len()),
                });
            }
            let num = |i: usize| -> Result<f64, TraceError> {
                fields[i].parse::<f64>().map_err(|_| TraceError::Parse {
                    line,
                    message: format!("field {i} is not a number: '{}'", fields[i]),
                })
            };
            steps.push(TraceStep {
                t: fields[0].parse::<usize>().map_err(|_| TraceError::Parse {
                    line,
                    message: format!("field 0 is not a step index: '{}'", fields[0]),
                })?,
                state: VehicleState {
                    x: num(1)?,
                    y: num(2)?,
                    heading: num(3)?,
                    speed: num(4)?,
                },
                action: Action {
                    target_speed: num(5)?,
                    steering_angle: num(6)?,
                },
                s: num(7)?,
                d_progress: num(8)?,
                d_l: num(9)?,
                d_steer: num(10)?,
                curvature: num(11)?,
                r_velocity: num(12)?,
                r_progress: num(13)?,
                r_steer: num(14)?,
                r_total: num(15)?,
            });
        }
        let termination = termination.ok_or_else(|| TraceError::Parse {
            line: text.lines().count().max(1),
            message: "missing '# terminated=' trailer".to_string(),
        })?;
        Ok(EpisodeTrace { steps, termination })
    }
}

/// Runs one seeded episode. The start pose sits on the centerline with the
/// track tangent heading and zero speed, at s = 0 unless `random_start`
/// draws a seeded arc offset. The episode ends on lap completion
/// (cumulative progress >= 1), on leaving the track, or at `max_steps`.
///
/// Off-track is checked before lap completion when both happen on the same
/// step. The result is bit-reproducible for identical inputs.
pub fn rollout(
    policy: &Policy,
    track: &TrackModel,
    reward: &RewardConfig,
    params: &SimParams,
    seed: u64,
) -> EpisodeTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s0 = if params.random_start {
        rng.random::<f64>() * track.total_length()
    } else {
        0.0
    };
    let start = track.point_at(s0);
    let (tx, ty) = track.tangent_at(s0);
    let mut state = VehicleState {
        x: start.x,
        y: start.y,
        heading: ty.atan2(tx),
        speed: 0.0,
    };
    let mut prev_s = track.project(state.x, state.y).s;
    let mut prev_steering = 0.0;
    let mut cumulative_progress = 0.0;
    let mut dl_sum = 0.0;

    let mut steps = Vec::new();
    let mut termination = Termination::MaxSteps;

    for t in 0..params.max_steps {
        let features = featurize(track, &state, policy.lookaheads());
        let action = policy.act(&features);
        let next = step(&state, &action, params);

        let projection = track.project(next.x, next.y);
        let d_l = ((next.x - state.x).powi(2) + (next.y - state.y).powi(2)).sqrt();
        let d_progress =
            wrap_progress_delta(track.progress_at(projection.s) - track.progress_at(prev_s));
        let d_steer = action.steering_angle - prev_steering;
        dl_sum += d_l;
        let ctx = RewardContext {
            d_progress,
            d_l,
            d_steer,
            v_actual: next.speed,
            curvature: track.curvature_at(projection.s),
            mean_dl: dl_sum / (t + 1) as f64,
            mean_curvature: track
                .mean_curvature(projection.s, reward.steering.mean_curvature_window),
            t: t as u64,
        };
        let segment = track.classify_segment(projection.s, reward.composite.curvature_threshold);
        let weights = reward.composite.weights_for(segment);
        let breakdown = composite_reward(&ctx, weights, reward)
            .expect("zero-distance step with unregularized progress reward");

        steps.push(TraceStep {
            t,
            state: next,
            action,
            s: projection.s,
            d_progress,
            d_l,
            d_steer,
            curvature: ctx.curvature,
            r_velocity: breakdown.r_velocity,
            r_progress: breakdown.r_progress,
            r_steer: breakdown.r_steer,
            r_total: breakdown.r_total,
        });

        cumulative_progress += d_progress;
        prev_s = projection.s;
        prev_steering = action.steering_angle;
        state = next;

        if projection.lateral_offset.abs() > track.half_width() + params.off_track_tolerance {
            termination = Termination::OffTrack;
            break;
        }
        if cumulative_progress >= 1.0 {
            termination = Termination::Completed;
            break;
        }
    }

    EpisodeTrace { steps, termination }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub seed: u64,
    pub episode_return: f64,
    pub completed: bool,
    pub steps: usize,
    pub smoothness_index: f64,
    pub mean_speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mean_return: f64,
    pub episodes: Vec<EpisodeMetrics>,
}

/// Evaluates a policy over the given episode seeds and reports the mean
/// return plus per-episode metrics.
pub fn evaluate_policy(
    policy: &Policy,
    track: &TrackModel,
    reward: &RewardConfig,
    params: &SimParams,
    seeds: &[u64],
) -> EvalReport {
    assert!(!seeds.is_empty(), "evaluation needs at least one seed");
    let episodes: Vec<EpisodeMetrics> = seeds
        .iter()
        .map(|&seed| {
            let trace = rollout(policy, track, reward, params, seed);
            EpisodeMetrics {
                seed,
                episode_return: trace.episode_return(),
                completed: trace.completed(),
                steps: trace.steps.len(),
                smoothness_index: trace.smoothness_index(),
                mean_speed: trace.mean_speed(),
            }
        })
        .collect();
    let mean_return =
        episodes.iter().map(|e| e.episode_return).sum::<f64>() / episodes.len() as f64;
    EvalReport {
        mean_return,
        episodes,
    }
}
