//! Command-line workflows: config init, simulate, train, and the named
//! experiments. The binary in `main.rs` is a thin wrapper so every command
//! is callable (and testable) as a library function.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use trackforge_core::config::RunConfig;
use trackforge_core::experiments::{
    self, ablation_summary_csv, progress_regularization_variants, steering_study_csv,
    steering_weighting_study, velocity_scatter_csv, velocity_sweep_csv, DEFAULT_SPIKE_MULTIPLIER,
};
use trackforge_core::output::{Manifest, RunDir};
use trackforge_core::policy::PolicyCheckpoint;
use trackforge_core::rewards::{GammaMode, ProgressMode};
use trackforge_core::rollout::rollout;
use trackforge_core::track::TrackModel;
use trackforge_core::train::{train_cem, training_stats_csv, TrainConfig};

/// Environment variable capping worker parallelism (0 or unset = auto).
pub const THREADS_ENV: &str = "TRACKFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "trackforge",
    version,
    about = "Closed-track driving simulator with a shaped-reward laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct CommonOpts {
    /// Run configuration file; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's track file.
    #[arg(long)]
    pub track: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Configuration management.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
    /// Roll out a saved policy once and write the episode trace.
    Simulate {
        /// Policy checkpoint JSON.
        #[arg(long)]
        policy: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Train a policy with the cross-entropy method.
    Train {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Regenerate one of the named comparison tables.
    Experiment {
        /// Which experiment to run.
        name: ExperimentName,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConfigAction {
    /// Write the full default configuration plus a field-by-field docs file.
    Init {
        /// Destination path.
        #[arg(long, default_value = "config.json")]
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    VelocitySweep,
    VelocityScatter,
    ProgressCompare,
    SteeringCompare,
    SteeringWeighted,
    Ablation,
}

impl ExperimentName {
    fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::VelocitySweep => "velocity-sweep",
            ExperimentName::VelocityScatter => "velocity-scatter",
            ExperimentName::ProgressCompare => "progress-compare",
            ExperimentName::SteeringCompare => "steering-compare",
            ExperimentName::SteeringWeighted => "steering-weighted",
            ExperimentName::Ablation => "ablation",
        }
    }
}

/// Applies the `TRACKFORGE_THREADS` cap to the global worker pool. Safe to
/// call more than once; later calls are ignored.
pub fn init_threads() {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        if let Ok(n) = value.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

/// Loads the config (or defaults), applies CLI overrides, and validates.
pub fn effective_config(common: &CommonOpts) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(track) = &common.track {
        config.track = track.clone();
    }
    config.validate()?;
    Ok(config)
}

fn load_track(config: &RunConfig) -> Result<TrackModel> {
    TrackModel::load(&config.track, config.half_width)
        .with_context(|| format!("loading track {}", config.track.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Config { action } => match action {
            ConfigAction::Init { path } => cmd_config_init(&path),
        },
        Command::Simulate { policy, common } => {
            let config = effective_config(&common)?;
            cmd_simulate(&config, &policy).map(|_| ())
        }
        Command::Train { common } => {
            let config = effective_config(&common)?;
            cmd_train(&config).map(|_| ())
        }
        Command::Experiment { name, common } => {
            let config = effective_config(&common)?;
            cmd_experiment(name, &config).map(|_| ())
        }
    }
}

/// Writes the default config and a sibling `<stem>.docs.md` documenting
/// every field (the JSON itself stays comment-free so it round-trips).
pub fn cmd_config_init(path: &Path) -> Result<()> {
    let config = RunConfig::default();
    config
        .save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    let docs_path = path.with_extension("docs.md");
    std::fs::write(&docs_path, config_docs())
        .with_context(|| format!("writing {}", docs_path.display()))?;
    println!("wrote {} and {}", path.display(), docs_path.display());
    Ok(())
}

/// Single seeded rollout of a checkpointed policy; writes the trace CSV and
/// prints the headline metrics.
pub fn cmd_simulate(config: &RunConfig, policy_path: &Path) -> Result<PathBuf> {
    let track = load_track(config)?;
    let checkpoint = PolicyCheckpoint::load(policy_path)?;
    let policy = checkpoint.into_policy()?;
    let trace = rollout(
        &policy,
        &track,
        &config.reward,
        &config.sim,
        config.master_seed,
    );

    let mut run = RunDir::create(&config.out_dir, config.master_seed)?;
    run.write("config.json", &config.to_json_pretty())?;
    let trace_path = run.write("trace.csv", &trace.to_csv())?;
    let lap_time = if trace.completed() {
        format!("{:.2} s", trace.steps.len() as f64 * config.sim.dt)
    } else {
        "n/a".to_string()
    };
    println!("terminated: {}", trace.termination);
    println!("lap time: {lap_time}");
    println!("mean speed: {:.3} m/s", trace.mean_speed());
    println!("smoothness index: {:.3} deg/step", trace.smoothness_index());
    run.finish(Manifest::new(
        "simulate",
        config.master_seed,
        config.clone(),
    ))?;
    Ok(trace_path)
}

/// Trains with the cross-entropy method and writes the checkpoint,
/// per-iteration stats, and manifest.
pub fn cmd_train(config: &RunConfig) -> Result<PathBuf> {
    let track = load_track(config)?;
    // Single provenance: the run's master seed drives training regardless
    // of what the config's train block carried.
    let train_config = TrainConfig {
        master_seed: config.master_seed,
        ..config.train.clone()
    };
    let result = train_cem(
        &track,
        &config.reward,
        &config.sim,
        config.bounds,
        &train_config,
    );

    let mut run = RunDir::create(&config.out_dir, config.master_seed)?;
    run.write("config.json", &config.to_json_pretty())?;
    run.write("training_stats.csv", &training_stats_csv(&result.history))?;
    let checkpoint = PolicyCheckpoint::from_policy(&result.best, config.master_seed);
    let mut checkpoint_json =
        serde_json::to_string_pretty(&checkpoint).expect("checkpoint serializes");
    checkpoint_json.push('\n');
    let checkpoint_path = run.write("checkpoint.json", &checkpoint_json)?;
    let best = result
        .history
        .last()
        .map(|h| h.best_return)
        .unwrap_or(f64::NAN);
    println!("episodes: {}", result.total_episodes);
    println!("best return: {best:.4}");
    println!("checkpoint: {}", checkpoint_path.display());
    run.finish(Manifest::new("train", config.master_seed, config.clone()))?;
    Ok(checkpoint_path)
}

/// Dispatches one named experiment and writes its tables plus a manifest.
pub fn cmd_experiment(name: ExperimentName, config: &RunConfig) -> Result<PathBuf> {
    let seed = config.master_seed;
    let mut run = RunDir::create(&config.out_dir, seed)?;
    run.write("config.json", &config.to_json_pretty())?;

    match name {
        ExperimentName::VelocitySweep => {
            let alphas = [1.0, 3.0, 5.0];
            let errors: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
            let rows = experiments::sweep_velocity_reward(&alphas, &errors);
            run.write("velocity_sweep.csv", &velocity_sweep_csv(&rows))?;
        }
        ExperimentName::VelocityScatter => {
            let rows =
                experiments::scatter_velocity_reward(config.reward.velocity.alpha_v, 1000, seed);
            run.write("velocity_scatter.csv", &velocity_scatter_csv(&rows))?;
        }
        ExperimentName::ProgressCompare => {
            let epsilon = match config.reward.progress {
                ProgressMode::FixedEpsilon { epsilon } => epsilon,
                _ => 0.01,
            };
            let trace = experiments::sinusoidal_dl_trace(200);
            let rows = experiments::compare_progress_rewards(&trace, epsilon);
            run.write(
                "progress_compare.csv",
                &experiments::progress_compare_csv(&rows),
            )?;
        }
        ExperimentName::SteeringCompare => {
            let table =
                experiments::compare_steering_penalties(config.reward.steering.k, 500, seed);
            run.write(
                "steering_compare.csv",
                &experiments::steering_compare_csv(&table),
            )?;
        }
        ExperimentName::SteeringWeighted => {
            let gamma = match config.reward.steering.gamma {
                GammaMode::Fixed { gamma } => gamma,
                GammaMode::Adaptive { .. } => 0.1,
            };
            let curvature = experiments::alternating_curvature_profile(500, 25);
            let steering = experiments::abrupt_steering_profile(500, seed);
            let rows = experiments::compare_weighted_steering(
                config.reward.steering.k,
                gamma,
                &curvature,
                &steering,
            );
            run.write(
                "steering_weighted.csv",
                &experiments::weighted_steering_csv(&rows),
            )?;
        }
        ExperimentName::Ablation => {
            let track = load_track(config)?;
            let train = TrainConfig {
                master_seed: seed,
                ..config.train.clone()
            };
            let eval_seeds: Vec<u64> = (0..10).map(|i| seed + 1000 + i).collect();

            // Progress regularization pair, one training seed.
            let variants = progress_regularization_variants(&config.reward);
            let progress_run = experiments::run_ablation(
                &track,
                &variants,
                &train,
                &config.sim,
                config.bounds,
                &eval_seeds,
                DEFAULT_SPIKE_MULTIPLIER,
            );
            run.write(
                "ablation_progress_summary.csv",
                &ablation_summary_csv(&progress_run.summaries),
            )?;
            for (variant, eval_seed, trace) in &progress_run.traces {
                run.write(
                    &format!("traces/progress_{variant}_{eval_seed}.csv"),
                    &trace.to_csv(),
                )?;
            }

            // Steering weighting pair across five training seeds.
            let train_seeds: Vec<u64> = (1..=5).map(|i| seed + i).collect();
            let (steering_runs, study) = steering_weighting_study(
                &track,
                &config.reward,
                &train,
                &config.sim,
                config.bounds,
                &train_seeds,
                &eval_seeds,
                DEFAULT_SPIKE_MULTIPLIER,
            );
            for (train_seed, ablation) in train_seeds.iter().zip(&steering_runs) {
                run.write(
                    &format!("ablation_steering_summary_seed{train_seed}.csv"),
                    &ablation_summary_csv(&ablation.summaries),
                )?;
                for (variant, eval_seed, trace) in &ablation.traces {
                    run.write(
                        &format!("traces/steering_seed{train_seed}_{variant}_{eval_seed}.csv"),
                        &trace.to_csv(),
                    )?;
                }
            }
            run.write("ablation_steering_report.csv", &steering_study_csv(&study))?;
            println!(
                "steering weighting: weighted smoother on {}/{} seeds (mean diff {:+.4} deg/step)",
                study.seeds_weighted_smoother,
                study.rows.len(),
                study.mean_smoothness_difference
            );
        }
    }

    let root = run.root().to_path_buf();
    run.finish(Manifest::new(
        format!("experiment {}", name.as_str()),
        seed,
        config.clone(),
    ))?;
    println!("experiment {} -> {}", name.as_str(), root.display());
    Ok(root)
}

fn config_docs() -> String {
    let text = r#"# Run configuration fields

The JSON config file is comment-free so it round-trips byte-for-byte; this
file documents every field.

| Field | Meaning | Default |
|-------|---------|---------|
| `track` | Track CSV file (`x,y` header, one waypoint per row, meters, closed loop implied) | `tracks/oval.csv` |
| `half_width` | Track half width in meters; the corridor is the centerline +- this | `0.6` |
| `sim.dt` | Step length, seconds | `0.0667` (15 Hz) |
| `sim.wheelbase` | Bicycle-model wheelbase, meters | `0.16` |
| `sim.max_accel` | Speed-tracking acceleration limit, m/s^2 | `2.0` |
| `sim.max_steps` | Episode step cap | `3000` |
| `sim.off_track_tolerance` | Extra lateral margin before termination, meters | `0.05` |
| `sim.random_start` | Seeded random start arc offset instead of s = 0 | `false` |
| `bounds.speed_min` | Lowest speed setpoint, m/s | `0.1` |
| `bounds.speed_max` | Highest speed setpoint, m/s | `1.0` |
| `bounds.steering_limit_deg` | Steering range, degrees | `30` |
| `reward.velocity.alpha_v` | Exponential decay steepness of the velocity reward | `3.0` |
| `reward.velocity.v_target` | Target speed, m/s | `1.0` |
| `reward.progress.mode` | `unregularized`, `fixed_epsilon`, `adaptive_epsilon`, or `decaying_epsilon` | `fixed_epsilon` |
| `reward.progress.epsilon` | Denominator regularizer, meters (fixed mode) | `0.01` |
| `reward.progress.alpha_eps` | Epsilon as a multiple of the mean step distance (adaptive mode) | - |
| `reward.progress.epsilon0`, `.beta` | Initial epsilon and decay rate per step (decaying mode) | - |
| `reward.steering.k` | Steering penalty per degree of change | `0.01` |
| `reward.steering.weighting` | `none`, `min_form`, or `rational_form` curvature relief | `rational_form` |
| `reward.steering.gamma.mode` | `fixed` (with `gamma`) or `adaptive` (with `alpha_gamma` > 1) | `adaptive`, `alpha_gamma = 2` |
| `reward.steering.v_scale` | Speed-dependent scaling factor; 1 in the low-speed regime | `1.0` |
| `reward.steering.mean_curvature_window` | Arc window for the adaptive gamma's mean curvature, meters | `2.0` |
| `reward.composite.straight` | `(w_progress, w_steer, w_velocity)` on straights | `(1.0, 0.1, 1.0)` |
| `reward.composite.curved` | Weight triple on curved segments | `(1.0, 0.5, 0.3)` |
| `reward.composite.curvature_threshold` | Straight/curved boundary, 1/m; the boundary itself is curved | `0.05` |
| `train.population_size` | Candidates per iteration | `32` |
| `train.elite_fraction` | Fraction refit as elites, (0, 1] | `0.25` |
| `train.noise_std_init` | Initial sampling noise | `0.5` |
| `train.noise_decay` | Noise shrink per iteration, (0, 1] | `0.92` |
| `train.iterations` | Optimization iterations | `40` |
| `train.episodes_per_candidate` | Rollouts averaged per candidate | `2` |
| `train.master_seed` | Training seed; overridden by the run's `master_seed` | `42` |
| `train.lookaheads` | Curvature probe arc distances for the policy features, meters | `[0.5, 1.5, 3.0]` |
| `out_dir` | Where run directories are created | `runs` |
| `master_seed` | Single source of all randomness; `--seed` overrides it | `42` |
"#;
    text.to_string()
}
