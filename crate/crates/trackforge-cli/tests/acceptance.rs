//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values. Run with
//! `cargo test -p trackforge-cli --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trackforge_cli::{cmd_experiment, cmd_train, ExperimentName};
use trackforge_core::config::RunConfig;
use trackforge_core::dynamics::{step, Action, ActionBounds, SimParams, VehicleState};
use trackforge_core::experiments::{
    self, progress_regularization_variants, run_ablation, steering_weighting_study,
    DEFAULT_SPIKE_MULTIPLIER, SYNTHETIC_D_PROGRESS,
};
use trackforge_core::rewards::{
    curve_weight_min, curve_weight_rational, epsilon_decayed, progress_reward_raw,
    progress_reward_regularized, steering_penalty, steering_penalty_weighted, velocity_reward,
    RewardConfig, RewardContext, VelocityRewardParams, WeightTriple,
};
use trackforge_core::rollout::evaluate_policy;
use trackforge_core::track::{synthetic, TrackModel};
use trackforge_core::train::{cem_optimize, train_cem, CemOptions, TrainConfig};

fn bundled_track(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../tracks")
        .join(name)
}

/// Independent high-precision exponential: Cody-Waite range reduction plus
/// a Taylor series, sharing no code path with the library's `exp` calls.
fn oracle_exp(x: f64) -> f64 {
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    let k = (x / std::f64::consts::LN_2).round();
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..26 {
        term *= r / n as f64;
        sum += term;
    }
    sum * 2.0f64.powi(k as i32)
}

// Criterion 1: velocity-reward exactness against the independent
// exponential, exact peak at zero error, and the decay ordering in alpha.
#[test]
fn criterion_1_velocity_reward_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..10_000 {
        let alpha = rng.random_range(f64::MIN_POSITIVE..=10.0);
        let error: f64 = rng.random_range(0.0..=1.0);
        let params = VelocityRewardParams {
            alpha_v: alpha,
            v_target: 1.0,
        };
        let got = velocity_reward(1.0 - error, &params);
        let want = oracle_exp(-alpha * error);
        let rel = (got - want).abs() / want;
        assert!(rel <= 1e-12, "alpha {alpha}, error {error}: rel {rel}");
    }
    let params = VelocityRewardParams {
        alpha_v: 4.2,
        v_target: 0.8,
    };
    assert_eq!(velocity_reward(0.8, &params), 1.0);
    let at = |alpha: f64| {
        velocity_reward(
            0.5,
            &VelocityRewardParams {
                alpha_v: alpha,
                v_target: 1.0,
            },
        )
    };
    assert!(at(1.0) > at(3.0) && at(3.0) > at(5.0));
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1: velocity reward matches the independent exponential to 1e-12 over 10^4 pairs, peak exact, alpha ordering holds ({elapsed:?})"
    );
}

// Criterion 2: the regularization bound and failure-mode contrast on the
// documented sinusoidal step-distance trace, plus the small-epsilon
// convergence check.
#[test]
fn criterion_2_regularization_bound_and_contrast() {
    let start = Instant::now();
    let trace = experiments::sinusoidal_dl_trace(500);
    let epsilon = 0.01;
    let bound = SYNTHETIC_D_PROGRESS / epsilon;
    let mut dip_seen = false;
    for &(d_progress, d_l) in &trace {
        let raw = progress_reward_raw(d_progress, d_l).unwrap();
        let reg = progress_reward_regularized(d_progress, d_l, epsilon).unwrap();
        assert!(reg.abs() <= bound);
        if d_l <= 1e-6 {
            dip_seen = true;
            assert!(raw.abs() >= 1e3, "raw at dip {raw}");
        }
        if d_l >= 0.01 {
            let tiny = 1e-6;
            let reg_tiny = progress_reward_regularized(d_progress, d_l, tiny).unwrap();
            assert!((reg_tiny - raw).abs() <= d_progress * tiny / (d_l * d_l));
        }
    }
    assert!(dip_seen, "synthetic trace must dip to 1e-6");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS criterion 2: raw reward reaches |R| >= 1e3 at the dips, regularized stays within {bound}, convergence bound holds ({elapsed:?})"
    );
}

// Criterion 3: decaying epsilon is strictly decreasing, geometric to 1e-12
// relative, and halves at ln2/beta within 0.1%.
#[test]
fn criterion_3_decaying_epsilon() {
    let (epsilon0, beta) = (0.01, 0.001);
    let mut prev = f64::INFINITY;
    for t in 0..=10_000u64 {
        let e_t = epsilon_decayed(epsilon0, beta, t);
        assert!(e_t < prev, "not strictly decreasing at t={t}");
        prev = e_t;
        let e1 = epsilon_decayed(epsilon0, beta, t + 1);
        let e2 = epsilon_decayed(epsilon0, beta, t + 2);
        let rel = (e_t * e2 - e1 * e1).abs() / (e1 * e1);
        assert!(rel <= 1e-12, "geometric violation {rel} at t={t}");
    }
    let half_step = (std::f64::consts::LN_2 / beta).round() as u64;
    let at_half = epsilon_decayed(epsilon0, beta, half_step);
    let rel = (at_half - epsilon0 / 2.0).abs() / (epsilon0 / 2.0);
    assert!(rel < 1e-3, "half-life rel error {rel}");
    println!(
        "PASS criterion 3: epsilon_t strictly decreasing, geometric to 1e-12, half-life at t={half_step} within 0.1% (rel {rel:.2e})"
    );
}

// Criterion 4: steering penalty linearity, symmetry, the weighted bound
// with equality exactly at zero curvature, both weight forms' shapes, and
// the smooth-versus-abrupt generator separation over 20 seeds.
#[test]
fn criterion_4_steering_penalty_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..2_000 {
        let k: f64 = rng.random_range(1e-4..1.0);
        let scale: f64 = rng.random_range(0.1..50.0);
        let d: f64 = rng.random_range(-45.0..45.0);
        let a = steering_penalty(d, k * scale);
        let b = scale * steering_penalty(d, k);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
        assert_eq!(steering_penalty(d, k), steering_penalty(-d, k));
    }
    let curvature = experiments::alternating_curvature_profile(400, 25);
    let steering = experiments::abrupt_steering_profile(400, 77);
    for row in experiments::compare_weighted_steering(0.01, 0.1, &curvature, &steering) {
        assert!(row.r_weighted.abs() <= row.r_unweighted.abs());
        if row.curvature == 0.0 {
            assert_eq!(row.r_weighted, row.r_unweighted);
        } else {
            assert!(row.r_weighted.abs() < row.r_unweighted.abs());
        }
    }
    for gamma in [0.02, 0.1, 0.7, 3.0] {
        assert_eq!(curve_weight_min(1.0 / (2.0 * gamma), gamma), 0.5);
        assert_eq!(curve_weight_rational(gamma, gamma), 0.5);
        let mut prev_min = -1.0;
        let mut prev_rat = -1.0;
        for i in 0..1_000 {
            let kappa = i as f64 * 0.01;
            let w_min = curve_weight_min(kappa, gamma);
            let w_rat = curve_weight_rational(kappa, gamma);
            assert!(w_min >= prev_min && w_min <= 1.0);
            assert!(w_rat >= prev_rat && w_rat < 1.0);
            prev_min = w_min;
            prev_rat = w_rat;
        }
    }
    for seed in 0..20u64 {
        let table = experiments::compare_steering_penalties(0.01, 500, seed);
        assert!(
            table.mean_abs_abrupt > table.mean_abs_smooth,
            "seed {seed}: {} vs {}",
            table.mean_abs_abrupt,
            table.mean_abs_smooth
        );
    }
    println!(
        "PASS criterion 4: linearity in k to 1e-12, sign symmetry, weighted <= unweighted with equality only at kappa=0, both weight forms monotone with exact 0.5 symmetry points, abrupt > smooth for all 20 seeds"
    );
}

// Criterion 5: composite linearity against the weighted sum and bitwise
// agreement of the components with the standalone operations.
#[test]
fn criterion_5_composite_linearity() {
    let config = RewardConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..5_000 {
        let ctx = RewardContext {
            d_progress: rng.random_range(-0.02..0.02),
            d_l: rng.random_range(0.0..0.1),
            d_steer: rng.random_range(-60.0..60.0),
            v_actual: rng.random_range(0.0..1.2),
            curvature: rng.random_range(0.0..2.0),
            mean_dl: rng.random_range(0.001..0.1),
            mean_curvature: rng.random_range(0.0..1.0),
            t: rng.random_range(0..10_000),
        };
        let weights = WeightTriple {
            w_progress: rng.random_range(0.0..3.0),
            w_steer: rng.random_range(0.0..3.0),
            w_velocity: rng.random_range(0.0..3.0),
        };
        let out = trackforge_core::rewards::composite_reward(&ctx, weights, &config).unwrap();

        let r_progress = progress_reward_regularized(ctx.d_progress, ctx.d_l, 0.01).unwrap();
        let gamma = trackforge_core::rewards::gamma_adaptive(ctx.mean_curvature, 2.0);
        let w_curve = curve_weight_rational(ctx.curvature, gamma);
        let r_steer = steering_penalty_weighted(ctx.d_steer, 0.01, w_curve, 1.0);
        let r_velocity = velocity_reward(ctx.v_actual, &config.velocity);
        assert_eq!(out.r_progress.to_bits(), r_progress.to_bits());
        assert_eq!(out.r_steer.to_bits(), r_steer.to_bits());
        assert_eq!(out.r_velocity.to_bits(), r_velocity.to_bits());

        let weighted_sum = weights.w_velocity * r_velocity
            + weights.w_steer * r_steer
            + weights.w_progress * r_progress;
        let tol = 1e-12 * weighted_sum.abs().max(1.0);
        assert!((out.r_total - weighted_sum).abs() <= tol);
    }
    println!(
        "PASS criterion 5: composite equals the weighted sum to 1e-12 with components bit-identical to the standalone operations (5000 random cases)"
    );
}

// Criterion 6: Menger curvature within 0.1% of 1/R on one-degree circles
// and exactly zero on collinear stencils.
#[test]
fn criterion_6_curvature_estimator() {
    let start = Instant::now();
    for radius in [2.0, 5.0, 10.0] {
        let track = TrackModel::from_waypoints(synthetic::circle(radius, 360), 0.3).unwrap();
        for &k in track.curvature_samples() {
            let rel = (k - 1.0 / radius).abs() * radius;
            assert!(rel < 1e-3, "radius {radius}: rel {rel}");
        }
        for i in 0..360 {
            let s = track.total_length() * i as f64 / 360.0;
            let rel = (track.curvature_at(s) - 1.0 / radius).abs() * radius;
            assert!(rel < 1e-3);
        }
    }
    // Out-and-back straight loop: all interior stencils exactly collinear.
    let mut pts: Vec<_> = (0..=10)
        .map(|i| trackforge_core::track::Waypoint::new(i as f64, 0.0))
        .collect();
    pts.extend(
        (1..10)
            .rev()
            .map(|i| trackforge_core::track::Waypoint::new(i as f64, 0.5)),
    );
    let straight = TrackModel::from_waypoints(pts, 0.1).unwrap();
    for i in 2..9 {
        assert_eq!(straight.curvature_samples()[i], 0.0);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS criterion 6: curvature within 0.1% of 1/R for R in {{2, 5, 10}} at 1-degree spacing; collinear stencils exactly zero ({elapsed:?})"
    );
}

/// Kasa algebraic circle fit (least squares on x^2+y^2 = 2ax+2by+c).
fn fit_circle_radius(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sxz, mut syz, mut sz) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let z = x * x + y * y;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        sxz += x * z;
        syz += y * z;
        sz += z;
    }
    let m = [
        [2.0 * sxx, 2.0 * sxy, sx],
        [2.0 * sxy, 2.0 * syy, sy],
        [2.0 * sx, 2.0 * sy, n],
    ];
    let rhs = [sxz, syz, sz];
    let det3 = |m: &[[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    let col = |j: usize| {
        let mut c = m;
        for i in 0..3 {
            c[i][j] = rhs[i];
        }
        c
    };
    let a = det3(&col(0)) / d;
    let b = det3(&col(1)) / d;
    let c = det3(&col(2)) / d;
    (c + a * a + b * b).sqrt()
}

// Criterion 7: constant-steering trajectories land on the analytic bicycle
// turning circle, and per-step motion bounds hold over 1e5 random steps.
#[test]
fn criterion_7_dynamics_oracle() {
    let params = SimParams::default();
    for steer in [10.0, 20.0, 30.0] {
        let analytic = params.wheelbase / f64::to_radians(steer).tan();
        let action = Action {
            target_speed: 1.0,
            steering_angle: steer,
        };
        let mut state = VehicleState {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed: 1.0,
        };
        let yaw_per_step = f64::to_radians(steer).tan() / params.wheelbase * params.dt;
        let steps = (std::f64::consts::TAU / yaw_per_step).ceil() as usize + 1;
        let mut points = Vec::with_capacity(steps);
        for _ in 0..steps {
            state = step(&state, &action, &params);
            points.push((state.x, state.y));
        }
        let fit = fit_circle_radius(&points);
        let rel = (fit - analytic).abs() / analytic;
        assert!(
            rel < 5e-3,
            "steer {steer}: fit {fit} vs {analytic} (rel {rel})"
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut state = VehicleState {
        x: 0.0,
        y: 0.0,
        heading: 0.4,
        speed: 0.0,
    };
    for _ in 0..100_000 {
        let action = Action {
            target_speed: rng.random_range(0.1..=1.0),
            steering_angle: rng.random_range(-30.0..=30.0),
        };
        let next = step(&state, &action, &params);
        let d = ((next.x - state.x).powi(2) + (next.y - state.y).powi(2)).sqrt();
        assert!(d <= 1.0 * params.dt + 1e-12);
        assert!((next.speed - state.speed).abs() <= params.max_accel * params.dt + 1e-12);
        state = next;
    }
    println!(
        "PASS criterion 7: turning radius within 0.5% of wheelbase/tan(steer) for 10/20/30 degrees; displacement and accel bounds hold over 1e5 random steps"
    );
}

fn tiny_config(out_dir: &Path) -> RunConfig {
    RunConfig {
        track: bundled_track("oval.csv"),
        out_dir: out_dir.to_path_buf(),
        master_seed: 7,
        sim: SimParams {
            max_steps: 250,
            ..SimParams::default()
        },
        train: TrainConfig {
            population_size: 4,
            iterations: 2,
            episodes_per_candidate: 1,
            master_seed: 7,
            ..TrainConfig::default()
        },
        ..RunConfig::default()
    }
}

/// Every file under a run directory, keyed by relative path.
fn dir_contents(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, base: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, base, out);
            } else {
                let rel = path
                    .strip_prefix(base)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

// Criterion 8: command-level byte determinism for train and every
// experiment, and CEM convergence on the injected quadratic objective.
#[test]
fn criterion_8_determinism_and_cem_convergence() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(&dir.path().join("runs"));

    let first = cmd_train(&config).unwrap();
    let second = cmd_train(&config).unwrap();
    assert_eq!(
        dir_contents(first.parent().unwrap()),
        dir_contents(second.parent().unwrap()),
        "cmd_train outputs differ between identical runs"
    );

    for name in [
        ExperimentName::VelocitySweep,
        ExperimentName::VelocityScatter,
        ExperimentName::ProgressCompare,
        ExperimentName::SteeringCompare,
        ExperimentName::SteeringWeighted,
        ExperimentName::Ablation,
    ] {
        let a = cmd_experiment(name, &config).unwrap();
        let b = cmd_experiment(name, &config).unwrap();
        assert_eq!(
            dir_contents(&a),
            dir_contents(&b),
            "experiment outputs differ between identical runs"
        );
    }

    let target = [0.4, -1.1, 0.75, 0.0, 2.0, -0.3];
    let objective = |w: &[f64], _: usize| -> f64 {
        -w.iter()
            .zip(&target)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
    };
    let options = CemOptions {
        population_size: 64,
        elite_fraction: 0.25,
        noise_std_init: 0.5,
        noise_decay: 0.92,
        iterations: 50,
        seed: 808,
    };
    let outcome = cem_optimize(target.len(), &options, objective);
    let worst = outcome
        .mean
        .iter()
        .zip(&target)
        .map(|(m, t)| (m - t).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-2, "CEM mean off by {worst}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 8: train and all six experiments byte-identical across reruns; CEM quadratic converged within {worst:.2e} ({elapsed:?})"
    );
}

// Criterion 9: training smoke test on the bundled oval at the pinned
// budget, evaluated on ten held-out random-start seeds.
#[test]
fn criterion_9_training_smoke() {
    let start = Instant::now();
    let track = TrackModel::load(bundled_track("oval.csv"), 0.6).unwrap();
    let params = SimParams {
        random_start: true,
        ..SimParams::default()
    };
    let reward = RewardConfig::default();
    let train = TrainConfig {
        population_size: 32,
        iterations: 40,
        episodes_per_candidate: 2,
        master_seed: 42,
        ..TrainConfig::default()
    };
    let result = train_cem(&track, &reward, &params, ActionBounds::default(), &train);
    let eval_seeds: Vec<u64> = (0..10).map(|i| 9000 + i).collect();
    let report = evaluate_policy(&result.best, &track, &reward, &params, &eval_seeds);
    let completions = report.episodes.iter().filter(|e| e.completed).count();
    let elapsed = start.elapsed();
    assert!(
        completions >= 7,
        "only {completions}/10 held-out seeds completed"
    );
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "PASS criterion 9: smoke training completed laps on {completions}/10 held-out seeds ({elapsed:?})"
    );
}

// Criterion 10: the regularization ablation separates spike fractions on
// the slow-corner track, and the steering-weighting study reports direction
// and effect size across five training seeds.
#[test]
fn criterion_10_ablation_machinery() {
    let start = Instant::now();
    let track = TrackModel::load(bundled_track("slow_corner.csv"), 0.6).unwrap();
    let params = SimParams {
        max_steps: 4000,
        random_start: true,
        ..SimParams::default()
    };
    // Progress-dominant base: makes the progress term drive selection so
    // the raw and regularized variants train to distinct policies.
    let mut base = RewardConfig::default();
    base.composite.straight.w_progress = 5.0;
    base.composite.curved.w_progress = 5.0;
    let train = TrainConfig {
        master_seed: 3,
        iterations: 60,
        ..TrainConfig::default()
    };
    let eval_seeds: Vec<u64> = (0..20).map(|i| 9000 + i).collect();
    let variants = progress_regularization_variants(&base);
    let run = run_ablation(
        &track,
        &variants,
        &train,
        &params,
        ActionBounds::default(),
        &eval_seeds,
        DEFAULT_SPIKE_MULTIPLIER,
    );
    let unregularized = &run.summaries[0];
    let regularized = &run.summaries[1];
    assert_eq!(unregularized.name, "unregularized");
    assert!(
        unregularized.spike_fraction > regularized.spike_fraction,
        "spike fractions: unregularized {} vs regularized {}",
        unregularized.spike_fraction,
        regularized.spike_fraction
    );

    // Steering weighting study: reported, not asserted.
    let study_train = TrainConfig {
        population_size: 16,
        iterations: 20,
        ..TrainConfig::default()
    };
    let train_seeds: Vec<u64> = (1..=5).collect();
    let (runs, study) = steering_weighting_study(
        &track,
        &RewardConfig::default(),
        &study_train,
        &params,
        ActionBounds::default(),
        &train_seeds,
        &eval_seeds[..10],
        DEFAULT_SPIKE_MULTIPLIER,
    );
    assert_eq!(study.rows.len(), 5);
    assert_eq!(runs.len(), 5);
    for ablation in &runs {
        assert_eq!(ablation.summaries.len(), 2);
        for summary in &ablation.summaries {
            assert!(summary.completion_rate.is_finite());
            assert!(summary.smoothness_index.is_finite());
            assert!(summary.reward_variance.is_finite());
        }
    }
    println!(
        "PASS criterion 10: unregularized spike fraction {:.5} > regularized {:.5}; steering study reported direction (weighted smoother on {}/5 seeds, effect {:+.3} deg/step) ({:?})",
        unregularized.spike_fraction,
        regularized.spike_fraction,
        study.seeds_weighted_smoother,
        study.mean_smoothness_difference,
        start.elapsed()
    );
}
