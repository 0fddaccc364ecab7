//! Dynamics oracles: the constant-steering turning circle against the
//! analytic bicycle radius, and motion bounds over random steps.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trackforge_core::dynamics::{step, Action, SimParams, VehicleState};

/// Algebraic (Kasa) circle fit: least squares on x^2 + y^2 = 2ax + 2by + c.
fn fit_circle(points: &[(f64, f64)]) -> (f64, f64, f64) {
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
    // Solve the 3x3 normal equations with Cramer's rule.
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
    let col = |j: usize| -> [[f64; 3]; 3] {
        let mut c = m;
        for i in 0..3 {
            c[i][j] = rhs[i];
        }
        c
    };
    let a = det3(&col(0)) / d;
    let b = det3(&col(1)) / d;
    let c = det3(&col(2)) / d;
    (a, b, (c + a * a + b * b).sqrt())
}

#[test]
fn constant_steering_traces_the_analytic_turning_circle() {
    let params = SimParams::default();
    for steer_deg in [10.0, 20.0, 30.0] {
        let analytic = params.wheelbase / f64::to_radians(steer_deg).tan();
        let action = Action {
            target_speed: 1.0,
            steering_angle: steer_deg,
        };
        // Start at speed so no accel transient disturbs the circle.
        let mut state = VehicleState {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed: 1.0,
        };
        let yaw_per_step = 1.0 / params.wheelbase * f64::to_radians(steer_deg).tan() * params.dt;
        let steps = (std::f64::consts::TAU / yaw_per_step).ceil() as usize + 1;
        let mut points = Vec::with_capacity(steps);
        for _ in 0..steps {
            state = step(&state, &action, &params);
            points.push((state.x, state.y));
        }
        let (_, _, radius) = fit_circle(&points);
        let rel = (radius - analytic).abs() / analytic;
        assert!(
            rel < 5e-3,
            "steer {steer_deg}: fit {radius} vs analytic {analytic} (rel {rel})"
        );
    }
}

#[test]
fn wheelbase_016_at_30_degrees_turns_at_0277_meters() {
    let params = SimParams::default();
    let radius = params.wheelbase / f64::to_radians(30.0).tan();
    assert!((radius - 0.277).abs() < 1e-3);
}

#[test]
fn random_steps_respect_displacement_and_accel_bounds() {
    let params = SimParams::default();
    let speed_max = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut state = VehicleState {
        x: 0.0,
        y: 0.0,
        heading: 0.0,
        speed: 0.0,
    };
    for _ in 0..100_000 {
        let action = Action {
            target_speed: rng.random_range(0.1..=speed_max),
            steering_angle: rng.random_range(-30.0..=30.0),
        };
        let next = step(&state, &action, &params);
        let displacement = ((next.x - state.x).powi(2) + (next.y - state.y).powi(2)).sqrt();
        assert!(displacement <= speed_max * params.dt + 1e-12);
        assert!((next.speed - state.speed).abs() <= params.max_accel * params.dt + 1e-12);
        assert!(next.speed >= 0.0);
        assert!(next.heading > -std::f64::consts::PI && next.heading <= std::f64::consts::PI);
        state = next;
    }
}

proptest! {
    #[test]
    fn displacement_never_exceeds_speed_cap(
        speed0 in 0.0..1.0f64,
        target in 0.1..1.0f64,
        steer in -30.0..30.0f64,
        heading in -3.1..3.1f64,
    ) {
        let params = SimParams::default();
        let state = VehicleState { x: 0.0, y: 0.0, heading, speed: speed0 };
        let next = step(&state, &Action { target_speed: target, steering_angle: steer }, &params);
        let d = ((next.x - state.x).powi(2) + (next.y - state.y).powi(2)).sqrt();
        prop_assert!(d <= 1.0 * params.dt + 1e-12);
        prop_assert!((next.speed - state.speed).abs() <= params.max_accel * params.dt + 1e-12);
    }
}
