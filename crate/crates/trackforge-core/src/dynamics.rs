//! Kinematic bicycle model with accel-limited speed tracking.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::track::TrackModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Radians, normalized to `(-pi, pi]`.
    pub heading: f64,
    /// Meters per second, never negative.
    pub speed: f64,
}

/// Continuous command: a speed setpoint and a steering angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub target_speed: f64,
    pub steering_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionBounds {
    pub speed_min: f64,
    pub speed_max: f64,
    pub steering_limit_deg: f64,
}

impl Default for ActionBounds {
    fn default() -> Self {
        ActionBounds {
            speed_min: 0.1,
            speed_max: 1.0,
            steering_limit_deg: 30.0,
        }
    }
}

impl ActionBounds {
    pub fn contains(&self, action: &Action) -> bool {
        action.target_speed >= self.speed_min
            && action.target_speed <= self.speed_max
            && action.steering_angle.abs() <= self.steering_limit_deg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    /// Step length in seconds (default 15 Hz).
    pub dt: f64,
    pub wheelbase: f64,
    pub max_accel: f64,
    pub max_steps: usize,
    /// Extra margin beyond the half width before an episode counts as
    /// off track.
    pub off_track_tolerance: f64,
    /// When set, rollouts start from a seeded random arc offset instead of
    /// s = 0.
    pub random_start: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 0.0667,
            wheelbase: 0.16,
            max_accel: 2.0,
            max_steps: 3000,
            off_track_tolerance: 0.05,
            random_start: false,
        }
    }
}

/// Normalizes an angle to `(-pi, pi]`. Values already in range pass through
/// bit-exact, so zero-steering steps preserve the heading exactly.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > PI || angle <= -PI {
        let r = angle.rem_euclid(TAU);
        if r > PI {
            r - TAU
        } else {
            r
        }
    } else {
        angle
    }
}

/// One kinematic bicycle step. Speed moves toward the setpoint limited by
/// `max_accel * dt`; the position advances along the current heading at the
/// new speed; the heading then turns by `v / wheelbase * tan(steer) * dt`.
pub fn step(state: &VehicleState, action: &Action, params: &SimParams) -> VehicleState {
    debug_assert!(action.target_speed >= 0.0, "target speed must be >= 0");
    debug_assert!(
        action.steering_angle.abs() < 90.0,
        "steering angle out of range"
    );
    let limit = params.max_accel * params.dt;
    let speed = state.speed + (action.target_speed - state.speed).clamp(-limit, limit);
    let x = state.x + speed * state.heading.cos() * params.dt;
    let y = state.y + speed * state.heading.sin() * params.dt;
    let yaw_rate = speed / params.wheelbase * action.steering_angle.to_radians().tan();
    let heading = wrap_angle(state.heading + yaw_rate * params.dt);
    VehicleState {
        x,
        y,
        heading,
        speed,
    }
}

/// True iff the lateral offset strictly exceeds the half width plus the
/// configured tolerance.
pub fn off_track(track: &TrackModel, state: &VehicleState, params: &SimParams) -> bool {
    let projection = track.project(state.x, state.y);
    projection.lateral_offset.abs() > track.half_width() + params.off_track_tolerance
}
