//! Parametric waypoint generators for the bundled tracks, tests, and
//! benchmarks. All loops are counter-clockwise.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::Waypoint;

/// Circle of the given radius centered at the origin, `n` evenly spaced
/// waypoints starting at angle 0.
pub fn circle(radius: f64, n: usize) -> Vec<Waypoint> {
    (0..n)
        .map(|i| {
            let theta = TAU * i as f64 / n as f64;
            Waypoint::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect()
}

/// Axis-aligned rounded rectangle centered at the origin. `radii` are the
/// corner radii in order bottom-right, top-right, top-left, bottom-left;
/// a zero radius produces a sharp corner. Pieces are sampled at roughly
/// `spacing` meters.
pub fn rounded_rect(width: f64, height: f64, radii: [f64; 4], spacing: f64) -> Vec<Waypoint> {
    assert!(spacing > 0.0);
    let hw = width / 2.0;
    let hh = height / 2.0;
    let [r_br, r_tr, r_tl, r_bl] = radii;
    assert!(r_bl + r_br <= width && r_tl + r_tr <= width);
    assert!(r_br + r_tr <= height && r_bl + r_tl <= height);

    let mut pts = Vec::new();
    // Each piece emits [start, end); the next piece starts where it ended.
    let straight = |pts: &mut Vec<Waypoint>, a: (f64, f64), b: (f64, f64)| {
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let n = (len / spacing).ceil() as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            pts.push(Waypoint::new(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    };
    let arc = |pts: &mut Vec<Waypoint>, c: (f64, f64), r: f64, a0: f64, a1: f64| {
        let n = (r * (a1 - a0) / spacing).ceil() as usize;
        for k in 0..n {
            let theta = a0 + (a1 - a0) * k as f64 / n as f64;
            pts.push(Waypoint::new(c.0 + r * theta.cos(), c.1 + r * theta.sin()));
        }
    };

    straight(&mut pts, (-hw + r_bl, -hh), (hw - r_br, -hh));
    arc(&mut pts, (hw - r_br, -hh + r_br), r_br, -FRAC_PI_2, 0.0);
    straight(&mut pts, (hw, -hh + r_br), (hw, hh - r_tr));
    arc(&mut pts, (hw - r_tr, hh - r_tr), r_tr, 0.0, FRAC_PI_2);
    straight(&mut pts, (hw - r_tr, hh), (-hw + r_tl, hh));
    arc(&mut pts, (-hw + r_tl, hh - r_tl), r_tl, FRAC_PI_2, PI);
    straight(&mut pts, (-hw, hh - r_tl), (-hw, -hh + r_bl));
    arc(
        &mut pts,
        (-hw + r_bl, -hh + r_bl),
        r_bl,
        PI,
        3.0 * FRAC_PI_2,
    );
    pts
}

/// Stadium-shaped oval: two 12 m straights joined by radius-4 semicircles.
/// The gentle bundled track used by training smoke runs.
pub fn oval(spacing: f64) -> Vec<Waypoint> {
    rounded_rect(20.0, 8.0, [4.0; 4], spacing)
}

/// Paperclip: a gentle radius-2 end and a tight radius-0.5 hairpin joined
/// by converging straights. Near the hairpin the opposing lanes run only
/// one meter apart, so with the default 0.6 m half width the corridors
/// overlap and sloppy hairpin lines see projection jumps; the hairpin
/// itself forces hard slowing.
pub fn slow_corner(spacing: f64) -> Vec<Waypoint> {
    two_radius_belt(0.5, 2.0, 10.0, spacing)
}

/// Belt around two circles: radius `r_right` at (+d, 0), radius `r_left`
/// at (-(D-d), 0) with center distance `center_distance`, joined by the
/// outer tangent lines. Counter-clockwise.
pub fn two_radius_belt(
    r_right: f64,
    r_left: f64,
    center_distance: f64,
    spacing: f64,
) -> Vec<Waypoint> {
    assert!(spacing > 0.0 && r_right > 0.0 && r_left > 0.0);
    assert!(center_distance > r_right + r_left);
    let c_right = (center_distance / 2.0, 0.0);
    let c_left = (-center_distance / 2.0, 0.0);
    // Outer tangent slope relative to the center line.
    let phi = ((r_right - r_left) / center_distance).asin();
    let n_up = (-phi.sin(), phi.cos());
    let n_dn = (-phi.sin(), -phi.cos());
    let touch = |c: (f64, f64), r: f64, n: (f64, f64)| (c.0 + r * n.0, c.1 + r * n.1);

    let mut pts = Vec::new();
    let straight = |pts: &mut Vec<Waypoint>, a: (f64, f64), b: (f64, f64)| {
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let n = (len / spacing).ceil() as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            pts.push(Waypoint::new(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    };
    let arc = |pts: &mut Vec<Waypoint>, c: (f64, f64), r: f64, a0: f64, a1: f64| {
        debug_assert!(a1 > a0);
        let n = (r * (a1 - a0) / spacing).ceil() as usize;
        for k in 0..n {
            let theta = a0 + (a1 - a0) * k as f64 / n as f64;
            pts.push(Waypoint::new(c.0 + r * theta.cos(), c.1 + r * theta.sin()));
        }
    };

    let angle_dn = n_dn.1.atan2(n_dn.0);
    let angle_up = n_up.1.atan2(n_up.0);
    // Bottom straight rightward, hairpin sweep through 0, top straight
    // leftward, big arc through pi.
    straight(
        &mut pts,
        touch(c_left, r_left, n_dn),
        touch(c_right, r_right, n_dn),
    );
    arc(&mut pts, c_right, r_right, angle_dn, angle_up);
    straight(
        &mut pts,
        touch(c_right, r_right, n_up),
        touch(c_left, r_left, n_up),
    );
    arc(&mut pts, c_left, r_left, angle_up, angle_dn + TAU);
    pts
}
