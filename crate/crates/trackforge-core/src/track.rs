//! Closed-loop track geometry: waypoints, arc-length parameterization,
//! projection, and discrete curvature.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod synthetic;

/// Consecutive waypoints closer than this are treated as duplicates.
pub const MIN_WAYPOINT_SPACING: f64 = 1e-9;

/// Triangles with area below this count as collinear and get zero curvature.
const DEGENERATE_AREA: f64 = 1e-12;

const MIN_WAYPOINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64) -> Self {
        Waypoint { x, y }
    }

    pub fn distance(&self, other: &Waypoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentClass {
    Straight,
    Curved,
}

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("too few waypoints: need at least {MIN_WAYPOINTS}, found {found}")]
    TooFewWaypoints { found: usize },
    #[error("waypoints {index} and {next} are closer than {MIN_WAYPOINT_SPACING} m")]
    DuplicateWaypoint { index: usize, next: usize },
    #[error("waypoint {index} has a non-finite coordinate")]
    NonFiniteWaypoint { index: usize },
    #[error("track half width must be positive, got {0}")]
    InvalidHalfWidth(f64),
}

/// Result of projecting a position onto the track centerline.
///
/// `lateral_offset` is signed: positive means left of the direction of
/// travel. Its magnitude equals the distance from the query position to the
/// centerline point at `s`, including the longitudinal component when the
/// projection clamps to a waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub lateral_offset: f64,
    pub segment_index: usize,
}

/// A closed polyline track with precomputed arc lengths and per-waypoint
/// Menger curvature. Immutable after construction; every query is pure.
#[derive(Debug, Clone)]
pub struct TrackModel {
    waypoints: Vec<Waypoint>,
    half_width: f64,
    cum_arc_length: Vec<f64>,
    total_length: f64,
    curvature_samples: Vec<f64>,
}

impl TrackModel {
    /// Builds a track from an ordered waypoint loop. The closing segment
    /// (last waypoint back to the first) is implicit.
    pub fn from_waypoints(waypoints: Vec<Waypoint>, half_width: f64) -> Result<Self, TrackError> {
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(TrackError::InvalidHalfWidth(half_width));
        }
        let n = waypoints.len();
        if n < MIN_WAYPOINTS {
            return Err(TrackError::TooFewWaypoints { found: n });
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !w.x.is_finite() || !w.y.is_finite() {
                return Err(TrackError::NonFiniteWaypoint { index: i });
            }
        }
        for i in 0..n {
            let next = (i + 1) % n;
            if waypoints[i].distance(&waypoints[next]) <= MIN_WAYPOINT_SPACING {
                return Err(TrackError::DuplicateWaypoint { index: i, next });
            }
        }

        let mut cum_arc_length = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            cum_arc_length.push(acc);
            acc += waypoints[i].distance(&waypoints[(i + 1) % n]);
        }
        let total_length = acc;

        let curvature_samples = (0..n)
            .map(|i| {
                menger_curvature(
                    waypoints[(i + n - 1) % n],
                    waypoints[i],
                    waypoints[(i + 1) % n],
                )
            })
            .collect();

        Ok(TrackModel {
            waypoints,
            half_width,
            cum_arc_length,
            total_length,
            curvature_samples,
        })
    }

    /// Loads a track from a `x,y` CSV file (see the track file format in the
    /// README). The half width is not part of the file; it comes from the
    /// run configuration.
    pub fn load(path: impl AsRef<Path>, half_width: f64) -> Result<Self, TrackError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TrackError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_csv(&text, half_width)
    }

    /// Parses the track CSV format: optional leading `#` comment lines, a
    /// `x,y` header, then one waypoint per row in meters.
    pub fn parse_csv(text: &str, half_width: f64) -> Result<Self, TrackError> {
        let mut saw_header = false;
        let mut points: Vec<Waypoint> = Vec::new();
        let mut last_line = 0usize;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                if trimmed != "x,y" {
                    return Err(TrackError::Parse {
                        line,
                        message: format!("expected header 'x,y', got '{trimmed}'"),
                    });
                }
                saw_header = true;
                continue;
            }
            let mut fields = trimmed.split(',');
            let x = fields.next().map(str::trim);
            let y = fields.next().map(str::trim);
            if fields.next().is_some() {
                return Err(TrackError::Parse {
                    line,
                    message: format!("expected two comma-separated numbers, got '{trimmed}'"),
                });
            }
            let parse = |field: Option<&str>| -> Result<f64, TrackError> {
                field
                    .and_then(|f| f.parse::<f64>().ok())
                    .ok_or_else(|| TrackError::Parse {
                        line,
                        message: format!("expected two comma-separated numbers, got '{trimmed}'"),
                    })
            };
            let x = parse(x)?;
            let y = parse(y)?;
            if !x.is_finite() || !y.is_finite() {
                return Err(TrackError::Parse {
                    line,
                    message: "non-finite coordinate".to_string(),
                });
            }
            if let Some(prev) = points.last() {
                if prev.distance(&Waypoint::new(x, y)) <= MIN_WAYPOINT_SPACING {
                    return Err(TrackError::Parse {
                        line,
                        message: "duplicate of previous waypoint".to_string(),
                    });
                }
            }
            points.push(Waypoint::new(x, y));
            last_line = line;
        }

        if !saw_header {
            return Err(TrackError::Parse {
                line: 1,
                message: "missing 'x,y' header".to_string(),
            });
        }
        if points.len() >= 2 {
            let first = points[0];
            let last = *points.last().unwrap();
            if last.distance(&first) <= MIN_WAYPOINT_SPACING {
                return Err(TrackError::Parse {
                    line: last_line,
                    message: "closing waypoint duplicates the first (loop closure is implicit)"
                        .to_string(),
                });
            }
        }
        Self::from_waypoints(points, half_width)
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cum_arc_length(&self) -> &[f64] {
        &self.cum_arc_length
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn curvature_samples(&self) -> &[f64] {
        &self.curvature_samples
    }

    fn segment_endpoints(&self, i: usize) -> (Waypoint, Waypoint) {
        let n = self.waypoints.len();
        (self.waypoints[i], self.waypoints[(i + 1) % n])
    }

    fn segment_length(&self, i: usize) -> f64 {
        let n = self.waypoints.len();
        if i + 1 < n {
            self.cum_arc_length[i + 1] - self.cum_arc_length[i]
        } else {
            self.total_length - self.cum_arc_length[i]
        }
    }

    /// Wraps an arc-length coordinate into `[0, total_length)`.
    pub fn wrap_s(&self, s: f64) -> f64 {
        let r = s.rem_euclid(self.total_length);
        if r >= self.total_length {
            0.0
        } else {
            r
        }
    }

    /// Index of the waypoint segment containing arc coordinate `s` (already
    /// wrapped), plus the offset into it.
    fn locate(&self, s: f64) -> (usize, f64) {
        let i = self.cum_arc_length.partition_point(|&c| c <= s).max(1) - 1;
        (i, s - self.cum_arc_length[i])
    }

    /// Centerline point at arc coordinate `s` (wrapped).
    pub fn point_at(&self, s: f64) -> Waypoint {
        let s = self.wrap_s(s);
        let (i, ds) = self.locate(s);
        let (a, b) = self.segment_endpoints(i);
        let t = ds / self.segment_length(i);
        Waypoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    }

    /// Unit tangent of the segment containing arc coordinate `s` (wrapped).
    pub fn tangent_at(&self, s: f64) -> (f64, f64) {
        let s = self.wrap_s(s);
        let (i, _) = self.locate(s);
        self.segment_tangent(i)
    }

    fn segment_tangent(&self, i: usize) -> (f64, f64) {
        let (a, b) = self.segment_endpoints(i);
        let len = a.distance(&b);
        ((b.x - a.x) / len, (b.y - a.y) / len)
    }

    /// Projects a position onto the closest point of the centerline.
    ///
    /// Distance ties are broken toward the lower segment index. The sign of
    /// the lateral offset follows the travel direction of the winning
    /// segment: positive is to its left.
    pub fn project(&self, x: f64, y: f64) -> Projection {
        let n = self.waypoints.len();
        let mut best_d2 = f64::INFINITY;
        let mut best_index = 0usize;
        let mut best_s = 0.0;
        let mut best_point = self.waypoints[0];

        for i in 0..n {
            let (a, b) = self.segment_endpoints(i);
            let abx = b.x - a.x;
            let aby = b.y - a.y;
            let len2 = abx * abx + aby * aby;
            let t = (((x - a.x) * abx + (y - a.y) * aby) / len2).clamp(0.0, 1.0);
            let cx = a.x + t * abx;
            let cy = a.y + t * aby;
            let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if d2 < best_d2 {
                best_d2 = d2;
                best_index = i;
                best_s = self.cum_arc_length[i] + t * self.segment_length(i);
                best_point = Waypoint::new(cx, cy);
            }
        }

        let (tx, ty) = self.segment_tangent(best_index);
        let cross = tx * (y - best_point.y) - ty * (x - best_point.x);
        let dist = best_d2.sqrt();
        let lateral_offset = if cross < 0.0 { -dist } else { dist };
        let mut s = best_s;
        if s >= self.total_length {
            s -= self.total_length;
        }
        Projection {
            s,
            lateral_offset,
            segment_index: best_index,
        }
    }

    /// Lap fraction in `[0, 1)` at arc coordinate `s`.
    pub fn progress_at(&self, s: f64) -> f64 {
        assert!(
            s >= 0.0 && s < self.total_length,
            "arc coordinate {s} outside [0, {})",
            self.total_length
        );
        s / self.total_length
    }

    /// Unsigned curvature at arc coordinate `s`, linearly interpolated
    /// between the per-waypoint Menger samples (wrapping at the loop seam).
    pub fn curvature_at(&self, s: f64) -> f64 {
        let s = self.wrap_s(s);
        let n = self.waypoints.len();
        let (i, ds) = self.locate(s);
        let t = ds / self.segment_length(i);
        let k0 = self.curvature_samples[i];
        let k1 = self.curvature_samples[(i + 1) % n];
        k0 * (1.0 - t) + k1 * t
    }

    /// Arithmetic mean of the curvature samples whose arc coordinate lies
    /// within `window / 2` of `s_center` along the loop. Falls back to the
    /// nearest sample when the window is narrower than the waypoint spacing.
    pub fn mean_curvature(&self, s_center: f64, window: f64) -> f64 {
        assert!(window > 0.0, "window must be positive");
        let s = self.wrap_s(s_center);
        let half = window / 2.0;
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut nearest = (f64::INFINITY, 0usize);
        for (i, &c) in self.cum_arc_length.iter().enumerate() {
            let raw = (c - s).abs();
            let dist = raw.min(self.total_length - raw);
            if dist <= half {
                sum += self.curvature_samples[i];
                count += 1;
            }
            if dist < nearest.0 {
                nearest = (dist, i);
            }
        }
        if count == 0 {
            self.curvature_samples[nearest.1]
        } else {
            sum / count as f64
        }
    }

    /// `Curved` iff the interpolated curvature at `s` reaches `threshold`.
    /// The boundary itself classifies as `Curved`.
    pub fn classify_segment(&self, s: f64, threshold: f64) -> SegmentClass {
        assert!(threshold > 0.0, "threshold must be positive");
        if self.curvature_at(s) >= threshold {
            SegmentClass::Curved
        } else {
            SegmentClass::Straight
        }
    }
}

/// Menger curvature of the circle through three points:
/// `4 * area / (|pm p0| * |p0 pp| * |pm pp|)`. Collinear and near-collinear
/// stencils return 0.
pub fn menger_curvature(pm: Waypoint, p0: Waypoint, pp: Waypoint) -> f64 {
    let area = 0.5 * ((p0.x - pm.x) * (pp.y - pm.y) - (pp.x - pm.x) * (p0.y - pm.y)).abs();
    if area < DEGENERATE_AREA {
        return 0.0;
    }
    let a = pm.distance(&p0);
    let b = p0.distance(&pp);
    let c = pm.distance(&pp);
    4.0 * area / (a * b * c)
}

/// Wraps a progress delta into `(-0.5, 0.5]`, interpreting jumps across the
/// start/finish seam as short motion in the opposite direction.
pub fn wrap_progress_delta(delta: f64) -> f64 {
    if delta > 0.5 {
        delta - 1.0
    } else if delta <= -0.5 {
        delta + 1.0
    } else {
        delta
    }
}
