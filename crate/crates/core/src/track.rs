//! Closed-circuit track geometry.
//!
//! A track is a chain of straights and constant-curvature arcs starting at the
//! origin with heading `0`. All track-relative quantities use one convention:
//! lateral offset `e > 0` means right of the centerline, heading error
//! `delta_psi > 0` means the vehicle points clockwise (right) of the tangent.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::normalize_angle;
use crate::world::{VehiclePose, VEHICLE_HALF_WIDTH};

/// Positional closure tolerance, meters.
pub const CLOSURE_TOLERANCE: f64 = 1e-6;

const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("track has no segments")]
    Empty,
    #[error("segment {index} has non-positive length {length}")]
    NonPositiveLength { index: usize, length: f64 },
    #[error("half width {0} must exceed the vehicle half width")]
    BadHalfWidth(f64),
    #[error("half width {half_width} does not fit inside arc {index} of radius {radius}")]
    WidthExceedsRadius { index: usize, radius: f64, half_width: f64 },
    #[error("track does not close: endpoint gap {gap} m, heading gap {heading_gap} rad")]
    NotClosed { gap: f64, heading_gap: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown track name `{0}`")]
    UnknownName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One piece of a track as written in a track file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentSpec {
    Straight {
        length: f64,
    },
    /// Positive sweep turns left.
    Arc {
        radius: f64,
        sweep: f64,
    },
}

/// A constant-curvature piece of centerline. Zero curvature is a straight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length: f64,
    /// Signed curvature, 1/m, positive for left turns.
    pub curvature: f64,
}

impl Segment {
    pub fn is_straight(&self) -> bool {
        self.curvature == 0.0
    }
}

/// Start frame of a segment along the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SegmentStart {
    s: f64,
    x: f64,
    y: f64,
    heading: f64,
}

/// Pose of a point relative to the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRelativePose {
    /// Arc length of the nearest centerline point, in `[0, total_length)`.
    pub s: f64,
    /// Signed lateral offset, positive right of the centerline.
    pub e: f64,
    /// Heading error in `(-π, π]`, positive when pointing right of the tangent.
    pub delta_psi: f64,
    /// `e / half_width`; `|track_pos| <= 1` on track.
    pub track_pos: f64,
}

/// Nearest-point projection of a position onto the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub e: f64,
    pub tangent: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackGeometry {
    segments: Vec<Segment>,
    starts: Vec<SegmentStart>,
    half_width: f64,
    total_length: f64,
}

impl TrackGeometry {
    /// Build a closed track from segment specs.
    pub fn build(specs: &[SegmentSpec], half_width: f64) -> Result<Self, TrackError> {
        let segments = specs
            .iter()
            .map(|spec| match *spec {
                SegmentSpec::Straight { length } => Segment { length, curvature: 0.0 },
                SegmentSpec::Arc { radius, sweep } => Segment {
                    length: radius * sweep.abs(),
                    curvature: if radius > 0.0 { sweep.signum() / radius } else { 0.0 },
                },
            })
            .collect();
        Self::from_segments(segments, half_width)
    }

    pub fn from_segments(segments: Vec<Segment>, half_width: f64) -> Result<Self, TrackError> {
        if segments.is_empty() {
            return Err(TrackError::Empty);
        }
        if !(half_width > VEHICLE_HALF_WIDTH) || !half_width.is_finite() {
            return Err(TrackError::BadHalfWidth(half_width));
        }
        for (index, seg) in segments.iter().enumerate() {
            if !(seg.length > 0.0) || !seg.length.is_finite() || !seg.curvature.is_finite() {
                return Err(TrackError::NonPositiveLength { index, length: seg.length });
            }
            if !seg.is_straight() && 1.0 / seg.curvature.abs() <= half_width {
                return Err(TrackError::WidthExceedsRadius { index, radius: 1.0 / seg.curvature.abs(), half_width });
            }
        }

        let mut starts = Vec::with_capacity(segments.len());
        let mut cursor = SegmentStart { s: 0.0, x: 0.0, y: 0.0, heading: 0.0 };
        for seg in &segments {
            starts.push(cursor);
            let (x, y, heading) = advance(cursor.x, cursor.y, cursor.heading, seg.curvature, seg.length);
            cursor = SegmentStart { s: cursor.s + seg.length, x, y, heading };
        }
        let gap = cursor.x.hypot(cursor.y);
        let heading_gap = normalize_angle(cursor.heading).abs();
        if gap > CLOSURE_TOLERANCE || heading_gap > CLOSURE_TOLERANCE {
            return Err(TrackError::NotClosed { gap, heading_gap });
        }

        Ok(Self { total_length: segments.iter().map(|s| s.length).sum(), segments, starts, half_width })
    }

    /// One of the built-in tracks: `oval` or `curvy`.
    pub fn named(name: &str) -> Result<Self, TrackError> {
        match name {
            "oval" => Self::oval(),
            "curvy" => Self::curvy(),
            other => Err(TrackError::UnknownName(other.to_string())),
        }
    }

    /// Two 100 m straights joined by 30 m radius half circles, 6 m half width.
    pub fn oval() -> Result<Self, TrackError> {
        Self::build(
            &[
                SegmentSpec::Straight { length: 100.0 },
                SegmentSpec::Arc { radius: 30.0, sweep: PI },
                SegmentSpec::Straight { length: 100.0 },
                SegmentSpec::Arc { radius: 30.0, sweep: PI },
            ],
            6.0,
        )
    }

    /// A twistier circuit with left and right bends, used as a held-out track.
    pub fn curvy() -> Result<Self, TrackError> {
        use SegmentSpec::{Arc, Straight};
        Self::build(
            &[
                Straight { length: 45.0 },
                Arc { radius: 40.0, sweep: PI / 2.0 },
                Straight { length: 6.961_524_227_066_32 },
                Arc { radius: 30.0, sweep: PI / 2.0 },
                Arc { radius: 25.0, sweep: -PI / 2.0 },
                Arc { radius: 25.0, sweep: PI / 2.0 },
                Straight { length: 40.0 },
                Arc { radius: 35.0, sweep: PI / 2.0 },
                Arc { radius: 30.0, sweep: PI / 3.0 },
                Arc { radius: 30.0, sweep: -PI / 3.0 },
                Arc { radius: 40.0, sweep: PI / 2.0 },
            ],
            6.0,
        )
    }

    /// Read a track file (see [`FromStr`] for the format).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrackError> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Wrap an arc length into `[0, total_length)`.
    pub fn wrap_s(&self, s: f64) -> f64 {
        let w = s.rem_euclid(self.total_length);
        if w >= self.total_length {
            0.0
        } else {
            w
        }
    }

    fn segment_index(&self, s: f64) -> usize {
        // Last segment whose start is <= s.
        match self.starts.binary_search_by(|st| st.s.partial_cmp(&s).expect("finite arc length")) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    /// Signed curvature of the centerline at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        self.segments[self.segment_index(self.wrap_s(s))].curvature
    }

    /// Point at arc length `s` displaced `e` meters to the right, with the
    /// centerline tangent heading there.
    pub fn point_at(&self, s: f64, e: f64) -> (f64, f64, f64) {
        let s = self.wrap_s(s);
        let i = self.segment_index(s);
        let st = self.starts[i];
        let seg = self.segments[i];
        let (x, y, heading) = advance(st.x, st.y, st.heading, seg.curvature, s - st.s);
        let (sin_h, cos_h) = heading.sin_cos();
        (x + e * sin_h, y - e * cos_h, normalize_angle(heading))
    }

    /// Place a vehicle at `(s, e)` with heading `tangent - delta_psi`.
    pub fn pose_at(&self, s: f64, e: f64, delta_psi: f64, speed: f64) -> VehiclePose {
        let (x, y, tangent) = self.point_at(s, e);
        VehiclePose::new(x, y, tangent - delta_psi, speed)
    }

    /// Nearest centerline point to `(x, y)`.
    ///
    /// Each segment is projected analytically and the global minimum kept.
    /// Exact ties go to the smallest arc length.
    pub fn project(&self, x: f64, y: f64) -> Projection {
        let mut best: Option<Projection> = None;
        for (seg, st) in self.segments.iter().zip(&self.starts) {
            let local = project_on_segment(seg, st, x, y);
            let better = match &best {
                None => true,
                Some(b) => local.distance < b.distance,
            };
            if better {
                best = Some(local);
            }
        }
        let mut p = best.expect("track has at least one segment");
        p.s = self.wrap_s(p.s);
        p
    }

    pub fn relative_pose(&self, pose: &VehiclePose) -> TrackRelativePose {
        let p = self.project(pose.x, pose.y);
        TrackRelativePose {
            s: p.s,
            e: p.e,
            delta_psi: normalize_angle(p.tangent - pose.heading),
            track_pos: p.e / self.half_width,
        }
    }

    /// Distance along a ray from `(x, y)` with world heading `direction` to the
    /// first track edge, capped at `max_range`.
    pub fn ray_distance(&self, x: f64, y: f64, direction: f64, max_range: f64) -> f64 {
        let (dy, dx) = direction.sin_cos();
        let mut nearest = max_range;
        for (seg, st) in self.segments.iter().zip(&self.starts) {
            for offset in [self.half_width, -self.half_width] {
                if let Some(t) = ray_hit_edge(seg, st, offset, x, y, dx, dy) {
                    if t < nearest {
                        nearest = t;
                    }
                }
            }
        }
        nearest
    }

    /// Render in the plain-text track format.
    pub fn to_text(&self) -> String {
        let mut out = format!("half_width {}\n", self.half_width);
        for seg in &self.segments {
            if seg.is_straight() {
                out.push_str(&format!("straight {}\n", seg.length));
            } else {
                let radius = 1.0 / seg.curvature.abs();
                let sweep = seg.length * seg.curvature;
                out.push_str(&format!("arc {radius} {sweep}\n"));
            }
        }
        out
    }
}

impl fmt::Display for TrackGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Track file format: a `half_width <m>` header, then one segment per line,
/// `straight <length_m>` or `arc <radius_m> <sweep_rad_signed>`. Blank lines
/// and `#` comments are ignored.
impl FromStr for TrackGeometry {
    type Err = TrackError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut half_width = None;
        let mut specs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parts: Vec<&str> = content.split_whitespace().collect();
            let num = |i: usize| -> Result<f64, TrackError> {
                let tok = parts.get(i).ok_or_else(|| TrackError::Parse {
                    line,
                    message: format!("`{}` is missing an argument", parts[0]),
                })?;
                tok.parse::<f64>().map_err(|_| TrackError::Parse { line, message: format!("`{tok}` is not a number") })
            };
            let expect_arity = |n: usize| -> Result<(), TrackError> {
                if parts.len() != n + 1 {
                    return Err(TrackError::Parse { line, message: format!("`{}` takes {n} argument(s)", parts[0]) });
                }
                Ok(())
            };
            match parts[0] {
                "half_width" => {
                    if half_width.is_some() {
                        return Err(TrackError::Parse { line, message: "duplicate half_width".into() });
                    }
                    expect_arity(1)?;
                    half_width = Some(num(1)?);
                }
                "straight" => {
                    expect_arity(1)?;
                    specs.push(SegmentSpec::Straight { length: num(1)? });
                }
                "arc" => {
                    expect_arity(2)?;
                    specs.push(SegmentSpec::Arc { radius: num(1)?, sweep: num(2)? });
                }
                other => return Err(TrackError::Parse { line, message: format!("unknown directive `{other}`") }),
            }
        }
        let half_width =
            half_width.ok_or(TrackError::Parse { line: 1, message: "missing `half_width` header".into() })?;
        Self::build(&specs, half_width)
    }
}

/// Integrate a constant-curvature piece of length `u`.
fn advance(x: f64, y: f64, heading: f64, curvature: f64, u: f64) -> (f64, f64, f64) {
    if curvature == 0.0 {
        let (sin_h, cos_h) = heading.sin_cos();
        (x + u * cos_h, y + u * sin_h, heading)
    } else {
        let end = heading + curvature * u;
        (x + (end.sin() - heading.sin()) / curvature, y + (heading.cos() - end.cos()) / curvature, end)
    }
}

fn arc_center(st: &SegmentStart, curvature: f64) -> (f64, f64) {
    let (sin_h, cos_h) = st.heading.sin_cos();
    (st.x - sin_h / curvature, st.y + cos_h / curvature)
}

/// Arc parameter (distance from segment start) of the point on the arc's
/// circle whose radial direction from the center is `(dx, dy)` scaled by the
/// signed radius `radius`.
fn arc_param(st: &SegmentStart, curvature: f64, radius: f64, dx: f64, dy: f64) -> f64 {
    // point - center = radius * (sin h, -cos h)
    let h = (dx / radius).atan2(-dy / radius);
    let swept = ((h - st.heading) * curvature.signum()).rem_euclid(TAU);
    swept / curvature.abs()
}

fn project_on_segment(seg: &Segment, st: &SegmentStart, x: f64, y: f64) -> Projection {
    let eval = |u: f64| -> Projection {
        let (px, py, h) = advance(st.x, st.y, st.heading, seg.curvature, u);
        let (sin_h, cos_h) = h.sin_cos();
        let (rx, ry) = (x - px, y - py);
        Projection { s: st.s + u, e: rx * sin_h - ry * cos_h, tangent: normalize_angle(h), distance: rx.hypot(ry) }
    };

    if seg.is_straight() {
        let (sin_h, cos_h) = st.heading.sin_cos();
        let u = ((x - st.x) * cos_h + (y - st.y) * sin_h).clamp(0.0, seg.length);
        return eval(u);
    }

    let (cx, cy) = arc_center(st, seg.curvature);
    let u = arc_param(st, seg.curvature, 1.0 / seg.curvature, x - cx, y - cy);
    if u <= seg.length {
        eval(u)
    } else {
        // Outside the swept sector the nearest arc point is an endpoint.
        let a = eval(0.0);
        let b = eval(seg.length);
        if b.distance < a.distance {
            b
        } else {
            a
        }
    }
}

/// Ray parameter of the first hit on the edge `offset` meters right of the
/// segment's centerline, if any.
fn ray_hit_edge(seg: &Segment, st: &SegmentStart, offset: f64, ox: f64, oy: f64, dx: f64, dy: f64) -> Option<f64> {
    if seg.is_straight() {
        let (sin_h, cos_h) = st.heading.sin_cos();
        let ax = st.x + offset * sin_h;
        let ay = st.y - offset * cos_h;
        // o + t d = a + u tangent
        let det = -dx * sin_h + dy * cos_h;
        if det.abs() < 1e-15 {
            return None;
        }
        let (rx, ry) = (ax - ox, ay - oy);
        let t = (-rx * sin_h + ry * cos_h) / det;
        let u = (dx * ry - dy * rx) / det;
        return (t > EDGE_EPS && u >= -EDGE_EPS && u <= seg.length + EDGE_EPS).then_some(t);
    }

    let (cx, cy) = arc_center(st, seg.curvature);
    let radius = 1.0 / seg.curvature + offset;
    let (fx, fy) = (ox - cx, oy - cy);
    let b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let mut hit: Option<f64> = None;
    for t in [-b - root, -b + root] {
        if t <= EDGE_EPS {
            continue;
        }
        let (px, py) = (fx + t * dx, fy + t * dy);
        let u = arc_param(st, seg.curvature, radius, px, py);
        let within = u <= seg.length + EDGE_EPS || (TAU / seg.curvature.abs() - u) <= EDGE_EPS;
        if within && hit.is_none_or(|h| t < h) {
            hit = Some(t);
        }
    }
    hit
}
