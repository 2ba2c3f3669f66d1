//! Planar primitives: points, disks, segments, boundary arcs and the
//! tangency/visibility predicates built on them.
//!
//! All predicates share one absolute tolerance, [`EPS`]. Tangency counts as
//! clearance everywhere: a segment that touches an obstacle boundary is clear,
//! and a transmission disk tangent to an obstacle is feasible.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for all geometric predicates, in scene units.
pub const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn dist_sq(self, o: Point2) -> f64 {
        (self - o).norm_sq()
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        Point2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        self.lerp(o, 0.5)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub const fn new(center: Point2, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains_strictly(&self, p: Point2) -> bool {
        p.dist(self.center) < self.radius - EPS
    }

    pub fn on_boundary(&self, p: Point2) -> bool {
        (p.dist(self.center) - self.radius).abs() <= EPS
    }

    pub fn boundary_point(&self, angle: f64) -> Point2 {
        self.center + Point2::from_polar(self.radius, angle)
    }

    pub fn angle_of(&self, p: Point2) -> f64 {
        (p - self.center).angle()
    }

    pub fn relation(&self, other: &Disk) -> DiskRelation {
        let d = self.center.dist(other.center);
        if d <= (self.radius - other.radius).abs() + EPS {
            DiskRelation::Nested
        } else if d <= self.radius + other.radius + EPS {
            DiskRelation::Overlapping
        } else {
            DiskRelation::Disjoint
        }
    }
}

/// Mutual position of two disks, as it matters for bitangent counting.
/// Externally touching disks count as overlapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiskRelation {
    Disjoint,
    Overlapping,
    Nested,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        self.a.lerp(self.b, t)
    }

    pub fn reversed(&self) -> Segment {
        Segment::new(self.b, self.a)
    }

    /// Parameter of the point of the segment closest to `p`, clamped to [0, 1].
    pub fn closest_param(&self, p: Point2) -> f64 {
        let w = self.b - self.a;
        let len2 = w.norm_sq();
        if len2 == 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(w) / len2).clamp(0.0, 1.0)
    }

    pub fn distance_to(&self, p: Point2) -> f64 {
        self.point_at(self.closest_param(p)).dist(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Ccw,
    Cw,
}

/// A piece of a disk boundary between two angles, traversed in `orientation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub disk: Disk,
    pub start_angle: f64,
    pub end_angle: f64,
    pub orientation: Orientation,
}

impl Arc {
    pub fn new(disk: Disk, start_angle: f64, end_angle: f64, orientation: Orientation) -> Self {
        Self {
            disk,
            start_angle,
            end_angle,
            orientation,
        }
    }

    /// Arc from boundary point `from` to boundary point `to` in the given direction.
    pub fn between(disk: Disk, from: Point2, to: Point2, orientation: Orientation) -> Self {
        Self::new(disk, disk.angle_of(from), disk.angle_of(to), orientation)
    }

    /// Swept angle, in (0, 2π]. Coincident start and end angles denote a full turn.
    pub fn sweep(&self) -> f64 {
        let raw = match self.orientation {
            Orientation::Ccw => self.end_angle - self.start_angle,
            Orientation::Cw => self.start_angle - self.end_angle,
        };
        let s = raw.rem_euclid(TAU);
        if s == 0.0 {
            TAU
        } else {
            s
        }
    }

    pub fn length(&self) -> f64 {
        self.sweep() * self.disk.radius
    }

    /// Counter-clockwise description `(start, sweep)` of the same point set.
    pub fn ccw_interval(&self) -> (f64, f64) {
        match self.orientation {
            Orientation::Ccw => (self.start_angle, self.sweep()),
            Orientation::Cw => (self.end_angle, self.sweep()),
        }
    }

    pub fn angle_at(&self, t: f64) -> f64 {
        match self.orientation {
            Orientation::Ccw => self.start_angle + t * self.sweep(),
            Orientation::Cw => self.start_angle - t * self.sweep(),
        }
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        self.disk.boundary_point(self.angle_at(t))
    }

    pub fn start(&self) -> Point2 {
        self.disk.boundary_point(self.start_angle)
    }

    pub fn end(&self) -> Point2 {
        self.disk.boundary_point(self.end_angle)
    }

    pub fn reversed(&self) -> Arc {
        let orientation = match self.orientation {
            Orientation::Ccw => Orientation::Cw,
            Orientation::Cw => Orientation::Ccw,
        };
        Arc::new(self.disk, self.end_angle, self.start_angle, orientation)
    }

    /// True when `angle` lies strictly inside the swept range, with `margin`
    /// radians trimmed from both ends.
    pub fn contains_angle(&self, angle: f64, margin: f64) -> bool {
        let (start, sweep) = self.ccw_interval();
        let offset = (angle - start).rem_euclid(TAU);
        offset > margin && offset < sweep - margin
    }

    /// Splits into pieces of sweep at most `max_sweep`, preserving direction.
    pub fn split(&self, max_sweep: f64) -> Vec<Arc> {
        let sweep = self.sweep();
        let pieces = (sweep / max_sweep).ceil().max(1.0) as usize;
        (0..pieces)
            .map(|k| {
                let a0 = self.angle_at(k as f64 / pieces as f64);
                let a1 = self.angle_at((k + 1) as f64 / pieces as f64);
                Arc::new(self.disk, a0, a1, self.orientation)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathElement {
    Segment(Segment),
    Arc(Arc),
}

impl PathElement {
    pub fn length(&self) -> f64 {
        match self {
            PathElement::Segment(s) => s.length(),
            PathElement::Arc(a) => a.length(),
        }
    }

    pub fn start(&self) -> Point2 {
        match self {
            PathElement::Segment(s) => s.a,
            PathElement::Arc(a) => a.start(),
        }
    }

    pub fn end(&self) -> Point2 {
        match self {
            PathElement::Segment(s) => s.b,
            PathElement::Arc(a) => a.end(),
        }
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        match self {
            PathElement::Segment(s) => s.point_at(t),
            PathElement::Arc(a) => a.point_at(t),
        }
    }

    pub fn reversed(&self) -> PathElement {
        match self {
            PathElement::Segment(s) => PathElement::Segment(s.reversed()),
            PathElement::Arc(a) => PathElement::Arc(a.reversed()),
        }
    }

    /// Applies a rotation about the origin followed by a translation.
    pub fn rigid_transform(&self, angle: f64, shift: Point2) -> PathElement {
        match self {
            PathElement::Segment(s) => PathElement::Segment(Segment::new(
                s.a.rotated(angle) + shift,
                s.b.rotated(angle) + shift,
            )),
            PathElement::Arc(a) => PathElement::Arc(Arc::new(
                Disk::new(a.disk.center.rotated(angle) + shift, a.disk.radius),
                a.start_angle + angle,
                a.end_angle + angle,
                a.orientation,
            )),
        }
    }
}

/// Continuous chain of segments and arcs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyPath {
    elements: Vec<PathElement>,
}

impl PolyPath {
    /// Fails when two consecutive elements do not share an endpoint.
    pub fn new(elements: Vec<PathElement>) -> Result<Self> {
        for (i, w) in elements.windows(2).enumerate() {
            let gap = w[0].end().dist(w[1].start());
            if gap > EPS {
                return Err(Error::Degenerate(format!(
                    "path elements {i} and {} are {gap:e} apart",
                    i + 1
                )));
            }
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[PathElement] {
        &self.elements
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.elements.iter().map(PathElement::length).sum()
    }

    pub fn start(&self) -> Option<Point2> {
        self.elements.first().map(PathElement::start)
    }

    pub fn end(&self) -> Option<Point2> {
        self.elements.last().map(PathElement::end)
    }

    pub fn reversed(&self) -> PolyPath {
        PolyPath {
            elements: self.elements.iter().rev().map(PathElement::reversed).collect(),
        }
    }

    /// Appends another path that starts where this one ends.
    pub fn concat(&self, other: &PolyPath) -> Result<PolyPath> {
        let mut elements = self.elements.clone();
        elements.extend_from_slice(&other.elements);
        PolyPath::new(elements)
    }

    pub fn rigid_transform(&self, angle: f64, shift: Point2) -> PolyPath {
        PolyPath {
            elements: self
                .elements
                .iter()
                .map(|e| e.rigid_transform(angle, shift))
                .collect(),
        }
    }

    /// Path vertices: the start point followed by every element end point.
    pub fn vertices(&self) -> Vec<Point2> {
        let mut out = Vec::with_capacity(self.elements.len() + 1);
        if let Some(first) = self.elements.first() {
            out.push(first.start());
        }
        out.extend(self.elements.iter().map(PathElement::end));
        out
    }
}

/// Points of `d`'s boundary whose tangent line passes through `p`.
///
/// Two points for `p` outside the disk (counter-clockwise one first), the
/// point itself when `p` is on the boundary, nothing when `p` is inside.
pub fn tangent_points(p: Point2, d: &Disk) -> Vec<Point2> {
    let v = p - d.center;
    let dist = v.norm();
    if (dist - d.radius).abs() <= EPS {
        return vec![p];
    }
    if dist < d.radius {
        return Vec::new();
    }
    let base = v.angle();
    let half = (d.radius / dist).acos();
    vec![d.boundary_point(base + half), d.boundary_point(base - half)]
}

/// Common tangent segments of two disks, each running from a tangency point
/// on `d1` to one on `d2`.
///
/// Disjoint disks give four (external pair first), overlapping or touching
/// disks give the two external ones, nested disks give none.
pub fn bitangents(d1: &Disk, d2: &Disk) -> Vec<Segment> {
    let relation = d1.relation(d2);
    if relation == DiskRelation::Nested {
        return Vec::new();
    }
    let delta = d2.center - d1.center;
    let dist = delta.norm();
    let base = delta.angle();
    let mut out = Vec::with_capacity(4);

    // External: the shared normal n satisfies n·u = (r1 - r2) / d.
    let ext = ((d1.radius - d2.radius) / dist).clamp(-1.0, 1.0).acos();
    for sign in [1.0, -1.0] {
        let n = Point2::from_polar(1.0, base + sign * ext);
        out.push(Segment::new(
            d1.center + n * d1.radius,
            d2.center + n * d2.radius,
        ));
    }
    if relation == DiskRelation::Disjoint {
        // Internal: n·u = (r1 + r2) / d, tangency on opposite sides.
        let int = ((d1.radius + d2.radius) / dist).clamp(-1.0, 1.0).acos();
        for sign in [1.0, -1.0] {
            let n = Point2::from_polar(1.0, base + sign * int);
            out.push(Segment::new(
                d1.center + n * d1.radius,
                d2.center - n * d2.radius,
            ));
        }
    }
    out
}

/// True when the segment does not pass through the interior of any obstacle
/// whose index is not in `skip`. Tangency is clear.
pub fn segment_clear(s: &Segment, obstacles: &[Disk], skip: &[usize]) -> bool {
    obstacles
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .all(|(_, o)| s.distance_to(o.center) >= o.radius - EPS)
}

/// True when no point of the arc lies strictly inside an obstacle other than
/// the arc's own disk. Uses the closed-form circle-circle intersection.
pub fn arc_clear(a: &Arc, obstacles: &[Disk]) -> bool {
    obstacles
        .iter()
        .filter(|o| !same_disk(o, &a.disk))
        .all(|o| !arc_enters_disk(a, o))
}

fn same_disk(a: &Disk, b: &Disk) -> bool {
    a.center.dist(b.center) <= EPS && (a.radius - b.radius).abs() <= EPS
}

fn arc_enters_disk(a: &Arc, o: &Disk) -> bool {
    let host = a.disk;
    let d = host.center.dist(o.center);
    // Whole host circle strictly inside the obstacle.
    if d + host.radius < o.radius - EPS {
        return true;
    }
    // Circles do not cross (apart, touching, or obstacle inside the host).
    if d >= host.radius + o.radius - EPS || d <= host.radius - o.radius + EPS {
        return false;
    }
    // Host boundary inside `o` is the open angular window (mid - half, mid + half).
    let mid = (o.center - host.center).angle();
    let cos_half = (d * d + host.radius * host.radius - o.radius * o.radius)
        / (2.0 * d * host.radius);
    let half = cos_half.clamp(-1.0, 1.0).acos();
    let margin = EPS / host.radius;
    if half <= margin {
        return false;
    }
    let (start, sweep) = a.ccw_interval();
    let window_start = (mid - half - start).rem_euclid(TAU);
    let window_len = 2.0 * half;
    // Window begins inside the arc, or wraps around past the arc's start.
    window_start < sweep - margin || window_start + window_len > TAU + margin
}

/// Number of transversal crossings of `s` by `path`.
///
/// Path vertices lying on `s` count once when the path passes from one side
/// of `s` to the other there, and not at all when it only touches.
pub fn count_crossings(path: &PolyPath, s: &Segment) -> Result<usize> {
    let (Some(first), Some(last)) = (path.start(), path.end()) else {
        return Ok(0);
    };
    if s.distance_to(first) <= EPS || s.distance_to(last) <= EPS {
        return Err(Error::Degenerate(
            "path endpoint lies on the crossing segment".into(),
        ));
    }
    let elements = path.elements();
    let mut count: usize = elements.iter().map(|e| element_crossings(e, s)).sum();
    for w in elements.windows(2) {
        let v = w[0].end();
        if s.distance_to(v) > EPS {
            continue;
        }
        let before = side_of(s, nudge(&w[0], true));
        let after = side_of(s, nudge(&w[1], false));
        if before * after < 0.0 {
            count += 1;
        }
    }
    Ok(count)
}

fn nudge(e: &PathElement, near_end: bool) -> Point2 {
    let len = e.length().max(f64::MIN_POSITIVE);
    let h = (1e-6 / len).min(0.5);
    e.point_at(if near_end { 1.0 - h } else { h })
}

fn side_of(s: &Segment, p: Point2) -> f64 {
    let c = (s.b - s.a).cross(p - s.a);
    if c.abs() <= EPS * s.length() {
        0.0
    } else {
        c.signum()
    }
}

/// Crossings of `s` strictly inside the element (endpoints excluded).
pub fn element_crossings(e: &PathElement, s: &Segment) -> usize {
    match e {
        PathElement::Segment(seg) => usize::from(segments_cross(seg, s)),
        PathElement::Arc(arc) => arc_segment_crossings(arc, s),
    }
}

fn segments_cross(p: &Segment, s: &Segment) -> bool {
    let r = p.b - p.a;
    let w = s.b - s.a;
    let denom = r.cross(w);
    let rl = r.norm();
    let wl = w.norm();
    if denom.abs() <= 1e-15 * rl * wl {
        return false;
    }
    let q = s.a - p.a;
    let t = q.cross(w) / denom;
    let u = q.cross(r) / denom;
    let tt = EPS / rl;
    let ut = EPS / wl;
    t > tt && t < 1.0 - tt && u >= -ut && u <= 1.0 + ut
}

fn arc_segment_crossings(arc: &Arc, s: &Segment) -> usize {
    let c = arc.disk.center;
    let r = arc.disk.radius;
    let w = s.b - s.a;
    let f = s.a - c;
    let a = w.norm_sq();
    if a == 0.0 {
        return 0;
    }
    let b = 2.0 * w.dot(f);
    let cc = f.norm_sq() - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc <= 0.0 {
        return 0;
    }
    let sq = disc.sqrt();
    // Half chord length along the line; a grazing line only touches.
    if sq / (2.0 * a) * a.sqrt() <= EPS {
        return 0;
    }
    let ut = EPS / a.sqrt();
    let margin = EPS / r;
    [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
        .into_iter()
        .filter(|u| *u >= -ut && *u <= 1.0 + ut)
        .filter(|u| arc.contains_angle((s.point_at(*u) - c).angle(), margin))
        .count()
}

/// Gap between two obstacle boundaries along the line of centers; negative
/// when the disks overlap.
pub fn pair_clearance(d1: &Disk, d2: &Disk) -> f64 {
    d1.center.dist(d2.center) - d1.radius - d2.radius
}

/// Gap between a terminal and an obstacle boundary.
pub fn terminal_clearance(t: Point2, d: &Disk) -> f64 {
    t.dist(d.center) - d.radius
}

/// Signed angle swept by the direction from `p` while travelling along `e`.
pub fn swept_angle(e: &PathElement, p: Point2) -> f64 {
    match e {
        PathElement::Segment(s) => chord_angle(s.a, s.b, p),
        PathElement::Arc(arc) => arc
            .split(PI * 0.5)
            .iter()
            .map(|piece| {
                let a = piece.start();
                let b = piece.end();
                let mut ang = chord_angle(a, b, p);
                // `p` in the lens between the chord and the arc: the arc goes
                // around the far side of `p`.
                let inside_disk = p.dist(piece.disk.center) < piece.disk.radius;
                let dir = b - a;
                let arc_side = match piece.orientation {
                    Orientation::Ccw => -1.0,
                    Orientation::Cw => 1.0,
                };
                if inside_disk && dir.cross(p - a) * arc_side > 0.0 {
                    ang += match piece.orientation {
                        Orientation::Ccw => TAU,
                        Orientation::Cw => -TAU,
                    };
                }
                ang
            })
            .sum(),
    }
}

fn chord_angle(a: Point2, b: Point2, p: Point2) -> f64 {
    let u = a - p;
    let v = b - p;
    u.cross(v).atan2(u.dot(v))
}
