//! Closed-form optima for two small cases: two terminals around a unit
//! obstacle, and three terminals with one relay.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::network::brute_force_radii;

/// Terminal half-distance at which `n` relays on a semicircle around a unit
/// obstacle give the cheapest chain.
pub fn d_min(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::NoSolution(format!(
            "{n} relays cannot link terminals around the obstacle; at least 3 are needed"
        )));
    }
    Ok(1.0 / (1.0 - 2.0 * (PI / (2.0 + 2.0 * n as f64)).sin()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSolution {
    pub relay_positions: Vec<Point2>,
    pub common_radius: f64,
    pub cost: f64,
}

impl ChainSolution {
    /// Terminal `(-d, 0)`, relays, terminal `(d, 0)`.
    pub fn nodes(&self, d: f64) -> Vec<Point2> {
        let mut out = vec![Point2::new(-d, 0.0)];
        out.extend(&self.relay_positions);
        out.push(Point2::new(d, 0.0));
        out
    }
}

/// Equal-radius chain of `n` relays between terminals at `(±d, 0)` around a
/// unit obstacle at the origin.
///
/// At `d = d_min(n)` the relays sit on the semicircle of radius `d` at angular
/// spacing `π/(n+1)`. For larger `d` each terminal reaches the clearance
/// circle of radius `1 + r` through a straight run of `j` hops of length `r`,
/// and the remaining relays sit on that circle at chord `r`; the run length
/// with the smallest feasible `r` is returned.
pub fn semicircle_chain(n: usize, d: f64) -> Result<ChainSolution> {
    let dm = d_min(n)?;
    if d < dm * (1.0 - 1e-12) {
        return Err(Error::OutOfClosedForm(format!(
            "d = {d} is below d_min({n}) = {dm}; use the numeric chain optimizer"
        )));
    }
    if d <= dm * (1.0 + 1e-12) {
        let r = 2.0 * d * (PI / (2.0 * (n as f64 + 1.0))).sin();
        let relay_positions = (1..=n)
            .map(|k| Point2::from_polar(d, PI - k as f64 * PI / (n as f64 + 1.0)))
            .collect();
        return Ok(ChainSolution {
            relay_positions,
            common_radius: r,
            cost: (n as f64 + 2.0) * r * r,
        });
    }
    let mut best: Option<(f64, Vec<Point2>)> = None;
    for j in 1..=(n + 1) / 2 {
        if let Some((r, pts)) = wrapped_chain(n, d, j) {
            if best.as_ref().map_or(true, |b| r < b.0) {
                best = Some((r, pts));
            }
        }
    }
    let (r, relay_positions) = best.ok_or_else(|| {
        Error::OutOfClosedForm(format!("no equal-radius chain of {n} relays found at d = {d}"))
    })?;
    Ok(ChainSolution {
        relay_positions,
        common_radius: r,
        cost: (n as f64 + 2.0) * r * r,
    })
}

/// Layout with `j` straight hops from each terminal to the clearance circle
/// and `n − 2(j − 1)` relays on it. Returns the radius and relay positions
/// when the layout closes up with every node clear of the obstacle.
fn wrapped_chain(n: usize, d: f64, j: usize) -> Option<(f64, Vec<Point2>)> {
    let on_circle = (n + 2).checked_sub(2 * j).filter(|&c| c >= 1)?;
    let jf = j as f64;
    // Angle of the first circle relay below the terminal's direction, and the
    // residual of the closure condition 2β + (c−1)α = π.
    let beta = |r: f64| -> Option<f64> {
        let rho = 1.0 + r;
        let c = (d * d + rho * rho - jf * jf * r * r) / (2.0 * d * rho);
        (c.abs() <= 1.0).then(|| c.acos())
    };
    let closure = |r: f64| -> Option<f64> {
        let rho = 1.0 + r;
        let alpha = 2.0 * (r / (2.0 * rho)).min(1.0).asin();
        Some(2.0 * beta(r)? + (on_circle as f64 - 1.0) * alpha - PI)
    };
    let lo0 = (d - 1.0) / (jf + 1.0);
    let hi0 = d - 1.0;
    let (f_lo, f_hi) = (closure(lo0 * (1.0 + 1e-15))?, closure(hi0)?);
    if !(f_lo <= 0.0 && f_hi >= 0.0) {
        return None;
    }
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match closure(mid) {
            Some(v) if v < 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => lo = mid,
        }
    }
    let r = 0.5 * (lo + hi);
    let rho = 1.0 + r;
    let b = beta(r)?;
    let alpha = 2.0 * (r / (2.0 * rho)).asin();
    let a = Point2::new(-d, 0.0);
    let first = Point2::from_polar(rho, PI - b);
    let mut pts: Vec<Point2> = (1..j).map(|k| a.lerp(first, k as f64 / jf)).collect();
    pts.extend((0..on_circle).map(|k| Point2::from_polar(rho, PI - b - k as f64 * alpha)));
    let tail: Vec<Point2> = pts[..j - 1].iter().rev().map(|p| Point2::new(-p.x, p.y)).collect();
    pts.extend(tail);
    if pts.iter().any(|p| p.norm() < rho - 1e-9 * rho) {
        return None;
    }
    Some((r, pts))
}

/// Feasibility of the symmetric two-relay layout with relays at
/// `[d,0] + (d−1)[−cos θ, sin θ]` and its mirror: whether each relay can
/// reach its terminal, and whether the relays can reach each other, without
/// its disk entering the unit obstacle.
pub fn two_relay_conditions(d: f64, theta: f64) -> (bool, bool) {
    let relay = Point2::new(d, 0.0) + Point2::new(-theta.cos(), theta.sin()) * (d - 1.0);
    let reach = relay.norm() - 1.0;
    let to_terminal = d - 1.0;
    let to_relay = 2.0 * (d - (d - 1.0) * theta.cos()).abs();
    (to_terminal <= reach, to_relay <= reach)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    MidpointSecondEdge,
    QuarterBisector,
    Circumcenter,
    NoRelay,
}

impl CandidateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateKind::MidpointSecondEdge => "midpoint_second_edge",
            CandidateKind::QuarterBisector => "quarter_bisector",
            CandidateKind::Circumcenter => "circumcenter",
            CandidateKind::NoRelay => "no_relay",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriRelaySolution {
    /// `None` for the no-relay candidate.
    pub relay_position: Option<Point2>,
    pub candidate_kind: CandidateKind,
    /// Radii of A, B, C and the relay.
    pub radii: [f64; 4],
    pub cost: f64,
}

/// Cheapest of the three relay candidates and the no-relay assignment.
pub fn three_terminal_one_relay(a: Point2, b: Point2, c: Point2) -> TriRelaySolution {
    let mut all = tri_candidates(a, b, c);
    all.sort_by(|x, y| x.cost.total_cmp(&y.cost));
    all.swap_remove(0)
}

/// Every evaluated candidate, in the order midpoint, quarter bisector,
/// circumcenter, no relay (absent candidates skipped).
pub fn tri_candidates(a: Point2, b: Point2, c: Point2) -> Vec<TriRelaySolution> {
    let pts = [a, b, c];
    let mut out = Vec::with_capacity(4);

    // Normalize: longest edge to (0,0)–(1,0), third vertex above the axis.
    let edges = [(0usize, 1usize), (1, 2), (0, 2)];
    let len = |(i, j): (usize, usize)| pts[i].dist(pts[j]);
    let mut by_len = edges;
    by_len.sort_by(|&x, &y| len(x).total_cmp(&len(y)));
    let (li, lj) = by_len[2];
    let k = 3 - li - lj;
    let scale = len((li, lj));
    if scale == 0.0 {
        out.push(no_relay(pts));
        return out;
    }
    let ux = (pts[lj] - pts[li]) * (1.0 / scale);
    let mut uy = ux.perp();
    if (pts[k] - pts[li]).dot(uy) < 0.0 {
        uy = -uy;
    }
    let to_world = |p: Point2| pts[li] + (ux * p.x + uy * p.y) * scale;
    let local = |x: Point2| {
        let v = x - pts[li];
        Point2::new(v.dot(ux) / scale, v.dot(uy) / scale)
    };
    let cn = local(pts[k]);
    let q = cn.y;

    // (i) relay at the midpoint of the second edge, chain through the shortest.
    let (si, sj) = by_len[0];
    let (ti, tj) = by_len[1];
    let hub = if si == ti || si == tj { si } else { sj };
    let far_short = if hub == si { sj } else { si };
    let far_second = if hub == ti { tj } else { ti };
    let (ha, hc, hb) = (local(pts[hub]), local(pts[far_short]), local(pts[far_second]));
    let dn = ha.midpoint(hb);
    let ac2 = ha.dist_sq(hc);
    let ad2 = ha.dist_sq(dn);
    let bd2 = hb.dist_sq(dn);
    let mut radii = [0.0; 4];
    radii[far_short] = ac2.sqrt();
    radii[hub] = ad2.max(ac2).sqrt();
    radii[far_second] = bd2.sqrt();
    radii[3] = ad2.max(bd2).sqrt();
    out.push(TriRelaySolution {
        relay_position: Some(to_world(dn)),
        candidate_kind: CandidateKind::MidpointSecondEdge,
        radii: radii.map(|r| r * scale),
        cost: (ac2 + ad2.max(ac2) + bd2 + ad2.max(bd2)) * scale * scale,
    });

    // (ii) quarter height on the bisector of the longest edge.
    let local_pts = [local(pts[0]), local(pts[1]), local(pts[2])];
    out.push(star(local_pts, Point2::new(0.5, q / 4.0), scale, &to_world, CandidateKind::QuarterBisector));

    // (iii) circumcenter, equidistant from all three.
    if q > 1e-12 {
        let y = (cn.x * cn.x + q * q - cn.x) / (2.0 * q);
        out.push(star(local_pts, Point2::new(0.5, y), scale, &to_world, CandidateKind::Circumcenter));
    }

    out.push(no_relay(pts));
    out
}

fn star(
    local_pts: [Point2; 3],
    dn: Point2,
    scale: f64,
    to_world: &dyn Fn(Point2) -> Point2,
    kind: CandidateKind,
) -> TriRelaySolution {
    let d2 = local_pts.map(|p| p.dist_sq(dn));
    let max = d2.iter().copied().fold(0.0, f64::max);
    let radii = [d2[0].sqrt(), d2[1].sqrt(), d2[2].sqrt(), max.sqrt()];
    TriRelaySolution {
        relay_position: Some(to_world(dn)),
        candidate_kind: kind,
        radii: radii.map(|r| r * scale),
        cost: (d2.iter().sum::<f64>() + max) * scale * scale,
    }
}

fn no_relay(pts: [Point2; 3]) -> TriRelaySolution {
    let r = brute_force_radii(&pts, &[]).expect("three points are within the brute-force limit");
    TriRelaySolution {
        relay_position: None,
        candidate_kind: CandidateKind::NoRelay,
        radii: [r[0], r[1], r[2], 0.0],
        cost: r.iter().map(|x| x * x).sum(),
    }
}
