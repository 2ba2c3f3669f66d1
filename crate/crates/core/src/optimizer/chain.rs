//! Numeric optimizer for a fixed chain topology: terminal, relays, terminal,
//! each node linked to the next in both directions.
//!
//! Positions and radii are optimized jointly by an augmented Lagrangian
//! (Powell–Hestenes–Rockafellar) outer loop with a damped Newton inner
//! solve on the exact Hessian.

use serde::Serialize;

use crate::geometry::{Disk, Point2};

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Largest acceptable constraint violation, relative to the terminal
    /// separation.
    pub feasibility_tol: f64,
    /// Relative cost change between outer iterations that ends the run.
    pub cost_tol: f64,
    pub gradient_tol: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            max_outer: 60,
            max_inner: 200,
            feasibility_tol: 1e-10,
            cost_tol: 1e-12,
            gradient_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainResult {
    pub relay_positions: Vec<Point2>,
    /// Terminal `a`, relays in order, terminal `b`.
    pub radii: Vec<f64>,
    pub cost: f64,
    pub max_violation: f64,
    /// False when the constraints could not be met (the chain is too short to
    /// get around the obstacles) or the iteration limit was hit.
    pub converged: bool,
}

/// Curvature of one constraint: `sign · (I − uuᵀ)/len` on the listed
/// coordinate blocks, with the block pattern of a difference `q − p`.
struct Curvature {
    blocks: [Option<(usize, f64)>; 2],
    m: [[f64; 2]; 2],
}

struct Con {
    g: f64,
    grad: Vec<(usize, f64)>,
    curv: Option<Curvature>,
}

struct Problem<'a> {
    a: Point2,
    b: Point2,
    obstacles: &'a [Disk],
    n: usize,
}

fn projector(u: Point2, len: f64, sign: f64) -> [[f64; 2]; 2] {
    let s = sign / len;
    [
        [s * (1.0 - u.x * u.x), -s * u.x * u.y],
        [-s * u.x * u.y, s * (1.0 - u.y * u.y)],
    ]
}

impl Problem<'_> {
    fn node(&self, z: &[f64], i: usize) -> Point2 {
        if i == 0 {
            self.a
        } else if i == self.n + 1 {
            self.b
        } else {
            Point2::new(z[2 * (i - 1)], z[2 * (i - 1) + 1])
        }
    }

    /// Coordinate offset of node `i` when it is a relay.
    fn coord(&self, i: usize) -> Option<usize> {
        (1..=self.n).contains(&i).then(|| 2 * (i - 1))
    }

    fn radius_index(&self, i: usize) -> usize {
        2 * self.n + i
    }

    fn dim(&self) -> usize {
        3 * self.n + 2
    }

    /// All constraints `g ≤ 0`: two-way links, obstacle clearance, and
    /// non-negative radii.
    fn constraints(&self, z: &[f64]) -> Vec<Con> {
        let n = self.n;
        let mut out = Vec::new();
        for k in 0..=n {
            let (p, q) = (self.node(z, k), self.node(z, k + 1));
            let diff = q - p;
            let len = diff.norm().max(1e-300);
            let u = diff * (1.0 / len);
            for owner in [k, k + 1] {
                let mut grad = Vec::with_capacity(5);
                if let Some(c) = self.coord(k) {
                    grad.push((c, -u.x));
                    grad.push((c + 1, -u.y));
                }
                if let Some(c) = self.coord(k + 1) {
                    grad.push((c, u.x));
                    grad.push((c + 1, u.y));
                }
                grad.push((self.radius_index(owner), -1.0));
                out.push(Con {
                    g: len - z[self.radius_index(owner)],
                    grad,
                    curv: Some(Curvature {
                        blocks: [self.coord(k).map(|c| (c, -1.0)), self.coord(k + 1).map(|c| (c, 1.0))],
                        m: projector(u, len, 1.0),
                    }),
                });
            }
        }
        for i in 0..n + 2 {
            let p = self.node(z, i);
            for o in self.obstacles {
                let diff = p - o.center;
                let dist = diff.norm().max(1e-300);
                let u = diff * (1.0 / dist);
                let mut grad = Vec::with_capacity(3);
                if let Some(c) = self.coord(i) {
                    grad.push((c, -u.x));
                    grad.push((c + 1, -u.y));
                }
                grad.push((self.radius_index(i), 1.0));
                out.push(Con {
                    g: o.radius + z[self.radius_index(i)] - dist,
                    grad,
                    curv: Some(Curvature {
                        blocks: [self.coord(i).map(|c| (c, 1.0)), None],
                        m: projector(u, dist, -1.0),
                    }),
                });
            }
            out.push(Con {
                g: -z[self.radius_index(i)],
                grad: vec![(self.radius_index(i), -1.0)],
                curv: None,
            });
        }
        out
    }

    fn objective(&self, z: &[f64]) -> f64 {
        z[2 * self.n..].iter().map(|r| r * r).sum()
    }

    fn max_violation(&self, z: &[f64]) -> f64 {
        self.constraints(z).iter().fold(0.0, |v, c| v.max(c.g))
    }

    /// Augmented Lagrangian value, optionally with gradient and Hessian.
    fn lagrangian(&self, z: &[f64], lambda: &[f64], mu: f64, deriv: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let d = z.len();
        let cons = self.constraints(z);
        let mut val = self.objective(z);
        for (c, l) in cons.iter().zip(lambda) {
            let shifted = c.g + l / mu;
            if shifted > 0.0 {
                val += 0.5 * mu * shifted * shifted;
            }
            val -= 0.5 * l * l / mu;
        }
        let Some((grad, hess)) = deriv else { return val };
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        for i in 0..=self.n + 1 {
            let k = self.radius_index(i);
            grad[k] += 2.0 * z[k];
            hess[k * d + k] += 2.0;
        }
        for (c, l) in cons.iter().zip(lambda) {
            let shifted = c.g + l / mu;
            if shifted <= 0.0 {
                continue;
            }
            for &(i, gi) in &c.grad {
                grad[i] += mu * shifted * gi;
                for &(j, gj) in &c.grad {
                    hess[i * d + j] += mu * gi * gj;
                }
            }
            if let Some(cv) = &c.curv {
                let w = mu * shifted;
                for &(bi, si) in cv.blocks.iter().flatten() {
                    for &(bj, sj) in cv.blocks.iter().flatten() {
                        for r in 0..2 {
                            for s in 0..2 {
                                hess[(bi + r) * d + bj + s] += w * si * sj * cv.m[r][s];
                            }
                        }
                    }
                }
            }
        }
        val
    }
}

/// Minimises total squared radius for the chain `a → relays → b` subject to
/// link reachability in both directions and obstacle clearance.
pub fn optimize_chain(
    a: Point2,
    b: Point2,
    obstacles: &[Disk],
    initial_relays: &[Point2],
    cfg: &ChainConfig,
) -> ChainResult {
    let n = initial_relays.len();
    let pb = Problem { a, b, obstacles, n };
    let scale = a.dist(b).max(1e-12);
    let mut z = vec![0.0; pb.dim()];
    for (k, p) in initial_relays.iter().enumerate() {
        z[2 * k] = p.x;
        z[2 * k + 1] = p.y;
    }
    for i in 0..=n + 1 {
        let mut r: f64 = 0.0;
        if i > 0 {
            r = r.max(pb.node(&z, i).dist(pb.node(&z, i - 1)));
        }
        if i <= n {
            r = r.max(pb.node(&z, i).dist(pb.node(&z, i + 1)));
        }
        z[pb.radius_index(i)] = r;
    }

    let mut lambda = vec![0.0; pb.constraints(&z).len()];
    let mut mu = 10.0;
    let mut last_violation = f64::INFINITY;
    let mut last_cost = f64::INFINITY;
    let mut converged = false;
    for _ in 0..cfg.max_outer {
        newton(&pb, &mut z, &lambda, mu, cfg);
        let cons = pb.constraints(&z);
        let violation = cons.iter().fold(0.0f64, |v, c| v.max(c.g));
        let cost = pb.objective(&z);
        for (l, c) in lambda.iter_mut().zip(&cons) {
            *l = (*l + mu * c.g).max(0.0);
        }
        if violation <= cfg.feasibility_tol * scale && (cost - last_cost).abs() <= cfg.cost_tol * cost.max(1e-300) {
            converged = true;
            break;
        }
        if violation > 0.25 * last_violation {
            mu *= 10.0;
        }
        last_violation = violation;
        last_cost = cost;
        if mu > 1e14 {
            break;
        }
    }
    let radii = z[2 * n..].to_vec();
    ChainResult {
        relay_positions: (1..=n).map(|i| pb.node(&z, i)).collect(),
        cost: radii.iter().map(|r| r * r).sum(),
        radii,
        max_violation: pb.max_violation(&z).max(0.0),
        converged,
    }
}

/// In-place Cholesky factorisation; false when the matrix is not positive
/// definite.
fn cholesky(a: &mut [f64], d: usize) -> bool {
    for j in 0..d {
        let mut s = a[j * d + j];
        for k in 0..j {
            s -= a[j * d + k] * a[j * d + k];
        }
        if !(s > 0.0) {
            return false;
        }
        let l = s.sqrt();
        a[j * d + j] = l;
        for i in j + 1..d {
            let mut t = a[i * d + j];
            for k in 0..j {
                t -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = t / l;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], d: usize, b: &mut [f64]) {
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
    for i in (0..d).rev() {
        let mut s = b[i];
        for k in i + 1..d {
            s -= l[k * d + i] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
}

/// Damped Newton minimisation of the augmented Lagrangian, shifting the
/// Hessian diagonal until it factors.
fn newton(pb: &Problem, z: &mut [f64], lambda: &[f64], mu: f64, cfg: &ChainConfig) {
    let d = z.len();
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut factor = vec![0.0; d * d];
    let mut step = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut shift = 0.0;
    for _ in 0..cfg.max_inner {
        let f = pb.lagrangian(z, lambda, mu, Some((&mut grad, &mut hess)));
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= cfg.gradient_tol * (1.0 + f.abs()) {
            return;
        }
        let max_diag = (0..d).map(|i| hess[i * d + i].abs()).fold(1.0, f64::max);
        shift = if shift > 0.0 { shift * 0.1 } else { 0.0 };
        loop {
            factor.copy_from_slice(&hess);
            for i in 0..d {
                factor[i * d + i] += shift;
            }
            if cholesky(&mut factor, d) {
                break;
            }
            shift = if shift == 0.0 { 1e-10 * max_diag } else { shift * 10.0 };
        }
        for i in 0..d {
            step[i] = -grad[i];
        }
        cholesky_solve(&factor, d, &mut step);
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            for i in 0..d {
                trial[i] = z[i] + t * step[i];
            }
            if pb.lagrangian(&trial, lambda, mu, None) <= f + 1e-4 * t * slope {
                z.copy_from_slice(&trial);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            return;
        }
    }
}
