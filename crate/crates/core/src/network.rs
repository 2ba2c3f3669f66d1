//! Scenario and network-state model: transmit cost, obstacle feasibility,
//! the directed communication graph, squared-distance MSTs and range
//! assignments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Disk, Point2, EPS};

/// A problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub terminals: Vec<Point2>,
    pub obstacles: Vec<Disk>,
    pub relay_budget: usize,
    pub units: String,
}

impl Scenario {
    /// Builds and validates a scenario.
    pub fn new(terminals: Vec<Point2>, obstacles: Vec<Disk>, relay_budget: usize) -> Result<Self> {
        let s = Self {
            terminals,
            obstacles,
            relay_budget,
            units: "km".into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.terminals.len() < 2 {
            return bad(format!("need at least 2 terminals, got {}", self.terminals.len()));
        }
        for (i, t) in self.terminals.iter().enumerate() {
            if !t.is_finite() {
                return bad(format!("terminal {i} has non-finite coordinates"));
            }
        }
        for (j, o) in self.obstacles.iter().enumerate() {
            if !o.center.is_finite() || !o.radius.is_finite() {
                return bad(format!("obstacle {j} has non-finite parameters"));
            }
            if o.radius <= 0.0 {
                return bad(format!("obstacle {j} has non-positive radius {}", o.radius));
            }
        }
        for (i, t) in self.terminals.iter().enumerate() {
            if let Some(j) = self.obstacles.iter().position(|o| o.contains_strictly(*t)) {
                return bad(format!("terminal {i} lies inside obstacle {j}"));
            }
            if let Some(k) = self.terminals[..i].iter().position(|u| u.dist(*t) <= EPS) {
                return bad(format!("terminal {i} duplicates terminal {k}"));
            }
        }
        for (j, o) in self.obstacles.iter().enumerate() {
            if let Some(k) = self.obstacles[..j].iter().position(|q| {
                q.center.dist(o.center) <= EPS && (q.radius - o.radius).abs() <= EPS
            }) {
                return bad(format!("obstacle {j} coincides with obstacle {k}"));
            }
        }
        Ok(())
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }
}

/// Relay positions and per-node radii. Node ids run over terminals first,
/// then relays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub relay_positions: Vec<Point2>,
    pub terminal_radii: Vec<f64>,
    pub relay_radii: Vec<f64>,
    pub active: Vec<bool>,
}

impl NetworkState {
    /// All relays active, all radii zero.
    pub fn new(terminals: usize, relays: Vec<Point2>) -> Self {
        let n = relays.len();
        Self {
            relay_positions: relays,
            terminal_radii: vec![0.0; terminals],
            relay_radii: vec![0.0; n],
            active: vec![true; n],
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Positions of terminals followed by active relays, with the relay index
    /// each relay entry came from.
    pub fn live_nodes(&self, s: &Scenario) -> (Vec<Point2>, Vec<Option<usize>>) {
        let mut pos = s.terminals.clone();
        let mut origin = vec![None; pos.len()];
        for (j, &p) in self.relay_positions.iter().enumerate() {
            if self.active[j] {
                pos.push(p);
                origin.push(Some(j));
            }
        }
        (pos, origin)
    }

    /// Radii of terminals followed by active relays.
    pub fn live_radii(&self) -> Vec<f64> {
        let mut r = self.terminal_radii.clone();
        r.extend(
            self.relay_radii
                .iter()
                .zip(&self.active)
                .filter(|(_, &a)| a)
                .map(|(&x, _)| x),
        );
        r
    }

    /// Writes radii for terminals and active relays (in `live_nodes` order)
    /// and zeroes inactive relays.
    pub fn set_live_radii(&mut self, radii: &[f64]) {
        let m = self.terminal_radii.len();
        self.terminal_radii.copy_from_slice(&radii[..m]);
        let mut k = m;
        for j in 0..self.relay_radii.len() {
            if self.active[j] {
                self.relay_radii[j] = radii[k];
                k += 1;
            } else {
                self.relay_radii[j] = 0.0;
            }
        }
    }
}

/// Transmit cost, or the marker for an obstacle violation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cost {
    Feasible(f64),
    Infeasible,
}

impl Cost {
    pub fn value(self) -> Option<f64> {
        match self {
            Cost::Feasible(c) => Some(c),
            Cost::Infeasible => None,
        }
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, Cost::Feasible(_))
    }
}

/// True when a transmission disk of radius `r` at `p` enters an obstacle.
pub fn overlaps_obstacle(p: Point2, r: f64, obstacles: &[Disk]) -> bool {
    obstacles
        .iter()
        .any(|o| o.center.dist(p) < o.radius + r - EPS)
}

/// Sum of squared radii, provided every transmission disk keeps clear of
/// every obstacle (tangency allowed).
pub fn cost(s: &Scenario, st: &NetworkState) -> Cost {
    let (pos, _) = st.live_nodes(s);
    let radii = st.live_radii();
    if pos
        .iter()
        .zip(&radii)
        .any(|(&p, &r)| overlaps_obstacle(p, r, &s.obstacles))
    {
        return Cost::Infeasible;
    }
    Cost::Feasible(radii.iter().map(|r| r * r).sum())
}

/// Directed reachability: `u → v` iff `|u − v| ≤ r_u + 1e-9`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommGraph {
    pub adj: Vec<Vec<usize>>,
}

impl CommGraph {
    pub fn new(positions: &[Point2], radii: &[f64]) -> Self {
        let n = positions.len();
        let adj = (0..n)
            .map(|u| {
                (0..n)
                    .filter(|&v| v != u && positions[u].dist(positions[v]) <= radii[u] + EPS)
                    .collect()
            })
            .collect();
        Self { adj }
    }

    pub fn is_strongly_connected(&self) -> bool {
        let n = self.adj.len();
        if n <= 1 {
            return true;
        }
        let mut rev = vec![Vec::new(); n];
        for (u, vs) in self.adj.iter().enumerate() {
            for &v in vs {
                rev[v].push(u);
            }
        }
        all_reached(&self.adj) && all_reached(&rev)
    }
}

fn all_reached(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// Strong connectivity over terminals and active relays.
pub fn is_strongly_connected(s: &Scenario, st: &NetworkState) -> bool {
    let (pos, _) = st.live_nodes(s);
    CommGraph::new(&pos, &st.live_radii()).is_strongly_connected()
}

/// Minimum spanning tree under squared Euclidean weights (Prim). Among equal
/// weights the edge with the smaller (i, j) pair wins. Edges come back as
/// (i, j) with i < j, in insertion order.
pub fn mst_squared(points: &[Point2]) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut key: Vec<f64> = points.iter().map(|p| points[0].dist_sq(*p)).collect();
    let mut par = vec![0usize; n];
    let mut rest: Vec<usize> = (1..n).collect();
    let mut edges = Vec::with_capacity(n - 1);
    // Order on candidate edges: weight, then lower id, then higher id.
    let before = |v: usize, b: usize, key: &[f64], par: &[usize]| {
        key[v] < key[b] || (key[v] == key[b] && (par[v].min(v), par[v].max(v)) < (par[b].min(b), par[b].max(b)))
    };
    let mut at = (0..rest.len()).reduce(|b, i| if before(rest[i], rest[b], &key, &par) { i } else { b });
    while let Some(i) = at {
        let v = rest.swap_remove(i);
        let u = par[v];
        edges.push((u.min(v), u.max(v)));
        let pv = points[v];
        at = None;
        for (j, &x) in rest.iter().enumerate() {
            let w = pv.dist_sq(points[x]);
            if w < key[x] || (w == key[x] && v < par[x]) {
                key[x] = w;
                par[x] = v;
            }
            if at.map_or(true, |b| before(x, rest[b], &key, &par)) {
                at = Some(j);
            }
        }
    }
    edges
}

/// Each node gets the length of its longest incident tree edge.
pub fn range_assignment_from_tree(tree: &[(usize, usize)], points: &[Point2]) -> Vec<f64> {
    let mut r = vec![0.0; points.len()];
    for &(u, v) in tree {
        let d = points[u].dist(points[v]);
        r[u] = f64::max(r[u], d);
        r[v] = f64::max(r[v], d);
    }
    r
}

pub fn assignment_cost(radii: &[f64]) -> f64 {
    radii.iter().map(|r| r * r).sum()
}

/// Total squared length of the squared-weight MST, a lower bound on the
/// optimum range-assignment cost.
pub fn mst_squared_weight(points: &[Point2]) -> f64 {
    mst_squared(points)
        .iter()
        .map(|&(u, v)| points[u].dist_sq(points[v]))
        .sum()
}

pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Exact minimum-cost radii for fixed positions (terminals then active
/// relays), searching radii among pairwise distances. Radii that would
/// enter an obstacle are never considered.
pub fn brute_force_optimum(s: &Scenario, st: &NetworkState) -> Result<Vec<f64>> {
    let (pos, _) = st.live_nodes(s);
    brute_force_radii(&pos, &s.obstacles)
}

pub fn brute_force_radii(pos: &[Point2], obstacles: &[Disk]) -> Result<Vec<f64>> {
    let n = pos.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::BudgetExceeded(format!(
            "{n} nodes exceed the brute-force limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    if n <= 1 {
        return Ok(vec![0.0; n]);
    }
    let candidates: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            let mut c: Vec<f64> = (0..n)
                .filter(|&v| v != u)
                .map(|v| pos[u].dist(pos[v]))
                .filter(|&r| !overlaps_obstacle(pos[u], r, obstacles))
                .collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return Err(Error::NoSolution("some node cannot reach any other node".into()));
    }
    // suffix[i]: cheapest possible cost of nodes i.. (first candidate each)
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + candidates[i][0] * candidates[i][0];
    }
    let mut search = Search {
        pos,
        candidates: &candidates,
        suffix: &suffix,
        current: vec![0.0; n],
        best: None,
    };
    let mst = range_assignment_from_tree(&mst_squared(pos), pos);
    if !mst.iter().zip(pos).any(|(&r, &p)| overlaps_obstacle(p, r, obstacles)) {
        search.best = Some((assignment_cost(&mst), mst));
    }
    search.run(0, 0.0);
    search
        .best
        .map(|(_, r)| r)
        .ok_or_else(|| Error::NoSolution("no feasible strongly connected assignment".into()))
}

struct Search<'a> {
    pos: &'a [Point2],
    candidates: &'a [Vec<f64>],
    suffix: &'a [f64],
    current: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
}

impl Search<'_> {
    fn run(&mut self, i: usize, cost: f64) {
        let bound = self.best.as_ref().map_or(f64::INFINITY, |b| b.0);
        if cost + self.suffix[i] >= bound - 1e-12 {
            return;
        }
        if i == self.pos.len() {
            if CommGraph::new(self.pos, &self.current).is_strongly_connected() {
                self.best = Some((cost, self.current.clone()));
            }
            return;
        }
        for k in 0..self.candidates[i].len() {
            let r = self.candidates[i][k];
            self.current[i] = r;
            self.run(i + 1, cost + r * r);
        }
    }
}

/// Instance on which the MST assignment is twice the optimum in the limit:
/// a unit-spaced spine `a_0..a_k` (k = n/2) and offset points `b_1..b_{k-1}`
/// at distance `eps` from `a_i` and just under 1 from `a_{i+1}`.
/// Returns the points and the explicit assignment (spine 1, offsets `eps`).
pub fn tight_family(n: usize, eps: f64) -> (Vec<Point2>, Vec<f64>) {
    let k = n / 2;
    let t: f64 = 1.0 - 1e-9;
    let cos = (1.0 + eps * eps - t * t) / (2.0 * eps);
    let angle = cos.clamp(-1.0, 1.0).acos();
    let mut pts: Vec<Point2> = (0..=k).map(|i| Point2::new(i as f64, 0.0)).collect();
    let mut radii = vec![1.0; k + 1];
    for i in 1..k {
        pts.push(Point2::new(i as f64, 0.0) + Point2::from_polar(eps, angle));
        radii.push(eps);
    }
    (pts, radii)
}
