//! Heuristic network evolution: MST-driven relay moves, star creation and
//! branch equilibration, and the no-overlap movement filter.

pub mod chain;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{tri_candidates, CandidateKind};
use crate::error::{Error, Result};
use crate::geometry::{Disk, Point2, EPS};
use crate::network::{mst_squared, overlaps_obstacle, NetworkState, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_steps: usize,
    pub stability_window: usize,
    pub stability_rel_tol: f64,
    pub leaf_steer_rate: f64,
    pub neighbor_move_rate: f64,
    pub stuck_steps_before_radial: usize,
    pub equilibration_enabled: bool,
    pub seed: u64,
    /// Record the MST every this many steps; 0 disables snapshots.
    pub snapshot_stride: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_steps: 2000,
            stability_window: 25,
            stability_rel_tol: 1e-5,
            leaf_steer_rate: 0.2,
            neighbor_move_rate: 0.5,
            stuck_steps_before_radial: 5,
            equilibration_enabled: true,
            seed: 0,
            snapshot_stride: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| r > 0.0 && r <= 1.0;
        if !rate_ok(self.leaf_steer_rate) || !rate_ok(self.neighbor_move_rate) {
            return Err(Error::InvalidScenario("movement rates must lie in (0, 1]".into()));
        }
        if self.stability_window == 0 {
            return Err(Error::InvalidScenario("stability window must be at least 1".into()));
        }
        if !(self.stability_rel_tol > 0.0) {
            return Err(Error::InvalidScenario("stability tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopologySnapshot {
    pub step: usize,
    /// Tree edges over node ids (terminals, then relays by relay index).
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OptimizerTrace {
    pub cost: Vec<f64>,
    pub feasible: Vec<bool>,
    pub active_relays: Vec<usize>,
    pub snapshots: Vec<TopologySnapshot>,
    pub converged: bool,
    pub migrations: usize,
    pub stars: usize,
    pub absorptions: usize,
}

impl OptimizerTrace {
    pub fn steps(&self) -> usize {
        self.cost.len()
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.cost.last().copied()
    }

    /// `step,cost,feasible,n_active_relays` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,cost,feasible,n_active_relays\n");
        for i in 0..self.cost.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                i, self.cost[i], self.feasible[i], self.active_relays[i]
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchStats {
    pub id: usize,
    pub length: f64,
    pub interior: usize,
    pub avg_radius: f64,
}

/// Squared-distance MST over the live nodes, indexed by global node id
/// (terminals `0..m`, relay `j` at `m + j`). Dead nodes have no edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Mst {
    pub edges: Vec<(usize, usize)>,
    pub adj: Vec<Vec<usize>>,
}

impl Mst {
    pub fn build(pos: &[Point2], alive: &[bool]) -> Self {
        let ids: Vec<usize> = (0..pos.len()).filter(|&i| alive[i]).collect();
        let pts: Vec<Point2> = ids.iter().map(|&i| pos[i]).collect();
        let mut adj = vec![Vec::new(); pos.len()];
        let edges: Vec<(usize, usize)> = mst_squared(&pts)
            .into_iter()
            .map(|(a, b)| (ids[a], ids[b]))
            .collect();
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Self { edges, adj }
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// Longest incident edge per node.
    pub fn radii(&self, pos: &[Point2]) -> Vec<f64> {
        let mut r = vec![0.0; pos.len()];
        for &(u, v) in &self.edges {
            let d = pos[u].dist(pos[v]);
            r[u] = f64::max(r[u], d);
            r[v] = f64::max(r[v], d);
        }
        r
    }

    /// Maximal paths whose interior nodes are degree-2 relays. Each path
    /// starts at its smaller endpoint id.
    pub fn branches(&self, m: usize) -> Vec<Vec<usize>> {
        let stop = |u: usize| u < m || self.degree(u) != 2;
        let mut out = Vec::new();
        for a in 0..self.adj.len() {
            if self.adj[a].is_empty() || !stop(a) {
                continue;
            }
            for &first in &self.adj[a] {
                let mut path = vec![a, first];
                let (mut prev, mut cur) = (a, first);
                while !stop(cur) {
                    let next = if self.adj[cur][0] == prev { self.adj[cur][1] } else { self.adj[cur][0] };
                    prev = cur;
                    cur = next;
                    path.push(cur);
                }
                // Each branch is walked from both ends; keep the walk from the
                // smaller one.
                if a < cur {
                    out.push(path);
                }
            }
        }
        out
    }
}

pub fn branch_stats(pos: &[Point2], branches: &[Vec<usize>]) -> Vec<BranchStats> {
    branches
        .iter()
        .enumerate()
        .map(|(id, b)| {
            let length: f64 = b.windows(2).map(|w| pos[w[0]].dist(pos[w[1]])).sum();
            let interior = b.len() - 2;
            BranchStats {
                id,
                length,
                interior,
                avg_radius: length / (interior as f64 + 1.0),
            }
        })
        .collect()
}

/// Two-branch cost change `L_s²/N_s + L_l²/(N_l+2) − L_s²/(N_s+1) − L_l²/(N_l+1)`
/// for moving one relay from the dense branch to the sparse one, or `None`
/// when the dense branch has no relay to give.
pub fn migration_delta(l_sml: f64, n_sml: usize, l_lrg: f64, n_lrg: usize) -> Option<f64> {
    if n_sml == 0 {
        return None;
    }
    let (ns, nl) = (n_sml as f64, n_lrg as f64);
    Some(l_sml * l_sml / ns + l_lrg * l_lrg / (nl + 2.0) - l_sml * l_sml / (ns + 1.0) - l_lrg * l_lrg / (nl + 1.0))
}

/// Integer density criterion `⌈L_lrg/R_lrg⌉ < ⌈L_sml/R_sml⌉`.
pub fn migration_criterion(lrg: &BranchStats, sml: &BranchStats) -> bool {
    let c = |b: &BranchStats| (b.length / b.avg_radius - 1e-9).ceil();
    c(lrg) < c(sml)
}

/// Displacements for relays on leaf branches that end in a relay: each moves
/// toward the branch's other endpoint by `leaf_steer_rate` of the distance.
pub fn steer_leaf_relays(pos: &[Point2], mst: &Mst, m: usize, cfg: &OptimizerConfig) -> Vec<(usize, Point2)> {
    let mut out = Vec::new();
    for b in mst.branches(m) {
        let (a, z) = (b[0], *b.last().unwrap());
        let leaf_a = a >= m && mst.degree(a) == 1;
        let leaf_z = z >= m && mst.degree(z) == 1;
        let (target, movers): (usize, Vec<usize>) = match (leaf_a, leaf_z) {
            (true, false) => (z, b[..b.len() - 1].to_vec()),
            (false, true) => (a, b[1..].to_vec()),
            _ => continue,
        };
        for u in movers {
            out.push((u, (pos[target] - pos[u]) * cfg.leaf_steer_rate));
        }
    }
    out.sort_by_key(|&(u, _)| u);
    out
}

/// Step toward the centroid of the relay's MST neighbours.
pub fn average_neighbor_move(relay: usize, pos: &[Point2], mst: &Mst, cfg: &OptimizerConfig) -> Point2 {
    let nb = &mst.adj[relay];
    if nb.is_empty() {
        return Point2::new(0.0, 0.0);
    }
    let sum = nb.iter().fold(Point2::new(0.0, 0.0), |acc, &v| acc + pos[v]);
    let centroid = sum * (1.0 / nb.len() as f64);
    (centroid - pos[relay]) * cfg.neighbor_move_rate
}

fn overlap_count(p: Point2, r: f64, obstacles: &[Disk]) -> usize {
    obstacles
        .iter()
        .filter(|o| o.center.dist(p) < o.radius + r - EPS)
        .count()
}

/// Obstacle-aware filter for one relay's proposed displacement. `stuck` is
/// the number of consecutive past steps in which the relay did not move.
pub fn no_overlap_adjust(
    proposed: Point2,
    pos: Point2,
    radius: f64,
    obstacles: &[Disk],
    stuck: usize,
    cfg: &OptimizerConfig,
) -> Point2 {
    let zero = Point2::new(0.0, 0.0);
    let hit: Vec<&Disk> = obstacles
        .iter()
        .filter(|o| o.center.dist(pos) < o.radius + radius - EPS)
        .collect();
    if hit.is_empty() {
        return if overlaps_obstacle(pos + proposed, radius, obstacles) { zero } else { proposed };
    }
    let mut dir = zero;
    let mut depth: f64 = 0.0;
    for o in &hit {
        let away = pos - o.center;
        let n = away.norm();
        dir = dir + if n > 0.0 { away * (1.0 / n) } else { Point2::new(1.0, 0.0) };
        depth = depth.max(o.radius + radius - n);
    }
    if dir.norm() < 1e-12 {
        // Symmetric squeeze: escape perpendicular to the first obstacle axis.
        dir = (pos - hit[0].center).perp();
        if dir.norm() < 1e-12 {
            dir = Point2::new(0.0, 1.0);
        }
    }
    let radial = dir.normalized() * (depth + 1e-6 * radius.max(1.0));
    let now = hit.len();
    let after = overlap_count(pos + radial, radius, obstacles);
    if after > now && stuck < cfg.stuck_steps_before_radial {
        zero
    } else {
        radial
    }
}

/// Uniform relay positions in the terminals' bounding box, avoiding obstacle
/// interiors.
pub fn random_initial_state(s: &Scenario, n: usize, seed: u64) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = bbox(&s.terminals);
    let relays = (0..n)
        .map(|_| {
            let mut p = lo;
            for _ in 0..1000 {
                p = Point2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
                if !s.obstacles.iter().any(|o| o.contains_strictly(p)) {
                    break;
                }
            }
            p
        })
        .collect();
    NetworkState::new(s.terminal_count(), relays)
}

fn bbox(pts: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Interior angles (radians, ascending) at every relay of MST degree 3.
pub fn junction_angles(s: &Scenario, st: &NetworkState) -> Vec<(usize, [f64; 3])> {
    let w = Work::new(s, st);
    let mst = Mst::build(&w.pos, &w.alive);
    let m = s.terminal_count();
    (m..w.pos.len())
        .filter(|&u| mst.degree(u) == 3)
        .map(|u| {
            let mut dirs: Vec<f64> = mst.adj[u].iter().map(|&v| (w.pos[v] - w.pos[u]).angle()).collect();
            dirs.sort_by(f64::total_cmp);
            let tau = std::f64::consts::TAU;
            let mut a = [dirs[1] - dirs[0], dirs[2] - dirs[1], dirs[0] + tau - dirs[2]];
            a.sort_by(f64::total_cmp);
            (u - m, a)
        })
        .collect()
}

/// Degree of every live node in the final MST (terminals first, then relays
/// by relay index; inactive relays report 0).
pub fn mst_degrees(s: &Scenario, st: &NetworkState) -> Vec<usize> {
    let w = Work::new(s, st);
    let mst = Mst::build(&w.pos, &w.alive);
    (0..w.pos.len()).map(|u| mst.degree(u)).collect()
}

/// Working copy of a state with global node ids.
#[derive(Clone)]
struct Work<'a> {
    s: &'a Scenario,
    m: usize,
    pos: Vec<Point2>,
    alive: Vec<bool>,
}

impl<'a> Work<'a> {
    fn new(s: &'a Scenario, st: &NetworkState) -> Self {
        let m = s.terminal_count();
        let mut pos = s.terminals.clone();
        pos.extend(&st.relay_positions);
        let mut alive = vec![true; m];
        alive.extend(&st.active);
        Self { s, m, pos, alive }
    }

    fn evaluate(&self, mst: &Mst) -> (f64, bool) {
        let r = mst.radii(&self.pos);
        let cost = r.iter().map(|x| x * x).sum();
        let feasible = (0..self.pos.len())
            .filter(|&u| self.alive[u])
            .all(|u| !overlaps_obstacle(self.pos[u], r[u], &self.s.obstacles));
        (cost, feasible)
    }

    fn into_state(self, mst: &Mst) -> NetworkState {
        let r = mst.radii(&self.pos);
        NetworkState {
            relay_positions: self.pos[self.m..].to_vec(),
            terminal_radii: r[..self.m].to_vec(),
            relay_radii: r[self.m..].to_vec(),
            active: self.alive[self.m..].to_vec(),
        }
    }

    /// One round of leaf steering and neighbour averaging (Jacobi update)
    /// with the obstacle filter. Updates the per-relay stuck counters.
    fn move_relays(&mut self, mst: &Mst, cfg: &OptimizerConfig, stuck: &mut [usize]) {
        let skip_junctions = cfg.equilibration_enabled;
        let steer = steer_leaf_relays(&self.pos, mst, self.m, cfg);
        let mut on_leaf = vec![None; self.pos.len()];
        for (u, d) in steer {
            on_leaf[u] = Some(d);
        }
        let radii = if self.s.obstacles.is_empty() { Vec::new() } else { mst.radii(&self.pos) };
        let mut disp = vec![Point2::new(0.0, 0.0); self.pos.len()];
        for u in self.m..self.pos.len() {
            if !self.alive[u] || (skip_junctions && mst.degree(u) == 3 && on_leaf[u].is_none()) {
                continue;
            }
            let mut d = on_leaf[u].unwrap_or_else(|| average_neighbor_move(u, &self.pos, mst, cfg));
            if !self.s.obstacles.is_empty() {
                d = no_overlap_adjust(d, self.pos[u], radii[u], &self.s.obstacles, stuck[u - self.m], cfg);
            }
            disp[u] = d;
        }
        for u in self.m..self.pos.len() {
            if !self.alive[u] {
                continue;
            }
            if disp[u].norm() > 0.0 {
                stuck[u - self.m] = 0;
                self.pos[u] = self.pos[u] + disp[u];
            } else {
                stuck[u - self.m] += 1;
            }
        }
    }
}

/// Step limit when relaxing a tentative star and its baseline.
const STAR_RELAX_STEPS: usize = 1000;
/// Steps before retrying a rejected star at the same terminal; doubles with
/// each refusal.
const STAR_COOLDOWN: usize = 50;
/// Relative one-step cost change under which the network counts as near
/// equilibrium for stars and migrations.
const NEAR_EQUILIBRIUM: f64 = 1e-3;
/// Smallest modelled relative gain for a migration; keeps nearly balanced
/// branches from trading a relay back and forth.
const MIGRATION_MARGIN: f64 = 1e-3;
/// A dangling relay this close (relative to the mean tree edge) to its
/// steering target is re-inserted into the network.
const ABSORB_FRACTION: f64 = 0.02;

/// Runs the evolution loop from `initial`.
pub fn optimize(s: &Scenario, initial: &NetworkState, cfg: &OptimizerConfig) -> (NetworkState, OptimizerTrace) {
    let mut w = Work::new(s, initial);
    let m = w.m;
    let n = w.pos.len() - m;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = OptimizerTrace::default();
    let mut stuck = vec![0usize; n];
    let mut overlapping_for = vec![0usize; n];
    let mut star_ready = vec![(0usize, 0u32); m];
    let mut stable_run = 0usize;

    for step in 0..cfg.max_steps {
        let mut mst = Mst::build(&w.pos, &w.alive);
        let near_eq = trace.cost.len() >= 2 && {
            let k = trace.cost.len();
            rel_change(trace.cost[k - 2], trace.cost[k - 1]) < NEAR_EQUILIBRIUM
        };

        if cfg.equilibration_enabled {
            let changed = equilibrate_inner(&mut w, &mst, cfg, near_eq, step, &mut star_ready, &mut trace);
            if changed {
                mst = Mst::build(&w.pos, &w.alive);
            }
        }

        w.move_relays(&mst, cfg, &mut stuck);
        absorb_dangling(&mut w, &mst, cfg, &mut rng, &mut trace);

        // Relays that stay inside an obstacle's margin for too long are
        // switched off.
        if !s.obstacles.is_empty() {
            let r = mst.radii(&w.pos);
            for j in 0..n {
                let u = m + j;
                if !w.alive[u] {
                    continue;
                }
                if overlaps_obstacle(w.pos[u], r[u], &s.obstacles) {
                    overlapping_for[j] += 1;
                    if overlapping_for[j] >= 10 * cfg.stuck_steps_before_radial {
                        w.alive[u] = false;
                    }
                } else {
                    overlapping_for[j] = 0;
                }
            }
        }

        let mst = Mst::build(&w.pos, &w.alive);
        let (c, feasible) = w.evaluate(&mst);
        if let Some(&prev) = trace.cost.last() {
            if rel_change(prev, c) < cfg.stability_rel_tol {
                stable_run += 1;
            } else {
                stable_run = 0;
            }
        }
        trace.cost.push(c);
        trace.feasible.push(feasible);
        trace.active_relays.push(w.alive[m..].iter().filter(|&&a| a).count());
        if cfg.snapshot_stride > 0 && step % cfg.snapshot_stride == 0 {
            trace.snapshots.push(TopologySnapshot { step, edges: mst.edges.clone() });
        }
        if stable_run >= cfg.stability_window && feasible {
            trace.converged = true;
            break;
        }
    }
    let mst = Mst::build(&w.pos, &w.alive);
    (w.into_state(&mst), trace)
}

fn rel_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// One pass of star creation, junction equilibration and branch migration
/// on a copy of the state. Returns the updated state.
pub fn equilibrate(s: &Scenario, st: &NetworkState, cfg: &OptimizerConfig) -> NetworkState {
    let mut w = Work::new(s, st);
    let mst = Mst::build(&w.pos, &w.alive);
    let mut ready = vec![(0usize, 0u32); w.m];
    let mut trace = OptimizerTrace::default();
    equilibrate_inner(&mut w, &mst, cfg, true, 0, &mut ready, &mut trace);
    let mst = Mst::build(&w.pos, &w.alive);
    w.into_state(&mst)
}

fn equilibrate_inner(
    w: &mut Work,
    mst: &Mst,
    cfg: &OptimizerConfig,
    near_eq: bool,
    step: usize,
    star_ready: &mut [(usize, u32)],
    trace: &mut OptimizerTrace,
) -> bool {
    let m = w.m;
    let mut changed = false;
    if near_eq {
        for t in 0..m {
            let (ready, misses) = star_ready[t];
            if mst.degree(t) != 2 || step < ready {
                continue;
            }
            // Back off either way: a terminal that keeps refusing a star is
            // usually a legitimate pass-through, and one that keeps getting
            // them is cycling.
            star_ready[t] = (step + (STAR_COOLDOWN << misses.min(6)), misses + 1);
            if try_star(w, mst, t, cfg) {
                trace.stars += 1;
                return true;
            }
        }
    }
    changed |= junction_step(w, mst);
    if near_eq && migrate_once(w, mst) {
        trace.migrations += 1;
        changed = true;
    }
    changed
}

/// Junction relays take one Weiszfeld step: the centroid of their
/// neighbours weighted by inverse edge length, whose fixed point has 120°
/// between the incident edges.
fn junction_step(w: &mut Work, mst: &Mst) -> bool {
    let before = w.pos.clone();
    let mut changed = false;
    for u in w.m..w.pos.len() {
        if w.alive[u] && mst.degree(u) == 3 {
            let Some(c) = weiszfeld_step(before[u], mst.adj[u].iter().map(|&v| before[v])) else { continue };
            let r = mst.adj[u].iter().map(|&v| c.dist(before[v])).fold(0.0, f64::max);
            if !overlaps_obstacle(c, r, &w.s.obstacles) {
                w.pos[u] = c;
                changed = true;
            }
        }
    }
    changed
}

fn weiszfeld_step(x: Point2, nb: impl Iterator<Item = Point2>) -> Option<Point2> {
    let mut num = Point2::new(0.0, 0.0);
    let mut den = 0.0;
    for p in nb {
        let e = x.dist(p);
        if e < 1e-12 {
            return None;
        }
        num = num + p * (1.0 / e);
        den += 1.0 / e;
    }
    (den > 0.0).then(|| num * (1.0 / den))
}

/// Tentatively turns the degree-2 terminal `t` into a leaf hanging off a new
/// star relay; kept only if the relaxed total cost strictly drops.
fn try_star(w: &mut Work, mst: &Mst, t: usize, cfg: &OptimizerConfig) -> bool {
    let m = w.m;
    let (p, q) = (mst.adj[t][0], mst.adj[t][1]);
    let centre = tri_candidates(w.pos[t], w.pos[p], w.pos[q])
        .into_iter()
        .filter(|c| c.candidate_kind != CandidateKind::NoRelay)
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .and_then(|c| c.relay_position);
    let Some(centre) = centre else { return false };
    if w.s.obstacles.iter().any(|o| o.contains_strictly(centre)) {
        return false;
    }

    let mut movers: Vec<usize> = [p, q].into_iter().filter(|&u| u >= m).collect();
    let branches = mst.branches(m);
    let stats = branch_stats(&w.pos, &branches);
    if let Some(b) = stats
        .iter()
        .filter(|b| b.interior > 0)
        .min_by(|a, b| a.avg_radius.total_cmp(&b.avg_radius))
    {
        let nodes = &branches[b.id];
        movers.push(nodes[nodes.len() / 2]);
    }
    movers.sort_unstable();
    movers.dedup();

    let relaxed = |cand: Work| relax(cand, cfg, STAR_RELAX_STEPS);
    let baseline = relaxed(w.clone());
    let mut best: Option<(f64, usize)> = None;
    for &x in &movers {
        let mut cand = w.clone();
        cand.pos[x] = centre;
        let c = relaxed(cand);
        if c < baseline * (1.0 - 1e-12) && best.map_or(true, |(b, _)| c < b) {
            best = Some((c, x));
        }
    }
    match best {
        Some((_, x)) => {
            w.pos[x] = centre;
            true
        }
        None => false,
    }
}

/// Cost after rounds of junction steps, migrations and relay moves, run
/// until the cost settles or `steps` rounds pass; infinity when the result
/// overlaps an obstacle.
fn relax(mut w: Work, cfg: &OptimizerConfig, steps: usize) -> f64 {
    let mut stable = 0;
    let mut stuck = vec![0usize; w.pos.len() - w.m];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut scratch = OptimizerTrace::default();
    let mut last = f64::INFINITY;
    for _ in 0..steps {
        let mut mst = Mst::build(&w.pos, &w.alive);
        let now = mst.radii(&w.pos).iter().map(|r| r * r).sum::<f64>();
        let delta = rel_change(last, now);
        stable = if delta < cfg.stability_rel_tol { stable + 1 } else { 0 };
        if stable >= cfg.stability_window {
            break;
        }
        let mut changed = junction_step(&mut w, &mst);
        if delta < NEAR_EQUILIBRIUM && migrate_once(&mut w, &mst) {
            changed = true;
        }
        last = now;
        if changed {
            mst = Mst::build(&w.pos, &w.alive);
        }
        w.move_relays(&mst, cfg, &mut stuck);
        absorb_dangling(&mut w, &mst, cfg, &mut rng, &mut scratch);
    }
    let mst = Mst::build(&w.pos, &w.alive);
    match w.evaluate(&mst) {
        (c, true) => c,
        _ => f64::INFINITY,
    }
}

/// Moves one relay from the densest-to-sparsest adjacent branch pair with the
/// largest modelled gain, placed halfway between the shared endpoint and the
/// sparse branch's first node.
fn migrate_once(w: &mut Work, mst: &Mst) -> bool {
    let branches = mst.branches(w.m);
    let stats = branch_stats(&w.pos, &branches);
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for i in 0..branches.len() {
        for j in 0..branches.len() {
            if i == j {
                continue;
            }
            let (bs, bl) = (&branches[i], &branches[j]);
            let Some(e) = shared_endpoint(bs, bl) else { continue };
            let (ss, sl) = (&stats[i], &stats[j]);
            if ss.avg_radius >= sl.avg_radius || !migration_criterion(sl, ss) {
                continue;
            }
            let Some(delta) = migration_delta(ss.length, ss.interior, sl.length, sl.interior) else { continue };
            let pair_cost = ss.length * ss.length / (ss.interior as f64 + 1.0) + sl.length * sl.length / (sl.interior as f64 + 1.0);
            if delta < -MIGRATION_MARGIN * pair_cost && best.map_or(true, |b| delta < b.0) {
                best = Some((delta, i, j, e));
            }
        }
    }
    let Some((_, i, j, e)) = best else { return false };
    let first = |b: &Vec<usize>| if b[0] == e { b[1] } else { b[b.len() - 2] };
    let mover = first(&branches[i]);
    let target = w.pos[e].midpoint(w.pos[first(&branches[j])]);
    w.pos[mover] = target;
    true
}

fn shared_endpoint(a: &[usize], b: &[usize]) -> Option<usize> {
    let (a0, a1) = (a[0], a[a.len() - 1]);
    let (b0, b1) = (b[0], b[b.len() - 1]);
    [a0, a1].into_iter().find(|&x| x == b0 || x == b1)
}

/// Dangling relays that have collapsed onto their steering target are
/// re-inserted at the midpoint of the longest tree edge.
fn absorb_dangling(w: &mut Work, mst: &Mst, cfg: &OptimizerConfig, rng: &mut ChaCha8Rng, trace: &mut OptimizerTrace) {
    let m = w.m;
    if mst.edges.is_empty() {
        return;
    }
    let mean = mst.edges.iter().map(|&(u, v)| w.pos[u].dist(w.pos[v])).sum::<f64>() / mst.edges.len() as f64;
    let steer = steer_leaf_relays(&w.pos, mst, m, cfg);
    let leaves: Vec<usize> = steer
        .iter()
        .map(|&(u, _)| u)
        .filter(|&u| mst.degree(u) == 1)
        .collect();
    let mut edges: Vec<(usize, usize)> = mst
        .edges
        .iter()
        .copied()
        .filter(|&(u, v)| !leaves.contains(&u) && !leaves.contains(&v))
        .collect();
    for u in leaves {
        let nb = mst.adj[u][0];
        if w.pos[u].dist(w.pos[nb]) >= ABSORB_FRACTION * mean {
            continue;
        }
        let Some(k) = (0..edges.len()).max_by(|&a, &b| {
            let la = w.pos[edges[a].0].dist(w.pos[edges[a].1]);
            let lb = w.pos[edges[b].0].dist(w.pos[edges[b].1]);
            la.total_cmp(&lb).then(b.cmp(&a))
        }) else {
            return;
        };
        let (a, b) = edges[k];
        let mid = w.pos[a].midpoint(w.pos[b]);
        let jitter = (w.pos[b] - w.pos[a]).perp() * (1e-6 * rng.gen_range(-1.0..1.0));
        w.pos[u] = mid + jitter;
        edges.swap_remove(k);
        edges.push((a, u));
        edges.push((u, b));
        trace.absorptions += 1;
    }
}
