//! Homotopy pre-scan: obstacle-free baseline, Steiner-tree seeds on the
//! augmented visibility graph, generation of further homotopy classes by edge
//! deletion, convergence-likelihood filtering and parallel evolution.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{element_crossings, pair_clearance, terminal_clearance, Point2, PolyPath, Segment};
use crate::homotopy::{branches, classify, HVector, PlanarNetwork};
use crate::network::{cost, is_strongly_connected, NetworkState, Scenario};
use crate::optimizer::{optimize, random_initial_state, Mst, OptimizerConfig};
use crate::steiner::{solve_stpg, SteinerTree};
use crate::visgraph::{augment, build_graph, GeoGraph};

/// Environment variable capping parallel evolutions.
pub const THREADS_ENV: &str = "RELAYNET_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrescanConfig {
    /// Relays per evolution; `None` uses the scenario budget.
    pub relays: Option<usize>,
    pub max_generations: usize,
    /// Percent. Candidates need a likelihood strictly above it.
    pub cl_threshold: f64,
    pub keep_redundant: bool,
    /// Hard cap on generated candidates.
    pub max_candidates: usize,
    /// Steiner solves per deleted start edge while the class keeps repeating.
    pub peel_depth: usize,
    pub optimizer: OptimizerConfig,
    /// Worker count; `None` reads `RELAYNET_THREADS`, then uses all cores.
    pub threads: Option<usize>,
}

impl Default for PrescanConfig {
    fn default() -> Self {
        Self {
            relays: None,
            max_generations: 7,
            cl_threshold: 10.0,
            keep_redundant: false,
            max_candidates: 2000,
            peel_depth: 32,
            optimizer: OptimizerConfig::default(),
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomotopyCandidate {
    pub id: usize,
    pub tree: SteinerTree,
    pub network: PlanarNetwork,
    pub hvector: HVector,
    pub generation: usize,
    /// Edges of the base graph deleted to obtain this candidate's graph.
    pub removed_edges: Vec<usize>,
    pub parent: Option<usize>,
    pub length: f64,
}

/// One evolved network.
#[derive(Clone, Debug, PartialEq)]
pub struct Evolved {
    /// Candidate it grew from; `None` for the obstacle-free baseline.
    pub candidate: Option<usize>,
    pub generation: usize,
    pub state: NetworkState,
    pub hvector: HVector,
    pub cost: f64,
    pub converged: bool,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PrescanResult {
    pub relays: usize,
    /// Steiner trees solved while generating candidates.
    pub trees_solved: usize,
    pub candidates: Vec<HomotopyCandidate>,
    /// Convergence likelihood per candidate, in percent.
    pub likelihood: Vec<f64>,
    /// Feasible final networks, ranked.
    pub evolved: Vec<Evolved>,
    pub discarded: Vec<(usize, f64)>,
    /// Candidates whose evolution ended infeasible or disconnected.
    pub failed: Vec<usize>,
    /// True when the obstacle-free optimum already clears every obstacle.
    pub baseline_only: bool,
}

impl PrescanResult {
    pub fn generations_scanned(&self) -> usize {
        self.candidates.iter().map(|c| c.generation).max().unwrap_or(0)
    }

    pub fn passed(&self) -> usize {
        self.candidates.len() - self.discarded.len()
    }

    /// Number of distinct final homotopy classes.
    pub fn final_classes(&self) -> usize {
        self.evolved.iter().map(|e| &e.hvector).collect::<HashSet<_>>().len()
    }

    pub fn min_cost(&self) -> Option<f64> {
        self.evolved.first().map(|e| e.cost)
    }
}

/// Kind and members of a clearance gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gap {
    /// Two obstacles, `i < j`.
    Obstacles(usize, usize),
    /// Terminal and obstacle.
    Terminal(usize, usize),
}

pub fn gap_segments(s: &Scenario) -> Vec<(Gap, Segment, f64)> {
    let mut out = Vec::new();
    let obs = &s.obstacles;
    for i in 0..obs.len() {
        for j in i + 1..obs.len() {
            let d = pair_clearance(&obs[i], &obs[j]);
            if d > 0.0 {
                let u = (obs[j].center - obs[i].center).normalized();
                let a = obs[i].center + u * obs[i].radius;
                let b = obs[j].center - u * obs[j].radius;
                out.push((Gap::Obstacles(i, j), shrink(a, b), d));
            }
        }
    }
    for (t, &p) in s.terminals.iter().enumerate() {
        for (o, d) in obs.iter().enumerate() {
            let gap = terminal_clearance(p, d);
            if gap > 0.0 {
                let b = d.center + (p - d.center).normalized() * d.radius;
                out.push((Gap::Terminal(t, o), shrink(p, b), gap));
            }
        }
    }
    out
}

// Endpoints sit on obstacle boundaries or terminals, where trees touch
// without passing through.
fn shrink(a: Point2, b: Point2) -> Segment {
    let h = 1e-6 * a.dist(b);
    let u = (b - a).normalized();
    Segment::new(a + u * h, b - u * h)
}

/// Gaps whose connecting segment the network crosses, with their widths.
pub fn gap_traversals(net: &PlanarNetwork, s: &Scenario) -> Vec<(Gap, f64)> {
    gap_segments(s)
        .into_iter()
        .filter(|(_, seg, _)| net.edges.iter().any(|e| element_crossings(&e.geometry, seg) > 0))
        .map(|(g, _, d)| (g, d))
        .collect()
}

/// Likelihood in percent that an evolution seeded on `net` with `n` relays
/// keeps its homotopy; 100 when no gap is crossed.
pub fn convergence_likelihood(net: &PlanarNetwork, s: &Scenario, n: usize) -> f64 {
    let r_avg = net.length() / n.max(1) as f64;
    gap_traversals(net, s)
        .iter()
        .map(|&(g, d)| match g {
            Gap::Obstacles(..) => 1.0 - 2.0 * r_avg / d,
            Gap::Terminal(..) => 1.0 - r_avg / d,
        })
        .fold(1.0, f64::min)
        * 100.0
}

/// Places `n` relays along the network. Branches get shares proportional to
/// their length (largest remainder); within a branch spacing is uniform.
pub fn seed_relays(net: &PlanarNetwork, n: usize) -> NetworkState {
    let paths: Vec<PolyPath> = branches(net)
        .map(|bs| bs.iter().map(|b| net.branch_path(b)).collect())
        .unwrap_or_default();
    let lengths: Vec<f64> = paths.iter().map(PolyPath::length).collect();
    let counts = apportion(&lengths, n);
    let mut relays = Vec::with_capacity(n);
    for (p, (&k, &len)) in paths.iter().zip(counts.iter().zip(&lengths)) {
        for j in 1..=k {
            relays.push(point_at_length(p, len * j as f64 / (k + 1) as f64));
        }
    }
    // Degenerate networks without branches: spread along the terminals.
    while relays.len() < n {
        let t = &net.terminals;
        let a = net.nodes[t[relays.len() % t.len()]];
        let b = net.nodes[t[(relays.len() + 1) % t.len()]];
        relays.push(a.midpoint(b));
    }
    NetworkState::new(net.terminals.len(), relays)
}

/// Largest-remainder split of `n` by weight; ties go to the lower index.
fn apportion(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || total <= 0.0 {
        return vec![0; weights.len()];
    }
    let quota: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quota[a] - quota[a].floor(), quota[b] - quota[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn point_at_length(p: &PolyPath, mut s: f64) -> Point2 {
    for e in p.elements() {
        let len = e.length();
        if s <= len {
            return e.point_at(if len > 0.0 { s / len } else { 0.0 });
        }
        s -= len;
    }
    p.end().unwrap_or(Point2::new(0.0, 0.0))
}

/// Straight-line network of a state's live nodes along their MST.
pub fn state_network(s: &Scenario, st: &NetworkState) -> PlanarNetwork {
    let (pos, _) = st.live_nodes(s);
    let mst = Mst::build(&pos, &vec![true; pos.len()]);
    PlanarNetwork::from_segments(pos, &mst.edges, (0..s.terminal_count()).collect())
}

/// The augmented visibility graph the scan works on.
pub fn scan_graph(s: &Scenario) -> Result<GeoGraph> {
    Ok(augment(&build_graph(&s.terminals, &s.obstacles)?))
}

fn solve_on(base: &GeoGraph, removed: &[usize]) -> Result<SteinerTree> {
    let mut g = base.weighted().clone();
    for &e in removed {
        g.remove_edge(e);
    }
    solve_stpg(&g, &base.terminal_index)
}

fn make_candidate(
    base: &GeoGraph,
    tree: SteinerTree,
    removed: Vec<usize>,
    generation: usize,
    parent: Option<usize>,
) -> Result<HomotopyCandidate> {
    let network = PlanarNetwork::from_steiner(base, &tree);
    let hvector = classify(&network, &base.obstacles)?;
    Ok(HomotopyCandidate {
        id: 0,
        length: tree.total_length,
        tree,
        network,
        hvector,
        generation,
        removed_edges: removed,
        parent,
    })
}

/// Generation-0 candidate: the Steiner tree of the full graph.
pub fn root_candidate(base: &GeoGraph) -> Result<HomotopyCandidate> {
    let tree = solve_on(base, &[])?;
    make_candidate(base, tree, Vec::new(), 0, None)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomGenConfig {
    pub max_generations: usize,
    pub keep_redundant: bool,
    pub max_candidates: usize,
    pub peel_depth: usize,
}

impl Default for HomGenConfig {
    fn default() -> Self {
        let p = PrescanConfig::default();
        Self {
            max_generations: p.max_generations,
            keep_redundant: p.keep_redundant,
            max_candidates: p.max_candidates,
            peel_depth: p.peel_depth,
        }
    }
}

/// Expands candidates first-in first-out. For each candidate below the
/// generation limit and each terminal, every tree edge at that terminal is
/// deleted in turn and the Steiner tree is re-solved. A child is kept when
/// its class is new (or, with `keep_redundant`, its class and graph pair is).
/// When the re-solved tree repeats a known class, the new tree's edge at the
/// same terminal is deleted too, up to `peel_depth` solves per start edge.
pub fn homgen(initial: Vec<HomotopyCandidate>, base: &GeoGraph, cfg: &HomGenConfig) -> Vec<HomotopyCandidate> {
    homgen_counted(initial, base, cfg).0
}

/// As [`homgen`], also returning the number of Steiner trees solved.
pub fn homgen_counted(
    initial: Vec<HomotopyCandidate>,
    base: &GeoGraph,
    cfg: &HomGenConfig,
) -> (Vec<HomotopyCandidate>, usize) {
    let mut out = initial;
    let mut classes: HashSet<HVector> = HashSet::new();
    let mut pairs: HashSet<(HVector, Vec<usize>)> = HashSet::new();
    for c in &out {
        classes.insert(c.hvector.clone());
        pairs.insert((c.hvector.clone(), c.removed_edges.clone()));
    }
    let mut tried: HashSet<Vec<usize>> = out.iter().map(|c| c.removed_edges.clone()).collect();
    let mut solved = 0;
    let at = |tree: &SteinerTree, t: usize| -> Vec<usize> {
        tree.edges
            .iter()
            .copied()
            .filter(|&e| base.edges[e].u == t || base.edges[e].v == t)
            .collect()
    };
    let mut next = 0;
    while next < out.len() && out.len() < cfg.max_candidates {
        let cur = out[next].clone();
        next += 1;
        if cur.generation >= cfg.max_generations {
            continue;
        }
        for &t in &base.terminal_index {
            for e in at(&cur.tree, t) {
                let mut removed: BTreeSet<usize> = cur.removed_edges.iter().copied().collect();
                removed.insert(e);
                for _ in 0..cfg.peel_depth.max(1) {
                    let key: Vec<usize> = removed.iter().copied().collect();
                    if !tried.insert(key.clone()) {
                        break;
                    }
                    let Ok(tree) = solve_on(base, &key) else { break };
                    solved += 1;
                    let Ok(child) = make_candidate(base, tree, key, cur.generation + 1, Some(cur.id)) else {
                        break;
                    };
                    let fresh = if cfg.keep_redundant {
                        pairs.insert((child.hvector.clone(), child.removed_edges.clone()))
                    } else {
                        classes.insert(child.hvector.clone())
                    };
                    if fresh {
                        if out.len() < cfg.max_candidates {
                            let mut child = child;
                            child.id = out.len();
                            out.push(child);
                        }
                        break;
                    }
                    match at(&child.tree, t).first() {
                        Some(&f) => {
                            removed.insert(f);
                        }
                        None => break,
                    }
                }
            }
        }
    }
    for (i, c) in out.iter_mut().enumerate() {
        c.id = i;
    }
    (out, solved)
}

/// Seeds `n` relays on a candidate and evolves them.
pub fn evolve(s: &Scenario, net: &PlanarNetwork, n: usize, cfg: &OptimizerConfig) -> (NetworkState, crate::optimizer::OptimizerTrace) {
    optimize(s, &seed_relays(net, n), cfg)
}

fn finish(s: &Scenario, candidate: Option<usize>, generation: usize, st: NetworkState, converged: bool, steps: usize) -> Option<Evolved> {
    let c = cost(s, &st).value()?;
    if !is_strongly_connected(s, &st) {
        return None;
    }
    let hvector = classify(&state_network(s, &st), &s.obstacles).ok()?;
    Some(Evolved {
        candidate,
        generation,
        state: st,
        hvector,
        cost: c,
        converged,
        steps,
    })
}

/// Worker count for parallel runs: `explicit`, else `RELAYNET_THREADS`, else
/// 0 (one per core).
pub fn thread_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&k| k > 0)
        .unwrap_or(0)
}

/// Full pre-scan pipeline.
pub fn prescan(s: &Scenario, cfg: &PrescanConfig) -> Result<PrescanResult> {
    s.validate()?;
    cfg.optimizer.validate()?;
    let n = cfg.relays.unwrap_or(s.relay_budget);
    if n == 0 {
        return Err(Error::InvalidScenario("relay count must be at least 1".into()));
    }
    let mut out = PrescanResult {
        relays: n,
        ..Default::default()
    };

    // Obstacle-free baseline.
    let free = Scenario {
        obstacles: Vec::new(),
        ..s.clone()
    };
    let (st0, tr0) = optimize(&free, &random_initial_state(&free, n, cfg.optimizer.seed), &cfg.optimizer);
    if cost(s, &st0).is_feasible() {
        if let Some(e) = finish(s, None, 0, st0, tr0.converged, tr0.steps()) {
            out.evolved.push(e);
            out.baseline_only = true;
            return Ok(out);
        }
    }

    let base = scan_graph(s)?;
    let root = root_candidate(&base).map_err(|e| match e {
        Error::NoTree(_) | Error::NoPath { .. } => Error::NoSolution("terminals cannot be joined around the obstacles".into()),
        other => other,
    })?;
    let hcfg = HomGenConfig {
        max_generations: cfg.max_generations,
        keep_redundant: cfg.keep_redundant,
        max_candidates: cfg.max_candidates,
        peel_depth: cfg.peel_depth,
    };
    let (candidates, trees) = homgen_counted(vec![root], &base, &hcfg);
    out.candidates = candidates;
    out.trees_solved = trees + 1;
    out.likelihood = out.candidates.iter().map(|c| convergence_likelihood(&c.network, s, n)).collect();

    let mut todo = Vec::new();
    for (c, &cl) in out.candidates.iter().zip(&out.likelihood) {
        if cl > cfg.cl_threshold {
            todo.push(c.id);
        } else {
            out.discarded.push((c.id, cl));
        }
    }

    let run = |id: &usize| {
        let c = &out.candidates[*id];
        let (st, tr) = evolve(s, &c.network, n, &cfg.optimizer);
        (*id, finish(s, Some(*id), c.generation, st, tr.converged, tr.steps()))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg.threads))
        .build()
        .map_err(|e| Error::InvalidScenario(format!("thread pool: {e}")))?;
    let results: Vec<(usize, Option<Evolved>)> = pool.install(|| todo.par_iter().map(run).collect());

    for (id, r) in results {
        match r {
            Some(e) => out.evolved.push(e),
            None => out.failed.push(id),
        }
    }
    out.evolved.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then(a.generation.cmp(&b.generation))
            .then_with(|| a.hvector.cmp(&b.hvector))
            .then(a.candidate.cmp(&b.candidate))
    });
    out.failed.sort_unstable();
    Ok(out)
}
