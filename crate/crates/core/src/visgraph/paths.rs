//! Deterministic shortest paths and Yen's k-shortest loopless paths on an
//! undirected weighted multigraph.
//!
//! Ties between equal-weight paths go to the lexicographically smallest node
//! sequence, then to the smallest edge ids. Weights within a relative 1e-12 of
//! each other are treated as equal so that symmetric scenes stay symmetric.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};

const TIE_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEdge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl WeightedEdge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<WeightedEdge>,
    removed: Vec<bool>,
    /// Per node: (neighbour, edge id), sorted.
    adj: Vec<Vec<(usize, usize)>>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            removed: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut g = Self::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w);
        }
        g
    }

    /// Adds an edge and returns its id. Self-loops are ignored by searches.
    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(WeightedEdge { u, v, w });
        self.removed.push(false);
        insert_sorted(&mut self.adj[u], (v, id));
        if u != v {
            insert_sorted(&mut self.adj[v], (u, id));
        }
        id
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &WeightedEdge {
        &self.edges[id]
    }

    pub fn remove_edge(&mut self, id: usize) {
        self.removed[id] = true;
    }

    pub fn is_removed(&self, id: usize) -> bool {
        self.removed[id]
    }

    /// Live incident edges of `x` as (neighbour, edge id), sorted.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj[x].iter().copied().filter(|&(_, e)| !self.removed[e])
    }

    /// Single-source distances honouring removals and the given bans.
    pub fn distances(&self, src: usize, bans: &Bans) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.n];
        if bans.node(src) {
            return dist;
        }
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem { d: 0.0, node: src });
        while let Some(HeapItem { d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for (nb, e) in self.neighbors(node) {
                if nb == node || bans.edge(e) || bans.node(nb) {
                    continue;
                }
                let nd = d + self.edges[e].w;
                if nd < dist[nb] {
                    dist[nb] = nd;
                    heap.push(HeapItem { d: nd, node: nb });
                }
            }
        }
        dist
    }

    /// Minimum-weight path from `src` to `dst`; among (near-)equal weights the
    /// lexicographically smallest node sequence wins.
    pub fn shortest_path(&self, src: usize, dst: usize) -> Result<GraphPath> {
        self.shortest_path_with(src, dst, &Bans::default())
            .ok_or(Error::NoPath { from: src, to: dst })
    }

    pub fn shortest_path_with(&self, src: usize, dst: usize, bans: &Bans) -> Option<GraphPath> {
        if bans.node(src) || bans.node(dst) {
            return None;
        }
        if src == dst {
            return Some(GraphPath {
                nodes: vec![src],
                edges: Vec::new(),
                weight: 0.0,
            });
        }
        let to_dst = self.distances(dst, bans);
        let total = to_dst[src];
        if !total.is_finite() {
            return None;
        }
        let slack = TIE_REL * total.max(1.0);
        // Walk forward greedily: the smallest neighbour that still lies on a
        // shortest path. Strictly positive weights rule out revisits.
        let mut nodes = vec![src];
        let mut edges = Vec::new();
        let mut weight = 0.0;
        let mut cur = src;
        let mut seen = HashSet::from([src]);
        while cur != dst {
            let mut best: Option<(usize, f64, usize)> = None;
            for (nb, e) in self.neighbors(cur) {
                if nb == cur || bans.edge(e) || bans.node(nb) || seen.contains(&nb) {
                    continue;
                }
                let w = self.edges[e].w;
                if weight + w + to_dst[nb] > total + slack {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bn, bw, be)) => {
                        nb < bn || (nb == bn && (w < bw || (w == bw && e < be)))
                    }
                };
                if better {
                    best = Some((nb, w, e));
                }
            }
            let (nb, w, e) = best?;
            weight += w;
            nodes.push(nb);
            edges.push(e);
            seen.insert(nb);
            cur = nb;
        }
        Some(GraphPath {
            nodes,
            edges,
            weight,
        })
    }

    /// Up to `k` shortest loopless paths, ordered by weight then node sequence.
    pub fn k_shortest_paths(&self, src: usize, dst: usize, k: usize) -> Vec<GraphPath> {
        let mut accepted: Vec<GraphPath> = Vec::new();
        let Some(first) = self.shortest_path_with(src, dst, &Bans::default()) else {
            return accepted;
        };
        if k == 0 {
            return accepted;
        }
        accepted.push(first);
        let mut candidates: Vec<GraphPath> = Vec::new();
        let mut known: HashSet<Vec<usize>> = HashSet::new();
        known.insert(accepted[0].edges.clone());

        while accepted.len() < k {
            let last = accepted.last().unwrap().clone();
            for i in 0..last.edges.len() {
                let spur = last.nodes[i];
                let root_nodes = &last.nodes[..=i];
                let root_edges = &last.edges[..i];
                let mut bans = Bans::new(self.n, self.edges.len());
                for p in &accepted {
                    if p.edges.len() > i && p.edges[..i] == *root_edges {
                        bans.edges[p.edges[i]] = true;
                    }
                }
                for &x in &root_nodes[..i] {
                    bans.nodes[x] = true;
                }
                let Some(tail) = self.shortest_path_with(spur, dst, &bans) else {
                    continue;
                };
                let mut edges = root_edges.to_vec();
                edges.extend_from_slice(&tail.edges);
                if known.contains(&edges) {
                    continue;
                }
                let mut nodes = root_nodes[..i].to_vec();
                nodes.extend_from_slice(&tail.nodes);
                let weight = edges.iter().map(|&e| self.edges[e].w).sum();
                known.insert(edges.clone());
                candidates.push(GraphPath {
                    nodes,
                    edges,
                    weight,
                });
            }
            let Some(best) = candidates
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.order(b.1))
                .map(|(i, _)| i)
            else {
                break;
            };
            accepted.push(candidates.swap_remove(best));
        }
        accepted
    }
}

fn insert_sorted(v: &mut Vec<(usize, usize)>, item: (usize, usize)) {
    let pos = v.partition_point(|x| *x < item);
    v.insert(pos, item);
}

/// Nodes and edges excluded from a search.
#[derive(Clone, Debug, Default)]
pub struct Bans {
    pub nodes: Vec<bool>,
    pub edges: Vec<bool>,
}

impl Bans {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            nodes: vec![false; n],
            edges: vec![false; m],
        }
    }

    fn node(&self, x: usize) -> bool {
        self.nodes.get(x).copied().unwrap_or(false)
    }

    fn edge(&self, e: usize) -> bool {
        self.edges.get(e).copied().unwrap_or(false)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphPath {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub weight: f64,
}

impl GraphPath {
    /// Weight first (near-ties equal), then node sequence, then edge ids.
    pub fn order(&self, other: &GraphPath) -> Ordering {
        let slack = TIE_REL * self.weight.abs().max(other.weight.abs()).max(1.0);
        if (self.weight - other.weight).abs() > slack {
            return self.weight.total_cmp(&other.weight);
        }
        self.nodes
            .cmp(&other.nodes)
            .then_with(|| self.edges.cmp(&other.edges))
    }
}

#[derive(PartialEq)]
struct HeapItem {
    d: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        o.d.total_cmp(&self.d).then_with(|| o.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
