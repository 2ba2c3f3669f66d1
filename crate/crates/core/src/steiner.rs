//! Exact Steiner trees in graphs by dynamic programming over terminal
//! subsets (Dreyfus-Wagner with Dijkstra relaxation).
//!
//! Time is O(3^k·V + 2^k·E·log V) for k terminals, so the solver refuses
//! instances beyond a terminal count and a state budget.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::visgraph::WeightedGraph;

pub const DEFAULT_TERMINAL_LIMIT: usize = 8;
pub const STATE_BUDGET: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SteinerTree {
    /// Edge ids, sorted ascending.
    pub edges: Vec<usize>,
    pub total_length: f64,
    /// Terminal node ids, sorted and deduplicated.
    pub terminals: Vec<usize>,
}

pub fn solve_stpg(g: &WeightedGraph, terminals: &[usize]) -> Result<SteinerTree> {
    solve_stpg_with_limit(g, terminals, DEFAULT_TERMINAL_LIMIT)
}

#[derive(Clone, Copy)]
enum Back {
    Leaf,
    Merge(usize),
    Step { from: usize, edge: usize },
}

pub fn solve_stpg_with_limit(
    g: &WeightedGraph,
    terminals: &[usize],
    limit: usize,
) -> Result<SteinerTree> {
    let mut terms = terminals.to_vec();
    terms.sort_unstable();
    terms.dedup();
    let k = terms.len();
    let n = g.node_count();
    if k > limit {
        return Err(Error::BudgetExceeded(format!(
            "{k} terminals exceed the exact limit of {limit}"
        )));
    }
    if (1u64 << k.min(63)).saturating_mul(n as u64) > STATE_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "2^{k} x {n} states exceed the budget of {STATE_BUDGET}"
        )));
    }
    if let Some(&bad) = terms.iter().find(|&&t| t >= n) {
        return Err(Error::NoTree(vec![bad]));
    }
    if k <= 1 {
        return Ok(SteinerTree {
            edges: Vec::new(),
            total_length: 0.0,
            terminals: terms,
        });
    }

    let full = (1usize << k) - 1;
    let mut dp = vec![vec![f64::INFINITY; n]; full + 1];
    let mut back = vec![vec![Back::Leaf; n]; full + 1];
    for (i, &t) in terms.iter().enumerate() {
        dp[1 << i][t] = 0.0;
    }
    for mask in 1..=full {
        if mask.count_ones() > 1 {
            for v in 0..n {
                // Each unordered split once: the part holding the lowest bit.
                let low = mask & mask.wrapping_neg();
                let rest = mask ^ low;
                let mut sub = rest;
                loop {
                    let a = sub | low;
                    if a != mask {
                        let c = dp[a][v] + dp[mask ^ a][v];
                        if c < dp[mask][v] {
                            dp[mask][v] = c;
                            back[mask][v] = Back::Merge(a);
                        }
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
            }
        }
        relax(g, &mut dp[mask], &mut back[mask]);
    }

    let root = terms[0];
    if !dp[full][root].is_finite() {
        let reach = reachable(g, root);
        let missing = terms.iter().copied().filter(|&t| !reach[t]).collect();
        return Err(Error::NoTree(missing));
    }

    let mut edges = Vec::new();
    let mut stack = vec![(full, root)];
    while let Some((mask, v)) = stack.pop() {
        match back[mask][v] {
            Back::Leaf => {}
            Back::Merge(a) => {
                stack.push((a, v));
                stack.push((mask ^ a, v));
            }
            Back::Step { from, edge } => {
                edges.push(edge);
                stack.push((mask, from));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let edges = prune(g, &edges, &terms);
    let total_length = edges.iter().map(|&e| g.edge(e).w).sum();
    Ok(SteinerTree {
        edges,
        total_length,
        terminals: terms,
    })
}

fn relax(g: &WeightedGraph, dist: &mut [f64], back: &mut [Back]) {
    let mut heap: BinaryHeap<Item> = dist
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite())
        .map(|(node, &d)| Item { d, node })
        .collect();
    while let Some(Item { d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for (nb, e) in g.neighbors(node) {
            if nb == node {
                continue;
            }
            let nd = d + g.edge(e).w;
            if nd < dist[nb] {
                dist[nb] = nd;
                back[nb] = Back::Step { from: node, edge: e };
                heap.push(Item { d: nd, node: nb });
            }
        }
    }
}

fn reachable(g: &WeightedGraph, src: usize) -> Vec<bool> {
    let mut seen = vec![false; g.node_count()];
    let mut stack = vec![src];
    seen[src] = true;
    while let Some(x) = stack.pop() {
        for (nb, _) in g.neighbors(x) {
            if !seen[nb] {
                seen[nb] = true;
                stack.push(nb);
            }
        }
    }
    seen
}

/// Spanning forest of the edge set (Kruskal by weight, then id), then strips
/// non-terminal leaves until none remain.
fn prune(g: &WeightedGraph, edges: &[usize], terminals: &[usize]) -> Vec<usize> {
    let mut order = edges.to_vec();
    order.sort_by(|&a, &b| g.edge(a).w.total_cmp(&g.edge(b).w).then(a.cmp(&b)));
    let mut parent: Vec<usize> = (0..g.node_count()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut kept: Vec<usize> = Vec::new();
    for e in order {
        let (u, v) = (g.edge(e).u, g.edge(e).v);
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            kept.push(e);
        }
    }
    loop {
        let mut degree = vec![0usize; g.node_count()];
        for &e in &kept {
            degree[g.edge(e).u] += 1;
            degree[g.edge(e).v] += 1;
        }
        let before = kept.len();
        kept.retain(|&e| {
            let (u, v) = (g.edge(e).u, g.edge(e).v);
            let dead = |x: usize| degree[x] == 1 && terminals.binary_search(&x).is_err();
            !(dead(u) || dead(v))
        });
        if kept.len() == before {
            break;
        }
    }
    kept.sort_unstable();
    kept
}

#[derive(PartialEq)]
struct Item {
    d: f64,
    node: usize,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.d.total_cmp(&self.d).then_with(|| o.node.cmp(&self.node))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum over all node subsets containing the terminals of the MST of
    /// the induced subgraph.
    fn brute_force(g: &WeightedGraph, terminals: &[usize]) -> Option<f64> {
        let n = g.node_count();
        let others: Vec<usize> = (0..n).filter(|x| !terminals.contains(x)).collect();
        let mut best: Option<f64> = None;
        for bits in 0u32..(1 << others.len()) {
            let mut inside = vec![false; n];
            for &t in terminals {
                inside[t] = true;
            }
            for (i, &x) in others.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    inside[x] = true;
                }
            }
            if let Some(w) = induced_mst(g, &inside) {
                if best.map_or(true, |b| w < b) {
                    best = Some(w);
                }
            }
        }
        best
    }

    fn induced_mst(g: &WeightedGraph, inside: &[bool]) -> Option<f64> {
        let nodes: Vec<usize> = (0..inside.len()).filter(|&x| inside[x]).collect();
        let mut in_tree = vec![false; inside.len()];
        in_tree[nodes[0]] = true;
        let mut total = 0.0;
        for _ in 1..nodes.len() {
            let mut best: Option<(f64, usize)> = None;
            for e in g.edges() {
                let (u, v) = (e.u, e.v);
                if !(inside[u] && inside[v]) || in_tree[u] == in_tree[v] {
                    continue;
                }
                let new = if in_tree[u] { v } else { u };
                if best.map_or(true, |(w, _)| e.w < w) {
                    best = Some((e.w, new));
                }
            }
            let (w, x) = best?;
            total += w;
            in_tree[x] = true;
        }
        Some(total)
    }

    fn is_tree_spanning(g: &WeightedGraph, t: &SteinerTree) -> bool {
        let mut nodes: Vec<usize> = t.edges.iter().flat_map(|&e| [g.edge(e).u, g.edge(e).v]).collect();
        nodes.extend(&t.terminals);
        nodes.sort_unstable();
        nodes.dedup();
        if t.edges.len() + 1 != nodes.len() {
            return false;
        }
        let mut sub = WeightedGraph::new(g.node_count());
        for &e in &t.edges {
            sub.add_edge(g.edge(e).u, g.edge(e).v, g.edge(e).w);
        }
        let reach = reachable(&sub, t.terminals[0]);
        nodes.iter().all(|&x| reach[x])
    }

    #[test]
    fn two_terminals_give_shortest_path() {
        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.5), (2, 3, 1.0)]);
        let t = solve_stpg(&g, &[0, 3]).unwrap();
        assert_eq!(t.edges, vec![0, 1]);
        assert_eq!(t.total_length, g.shortest_path(0, 3).unwrap().weight);
    }

    #[test]
    fn path_graph_uses_whole_path() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 2.0), (1, 2, 3.0)]);
        let t = solve_stpg(&g, &[0, 1, 2]).unwrap();
        assert_eq!(t.edges, vec![0, 1]);
        assert_eq!(t.total_length, 5.0);
    }

    #[test]
    fn star_beats_terminal_paths() {
        // three terminals around a hub with cheap spokes
        let g = WeightedGraph::from_edges(
            4,
            [(0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0), (0, 1, 1.9), (1, 2, 1.9), (0, 2, 1.9)],
        );
        let t = solve_stpg(&g, &[0, 1, 2]).unwrap();
        assert_eq!(t.edges, vec![0, 1, 2]);
        assert_eq!(t.total_length, 3.0);
    }

    #[test]
    fn disconnected_terminals() {
        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]);
        assert_eq!(solve_stpg(&g, &[0, 1, 3]), Err(Error::NoTree(vec![3])));
    }

    #[test]
    fn too_many_terminals() {
        let g = WeightedGraph::from_edges(10, (0..9).map(|i| (i, i + 1, 1.0)));
        let ts: Vec<usize> = (0..9).collect();
        assert!(matches!(solve_stpg(&g, &ts), Err(Error::BudgetExceeded(_))));
        assert!(solve_stpg_with_limit(&g, &ts, 9).is_ok());
    }

    fn random_instance() -> impl Strategy<Value = (WeightedGraph, Vec<usize>)> {
        (5usize..=12).prop_flat_map(|n| {
            (
                prop::collection::vec((0..n, 0..n, 1u32..20), n..3 * n),
                prop::collection::vec(0..n, 2..=5),
            )
                .prop_map(move |(es, ts)| {
                    // a Hamiltonian path keeps the instance connected
                    let mut g = WeightedGraph::new(n);
                    for i in 0..n - 1 {
                        g.add_edge(i, i + 1, 25.0);
                    }
                    for (u, v, w) in es {
                        if u != v {
                            g.add_edge(u, v, w as f64);
                        }
                    }
                    let mut ts = ts;
                    ts.sort_unstable();
                    ts.dedup();
                    (g, ts)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn matches_subset_enumeration((g, ts) in random_instance()) {
            prop_assume!(ts.len() >= 2);
            let t = solve_stpg(&g, &ts).unwrap();
            let want = brute_force(&g, &ts).unwrap();
            prop_assert!((t.total_length - want).abs() < 1e-9, "{} vs {}", t.total_length, want);
            prop_assert!(is_tree_spanning(&g, &t));
            let sum: f64 = t.edges.iter().map(|&e| g.edge(e).w).sum();
            prop_assert_eq!(sum, t.total_length);
        }

        #[test]
        fn bounded_by_closure_mst_and_farthest_pair((g, ts) in random_instance()) {
            prop_assume!(ts.len() >= 2);
            let t = solve_stpg(&g, &ts).unwrap();
            let d: Vec<Vec<f64>> = ts.iter().map(|&a| g.distances(a, &Default::default())).collect();
            let mut far: f64 = 0.0;
            for (i, _) in ts.iter().enumerate() {
                for &b in &ts {
                    far = far.max(d[i][b]);
                }
            }
            // Prim on the metric closure
            let k = ts.len();
            let mut in_tree = vec![false; k];
            in_tree[0] = true;
            let mut mst = 0.0;
            for _ in 1..k {
                let mut best = (f64::INFINITY, 0);
                for i in 0..k {
                    for j in 0..k {
                        if in_tree[i] && !in_tree[j] && d[i][ts[j]] < best.0 {
                            best = (d[i][ts[j]], j);
                        }
                    }
                }
                mst += best.0;
                in_tree[best.1] = true;
            }
            prop_assert!(t.total_length <= mst + 1e-9);
            prop_assert!(t.total_length >= far - 1e-9);
        }
    }
}
