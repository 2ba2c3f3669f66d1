//! Visibility graph over terminals and obstacle tangent points.
//!
//! Nodes are terminals (always the first `m` nodes, in input order) and
//! tangency points on obstacle boundaries. Edges are tangent segments from
//! terminals, bitangent segments between obstacles, direct terminal links and
//! boundary arcs between points on the same obstacle.

pub mod paths;

use crate::error::{Error, Result};
use crate::geometry::{
    arc_clear, bitangents, segment_clear, tangent_points, Arc, Disk, Orientation, PathElement,
    Point2, PolyPath, Segment, EPS,
};

pub use paths::{Bans, GraphPath, WeightedGraph};

/// Boundary points closer than this are merged into one node.
pub const MERGE_TOL: f64 = 1e-7;

/// Path count used when enumerating detours for class discovery.
pub const DEFAULT_YEN_K: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ArcMode {
    /// Keep only the shorter of the two arcs between a pair of boundary nodes.
    #[default]
    Shortest,
    /// Keep both arcs.
    Both,
}

impl std::str::FromStr for ArcMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "shortest" => Ok(ArcMode::Shortest),
            "both" => Ok(ArcMode::Both),
            other => Err(format!("unknown arc mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Terminal,
    TangentPoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeoNode {
    pub id: usize,
    pub position: Point2,
    pub kind: NodeKind,
    /// Obstacle whose boundary carries the node. Terminals sitting on a
    /// boundary also get one.
    pub host_obstacle: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeoEdge {
    pub u: usize,
    pub v: usize,
    /// Geometry oriented from `u` to `v`.
    pub geometry: PathElement,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct GeoGraph {
    pub nodes: Vec<GeoNode>,
    pub edges: Vec<GeoEdge>,
    /// Terminal id to node id.
    pub terminal_index: Vec<usize>,
    pub obstacles: Vec<Disk>,
    graph: WeightedGraph,
}

/// A path through a [`GeoGraph`] with its geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct GeoPath {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub length: f64,
    pub path: PolyPath,
}

impl GeoGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminal_index.len()
    }

    /// The underlying weighted multigraph; edge ids match `self.edges`.
    pub fn weighted(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Geometry of edge `e` oriented to start at node `from`.
    pub fn oriented(&self, e: usize, from: usize) -> PathElement {
        let edge = &self.edges[e];
        if edge.u == from {
            edge.geometry
        } else {
            edge.geometry.reversed()
        }
    }

    pub fn to_geo_path(&self, p: &GraphPath) -> GeoPath {
        let elements = p
            .edges
            .iter()
            .zip(&p.nodes)
            .map(|(&e, &from)| self.oriented(e, from))
            .collect();
        GeoPath {
            nodes: p.nodes.clone(),
            edges: p.edges.clone(),
            length: p.weight,
            path: PolyPath::new(elements).expect("graph edges join at shared nodes"),
        }
    }

    fn push_edge(&mut self, u: usize, v: usize, geometry: PathElement) -> usize {
        let weight = geometry.length();
        let id = self.graph.add_edge(u, v, weight);
        self.edges.push(GeoEdge {
            u,
            v,
            geometry,
            weight,
        });
        id
    }

    fn has_segment(&self, u: usize, v: usize) -> bool {
        self.graph.neighbors(u).any(|(nb, e)| {
            nb == v && matches!(self.edges[e].geometry, PathElement::Segment(_))
        })
    }
}

/// Builds the visibility graph with the default arc mode.
pub fn build_graph(terminals: &[Point2], obstacles: &[Disk]) -> Result<GeoGraph> {
    build_graph_with(terminals, obstacles, ArcMode::default())
}

pub fn build_graph_with(terminals: &[Point2], obstacles: &[Disk], arcs: ArcMode) -> Result<GeoGraph> {
    for (i, &t) in terminals.iter().enumerate() {
        if let Some(j) = obstacles.iter().position(|o| o.contains_strictly(t)) {
            return Err(Error::InvalidScenario(format!(
                "terminal {i} lies inside obstacle {j}"
            )));
        }
    }
    let mut b = Builder {
        g: GeoGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            terminal_index: Vec::new(),
            obstacles: obstacles.to_vec(),
            graph: WeightedGraph::new(0),
        },
        on_boundary: vec![Vec::new(); obstacles.len()],
        pending: Vec::new(),
    };
    for (i, &t) in terminals.iter().enumerate() {
        let host = obstacles.iter().position(|o| o.on_boundary(t));
        b.g.nodes.push(GeoNode {
            id: i,
            position: t,
            kind: NodeKind::Terminal,
            host_obstacle: host,
        });
        b.g.terminal_index.push(i);
        for (j, o) in obstacles.iter().enumerate() {
            if o.on_boundary(t) {
                b.on_boundary[j].push(i);
            }
        }
    }

    // Tangents from each terminal.
    for (i, &t) in terminals.iter().enumerate() {
        for (j, o) in obstacles.iter().enumerate() {
            if o.on_boundary(t) {
                continue;
            }
            for q in tangent_points(t, o) {
                if segment_clear(&Segment::new(t, q), obstacles, &[j]) {
                    let nq = b.boundary_node(j, q);
                    b.segment(i, nq);
                }
            }
        }
    }
    // Bitangents between obstacle pairs.
    for j in 0..obstacles.len() {
        for k in j + 1..obstacles.len() {
            for s in bitangents(&obstacles[j], &obstacles[k]) {
                if segment_clear(&s, obstacles, &[j, k]) {
                    let a = b.boundary_node(j, s.a);
                    let c = b.boundary_node(k, s.b);
                    if a != c {
                        b.segment(a, c);
                    }
                }
            }
        }
    }
    // Direct terminal links.
    for i in 0..terminals.len() {
        for k in i + 1..terminals.len() {
            if terminals[i].dist(terminals[k]) > EPS
                && segment_clear(&Segment::new(terminals[i], terminals[k]), obstacles, &[])
            {
                b.segment(i, k);
            }
        }
    }
    b.materialize_segments();
    // Boundary arcs.
    for (j, o) in obstacles.iter().enumerate() {
        let ids = b.on_boundary[j].clone();
        for (x, &p) in ids.iter().enumerate() {
            for &q in &ids[x + 1..] {
                let pp = b.g.nodes[p].position;
                let qp = b.g.nodes[q].position;
                let there = Arc::between(*o, pp, qp, Orientation::Ccw);
                let back = Arc::between(*o, pp, qp, Orientation::Cw);
                let keep: Vec<Arc> = match arcs {
                    ArcMode::Both => vec![there, back],
                    ArcMode::Shortest => {
                        let (lt, lb) = (there.length(), back.length());
                        if (lt - lb).abs() <= EPS {
                            vec![there, back]
                        } else if lt < lb {
                            vec![there]
                        } else {
                            vec![back]
                        }
                    }
                };
                for arc in keep {
                    if arc_clear(&arc, obstacles) {
                        b.g.push_edge(p, q, PathElement::Arc(arc));
                    }
                }
            }
        }
    }
    Ok(b.g)
}

struct Builder {
    g: GeoGraph,
    on_boundary: Vec<Vec<usize>>,
    pending: Vec<(usize, usize)>,
}

impl Builder {
    fn boundary_node(&mut self, obstacle: usize, p: Point2) -> usize {
        if let Some(&id) = self.on_boundary[obstacle]
            .iter()
            .find(|&&id| self.g.nodes[id].position.dist(p) <= MERGE_TOL)
        {
            return id;
        }
        let id = self.g.nodes.len();
        self.g.nodes.push(GeoNode {
            id,
            position: p,
            kind: NodeKind::TangentPoint,
            host_obstacle: Some(obstacle),
        });
        self.on_boundary[obstacle].push(id);
        id
    }

    fn segment(&mut self, u: usize, v: usize) {
        let key = (u.min(v), u.max(v));
        if !self.pending.contains(&key) {
            self.pending.push(key);
        }
    }

    /// Node count is only final once every tangency point is known.
    fn materialize_segments(&mut self) {
        self.g.graph = WeightedGraph::new(self.g.nodes.len());
        for (u, v) in std::mem::take(&mut self.pending) {
            let s = Segment::new(self.g.nodes[u].position, self.g.nodes[v].position);
            self.g.push_edge(u, v, PathElement::Segment(s));
        }
    }
}

/// Adds a straight edge between every pair of nodes in line of sight that is
/// not already joined by a segment.
pub fn augment(g: &GeoGraph) -> GeoGraph {
    let mut out = g.clone();
    let n = g.nodes.len();
    for u in 0..n {
        for v in u + 1..n {
            let (pu, pv) = (g.nodes[u].position, g.nodes[v].position);
            if pu.dist(pv) <= EPS || out.has_segment(u, v) {
                continue;
            }
            let s = Segment::new(pu, pv);
            if segment_clear(&s, &g.obstacles, &[]) {
                out.push_edge(u, v, PathElement::Segment(s));
            }
        }
    }
    out
}

/// Shortest path between terminals `a` and `b`.
pub fn shortest_path(g: &GeoGraph, a: usize, b: usize) -> Result<GeoPath> {
    let (na, nb) = (g.terminal_index[a], g.terminal_index[b]);
    let p = g
        .graph
        .shortest_path(na, nb)
        .map_err(|_| Error::NoPath { from: a, to: b })?;
    Ok(g.to_geo_path(&p))
}

/// Up to `k` shortest loopless paths between terminals `a` and `b`.
pub fn yen_k_paths(g: &GeoGraph, a: usize, b: usize, k: usize) -> Vec<GeoPath> {
    let (na, nb) = (g.terminal_index[a], g.terminal_index[b]);
    g.graph
        .k_shortest_paths(na, nb, k)
        .iter()
        .map(|p| g.to_geo_path(p))
        .collect()
}
