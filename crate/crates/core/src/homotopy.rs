//! Boolean homotopy fingerprints for paths and trees among disk obstacles.
//!
//! A network is cut into branches (maximal paths between terminals and
//! junctions). For every classification segment, each branch's crossing count
//! is reduced mod 2 and the results are OR-ed over branches. Segments are the
//! center-to-center links of obstacle pairs (h1) and four cardinal rays per
//! obstacle running past the scene (h2, in N, E, S, W order).

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    count_crossings, swept_angle, Disk, Orientation, PathElement, Point2, PolyPath, Segment, EPS,
};
use crate::steiner::SteinerTree;
use crate::visgraph::GeoGraph;

const NUDGE: f64 = 1e-6;
const NUDGE_ATTEMPTS: usize = 32;
const CARDINALS: [Point2; 4] = [
    Point2::new(0.0, 1.0),
    Point2::new(1.0, 0.0),
    Point2::new(0.0, -1.0),
    Point2::new(-1.0, 0.0),
];

#[derive(Clone, Debug, PartialEq)]
pub struct NetEdge {
    pub u: usize,
    pub v: usize,
    /// Oriented from `u` to `v`.
    pub geometry: PathElement,
}

/// A connected planar network: nodes, straight or arc edges, and the ids of
/// the nodes that are terminals.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlanarNetwork {
    pub nodes: Vec<Point2>,
    pub edges: Vec<NetEdge>,
    pub terminals: Vec<usize>,
}

impl PlanarNetwork {
    /// Straight-line network from points and index pairs.
    pub fn from_segments(nodes: Vec<Point2>, pairs: &[(usize, usize)], terminals: Vec<usize>) -> Self {
        let edges = pairs
            .iter()
            .map(|&(u, v)| NetEdge {
                u,
                v,
                geometry: PathElement::Segment(Segment::new(nodes[u], nodes[v])),
            })
            .collect();
        Self {
            nodes,
            edges,
            terminals,
        }
    }

    /// The network traced by a Steiner tree over a visibility graph. Node ids
    /// are renumbered; terminals keep their order.
    pub fn from_steiner(g: &GeoGraph, tree: &SteinerTree) -> Self {
        let mut map: BTreeMap<usize, usize> = BTreeMap::new();
        let mut nodes = Vec::new();
        let mut id = |x: usize, nodes: &mut Vec<Point2>| {
            *map.entry(x).or_insert_with(|| {
                nodes.push(g.nodes[x].position);
                nodes.len() - 1
            })
        };
        let terminals = g.terminal_index.iter().map(|&t| id(t, &mut nodes)).collect();
        let edges = tree
            .edges
            .iter()
            .map(|&e| {
                let ge = &g.edges[e];
                NetEdge {
                    u: id(ge.u, &mut nodes),
                    v: id(ge.v, &mut nodes),
                    geometry: ge.geometry,
                }
            })
            .collect();
        Self {
            nodes,
            edges,
            terminals,
        }
    }

    pub fn length(&self) -> f64 {
        self.edges.iter().map(|e| e.geometry.length()).sum()
    }

    fn oriented(&self, e: usize, from: usize) -> PathElement {
        let edge = &self.edges[e];
        if edge.u == from {
            edge.geometry
        } else {
            edge.geometry.reversed()
        }
    }

    /// Every point where geometry changes: nodes plus arc-split points.
    fn vertices(&self) -> Vec<Point2> {
        let mut out = self.nodes.clone();
        for e in &self.edges {
            out.push(e.geometry.start());
            out.push(e.geometry.end());
        }
        out
    }

    /// Geometry of one branch as a continuous path.
    pub fn branch_path(&self, b: &Branch) -> PolyPath {
        let elements = b
            .edges
            .iter()
            .zip(&b.nodes)
            .map(|(&e, &from)| self.oriented(e, from))
            .collect();
        PolyPath::new(elements).expect("branch edges share their nodes")
    }

    /// Geometry of the tree path between two nodes.
    pub fn path_between(&self, a: usize, b: usize) -> Option<PolyPath> {
        let adj = self.adjacency();
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![a];
        seen[a] = true;
        while let Some(x) = stack.pop() {
            for &(nb, e) in &adj[x] {
                if !seen[nb] {
                    seen[nb] = true;
                    prev[nb] = Some((x, e));
                    stack.push(nb);
                }
            }
        }
        if !seen[b] {
            return None;
        }
        let mut elements = Vec::new();
        let mut cur = b;
        while cur != a {
            let (p, e) = prev[cur]?;
            elements.push(self.oriented(e, p));
            cur = p;
        }
        elements.reverse();
        PolyPath::new(elements).ok()
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        adj
    }
}

/// A maximal tree path whose ends are terminals or nodes of degree other than 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

/// Splits a forest into branches; every edge lands in exactly one branch.
pub fn branches(net: &PlanarNetwork) -> Result<Vec<Branch>> {
    let n = net.nodes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, e) in net.edges.iter().enumerate() {
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
        if a == b {
            return Err(Error::NotATree(format!("edge {i} closes a cycle")));
        }
        parent[a] = b;
    }
    let adj = net.adjacency();
    let is_end = |x: usize| adj[x].len() != 2 || net.terminals.contains(&x);
    let mut used = vec![false; net.edges.len()];
    let mut out = Vec::new();
    for start in 0..n {
        if !is_end(start) {
            continue;
        }
        for &(first, e0) in &adj[start] {
            if used[e0] {
                continue;
            }
            used[e0] = true;
            let mut nodes = vec![start, first];
            let mut edges = vec![e0];
            let mut cur = first;
            while !is_end(cur) {
                let &(next, e) = adj[cur].iter().find(|&&(_, e)| !used[e]).expect("degree two");
                used[e] = true;
                nodes.push(next);
                edges.push(e);
                cur = next;
            }
            out.push(Branch { nodes, edges });
        }
    }
    Ok(out)
}

/// Classification segments for a set of obstacles.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassSegments {
    /// Obstacle pairs (i < j) in lexicographic order with their center link.
    pub pairs: Vec<((usize, usize), Segment)>,
    /// Per obstacle, N, E, S, W rays.
    pub rays: Vec<[Segment; 4]>,
}

impl ClassSegments {
    /// Rays reach twice the scene diameter beyond each center; the scene
    /// spans the obstacles and the given points.
    pub fn new(obstacles: &[Disk], scene_points: &[Point2]) -> Self {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut grow = |p: Point2, r: f64| {
            lo = Point2::new(lo.x.min(p.x - r), lo.y.min(p.y - r));
            hi = Point2::new(hi.x.max(p.x + r), hi.y.max(p.y + r));
        };
        for o in obstacles {
            grow(o.center, o.radius);
        }
        for &p in scene_points {
            grow(p, 0.0);
        }
        let diameter = (hi - lo).norm().max(1.0);
        let reach = 2.0 * diameter;
        let mut pairs = Vec::new();
        for i in 0..obstacles.len() {
            for j in i + 1..obstacles.len() {
                pairs.push(((i, j), Segment::new(obstacles[i].center, obstacles[j].center)));
            }
        }
        let rays = obstacles
            .iter()
            .map(|o| CARDINALS.map(|d| Segment::new(o.center, o.center + d * reach)))
            .collect();
        Self { pairs, rays }
    }
}

/// Homotopy fingerprint: obstacle-pair bits then NESW bits per obstacle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HVector {
    pub h1: Vec<bool>,
    pub h2: Vec<bool>,
}

impl HVector {
    pub fn obstacle_count(&self) -> usize {
        self.h2.len() / 4
    }

    pub fn dimension(&self) -> usize {
        self.h1.len() + self.h2.len()
    }

    pub fn nesw(&self, obstacle: usize) -> [bool; 4] {
        let s = &self.h2[4 * obstacle..4 * obstacle + 4];
        [s[0], s[1], s[2], s[3]]
    }

    /// All bits as one 0/1 string.
    pub fn compact(&self) -> String {
        self.h1.iter().chain(&self.h2).map(|&b| bit(b)).collect()
    }

    pub fn parse_compact(s: &str, obstacles: usize) -> Option<HVector> {
        let n1 = obstacles * obstacles.saturating_sub(1) / 2;
        let bits: Option<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        let bits = bits?;
        if bits.len() != n1 + 4 * obstacles {
            return None;
        }
        Some(HVector {
            h1: bits[..n1].to_vec(),
            h2: bits[n1..].to_vec(),
        })
    }
}

fn bit(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

impl fmt::Display for HVector {
    /// Grouped form, e.g. `1;1101;1101`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h1: String = self.h1.iter().map(|&b| bit(b)).collect();
        write!(f, "{h1}")?;
        for chunk in self.h2.chunks(4) {
            let s: String = chunk.iter().map(|&b| bit(b)).collect();
            write!(f, ";{s}")?;
        }
        Ok(())
    }
}

/// Fingerprints a loop-free network.
pub fn classify(net: &PlanarNetwork, obstacles: &[Disk]) -> Result<HVector> {
    let segs = ClassSegments::new(obstacles, &net.vertices());
    classify_with(net, obstacles, &segs)
}

pub fn classify_with(net: &PlanarNetwork, obstacles: &[Disk], segs: &ClassSegments) -> Result<HVector> {
    let paths: Vec<PolyPath> = branches(net)?.iter().map(|b| net.branch_path(b)).collect();
    let vertices = net.vertices();
    let h1 = segs
        .pairs
        .iter()
        .map(|(_, s)| odd_in_any(&paths, &vertices, *s))
        .collect::<Result<Vec<_>>>()?;
    let mut h2 = Vec::with_capacity(4 * obstacles.len());
    for rays in &segs.rays {
        for s in rays {
            h2.push(odd_in_any(&paths, &vertices, *s)?);
        }
    }
    Ok(HVector { h1, h2 })
}

fn odd_in_any(paths: &[PolyPath], vertices: &[Point2], s: Segment) -> Result<bool> {
    let s = clear_of_vertices(s, vertices)?;
    for p in paths {
        if count_crossings(p, &s)? % 2 == 1 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Rotates the segment about its first end point in growing 1e-6 rad steps
/// until no network vertex lies on it.
fn clear_of_vertices(s: Segment, vertices: &[Point2]) -> Result<Segment> {
    let touches = |s: &Segment| vertices.iter().any(|&v| s.distance_to(v) <= EPS);
    if !touches(&s) {
        return Ok(s);
    }
    for k in 1..=NUDGE_ATTEMPTS {
        let step = ((k + 1) / 2) as f64 * NUDGE;
        let angle = if k % 2 == 1 { step } else { -step };
        let r = Segment::new(s.a, s.a + (s.b - s.a).rotated(angle));
        if !touches(&r) {
            return Ok(r);
        }
    }
    Err(Error::Degenerate(
        "network vertices lie on a classification segment".into(),
    ))
}

/// Obstacles whose NESW bits are impossible for a connected network: 1010
/// and 0101 always, 0000 when the obstacle center lies inside the convex hull
/// of the network vertices.
pub fn redundancy_violations(h: &HVector, net: &PlanarNetwork, obstacles: &[Disk]) -> Vec<usize> {
    let hull = convex_hull(&net.nodes);
    let hull_pts: Vec<Point2> = hull.iter().map(|&i| net.nodes[i]).collect();
    (0..obstacles.len())
        .filter(|&i| {
            let b = h.nesw(i);
            match b {
                [true, false, true, false] | [false, true, false, true] => true,
                [false, false, false, false] => strictly_inside_convex(&hull_pts, obstacles[i].center),
                _ => false,
            }
        })
        .collect()
}

/// Indices of the convex hull in counter-clockwise order, collinear points
/// dropped.
pub fn convex_hull(points: &[Point2]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .x
            .total_cmp(&points[b].x)
            .then(points[a].y.total_cmp(&points[b].y))
    });
    idx.dedup_by(|a, b| points[*a].dist(points[*b]) <= EPS);
    if idx.len() < 3 {
        return idx;
    }
    let turn = |o: usize, a: usize, b: usize| (points[a] - points[o]).cross(points[b] - points[o]);
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], i) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], i) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn strictly_inside_convex(hull: &[Point2], p: Point2) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        (b - a).cross(p - a) > EPS
    })
}

/// Upper bound on reasonable homotopy classes: `f^phi`.
pub fn max_homotopies(f: u64, phi: u32) -> u128 {
    (f as u128).pow(phi)
}

/// Bins available for obstacles: `m` bounded faces for a convex terminal
/// layout, two sides for a path.
pub fn face_count(m: usize) -> usize {
    if m >= 2 {
        m
    } else {
        1
    }
}

/// Bell number via the Bell triangle.
pub fn bell_number(phi: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..phi {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

/// HVector length for `phi` obstacles.
pub fn hvector_dimension(phi: usize) -> usize {
    phi * (phi + 7) / 2
}

/// Groups obstacles by the face of network plus terminal hull that holds
/// them. Obstacles outside every bounded face form one extra block. Blocks
/// are sorted and empty faces are omitted.
pub fn partition_of(net: &PlanarNetwork, obstacles: &[Disk]) -> Result<Vec<Vec<usize>>> {
    branches(net)?;
    let faces = face_curves(net)?;
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, o) in obstacles.iter().enumerate() {
        let face = faces
            .iter()
            .position(|curve| winding_number(curve, o.center) != 0)
            .unwrap_or(faces.len());
        blocks.entry(face).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = blocks.into_values().collect();
    out.sort();
    Ok(out)
}

/// Closed curves bounding the faces between the network and the hull of its
/// terminals.
pub fn face_curves(net: &PlanarNetwork) -> Result<Vec<Vec<PathElement>>> {
    let tpos: Vec<Point2> = net.terminals.iter().map(|&t| net.nodes[t]).collect();
    let hull: Vec<usize> = convex_hull(&tpos).into_iter().map(|i| net.terminals[i]).collect();
    let missing = || Error::Degenerate("terminals are not connected by the network".into());
    if hull.len() >= 3 {
        let mut curves = Vec::new();
        for k in 0..hull.len() {
            let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
            let path = net.path_between(a, b).ok_or_else(missing)?;
            let mut curve = path.elements().to_vec();
            curve.push(PathElement::Segment(Segment::new(net.nodes[b], net.nodes[a])));
            curves.push(curve);
        }
        return Ok(curves);
    }
    if hull.len() < 2 {
        return Ok(Vec::new());
    }
    // Two hull terminals: one side of the connecting path, closed far away.
    let (a, b) = (hull[0], hull[1]);
    let path = net.path_between(a, b).ok_or_else(missing)?;
    let (pa, pb) = (net.nodes[a], net.nodes[b]);
    let mut pts = net.vertices();
    pts.push(pa);
    let center = pa.midpoint(pb);
    let far = pts.iter().map(|p| p.dist(center)).fold(0.0, f64::max) * 4.0 + 1.0;
    let u = (pb - pa).normalized();
    let fb = center + u * far;
    let fa = center - u * far;
    let ring = Disk::new(center, far);
    let mut curve = path.elements().to_vec();
    curve.push(PathElement::Segment(Segment::new(pb, fb)));
    curve.push(PathElement::Arc(crate::geometry::Arc::between(ring, fb, fa, Orientation::Ccw)));
    curve.push(PathElement::Segment(Segment::new(fa, pa)));
    Ok(vec![curve])
}

/// Winding number of a closed curve about `p`.
pub fn winding_number(curve: &[PathElement], p: Point2) -> i64 {
    let total: f64 = curve.iter().map(|e| swept_angle(e, p)).sum();
    (total / TAU).round() as i64
}
