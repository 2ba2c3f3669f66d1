//! SVG 1.1 rendering of a scenario and a network state.

use std::fmt::Write as _;

use relaynet::geometry::Point2;
use relaynet::network::{NetworkState, Scenario};
use relaynet::optimizer::Mst;

pub const TERMINAL_COLOR: &str = "#d62728";
pub const RELAY_COLOR: &str = "#1f77b4";
pub const OBSTACLE_COLOR: &str = "#7f7f7f";

/// Pixels per scenario unit.
pub const DEFAULT_SCALE: f64 = 20.0;

/// Obstacles and transmission disks are `circle` elements (one per disk);
/// node markers are squares so circles map one-to-one onto disks.
pub fn render(s: &Scenario, st: &NetworkState, scale: f64) -> String {
    let (pos, origin) = st.live_nodes(s);
    let radii = st.live_radii();
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |c: Point2, r: f64| {
        lo = Point2::new(lo.x.min(c.x - r), lo.y.min(c.y - r));
        hi = Point2::new(hi.x.max(c.x + r), hi.y.max(c.y + r));
    };
    for (&p, &r) in pos.iter().zip(&radii) {
        grow(p, r);
    }
    for o in &s.obstacles {
        grow(o.center, o.radius);
    }
    let margin = 10.0;
    let width = (hi.x - lo.x) * scale + 2.0 * margin;
    let height = (hi.y - lo.y) * scale + 2.0 * margin;
    let map = |p: Point2| ((p.x - lo.x) * scale + margin, (hi.y - p.y) * scale + margin);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width:.3}" height="{height:.3}" fill="white"/>"#);

    let _ = writeln!(out, r#"<g id="obstacles">"#);
    for (j, o) in s.obstacles.iter().enumerate() {
        let (x, y) = map(o.center);
        let _ = writeln!(
            out,
            r#"<circle class="obstacle" data-index="{j}" cx="{x:.4}" cy="{y:.4}" r="{}" fill="{OBSTACLE_COLOR}" fill-opacity="0.6"/>"#,
            o.radius * scale
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g id="disks">"#);
    for (i, (&p, &r)) in pos.iter().zip(&radii).enumerate() {
        if r <= 0.0 {
            continue;
        }
        let (x, y) = map(p);
        let color = if origin[i].is_some() { RELAY_COLOR } else { TERMINAL_COLOR };
        let _ = writeln!(
            out,
            r#"<circle class="disk" data-node="{i}" cx="{x:.4}" cy="{y:.4}" r="{}" fill="{color}" fill-opacity="0.08" stroke="{color}" stroke-width="0.5"/>"#,
            r * scale
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g id="edges" stroke="black" stroke-width="1">"#);
    let mst = Mst::build(&pos, &vec![true; pos.len()]);
    for &(u, v) in &mst.edges {
        let (x1, y1) = map(pos[u]);
        let (x2, y2) = map(pos[v]);
        let _ = writeln!(out, r#"<line x1="{x1:.4}" y1="{y1:.4}" x2="{x2:.4}" y2="{y2:.4}"/>"#);
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g id="nodes">"#);
    for (i, &p) in pos.iter().enumerate() {
        let (x, y) = map(p);
        let (color, half) = if origin[i].is_some() { (RELAY_COLOR, 2.0) } else { (TERMINAL_COLOR, 4.0) };
        let _ = writeln!(
            out,
            r#"<rect x="{:.4}" y="{:.4}" width="{}" height="{}" fill="{color}"/>"#,
            x - half,
            y - half,
            2.0 * half,
            2.0 * half
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}
