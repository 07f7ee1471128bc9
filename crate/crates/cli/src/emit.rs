//! SVG, CSV and DOT writers.

use std::fmt::Write;

use beckmann_core::beckmann::ThreePlan;
use beckmann_core::grillage::GrillageMeasure;
use beckmann_core::leaf::LeafNode;
use beckmann_core::{DiscreteMeasure, Point, Scalar};

const CANVAS: f64 = 480.0;
const MARGIN: f64 = 24.0;
const MAX_STROKE: f64 = 6.0;

fn coords<S: Scalar>(p: &Point<S>) -> String {
    p.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

/// One row per plan atom: `x`, `y`, `z` (coordinates joined by `;`), weight, cost.
pub fn plan_csv<S: Scalar>(plan: &ThreePlan<S>) -> String {
    let mut out = String::from("x,y,z,w,cost\n");
    for (t, w) in plan.atoms() {
        let _ = writeln!(out, "{},{},{},{},{}", coords(&t.x), coords(&t.y), coords(&t.z), w, t.cost());
    }
    out
}

/// One row per bar: endpoints, sign, weight and mass.
pub fn bars_csv<S: Scalar>(g: &GrillageMeasure<S>) -> String {
    let mut out = String::from("from,to,sign,weight,mass\n");
    for b in &g.bars {
        let _ = writeln!(out, "{},{},{},{},{}", coords(&b.from), coords(&b.to), b.sign, b.weight, b.mass());
    }
    out
}

/// Planar drawing of the bars: `z → x` bars (sign `+1`) in red, `z → y`
/// bars (sign `−1`) in blue, stroke width proportional to weight. `mu`
/// atoms are drawn as filled dots, `nu` atoms as rings.
pub fn grillage_svg<S: Scalar>(g: &GrillageMeasure<S>, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> String {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for b in &g.bars {
        for p in [&b.from, &b.to] {
            let c = p.to_f64();
            pts.push([c[0], c[1]]);
        }
    }
    for p in mu.points().chain(nu.points()) {
        let c = p.to_f64();
        pts.push([c[0], c[1]]);
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    let map = |p: &Point<S>| {
        let c = p.to_f64();
        (MARGIN + (c[0] - lo[0]) * scale, CANVAS - MARGIN - (c[1] - lo[1]) * scale)
    };
    let max_w = g.bars.iter().map(|b| b.weight.to_f64()).fold(0.0, f64::max).max(1e-12);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<g stroke-linecap="round">"#);
    for b in &g.bars {
        let ((x1, y1), (x2, y2)) = (map(&b.from), map(&b.to));
        let colour = if b.sign > 0 { "#c0392b" } else { "#2e6fba" };
        let width = 0.5 + MAX_STROKE * b.weight.to_f64() / max_w;
        let _ = writeln!(
            out,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{colour}" stroke-width="{width:.3}" stroke-opacity="0.8"/>"#
        );
    }
    let _ = writeln!(out, "</g>");
    for (p, _) in mu.atoms() {
        let (x, y) = map(p);
        let _ = writeln!(out, r##"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="#222"/>"##);
    }
    for (p, _) in nu.atoms() {
        let (x, y) = map(p);
        let _ = writeln!(out, r##"<circle cx="{x:.3}" cy="{y:.3}" r="6" fill="none" stroke="#222" stroke-width="1.5"/>"##);
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Partition tree in Graphviz DOT.
pub fn tree_dot<S: Scalar>(root: &LeafNode<S>) -> String {
    let mut out = String::from("digraph leaves {\n  node [shape=box, fontname=\"monospace\"];\n");
    for node in root.nodes() {
        let label = format!(
            "{}\\nkind={}\\ntheta={}\\nkey={}\\nmu:{} nu:{}",
            node.label(),
            node.kind.as_str(),
            node.theta,
            node.key,
            node.mu.len(),
            node.nu.len()
        );
        let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", escape(&node.label()), escape(&label).replace("\\\\n", "\\n"));
        for c in &node.children {
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", escape(&node.label()), escape(&c.label()));
        }
    }
    out.push_str("}\n");
    out
}
