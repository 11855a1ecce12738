//! Attributed part graph, its canonical JSON form and an SVG overlay.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geom::P2;
use crate::parts::Decomposition;
use crate::shape_fit::NodeAttributes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub contact_px: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectGraph {
    pub object_name: Option<String>,
    pub image_size: (usize, usize),
    /// Node `i` has id `i`; largest area first.
    pub nodes: Vec<NodeAttributes>,
    pub edges: Vec<Edge>,
    /// Decomposition part index behind each node.
    pub part_index: Vec<usize>,
    /// Image-plane outline of each node's part.
    pub outlines: Vec<Vec<P2>>,
}

impl ObjectGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbours(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |e| {
            if e.a == id {
                Some(e.b)
            } else if e.b == id {
                Some(e.a)
            } else {
                None
            }
        })
    }

    /// Breadth-first check from node 0.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for n in self.neighbours(v) {
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Nodes ordered by descending pixel area (ties by centroid x, then y);
/// edges between parts with 4-adjacent pixels, weighted by the number of
/// adjacent pixel pairs. `object_attrs` are copied into every node's extra
/// map.
pub fn build_graph(
    decomp: &Decomposition,
    attributes: Vec<NodeAttributes>,
    object_name: Option<&str>,
    object_attrs: &BTreeMap<String, String>,
    image_size: (usize, usize),
) -> ObjectGraph {
    assert_eq!(decomp.parts.len(), attributes.len(), "one attribute set per part");
    let mut order: Vec<usize> = (0..decomp.parts.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&decomp.parts[i], &decomp.parts[j]);
        b.area_px
            .cmp(&a.area_px)
            .then(a.centroid_px.x.total_cmp(&b.centroid_px.x))
            .then(a.centroid_px.y.total_cmp(&b.centroid_px.y))
            .then(i.cmp(&j))
    });
    let mut id_of = vec![0usize; order.len()];
    for (id, &p) in order.iter().enumerate() {
        id_of[p] = id;
    }

    let (w, h) = image_size;
    let mut label = vec![usize::MAX; w * h];
    for (p, part) in decomp.parts.iter().enumerate() {
        for &(r, c) in &part.pixels {
            label[r as usize * w + c as usize] = id_of[p];
        }
    }
    let mut contact: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for r in 0..h {
        for c in 0..w {
            let a = label[r * w + c];
            if a == usize::MAX {
                continue;
            }
            let right = (c + 1 < w).then(|| label[r * w + c + 1]);
            let down = (r + 1 < h).then(|| label[(r + 1) * w + c]);
            for b in [right, down].into_iter().flatten() {
                if b != usize::MAX && b != a {
                    *contact.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
        }
    }

    let mut attrs: Vec<Option<NodeAttributes>> = attributes.into_iter().map(Some).collect();
    let nodes = order
        .iter()
        .map(|&p| {
            let mut a = attrs[p].take().expect("each part once");
            for (k, v) in object_attrs {
                a.extra.insert(k.clone(), v.clone());
            }
            a
        })
        .collect();
    ObjectGraph {
        object_name: object_name.map(str::to_string),
        image_size,
        nodes,
        edges: contact
            .into_iter()
            .map(|((a, b), n)| Edge { a, b, contact_px: n })
            .collect(),
        outlines: order
            .iter()
            .map(|&p| decomp.parts[p].polygon.outer.clone())
            .collect(),
        part_index: order,
    }
}

fn round1(x: f64) -> f64 {
    let r = (x * 10.0).round() / 10.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Serialize)]
struct CanonNode<'a> {
    id: usize,
    shape: &'static str,
    area_pct: f64,
    aspect_ratio: f64,
    angle_deg: Option<f64>,
    centroid: [f64; 2],
    color: &'a str,
    width_px: f64,
    extra: &'a BTreeMap<String, String>,
}

#[derive(Serialize)]
struct CanonGraph<'a> {
    object: Option<&'a str>,
    nodes: Vec<CanonNode<'a>>,
    edges: &'a [Edge],
}

/// Deterministic compact JSON with fixed key order and one-decimal floats.
pub fn serialize_graph(g: &ObjectGraph) -> String {
    let canon = CanonGraph {
        object: g.object_name.as_deref().filter(|s| !s.is_empty()),
        nodes: g
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| CanonNode {
                id,
                shape: n.shape.kind(),
                area_pct: round1(n.area_pct),
                aspect_ratio: round1(n.aspect_ratio),
                angle_deg: n.angle_deg.map(round1),
                centroid: n.centroid_px.map(round1),
                color: &n.color,
                width_px: round1(n.width_px),
                extra: &n.extra,
            })
            .collect(),
        edges: &g.edges,
    };
    serde_json::to_string(&canon).expect("graph serialises")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SVG 1.1 overlay: part outlines, green centroid markers, blue edges and
/// node ids. The selected node's outline is drawn in red.
pub fn render_overlay(g: &ObjectGraph, selected: Option<usize>) -> String {
    let (w, h) = g.image_size;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    if let Some(name) = &g.object_name {
        let _ = writeln!(s, "  <title>{}</title>", xml_escape(name));
    }
    let _ = writeln!(s, r#"  <g class="parts" fill="none" stroke-width="1.5">"#);
    for (id, outline) in g.outlines.iter().enumerate() {
        let pts: Vec<String> = outline.iter().map(|p| format!("{:.1},{:.1}", p.x, p.y)).collect();
        let (stroke, width) = if selected == Some(id) { ("red", 3.0) } else { ("gray", 1.5) };
        let _ = writeln!(
            s,
            r#"    <polygon data-node="{id}" points="{}" stroke="{stroke}" stroke-width="{width}"/>"#,
            pts.join(" ")
        );
    }
    let _ = writeln!(s, "  </g>");
    let _ = writeln!(s, r#"  <g class="edges" stroke="blue" stroke-width="2">"#);
    for e in &g.edges {
        let (a, b) = (g.nodes[e.a].centroid_px, g.nodes[e.b].centroid_px);
        let _ = writeln!(
            s,
            r#"    <line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" data-contact="{}"/>"#,
            a[0], a[1], b[0], b[1], e.contact_px
        );
    }
    let _ = writeln!(s, "  </g>");
    let _ = writeln!(s, r#"  <g class="nodes">"#);
    for (id, n) in g.nodes.iter().enumerate() {
        let [x, y] = n.centroid_px;
        let _ = writeln!(
            s,
            r#"    <circle class="centroid" cx="{x:.1}" cy="{y:.1}" r="5" fill="green"/>"#
        );
        let _ = writeln!(
            s,
            r#"    <text x="{:.1}" y="{:.1}" font-size="12" fill="black">{id}</text>"#,
            x + 7.0,
            y - 7.0
        );
    }
    let _ = writeln!(s, "  </g>");
    s.push_str("</svg>\n");
    s
}
