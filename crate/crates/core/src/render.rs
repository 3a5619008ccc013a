//! SVG drawings of planar clusterings and their power diagrams.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Clustering, DataSet};
use crate::power_diagram::PowerDiagram;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

pub fn color(cluster: usize) -> &'static str {
    PALETTE[cluster % PALETTE.len()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BBox {
    /// Box around the points and sites, padded by a tenth of its extent.
    pub fn around<'a>(pts: impl IntoIterator<Item = &'a [f64]>) -> BBox {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in pts {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let pad = 0.1 * (max[0] - min[0]).max(max[1] - min[1]).max(1e-3);
        BBox {
            min: [min[0] - pad, min[1] - pad],
            max: [max[0] + pad, max[1] + pad],
        }
    }

    fn corners(&self) -> Vec<[f64; 2]> {
        vec![
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }
}

/// Which constraint bounds the edge leaving a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSource {
    Frame,
    /// The hyperplane shared with this neighbor cell.
    Neighbor(usize),
}

/// Convex polygon; `edges[v]` runs from `vertices[v]` to the next vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub vertices: Vec<[f64; 2]>,
    pub edges: Vec<EdgeSource>,
}

impl Cell {
    pub fn contains(&self, x: [f64; 2], tol: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|v| {
            let (a, b) = (self.vertices[v], self.vertices[(v + 1) % n]);
            let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            cross >= -tol * len
        })
    }
}

/// Keeps the part of `cell` where `a . x <= b`.
fn clip(cell: &Cell, a: [f64; 2], b: f64, label: EdgeSource) -> Cell {
    let n = cell.vertices.len();
    let side = |p: [f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
    let mut out = Cell {
        vertices: Vec::new(),
        edges: Vec::new(),
    };
    for v in 0..n {
        let (p, q) = (cell.vertices[v], cell.vertices[(v + 1) % n]);
        let (fp, fq) = (side(p), side(q));
        let cut = |t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        match (fp <= 0.0, fq <= 0.0) {
            (true, true) => {
                out.vertices.push(p);
                out.edges.push(cell.edges[v]);
            }
            (true, false) => {
                out.vertices.push(p);
                out.edges.push(cell.edges[v]);
                out.vertices.push(cut(fp / (fp - fq)));
                out.edges.push(label);
            }
            (false, true) => {
                out.vertices.push(cut(fp / (fp - fq)));
                out.edges.push(cell.edges[v]);
            }
            (false, false) => {}
        }
    }
    out
}

/// Cells of a planar diagram clipped to `bbox`.
pub fn cells(pd: &PowerDiagram, bbox: &BBox) -> Vec<Cell> {
    let frame = Cell {
        vertices: bbox.corners(),
        edges: vec![EdgeSource::Frame; 4],
    };
    (0..pd.k())
        .map(|i| {
            let si = pd.sites.site(i);
            (0..pd.k()).filter(|&l| l != i).fold(frame.clone(), |cell, l| {
                let sl = pd.sites.site(l);
                let a = [sl[0] - si[0], sl[1] - si[1]];
                clip(&cell, a, pd.gammas[l] - pd.gammas[i], EdgeSource::Neighbor(l))
            })
        })
        .collect()
}

struct Canvas {
    bbox: BBox,
    scale: f64,
}

impl Canvas {
    fn new(bbox: BBox) -> Self {
        let span = (bbox.max[0] - bbox.min[0]).max(bbox.max[1] - bbox.min[1]);
        Canvas {
            bbox,
            scale: (SIZE - 2.0 * MARGIN) / span,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.bbox.min[0]) * self.scale,
            SIZE - MARGIN - (p[1] - self.bbox.min[1]) * self.scale,
        )
    }
}

/// Draws `clustering` and, if given, the cell boundaries of `pd`. Points
/// are colored by cluster; sites are crosses.
pub fn render_svg(
    ds: &DataSet,
    clustering: &Clustering,
    pd: Option<&PowerDiagram>,
    title: &str,
) -> Result<String> {
    if ds.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "rendering needs planar data, got dimension {}",
            ds.dim()
        )));
    }
    clustering.check_against(ds)?;
    let site_pts: Vec<Vec<f64>> = pd.map(|p| p.sites.to_vecs()).unwrap_or_default();
    let bbox = BBox::around(ds.points().chain(site_pts.iter().map(|s| s.as_slice())));
    let cv = Canvas::new(bbox);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(title));
    let _ = writeln!(svg, r##"<rect width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##);
    if let Some(pd) = pd {
        for (i, cell) in cells(pd, &bbox).iter().enumerate() {
            let n = cell.vertices.len();
            for v in 0..n {
                let EdgeSource::Neighbor(l) = cell.edges[v] else {
                    continue;
                };
                if l < i {
                    continue;
                }
                let (x1, y1) = cv.map(cell.vertices[v]);
                let (x2, y2) = cv.map(cell.vertices[(v + 1) % n]);
                let _ = writeln!(
                    svg,
                    r##"<line class="boundary" data-cells="{} {}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="#000000" stroke-width="1"/>"##,
                    i + 1,
                    l + 1
                );
            }
        }
    }
    for (j, p) in ds.points().enumerate() {
        let (x, y) = cv.map([p[0], p[1]]);
        let c = clustering.cluster_of(j);
        let _ = writeln!(
            svg,
            r#"<circle class="point" data-cluster="{}" cx="{x:.3}" cy="{y:.3}" r="4" fill="{}"/>"#,
            c + 1,
            color(c)
        );
    }
    for (i, s) in site_pts.iter().enumerate() {
        let (x, y) = cv.map([s[0], s[1]]);
        let _ = writeln!(
            svg,
            r#"<path class="site" d="M{:.3} {:.3}L{:.3} {:.3}M{:.3} {:.3}L{:.3} {:.3}" stroke="{}" stroke-width="2"/>"#,
            x - 6.0,
            y - 6.0,
            x + 6.0,
            y + 6.0,
            x - 6.0,
            y + 6.0,
            x + 6.0,
            y - 6.0,
            color(i)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
