//! Structured, region-tagged triangulation of a [`RegionLayout`].
//!
//! Every rectangle edge becomes a lattice line, so region interfaces always
//! coincide with element edges. Interior lattice intervals are split into
//! `ceil(len / h)` equal cells. Intervals in the air margin between the core
//! and the outer box are graded geometrically away from the core, which keeps
//! the element count near 10^4 while the air gap is still resolved.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Region, RegionLayout};
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Target edge length inside the core, meters.
    pub h: f64,
    /// Geometric growth ratio of cell sizes in the far-field air margin.
    /// `1.0` gives a uniform lattice everywhere.
    pub far_growth: f64,
}

impl MeshOptions {
    pub fn uniform(h: f64) -> Self {
        MeshOptions { h, far_growth: 1.0 }
    }
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            h: 0.0033,
            far_growth: 1.2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub boundary: Vec<bool>,
    pub areas: Vec<f64>,
    /// Gradients of the three barycentric basis functions per element.
    pub grads: Vec<[Vec2; 3]>,
}

impl Mesh {
    /// Build a mesh from raw arrays. Triangles must be counter-clockwise.
    pub fn from_parts(
        vertices: Vec<Vec2>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
        boundary: Vec<bool>,
    ) -> Result<Mesh> {
        if regions.len() != triangles.len() {
            return Err(Error::MeshMismatch {
                expected: triangles.len(),
                actual: regions.len(),
            });
        }
        if boundary.len() != vertices.len() {
            return Err(Error::MeshMismatch {
                expected: vertices.len(),
                actual: boundary.len(),
            });
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::MeshResolution(format!(
                    "triangle {e} references a missing vertex"
                )));
            }
            let [p0, p1, p2] = tri.map(|v| vertices[v]);
            let twice = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            if twice <= 0.0 {
                return Err(Error::MeshResolution(format!(
                    "triangle {e} has non-positive signed area"
                )));
            }
            areas.push(0.5 * twice);
            grads.push([
                [(p1[1] - p2[1]) / twice, (p2[0] - p1[0]) / twice],
                [(p2[1] - p0[1]) / twice, (p0[0] - p2[0]) / twice],
                [(p0[1] - p1[1]) / twice, (p1[0] - p0[0]) / twice],
            ]);
        }
        Ok(Mesh {
            vertices,
            triangles,
            regions,
            boundary,
            areas,
            grads,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn centroid(&self, e: usize) -> Vec2 {
        let [a, b, c] = self.triangles[e].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn elements_in(&self, region: Region) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_elements()).filter(move |&e| self.regions[e] == region)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        self.elements_in(region).map(|e| self.areas[e]).sum()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Number of triangles sharing each undirected edge.
    pub fn edge_incidence(&self) -> HashMap<(usize, usize), usize> {
        let mut count = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        count
    }
}

/// Triangulate the layout on a rectangular lattice, two triangles per cell.
pub fn triangulate(layout: &RegionLayout, opts: &MeshOptions) -> Result<Mesh> {
    let h = opts.h;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::MeshResolution(format!(
            "edge length must be positive, got {h}"
        )));
    }
    if !(opts.far_growth.is_finite() && opts.far_growth >= 1.0) {
        return Err(Error::MeshResolution(format!(
            "far-field growth must be >= 1, got {}",
            opts.far_growth
        )));
    }
    for (r, tag) in &layout.parts {
        let smallest = r.width().min(r.height());
        if h > smallest * (1.0 + 1e-12) {
            return Err(Error::MeshResolution(format!(
                "h = {h} exceeds the {smallest} thickness of a {tag} region"
            )));
        }
    }

    let boxr = layout.air_box;
    let core = core_extent(layout);

    let xs = lattice_lines(
        &axis_breaks(layout, |r| (r.x0, r.x1), (boxr.x0, boxr.x1)),
        core.map(|c| (c.0, c.1)),
        &thin_spans(layout, true),
        opts,
    );
    let ys = lattice_lines(
        &axis_breaks(layout, |r| (r.y0, r.y1), (boxr.y0, boxr.y1)),
        core.map(|c| (c.2, c.3)),
        &thin_spans(layout, false),
        opts,
    );

    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            vertices.push([x, y]);
            boundary.push(i == 0 || j == 0 || i == nx || j == ny);
        }
    }

    let mid_x = 0.5 * (boxr.x0 + boxr.x1);
    let id = |i: usize, j: usize| i + j * (nx + 1);
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut regions = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        let cy = 0.5 * (ys[j] + ys[j + 1]);
        for i in 0..nx {
            let cx = 0.5 * (xs[i] + xs[i + 1]);
            let tag = layout.region_at(cx, cy);
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            // diagonals mirror across the vertical centre line
            if cx < mid_x {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
            regions.push(tag);
            regions.push(tag);
        }
    }
    Mesh::from_parts(vertices, triangles, regions, boundary)
}

/// Bounding box of all parts as (x0, x1, y0, y1).
fn core_extent(layout: &RegionLayout) -> Option<(f64, f64, f64, f64)> {
    layout.parts.iter().fold(None, |acc, (r, _)| {
        Some(match acc {
            None => (r.x0, r.x1, r.y0, r.y1),
            Some((a, b, c, d)) => (a.min(r.x0), b.max(r.x1), c.min(r.y0), d.max(r.y1)),
        })
    })
}

fn axis_breaks(
    layout: &RegionLayout,
    span: impl Fn(&crate::geometry::Rect) -> (f64, f64),
    outer: (f64, f64),
) -> Vec<f64> {
    let mut pts = vec![outer.0, outer.1, 0.5 * (outer.0 + outer.1)];
    for (r, _) in &layout.parts {
        let (a, b) = span(r);
        pts.push(a);
        pts.push(b);
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-12 * (outer.1 - outer.0);
    pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    pts
}

/// Spans along one axis that must hold at least two element layers: the thin
/// direction of each air-gap rectangle.
fn thin_spans(layout: &RegionLayout, x_axis: bool) -> Vec<(f64, f64)> {
    layout
        .parts_of(Region::AirGap)
        .filter(|r| (r.width() < r.height()) == x_axis)
        .map(|r| if x_axis { (r.x0, r.x1) } else { (r.y0, r.y1) })
        .collect()
}

fn lattice_lines(
    breaks: &[f64],
    core: Option<(f64, f64)>,
    thin: &[(f64, f64)],
    opts: &MeshOptions,
) -> Vec<f64> {
    let h = opts.h;
    let scale = breaks[breaks.len() - 1] - breaks[0];
    let eps = 1e-12 * scale;
    let mut lines = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let below = core.is_some_and(|(lo, _)| b <= lo + eps);
        let above = core.is_some_and(|(_, hi)| a >= hi - eps);
        if (below || above) && opts.far_growth > 1.0 {
            let sizes = graded_sizes(len, h, opts.far_growth);
            if above {
                let mut x = a;
                for s in &sizes[..sizes.len() - 1] {
                    x += s;
                    lines.push(x);
                }
            } else {
                // smallest cell next to the core, i.e. at b
                let mut x = b;
                let mut inner = Vec::with_capacity(sizes.len());
                for s in &sizes[..sizes.len() - 1] {
                    x -= s;
                    inner.push(x);
                }
                lines.extend(inner.into_iter().rev());
            }
        } else {
            let mut n = ((len / h) - 1e-9).ceil().max(1.0) as usize;
            if thin.iter().any(|&(lo, hi)| a >= lo - eps && b <= hi + eps) {
                n = n.max(2);
            }
            for k in 1..n {
                lines.push(a + len * (k as f64) / (n as f64));
            }
        }
        lines.push(b);
    }
    lines
}

/// Cell sizes `h, h r, h r^2, ...` rescaled to sum exactly to `len`.
fn graded_sizes(len: f64, h: f64, r: f64) -> Vec<f64> {
    let mut sizes = Vec::new();
    let mut total = 0.0;
    let mut s = h;
    while total < len * (1.0 - 1e-9) {
        sizes.push(s);
        total += s;
        s *= r;
    }
    let k = len / total;
    sizes.iter_mut().for_each(|s| *s *= k);
    sizes
}
