//! Navigation mesh baking in the Recast family: voxelize into column spans,
//! filter spans an agent can stand on, erode by the agent radius, grow
//! connected regions and emit convex polygons.
//!
//! Polygons are rectangles of grid cells whose span tops fit a plane within
//! half a cell height. Rectangle edges are split wherever the polygon on the
//! other side changes, so two adjacent polygons always share one full edge in
//! plan view.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{UnionFind, P3, V3};
use crate::mesh::TriMesh;
use crate::meshio::{export_mesh, write_file_atomic, MeshFormat};
use crate::rng;
use crate::scene_spec::AgentParams;

pub const DEFAULT_CELL_HEIGHT: f64 = 0.2;
/// Cells per side of the default voxel grid.
pub const DEFAULT_GRID: f64 = 256.0;
/// Connected regions with fewer spans than this are dropped (Recast's
/// default minimum region size of 8 x 8 cells).
pub const MIN_REGION_CELLS: usize = 64;
/// Largest rectangle side, in cells, of one polygon.
pub const MAX_POLY_CELLS: usize = 32;

pub fn default_cell_size(extent: f64) -> f64 {
    extent / DEFAULT_GRID
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavMesh {
    /// Convex polygons, counter-clockwise seen from above.
    pub polygons: Vec<Vec<P3>>,
    /// Sorted pairs `(a, b)` with `a < b`.
    pub adjacency: Vec<[u32; 2]>,
    /// Connected component of each polygon, numbered in polygon order.
    pub region_ids: Vec<u32>,
    pub cell_size: f64,
    pub cell_height: f64,
    pub agent: AgentParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<P3>,
    pub normals: Option<Vec<V3>>,
}

impl PointCloud {
    pub fn new(points: Vec<P3>) -> Self {
        PointCloud { points, normals: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Apply `f` to every point; normals are dropped.
    pub fn map(&self, f: impl Fn(&P3) -> P3) -> PointCloud {
        PointCloud::new(self.points.iter().map(f).collect())
    }
}

fn fan_area(poly: &[P3]) -> f64 {
    (1..poly.len().saturating_sub(1))
        .map(|k| (poly[k] - poly[0]).cross(&(poly[k + 1] - poly[0])).norm() / 2.0)
        .sum()
}

impl NavMesh {
    pub fn polygon_area(&self, p: usize) -> f64 {
        fan_area(&self.polygons[p])
    }

    pub fn area(&self) -> f64 {
        (0..self.polygons.len()).map(|p| self.polygon_area(p)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    /// Fan triangulation; triangles made of three collinear vertices are
    /// skipped.
    pub fn to_mesh(&self) -> TriMesh {
        let mut m = TriMesh::default();
        for poly in &self.polygons {
            let base = m.vertices.len() as u32;
            m.vertices.extend_from_slice(poly);
            for k in 1..poly.len().saturating_sub(1) {
                let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
                let plan = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
                if plan.abs() > 1e-12 * (1.0 + (b - a).norm_squared()) {
                    m.triangles.push([base, base + k as u32, base + k as u32 + 1]);
                }
            }
        }
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("navmesh serializes")
    }

    pub fn from_json(text: &str) -> Result<NavMesh> {
        serde_json::from_str(text).map_err(|e| Error::Import { format: "navmesh JSON", message: e.to_string() })
    }

    pub fn write_obj(&self, path: &Path) -> Result<()> {
        export_mesh(&self.to_mesh(), MeshFormat::Obj, path)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_file_atomic(path, self.to_json().as_bytes())
    }
}

// Direction order: -x, +y, +x, -y.
const DX: [i64; 4] = [-1, 0, 1, 0];
const DY: [i64; 4] = [0, 1, 0, -1];
const NO_LINK: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Span {
    smin: i32,
    smax: i32,
    /// Surface height at the cell center of the span's top.
    top: f64,
    walkable: bool,
}

struct Columns {
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    cs: f64,
    ch: f64,
    cols: Vec<Vec<Span>>,
}

impl Columns {
    fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + (i as f64 + 0.5) * self.cs, self.y0 + (j as f64 + 0.5) * self.cs)
    }

    fn neighbor(&self, i: usize, j: usize, d: usize) -> Option<(usize, usize)> {
        let (x, y) = (i as i64 + DX[d], j as i64 + DY[d]);
        (x >= 0 && y >= 0 && (x as usize) < self.nx && (y as usize) < self.ny).then_some((x as usize, y as usize))
    }

    /// Insert a span, merging it with every span it overlaps. The merged top
    /// surface comes from the higher span; the lower one only contributes
    /// walkability when its top is within `merge_thr` of the merged top.
    fn add(&mut self, c: usize, mut s: Span, merge_thr: i32) {
        let col = &mut self.cols[c];
        let mut k = 0;
        while k < col.len() {
            let cur = col[k];
            if cur.smax < s.smin {
                k += 1;
                continue;
            }
            if cur.smin > s.smax {
                break;
            }
            let (hi, lo) = if cur.smax > s.smax || (cur.smax == s.smax && cur.top > s.top) { (cur, s) } else { (s, cur) };
            let near = hi.smax - lo.smax <= merge_thr;
            s = Span {
                smin: cur.smin.min(s.smin),
                smax: hi.smax,
                top: if near { hi.top.max(lo.top) } else { hi.top },
                walkable: hi.walkable || (near && lo.walkable),
            };
            col.remove(k);
        }
        col.insert(k, s);
    }
}

/// Clip a polygon to `lo <= p[axis] <= hi`.
fn clip_slab(poly: &[P3], axis: usize, lo: f64, hi: f64) -> Vec<P3> {
    let clip = |poly: &[P3], keep: &dyn Fn(&P3) -> f64| -> Vec<P3> {
        let mut out = Vec::with_capacity(poly.len() + 2);
        for k in 0..poly.len() {
            let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
            let (da, db) = (keep(&a), keep(&b));
            if da >= 0.0 {
                out.push(a);
            }
            if (da >= 0.0) != (db >= 0.0) {
                let t = da / (da - db);
                out.push(a + (b - a) * t);
            }
        }
        out
    };
    let p = clip(poly, &|p: &P3| p[axis] - lo);
    if p.is_empty() {
        return p;
    }
    clip(&p, &|p: &P3| hi - p[axis])
}

fn rasterize(mesh: &TriMesh, agent: &AgentParams, cs: f64, ch: f64) -> Columns {
    let b = mesh.bounds();
    let nx = (((b.max.x - b.min.x) / cs).ceil() as usize).max(1);
    let ny = (((b.max.y - b.min.y) / cs).ceil() as usize).max(1);
    let mut hf = Columns { nx, ny, x0: b.min.x, y0: b.min.y, cs, ch, cols: vec![Vec::new(); nx * ny] };
    let climb = (agent.max_climb / ch).floor() as i32;
    let cos_slope = agent.max_slope_deg.to_radians().cos();
    let quant = |z0: f64, z1: f64| {
        let smin = ((z0 - b.min.z) / ch).floor() as i32;
        let smax = (((z1 - b.min.z) / ch).ceil() as i32).max(smin + 1);
        (smin, smax)
    };
    let cell_range = |lo: f64, hi: f64, origin: f64, n: usize| {
        let a = (((lo - origin) / cs).floor() as i64).clamp(0, n as i64 - 1) as usize;
        let b = (((hi - origin) / cs).floor() as i64).clamp(0, n as i64 - 1) as usize;
        (a, b)
    };

    for t in 0..mesh.triangles.len() {
        let n = mesh.cross(t);
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let walkable = n.z / len >= cos_slope - 1e-12;
        let [a, bb, c] = mesh.corners(t);
        let tri = [*a, *bb, *c];
        let lo = tri.iter().fold(P3::new(f64::INFINITY, f64::INFINITY, 0.0), |m, p| P3::new(m.x.min(p.x), m.y.min(p.y), 0.0));
        let hi = tri.iter().fold(P3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0), |m, p| P3::new(m.x.max(p.x), m.y.max(p.y), 0.0));
        let (i0, i1) = cell_range(lo.x, hi.x, hf.x0, nx);
        let (j0, j1) = cell_range(lo.y, hi.y, hf.y0, ny);
        for j in j0..=j1 {
            let y = hf.y0 + j as f64 * cs;
            let row = clip_slab(&tri, 1, y, y + cs);
            if row.is_empty() {
                continue;
            }
            for i in i0..=i1 {
                let x = hf.x0 + i as f64 * cs;
                let cell = clip_slab(&row, 0, x, x + cs);
                if cell.is_empty() {
                    continue;
                }
                let zmin = cell.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
                let zmax = cell.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
                let (cx, cy) = hf.center(i, j);
                let top = if n.z.abs() > 1e-12 {
                    (a.z - (n.x * (cx - a.x) + n.y * (cy - a.y)) / n.z).clamp(zmin, zmax)
                } else {
                    zmax
                };
                let (smin, smax) = quant(zmin, zmax);
                hf.add(j * nx + i, Span { smin, smax, top, walkable }, climb);
            }
        }
    }
    fill_closed_solids(mesh, &mut hf, climb, &quant);
    hf
}

/// Closed components enclose solid volume. Spans covering their interior are
/// added so that nothing inside a box reads as open floor.
fn fill_closed_solids(mesh: &TriMesh, hf: &mut Columns, climb: i32, quant: &dyn Fn(f64, f64) -> (i32, i32)) {
    let diag = mesh.bounds().extent().norm();
    let welded = mesh.welded(diag * 1e-9);
    let (labels, count) = welded.triangle_components();
    let mut edge_uses: Vec<std::collections::HashMap<(u32, u32), u32>> = vec![Default::default(); count];
    for (t, tri) in welded.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edge_uses[labels[t]].entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let closed: Vec<bool> = edge_uses.iter().map(|e| !e.is_empty() && e.values().all(|&u| u == 2)).collect();
    // Offset the probe point off the cell center so rays miss shared edges.
    let (ox, oy) = (hf.cs * 1.234_567e-7, hf.cs * 2.345_678e-7);
    for comp in 0..count {
        if !closed[comp] {
            continue;
        }
        let mut hits: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for (t, tri) in welded.triangles.iter().enumerate() {
            if labels[t] != comp {
                continue;
            }
            let [a, b, c] = tri.map(|v| welded.vertices[v as usize]);
            let d = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            if d.abs() < 1e-14 {
                continue;
            }
            let lo = (a.x.min(b.x).min(c.x), a.y.min(b.y).min(c.y));
            let hi = (a.x.max(b.x).max(c.x), a.y.max(b.y).max(c.y));
            let i0 = (((lo.0 - hf.x0) / hf.cs - 0.5).ceil().max(0.0)) as usize;
            let j0 = (((lo.1 - hf.y0) / hf.cs - 0.5).ceil().max(0.0)) as usize;
            let i1 = (((hi.0 - hf.x0) / hf.cs - 0.5).floor()).min(hf.nx as f64 - 1.0);
            let j1 = (((hi.1 - hf.y0) / hf.cs - 0.5).floor()).min(hf.ny as f64 - 1.0);
            if i1 < 0.0 || j1 < 0.0 {
                continue;
            }
            for j in j0..=j1 as usize {
                for i in i0..=i1 as usize {
                    let (cx, cy) = hf.center(i, j);
                    let (px, py) = (cx + ox, cy + oy);
                    let w1 = ((b.x - px) * (c.y - py) - (b.y - py) * (c.x - px)) / d;
                    let w2 = ((c.x - px) * (a.y - py) - (c.y - py) * (a.x - px)) / d;
                    let w3 = 1.0 - w1 - w2;
                    if w1 > 0.0 && w2 > 0.0 && w3 > 0.0 {
                        hits.entry(j * hf.nx + i).or_default().push(w1 * a.z + w2 * b.z + w3 * c.z);
                    }
                }
            }
        }
        for (cell, mut zs) in hits {
            zs.sort_by(f64::total_cmp);
            for pair in zs.chunks_exact(2) {
                let (smin, smax) = quant(pair[0], pair[1]);
                hf.add(cell, Span { smin, smax, top: pair[1], walkable: false }, climb);
            }
        }
    }
}

fn filter_spans(hf: &mut Columns, climb: i32, height: i32) {
    // Low obstacles: a blocked span just above a walkable one can be stepped on.
    for col in &mut hf.cols {
        let mut prev: Option<(bool, i32)> = None;
        for s in col.iter_mut() {
            let was = s.walkable;
            if let Some((pw, psmax)) = prev {
                if !s.walkable && pw && s.smax - psmax <= climb {
                    s.walkable = true;
                }
            }
            prev = Some((was, s.smax));
        }
    }
    // Ledges and steep local relief.
    let mut ledge = Vec::new();
    for j in 0..hf.ny {
        for i in 0..hf.nx {
            let col = &hf.cols[j * hf.nx + i];
            for (k, s) in col.iter().enumerate() {
                if !s.walkable {
                    continue;
                }
                let bot = s.smax;
                let top = col.get(k + 1).map_or(i32::MAX, |n| n.smin);
                let mut minh = i32::MAX;
                let (mut asmin, mut asmax) = (bot, bot);
                for d in 0..4 {
                    let Some((ni, nj)) = hf.neighbor(i, j, d) else {
                        minh = minh.min(-climb - bot);
                        continue;
                    };
                    let ncol = &hf.cols[nj * hf.nx + ni];
                    let nbot = -climb;
                    let ntop = ncol.first().map_or(i32::MAX, |n| n.smin);
                    if top.min(ntop).saturating_sub(bot.max(nbot)) > height {
                        minh = minh.min(nbot - bot);
                    }
                    for (nk, ns) in ncol.iter().enumerate() {
                        let nbot = ns.smax;
                        let ntop = ncol.get(nk + 1).map_or(i32::MAX, |n| n.smin);
                        if top.min(ntop).saturating_sub(bot.max(nbot)) > height {
                            minh = minh.min(nbot - bot);
                            if (nbot - bot).abs() <= climb {
                                asmin = asmin.min(nbot);
                                asmax = asmax.max(nbot);
                            }
                        }
                    }
                }
                if minh < -climb || asmax - asmin > climb {
                    ledge.push((j * hf.nx + i, k));
                }
            }
        }
    }
    for (c, k) in ledge {
        hf.cols[c][k].walkable = false;
    }
    // Overhead clearance.
    for col in &mut hf.cols {
        for k in 0..col.len() {
            let next = col.get(k + 1).map_or(i32::MAX, |n| n.smin);
            if next.saturating_sub(col[k].smax) < height {
                col[k].walkable = false;
            }
        }
    }
}

/// Walkable spans with their neighbor links.
struct Compact {
    nx: usize,
    /// Column of each span.
    col: Vec<usize>,
    smax: Vec<i32>,
    top: Vec<f64>,
    links: Vec<[u32; 4]>,
}

fn compact(hf: &Columns, climb: i32, height: i32) -> Compact {
    let mut first = vec![0u32; hf.cols.len() + 1];
    let mut c = Compact { nx: hf.nx, col: vec![], smax: vec![], top: vec![], links: vec![] };
    let mut ceil = Vec::new();
    for (ci, col) in hf.cols.iter().enumerate() {
        first[ci] = c.col.len() as u32;
        for (k, s) in col.iter().enumerate() {
            if s.walkable {
                c.col.push(ci);
                c.smax.push(s.smax);
                c.top.push(s.top);
                ceil.push(col.get(k + 1).map_or(i32::MAX, |n| n.smin));
            }
        }
    }
    first[hf.cols.len()] = c.col.len() as u32;
    c.links = vec![[NO_LINK; 4]; c.col.len()];
    for s in 0..c.col.len() {
        let (i, j) = (c.col[s] % hf.nx, c.col[s] / hf.nx);
        for d in 0..4 {
            let Some((ni, nj)) = hf.neighbor(i, j, d) else { continue };
            let nc = nj * hf.nx + ni;
            for n in first[nc]..first[nc + 1] {
                let n = n as usize;
                let gap = ceil[s].min(ceil[n]).saturating_sub(c.smax[s].max(c.smax[n]));
                if gap >= height && (c.smax[s] - c.smax[n]).abs() <= climb {
                    c.links[s][d] = n as u32;
                    break;
                }
            }
        }
    }
    // Keep only mutual links.
    for s in 0..c.col.len() {
        for d in 0..4 {
            let n = c.links[s][d];
            if n != NO_LINK && c.links[n as usize][(d + 2) % 4] != s as u32 {
                c.links[s][d] = NO_LINK;
            }
        }
    }
    c
}

impl Compact {
    fn link(&self, s: usize, d: usize) -> Option<usize> {
        let n = self.links[s][d];
        (n != NO_LINK).then_some(n as usize)
    }

    /// Drop spans closer than `radius` cells to a boundary, measured with a
    /// 2/3 chamfer distance.
    fn erode(&mut self, radius: u32) {
        let n = self.col.len();
        let mut dist = vec![u32::MAX / 4; n];
        for s in 0..n {
            if self.links[s].contains(&NO_LINK) {
                dist[s] = 0;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&s| (self.col[s] / self.nx, self.col[s] % self.nx, s));
        let relax = |dist: &mut Vec<u32>, s: usize, a: usize, diag: usize| {
            if let Some(x) = self.link(s, a) {
                dist[s] = dist[s].min(dist[x] + 2);
                if let Some(y) = self.link(x, diag) {
                    dist[s] = dist[s].min(dist[y] + 3);
                }
            }
        };
        for &s in &order {
            relax(&mut dist, s, 0, 3);
            relax(&mut dist, s, 3, 2);
        }
        for &s in order.iter().rev() {
            relax(&mut dist, s, 2, 1);
            relax(&mut dist, s, 1, 0);
        }
        let keep: Vec<bool> = dist.iter().map(|&d| d >= radius * 2).collect();
        self.retain(&keep);
    }

    fn prune_small_regions(&mut self, min_cells: usize) {
        let labels = self.regions();
        let mut size = vec![0usize; labels.iter().max().map_or(0, |m| m + 1)];
        for &l in &labels {
            size[l] += 1;
        }
        let keep: Vec<bool> = labels.iter().map(|&l| size[l] >= min_cells).collect();
        self.retain(&keep);
    }

    fn retain(&mut self, keep: &[bool]) {
        let n = self.col.len();
        let mut remap = vec![NO_LINK; n];
        let mut next = 0u32;
        for s in 0..n {
            if keep[s] {
                remap[s] = next;
                next += 1;
            }
        }
        let mut out = Compact { nx: self.nx, col: vec![], smax: vec![], top: vec![], links: vec![] };
        for s in 0..n {
            if keep[s] {
                out.col.push(self.col[s]);
                out.smax.push(self.smax[s]);
                out.top.push(self.top[s]);
                out.links.push(self.links[s].map(|l| if l == NO_LINK { NO_LINK } else { remap[l as usize] }));
            }
        }
        *self = out;
    }

    fn regions(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.col.len());
        for s in 0..self.col.len() {
            for d in [1, 2] {
                if let Some(n) = self.link(s, d) {
                    uf.union(s, n);
                }
            }
        }
        uf.labels().0
    }
}

/// Least-squares plane `z = a + b·x + c·y` with per-axis degeneracy handled
/// by dropping that slope term.
#[derive(Default, Clone)]
struct PlaneFit {
    pts: Vec<(f64, f64, f64)>,
}

impl PlaneFit {
    fn solve(&self, use_x: bool, use_y: bool) -> Option<[f64; 3]> {
        let n = self.pts.len() as f64;
        let (mx, my, mz) = self.pts.iter().fold((0.0, 0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1, s.2 + p.2));
        let (mx, my, mz) = (mx / n, my / n, mz / n);
        let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, y, z) in &self.pts {
            let (x, y, z) = (x - mx, y - my, z - mz);
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
            sxz += x * z;
            syz += y * z;
        }
        let (b, c) = match (use_x, use_y) {
            (true, true) => {
                let det = sxx * syy - sxy * sxy;
                if det.abs() < 1e-18 {
                    return None;
                }
                ((sxz * syy - syz * sxy) / det, (syz * sxx - sxz * sxy) / det)
            }
            (true, false) => (sxz / sxx, 0.0),
            (false, true) => (0.0, syz / syy),
            (false, false) => (0.0, 0.0),
        };
        Some([mz - b * mx - c * my, b, c])
    }
}

struct Poly {
    i0: usize,
    j0: usize,
    /// Span ids, row-major from the `(i0, j0)` corner.
    cells: Vec<Vec<usize>>,
    plane: [f64; 3],
}

fn fit_rect(cm: &Compact, hf: &Columns, rows: &[Vec<usize>], tol: f64, max_slope: f64) -> Option<[f64; 3]> {
    let mut fit = PlaneFit::default();
    for row in rows {
        for &s in row {
            let (cx, cy) = hf.center(cm.col[s] % hf.nx, cm.col[s] / hf.nx);
            fit.pts.push((cx - hf.x0, cy - hf.y0, cm.top[s]));
        }
    }
    let plane = fit.solve(rows[0].len() > 1, rows.len() > 1)?;
    if (plane[1].powi(2) + plane[2].powi(2)).sqrt() > max_slope.tan() + 1e-12 {
        return None;
    }
    fit.pts
        .iter()
        .all(|&(x, y, z)| (plane[0] + plane[1] * x + plane[2] * y - z).abs() <= tol)
        .then_some(plane)
}

fn polygonize(cm: &Compact, hf: &Columns, agent: &AgentParams) -> Vec<Poly> {
    let n = cm.col.len();
    let mut owner = vec![usize::MAX; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| (cm.col[s] / hf.nx, cm.col[s] % hf.nx, s));
    let tol = hf.ch / 2.0;
    let max_slope = agent.max_slope_deg.to_radians();
    let mut polys = Vec::new();
    for &s in &order {
        if owner[s] != usize::MAX {
            continue;
        }
        let mut rows = vec![vec![s]];
        let mut plane = fit_rect(cm, hf, &rows, tol, max_slope).expect("single cell fits");
        // Grow along +x.
        while rows[0].len() < MAX_POLY_CELLS {
            let last = *rows[0].last().expect("row non-empty");
            let Some(next) = cm.link(last, 2).filter(|&x| owner[x] == usize::MAX) else { break };
            rows[0].push(next);
            match fit_rect(cm, hf, &rows, tol, max_slope) {
                Some(p) => plane = p,
                None => {
                    rows[0].pop();
                    break;
                }
            }
        }
        // Grow along +y one full row at a time.
        while rows.len() < MAX_POLY_CELLS {
            let below = rows.last().expect("rows non-empty");
            let mut row = Vec::with_capacity(below.len());
            for (k, &b) in below.iter().enumerate() {
                let Some(up) = cm.link(b, 1).filter(|&x| owner[x] == usize::MAX) else { break };
                if k > 0 && cm.link(row[k - 1], 2) != Some(up) {
                    break;
                }
                row.push(up);
            }
            if row.len() != below.len() {
                break;
            }
            rows.push(row);
            match fit_rect(cm, hf, &rows, tol, max_slope) {
                Some(p) => plane = p,
                None => {
                    rows.pop();
                    break;
                }
            }
        }
        let id = polys.len();
        for row in &rows {
            for &c in row {
                owner[c] = id;
            }
        }
        polys.push(Poly { i0: cm.col[s] % hf.nx, j0: cm.col[s] / hf.nx, cells: rows, plane });
    }
    polys
}

/// Bake a navmesh from solid geometry.
pub fn bake_navmesh(mesh: &TriMesh, agent: &AgentParams, cell_size: f64, cell_height: f64) -> Result<NavMesh> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if !(cell_size > 0.0 && cell_height > 0.0) {
        return Err(Error::BadParams(format!("cell size {cell_size} and height {cell_height} must be positive")));
    }
    mesh.validate()?;
    let climb = (agent.max_climb / cell_height).floor() as i32;
    let height = (agent.height / cell_height).ceil() as i32;
    let mut hf = rasterize(mesh, agent, cell_size, cell_height);
    filter_spans(&mut hf, climb, height);
    let mut cm = compact(&hf, climb, height);
    cm.erode((agent.radius / cell_size).ceil() as u32);
    cm.prune_small_regions(MIN_REGION_CELLS);
    if cm.col.is_empty() {
        return Err(Error::EmptyResult);
    }
    let regions = cm.regions();
    let polys = polygonize(&cm, &hf, agent);
    let mut owner = vec![0usize; cm.col.len()];
    for (p, poly) in polys.iter().enumerate() {
        for row in &poly.cells {
            for &s in row {
                owner[s] = p;
            }
        }
    }

    let cs = cell_size;
    let mut adjacency = BTreeSet::new();
    let mut polygons = Vec::with_capacity(polys.len());
    for (p, poly) in polys.iter().enumerate() {
        let (w, h) = (poly.cells[0].len(), poly.cells.len());
        let x_at = |i: usize| hf.x0 + (poly.i0 + i) as f64 * cs;
        let y_at = |j: usize| hf.y0 + (poly.j0 + j) as f64 * cs;
        let z_at = |x: f64, y: f64| poly.plane[0] + poly.plane[1] * (x - hf.x0) + poly.plane[2] * (y - hf.y0);
        let mut plan: Vec<(f64, f64)> = Vec::new();
        let mut edge = |cells: &mut dyn Iterator<Item = (usize, (f64, f64))>, dir: usize, plan: &mut Vec<(f64, f64)>| {
            let mut prev: Option<Option<usize>> = None;
            for (s, at) in cells {
                let o = cm.link(s, dir).map(|n| owner[n]);
                if let Some(q) = o {
                    adjacency.insert([p.min(q) as u32, p.max(q) as u32]);
                }
                if prev.is_some_and(|pr| pr != o) {
                    plan.push(at);
                }
                prev = Some(o);
            }
        };
        plan.push((x_at(0), y_at(0)));
        edge(&mut (0..w).map(|k| (poly.cells[0][k], (x_at(k), y_at(0)))), 3, &mut plan);
        plan.push((x_at(w), y_at(0)));
        edge(&mut (0..h).map(|r| (poly.cells[r][w - 1], (x_at(w), y_at(r)))), 2, &mut plan);
        plan.push((x_at(w), y_at(h)));
        edge(&mut (0..w).rev().map(|k| (poly.cells[h - 1][k], (x_at(k + 1), y_at(h)))), 1, &mut plan);
        plan.push((x_at(0), y_at(h)));
        edge(&mut (0..h).rev().map(|r| (poly.cells[r][0], (x_at(0), y_at(r + 1)))), 0, &mut plan);
        polygons.push(plan.into_iter().map(|(x, y)| P3::new(x, y, z_at(x, y))).collect::<Vec<_>>());
    }

    // Number components by first polygon.
    let mut label = vec![u32::MAX; polys.len()];
    let mut next = 0;
    let mut region_of_span_label = std::collections::HashMap::new();
    for (p, poly) in polys.iter().enumerate() {
        let r = regions[poly.cells[0][0]];
        label[p] = *region_of_span_label.entry(r).or_insert_with(|| {
            next += 1;
            next - 1
        });
    }
    Ok(NavMesh {
        polygons,
        adjacency: adjacency.into_iter().collect(),
        region_ids: label,
        cell_size,
        cell_height,
        agent: *agent,
    })
}

/// Components of the adjacency graph as `(region_id, area)`, largest first.
pub fn connectivity_components(nm: &NavMesh) -> Vec<(u32, f64)> {
    let mut uf = UnionFind::new(nm.polygons.len());
    for &[a, b] in &nm.adjacency {
        uf.union(a as usize, b as usize);
    }
    let mut area: std::collections::BTreeMap<usize, (u32, f64)> = Default::default();
    for p in 0..nm.polygons.len() {
        let root = uf.find(p);
        let e = area.entry(root).or_insert((nm.region_ids.get(p).copied().unwrap_or(p as u32), 0.0));
        e.1 += nm.polygon_area(p);
    }
    let mut out: Vec<(u32, f64)> = area.into_values().collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

/// Area-weighted uniform surface samples with triangle normals. Triangles
/// are visited in canonical order, so meshes with the same geometry give the
/// same samples regardless of vertex and triangle order.
pub fn sample_surface(mesh: &TriMesh, count: usize, seed: u64) -> Result<PointCloud> {
    let tris = mesh.canonical_triangles();
    let mut cdf = Vec::with_capacity(tris.len());
    let mut total = 0.0;
    for [a, b, c] in &tris {
        total += (b - a).cross(&(c - a)).norm() / 2.0;
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::ZeroArea);
    }
    let mut rng = rng::stream(seed, "sample-surface");
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    for _ in 0..count {
        let u = rng.random::<f64>() * total;
        let t = cdf.partition_point(|&c| c <= u).min(tris.len() - 1);
        let [a, b, c] = tris[t];
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        points.push(P3::from(a.coords * (1.0 - s) + b.coords * (s * (1.0 - r2)) + c.coords * (s * r2)));
        normals.push((b - a).cross(&(c - a)).normalize());
    }
    Ok(PointCloud { points, normals: Some(normals) })
}

/// Indices chosen by farthest point sampling, starting at index 0. Ties
/// go to the lower index.
pub fn fps_indices(pc: &PointCloud, k: usize) -> Result<Vec<usize>> {
    let n = pc.len();
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut cur = 0;
    for _ in 0..k {
        chosen.push(cur);
        taken[cur] = true;
        let p = pc.points[cur];
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for i in 0..n {
            if taken[i] {
                continue;
            }
            dist[i] = dist[i].min((pc.points[i] - p).norm_squared());
            if dist[i] > best.0 {
                best = (dist[i], i);
            }
        }
        cur = best.1;
    }
    Ok(chosen)
}

pub fn fps(pc: &PointCloud, k: usize) -> Result<PointCloud> {
    let idx = fps_indices(pc, k)?;
    Ok(PointCloud {
        points: idx.iter().map(|&i| pc.points[i]).collect(),
        normals: pc.normals.as_ref().map(|ns| idx.iter().map(|&i| ns[i]).collect()),
    })
}
