//! Spatial partitioning of the world square into organizing regions.
//!
//! Tiling strategies (`bsp`, `grid`, `kdtree`, `voronoi`) return convex
//! polygons that tile `[0, extent]²`. Mask strategies (`noise`, `drunkard`)
//! work on a cell grid: one open region holds the walkable mask (a single
//! 4-connected component) and the remaining cells form cluster regions.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{clip_half_plane, convex_contains, polygon_area, polygon_centroid, Rect};
use crate::grid::{BoolGrid, NONE};
use crate::rng;
use crate::scene_spec::{Density, PartitionSpec, PartitionStrategy};
use crate::terrain::Perlin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionRole {
    Cluster,
    Open,
    Transition,
}

/// Cell grid backing mask-based partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMask {
    pub cell_size: f64,
    /// Walkable (carved or open) cells.
    pub walkable: BoolGrid,
}

impl CellMask {
    pub fn cell_center(&self, i: usize) -> [f64; 2] {
        let n = self.walkable.nx;
        [((i % n) as f64 + 0.5) * self.cell_size, ((i / n) as f64 + 0.5) * self.cell_size]
    }

    pub fn cell_of(&self, p: [f64; 2]) -> Option<usize> {
        let n = self.walkable.nx;
        let (x, y) = ((p[0] / self.cell_size).floor(), (p[1] / self.cell_size).floor());
        (x >= 0.0 && y >= 0.0 && (x as usize) < n && (y as usize) < n)
            .then(|| y as usize * n + x as usize)
    }

    pub fn coverage(&self) -> f64 {
        self.walkable.count() as f64 / self.walkable.cells.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: u32,
    /// Counter-clockwise boundary. For mask regions this is the bounding
    /// rectangle of the region's cells.
    pub polygon: Vec<[f64; 2]>,
    pub role: RegionRole,
    /// Cell indices into [`RegionSet::mask`] for mask regions.
    pub cells: Option<Vec<u32>>,
}

impl Region {
    pub fn area(&self, mask: Option<&CellMask>) -> f64 {
        match (&self.cells, mask) {
            (Some(cells), Some(m)) => cells.len() as f64 * m.cell_size * m.cell_size,
            _ => polygon_area(&self.polygon),
        }
    }

    pub fn contains(&self, p: [f64; 2], mask: Option<&CellMask>) -> bool {
        match (&self.cells, mask) {
            (Some(cells), Some(m)) => m
                .cell_of(p)
                .is_some_and(|c| cells.binary_search(&(c as u32)).is_ok()),
            _ => convex_contains(&self.polygon, p),
        }
    }

    /// A representative interior point: the polygon centroid, or for mask
    /// regions the region cell nearest to the mean of its cells.
    pub fn anchor(&self, mask: Option<&CellMask>) -> [f64; 2] {
        match (&self.cells, mask) {
            (Some(cells), Some(m)) => {
                let n = cells.len() as f64;
                let mean = cells.iter().fold([0.0, 0.0], |s, &c| {
                    let p = m.cell_center(c as usize);
                    [s[0] + p[0] / n, s[1] + p[1] / n]
                });
                let best = cells
                    .iter()
                    .min_by(|&&a, &&b| {
                        let d = |c: u32| {
                            let p = m.cell_center(c as usize);
                            (p[0] - mean[0]).powi(2) + (p[1] - mean[1]).powi(2)
                        };
                        d(a).total_cmp(&d(b)).then(a.cmp(&b))
                    })
                    .expect("mask regions are non-empty");
                m.cell_center(*best as usize)
            }
            _ => polygon_centroid(&self.polygon),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSet {
    pub extent: f64,
    pub strategy: PartitionStrategy,
    pub regions: Vec<Region>,
    pub mask: Option<CellMask>,
}

impl RegionSet {
    pub fn count(&self, role: RegionRole) -> usize {
        self.regions.iter().filter(|r| r.role == role).count()
    }

    /// Region polygons as SVG (debug view), colored by role.
    pub fn to_svg(&self) -> String {
        let scale = 800.0 / self.extent;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">"#
        );
        if let Some(m) = &self.mask {
            let c = m.cell_size * scale;
            for (i, &w) in m.walkable.cells.iter().enumerate() {
                if w {
                    let p = m.cell_center(i);
                    let _ = writeln!(
                        s,
                        r##"<rect x="{:.3}" y="{:.3}" width="{c:.3}" height="{c:.3}" fill="#dde8c8"/>"##,
                        (p[0] - 0.5 * m.cell_size) * scale,
                        800.0 - (p[1] + 0.5 * m.cell_size) * scale,
                    );
                }
            }
        }
        for r in &self.regions {
            let fill = match r.role {
                RegionRole::Cluster => "#c0504d",
                RegionRole::Open => "#9bbb59",
                RegionRole::Transition => "#f9c74f",
            };
            let pts: Vec<String> = r
                .polygon
                .iter()
                .map(|p| format!("{:.3},{:.3}", p[0] * scale, 800.0 - p[1] * scale))
                .collect();
            let _ = writeln!(
                s,
                r#"<polygon id="region-{}" points="{}" fill="{fill}" fill-opacity="0.35" stroke="black"/>"#,
                r.id,
                pts.join(" ")
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write_svg(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_svg()).map_err(|e| Error::io(path, e))
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn check_keys(params: &BTreeMap<String, f64>, allowed: &[&str], strategy: PartitionStrategy) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::BadParams(format!("`{k}` is not a parameter of {strategy:?}"))),
        None => Ok(()),
    }
}

fn grid_size(params: &BTreeMap<String, f64>) -> Result<usize> {
    let n = param(params, "grid", 64.0);
    if !(n.fract() == 0.0 && (4.0..=1024.0).contains(&n)) {
        return Err(Error::BadParams(format!("grid = {n} must be an integer in [4, 1024]")));
    }
    Ok(n as usize)
}

fn rect_polygon(r: Rect) -> Vec<[f64; 2]> {
    r.corners().to_vec()
}

/// Divide `[0, extent]²` into regions. Deterministic in `(spec, seed)`.
pub fn partition(extent: f64, spec: &PartitionSpec, seed: u64) -> Result<RegionSet> {
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::BadParams(format!("extent {extent} must be positive")));
    }
    let hint = spec.region_count_hint as usize;
    if hint == 0 {
        return Err(Error::BadParams("region_count_hint must be positive".into()));
    }
    let strategy = spec.strategy;
    let mut rng = rng::stream(seed, "partition");
    let params = &spec.params;
    let square = Rect::new([0.0, 0.0], [extent, extent]);
    let (polygons, mask) = match strategy {
        PartitionStrategy::Bsp => {
            check_keys(params, &[], strategy)?;
            (bsp(square, hint, &mut rng), None)
        }
        PartitionStrategy::Grid => {
            check_keys(params, &[], strategy)?;
            (uniform_grid(extent, hint), None)
        }
        PartitionStrategy::Kdtree => {
            check_keys(params, &["samples"], strategy)?;
            let samples = param(params, "samples", (8 * hint).max(16) as f64);
            if !(samples >= 1.0 && samples.fract() == 0.0) {
                return Err(Error::BadParams(format!("samples = {samples} must be a positive integer")));
            }
            (kdtree(square, hint, samples as usize, &mut rng), None)
        }
        PartitionStrategy::Voronoi => {
            check_keys(params, &[], strategy)?;
            if hint > 256 {
                return Err(Error::BadParams(format!("voronoi supports at most 256 sites, got {hint}")));
            }
            let sites = poisson_sites(extent, hint, &mut rng);
            (voronoi_cells(extent, &sites), None)
        }
        PartitionStrategy::Noise => {
            check_keys(params, &["grid", "threshold", "frequency"], strategy)?;
            let n = grid_size(params)?;
            let threshold = param(params, "threshold", 0.0);
            let frequency = param(params, "frequency", 3.0);
            if !(-1.0..=1.0).contains(&threshold) {
                return Err(Error::BadParams(format!("threshold = {threshold} outside [-1, 1]")));
            }
            if !(frequency > 0.0) {
                return Err(Error::BadParams(format!("frequency = {frequency} must be positive")));
            }
            (Vec::new(), Some(noise_mask(extent, n, threshold, frequency, seed)?))
        }
        PartitionStrategy::Drunkard => {
            check_keys(params, &["grid", "coverage"], strategy)?;
            let n = grid_size(params)?;
            let coverage = param(params, "coverage", 0.45);
            if !(coverage > 0.0 && coverage < 1.0) {
                return Err(Error::BadParams(format!("coverage = {coverage} must lie in (0, 1)")));
            }
            (Vec::new(), Some(drunkard_mask(extent, n, coverage, &mut rng)))
        }
    };

    let regions = match &mask {
        None => polygons
            .into_iter()
            .enumerate()
            .map(|(i, polygon)| Region { id: i as u32, polygon, role: RegionRole::Open, cells: None })
            .collect(),
        Some(m) => mask_regions(m),
    };
    Ok(RegionSet { extent, strategy, regions, mask })
}

/// Recursive axis-aligned splits, breadth first, until `hint` leaves exist.
fn bsp(square: Rect, hint: usize, rng: &mut rng::Rng) -> Vec<Vec<[f64; 2]>> {
    let mut leaves = VecDeque::from([square]);
    while leaves.len() < hint {
        let r = leaves.pop_front().expect("at least one leaf");
        let t = rng.random_range(0.35..=0.65);
        let (a, b) = if r.width() >= r.height() {
            let x = r.min[0] + t * r.width();
            (Rect::new(r.min, [x, r.max[1]]), Rect::new([x, r.min[1]], r.max))
        } else {
            let y = r.min[1] + t * r.height();
            (Rect::new(r.min, [r.max[0], y]), Rect::new([r.min[0], y], r.max))
        };
        leaves.push_back(a);
        leaves.push_back(b);
    }
    leaves.into_iter().map(rect_polygon).collect()
}

fn uniform_grid(extent: f64, hint: usize) -> Vec<Vec<[f64; 2]>> {
    let k = (hint as f64).sqrt().ceil() as usize;
    let step = extent / k as f64;
    let edge = |i: usize| if i == k { extent } else { i as f64 * step };
    let mut out = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            out.push(rect_polygon(Rect::new([edge(i), edge(j)], [edge(i + 1), edge(j + 1)])));
        }
    }
    out
}

/// Alternating-axis median splits of seeded sample points.
fn kdtree(square: Rect, hint: usize, samples: usize, rng: &mut rng::Rng) -> Vec<Vec<[f64; 2]>> {
    let e = square.width();
    let points: Vec<[f64; 2]> = (0..samples)
        .map(|_| [rng.random::<f64>() * e, rng.random::<f64>() * e])
        .collect();
    let mut leaves = VecDeque::from([(square, points, 0usize)]);
    while leaves.len() < hint {
        let (r, pts, depth) = leaves.pop_front().expect("at least one leaf");
        let axis = depth % 2;
        let (lo, hi) = (r.min[axis], r.max[axis]);
        let mut coords: Vec<f64> = pts.iter().map(|p| p[axis]).collect();
        coords.sort_by(f64::total_cmp);
        let m = coords.len();
        let median = if m < 2 {
            0.5 * (lo + hi)
        } else if m % 2 == 0 {
            0.5 * (coords[m / 2 - 1] + coords[m / 2])
        } else {
            coords[m / 2]
        };
        // Keep both halves non-degenerate.
        let split = median.clamp(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo));
        let (mut a, mut b) = (r, r);
        a.max[axis] = split;
        b.min[axis] = split;
        let (pa, pb): (Vec<_>, Vec<_>) = pts.into_iter().partition(|p| p[axis] < split);
        leaves.push_back((a, pa, depth + 1));
        leaves.push_back((b, pb, depth + 1));
    }
    leaves.into_iter().map(|(r, ..)| rect_polygon(r)).collect()
}

/// Dart-throwing Poisson-disc sampling; the disc radius shrinks until exactly
/// `count` sites have been accepted.
fn poisson_sites(extent: f64, count: usize, rng: &mut rng::Rng) -> Vec<[f64; 2]> {
    let mut radius = 0.75 * extent / (count as f64).sqrt();
    let mut sites: Vec<[f64; 2]> = Vec::with_capacity(count);
    while sites.len() < count {
        for _ in 0..30 * count {
            let p = [rng.random::<f64>() * extent, rng.random::<f64>() * extent];
            let r2 = radius * radius;
            if sites.iter().all(|s| (s[0] - p[0]).powi(2) + (s[1] - p[1]).powi(2) >= r2) {
                sites.push(p);
                if sites.len() == count {
                    break;
                }
            }
        }
        radius *= 0.8;
    }
    sites
}

/// Voronoi cells clipped to the square, by half-plane intersection per site.
pub fn voronoi_cells(extent: f64, sites: &[[f64; 2]]) -> Vec<Vec<[f64; 2]>> {
    let square = rect_polygon(Rect::new([0.0, 0.0], [extent, extent]));
    sites
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut cell = square.clone();
            for (j, t) in sites.iter().enumerate() {
                if i == j || cell.is_empty() {
                    continue;
                }
                // Points closer to s than to t: (t - s)·p <= (|t|² - |s|²) / 2.
                let n = [t[0] - s[0], t[1] - s[1]];
                let c = 0.5 * ((t[0] * t[0] + t[1] * t[1]) - (s[0] * s[0] + s[1] * s[1]));
                cell = clip_half_plane(&cell, n, c);
            }
            cell
        })
        .collect()
}

fn noise_mask(extent: f64, n: usize, threshold: f64, frequency: f64, seed: u64) -> Result<CellMask> {
    let perlin = Perlin::new(rng::derive(seed, "noise-partition"));
    let raw: Vec<f64> = (0..n * n)
        .map(|k| {
            let (x, y) = ((k % n) as f64 + 0.5, (k / n) as f64 + 0.5);
            perlin.fbm(0.37 + x * frequency / n as f64, 0.71 + y * frequency / n as f64, 2, 0.5)
        })
        .collect();
    let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let open = BoolGrid {
        nx: n,
        ny: n,
        cells: raw.iter().map(|&v| 2.0 * (v - lo) / span - 1.0 <= threshold).collect(),
    };
    let (labels, k) = open.components();
    if k == 0 {
        return Err(Error::BadParams(format!("threshold {threshold} leaves no open cells")));
    }
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        if l != NONE {
            sizes[l as usize] += 1;
        }
    }
    // Largest component, lowest label on ties.
    let keep = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).expect("k > 0") as u32;
    let walkable = BoolGrid { nx: n, ny: n, cells: labels.iter().map(|&l| l == keep).collect() };
    Ok(CellMask { cell_size: extent / n as f64, walkable })
}

fn drunkard_mask(extent: f64, n: usize, coverage: f64, rng: &mut rng::Rng) -> CellMask {
    let mut grid = BoolGrid::new(n, n, false);
    let target = ((coverage * (n * n) as f64).ceil() as usize).max(1);
    let mut carved: Vec<usize> = Vec::with_capacity(target);
    let mut at = grid.idx(n / 2, n / 2);
    grid.cells[at] = true;
    carved.push(at);
    let mut steps = 0usize;
    while carved.len() < target {
        // Occasionally respawn on carved ground so the walk keeps finding new
        // cells; the mask stays 4-connected either way.
        if steps % 256 == 255 {
            at = carved[rng.random_range(0..carved.len())];
        }
        let (x, y) = (at % n, at / n);
        let (x, y) = match rng.random_range(0..4) {
            0 if x + 1 < n => (x + 1, y),
            1 if x > 0 => (x - 1, y),
            2 if y + 1 < n => (x, y + 1),
            3 if y > 0 => (x, y - 1),
            _ => (x, y),
        };
        at = y * n + x;
        if !grid.cells[at] {
            grid.cells[at] = true;
            carved.push(at);
        }
        steps += 1;
    }
    CellMask { cell_size: extent / n as f64, walkable: grid }
}

fn bounding_polygon(mask: &CellMask, cells: &[u32]) -> Vec<[f64; 2]> {
    let n = mask.walkable.nx;
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for &c in cells {
        let (x, y) = (c as usize % n, c as usize / n);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let s = mask.cell_size;
    rect_polygon(Rect::new([x0 as f64 * s, y0 as f64 * s], [(x1 + 1) as f64 * s, (y1 + 1) as f64 * s]))
}

/// Region 0 is the walkable mask; the rest are 4-connected blocks of the
/// remaining cells.
fn mask_regions(mask: &CellMask) -> Vec<Region> {
    let w = &mask.walkable;
    let open: Vec<u32> = (0..w.cells.len()).filter(|&i| w.cells[i]).map(|i| i as u32).collect();
    let mut regions = vec![Region {
        id: 0,
        polygon: bounding_polygon(mask, &open),
        role: RegionRole::Open,
        cells: Some(open),
    }];
    let rest = BoolGrid { nx: w.nx, ny: w.ny, cells: w.cells.iter().map(|&c| !c).collect() };
    let (labels, k) = rest.components();
    let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        if l != NONE {
            blocks[l as usize].push(i as u32);
        }
    }
    for cells in blocks {
        regions.push(Region {
            id: regions.len() as u32,
            polygon: bounding_polygon(mask, &cells),
            role: RegionRole::Cluster,
            cells: Some(cells),
        });
    }
    regions
}

/// Label regions as cluster, open or transition.
///
/// Roughly `density.cluster_fraction()` of the regions become clusters (at
/// least one, and never all of them when more than one region exists); the
/// rest alternate between transition and open in seeded order so at least
/// one open region remains. For mask partitions the walkable mask region is
/// always the open region. A single-region tiling is labeled cluster; its
/// border band then serves as open space during placement.
pub fn assign_roles(rs: &RegionSet, density: Density, seed: u64) -> RegionSet {
    let mut out = rs.clone();
    let f = density.cluster_fraction();
    let mut rng = rng::stream(seed, "roles");
    let candidates: Vec<usize> = if rs.mask.is_some() {
        (1..rs.regions.len()).collect()
    } else {
        (0..rs.regions.len()).collect()
    };
    let m = candidates.len();
    if m == 0 {
        return out;
    }
    let mut order = candidates.clone();
    order.shuffle(&mut rng);
    let max_cluster = if rs.mask.is_some() || m == 1 { m } else { m - 1 };
    let n_cluster = ((f * m as f64).round() as usize).clamp(1, max_cluster);
    for (rank, &r) in order.iter().enumerate() {
        out.regions[r].role = if rank < n_cluster {
            RegionRole::Cluster
        } else if rs.mask.is_some() || (rank - n_cluster) % 2 == 1 {
            RegionRole::Transition
        } else {
            RegionRole::Open
        };
    }
    if rs.mask.is_some() {
        out.regions[0].role = RegionRole::Open;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(strategy: PartitionStrategy, hint: u32) -> PartitionSpec {
        PartitionSpec { strategy, region_count_hint: hint, params: BTreeMap::new() }
    }

    #[test]
    fn grid_of_four_congruent_squares() {
        let rs = partition(50.0, &spec(PartitionStrategy::Grid, 4), 0).unwrap();
        assert_eq!(rs.regions.len(), 4);
        for r in &rs.regions {
            assert_eq!(polygon_area(&r.polygon), 625.0);
        }
    }

    #[test]
    fn bsp_rectangles_tile_the_square() {
        let rs = partition(50.0, &spec(PartitionStrategy::Bsp, 8), 17).unwrap();
        assert_eq!(rs.regions.len(), 8);
        let total: f64 = rs.regions.iter().map(|r| polygon_area(&r.polygon)).sum();
        assert!((total - 2500.0).abs() < 1e-9);
        for r in &rs.regions {
            assert_eq!(r.polygon.len(), 4);
            let [a, b, c, d] = [r.polygon[0], r.polygon[1], r.polygon[2], r.polygon[3]];
            assert!(a[1] == b[1] && b[0] == c[0] && c[1] == d[1] && d[0] == a[0]);
        }
    }

    #[test]
    fn drunkard_mask_is_connected_with_target_coverage() {
        let mut p = spec(PartitionStrategy::Drunkard, 4);
        p.params.insert("coverage".into(), 0.45);
        p.params.insert("grid".into(), 64.0);
        let rs = partition(50.0, &p, 3).unwrap();
        let m = rs.mask.as_ref().unwrap();
        assert_eq!(m.walkable.components().1, 1);
        assert!((0.40..=0.50).contains(&m.coverage()));
    }

    #[test]
    fn bad_params_are_rejected() {
        let mut p = spec(PartitionStrategy::Drunkard, 4);
        p.params.insert("coverage".into(), 1.2);
        assert!(matches!(partition(50.0, &p, 0), Err(Error::BadParams(_))));
        let mut p = spec(PartitionStrategy::Bsp, 4);
        p.params.insert("coverage".into(), 0.5);
        assert!(matches!(partition(50.0, &p, 0), Err(Error::BadParams(_))));
        assert!(partition(0.0, &spec(PartitionStrategy::Grid, 4), 0).is_err());
    }

    #[test]
    fn noise_mask_is_single_component() {
        let rs = partition(50.0, &spec(PartitionStrategy::Noise, 4), 8).unwrap();
        let m = rs.mask.as_ref().unwrap();
        assert_eq!(m.walkable.components().1, 1);
        assert_eq!(rs.regions[0].role, RegionRole::Open);
        let covered: usize = rs.regions.iter().map(|r| r.cells.as_ref().unwrap().len()).sum();
        assert_eq!(covered, 64 * 64);
    }

    #[test]
    fn roles_follow_density() {
        let rs = partition(30.0, &spec(PartitionStrategy::Grid, 9), 0).unwrap();
        let high = assign_roles(&rs, Density::High, 5);
        assert!(high.count(RegionRole::Cluster) >= 6);
        assert!(high.count(RegionRole::Open) >= 1);
        assert_eq!(high, assign_roles(&rs, Density::High, 5));
        let low = assign_roles(&rs, Density::Low, 5);
        assert!(low.count(RegionRole::Cluster) < high.count(RegionRole::Cluster));
    }

    #[test]
    fn single_region_is_cluster() {
        let rs = partition(30.0, &spec(PartitionStrategy::Grid, 1), 0).unwrap();
        let labeled = assign_roles(&rs, Density::Low, 0);
        assert_eq!(labeled.regions[0].role, RegionRole::Cluster);
    }

    #[test]
    fn svg_lists_every_region() {
        let rs = partition(30.0, &spec(PartitionStrategy::Voronoi, 5), 0).unwrap();
        let svg = rs.to_svg();
        assert_eq!(svg.matches("<polygon").count(), 5);
    }
}
