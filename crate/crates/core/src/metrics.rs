//! Evaluation metrics: Chamfer distance, F-score, ICP alignment, mask IoU,
//! and the navmesh-CD and part-matching protocols built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::blockout::{ground_plane_centroid, normalization_for, NormalizeTransform, NORMALIZE_MARGIN};
use crate::decompose::PartSet;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Rigid, P3, V3};
use crate::mesh::TriMesh;
use crate::navmesh::{bake_navmesh, default_cell_size, sample_surface, PointCloud, DEFAULT_CELL_HEIGHT};
use crate::rng;
use crate::scene_spec::AgentParams;

/// Written into every report so numbers from different runs stay comparable.
pub const CHAMFER_VARIANT: &str = "0.5 * (mean nearest-neighbor Euclidean distance P->Q + Q->P)";
pub const DEFAULT_TAUS: [f64; 4] = [0.01, 0.02, 0.03, 0.05];
pub const DEFAULT_SAMPLES: usize = 20_000;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

/// Static 3-d tree for exact nearest-neighbor queries. Ties between equally
/// distant points resolve to the lower index.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<P3>,
    order: Vec<u32>,
    nodes: Vec<Node>,
    /// Bounding box of each node's points.
    boxes: Vec<(P3, P3)>,
}

impl KdTree {
    pub fn new(points: &[P3]) -> KdTree {
        let mut tree = KdTree { points: points.to_vec(), order: (0..points.len() as u32).collect(), nodes: Vec::new(), boxes: Vec::new() };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        let (mut lo, mut hi) = (P3::from([f64::INFINITY; 3]), P3::from([f64::NEG_INFINITY; 3]));
        for &i in &self.order[start..end] {
            let p = &self.points[i as usize];
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        self.boxes.push((lo, hi));
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let e = hi - lo;
        let axis = if e.x >= e.y && e.x >= e.z { 0 } else if e.y >= e.z { 1 } else { 2 };
        let pts = &self.points;
        self.order[start..end].sort_by(|&a, &b| pts[a as usize][axis].total_cmp(&pts[b as usize][axis]).then(a.cmp(&b)));
        let mid = start + (end - start) / 2;
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { left, right };
        id
    }

    fn box_dist2(&self, node: usize, q: &P3) -> f64 {
        let (lo, hi) = &self.boxes[node];
        (0..3).map(|k| (lo[k] - q[k]).max(q[k] - hi[k]).max(0.0).powi(2)).sum()
    }

    /// Index of the nearest point and its squared distance.
    pub fn nearest(&self, q: &P3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &P3, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let i = i as usize;
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split { left, right } => {
                let (dl, dr) = (self.box_dist2(left, q), self.box_dist2(right, q));
                let order = if dl <= dr { [(left, dl), (right, dr)] } else { [(right, dr), (left, dl)] };
                for (child, d) in order {
                    // Equal distances are still explored so ties reach the lower index.
                    if d <= best.1 {
                        self.search(child, q, best);
                    }
                }
            }
        }
    }
}

fn nn_distances(from: &[P3], to: &KdTree) -> Vec<f64> {
    from.par_iter().map(|p| to.nearest(p).map_or(f64::INFINITY, |(_, d2)| d2.sqrt())).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_clouds(p: &PointCloud, q: &PointCloud) -> Result<()> {
    if p.is_empty() || q.is_empty() {
        Err(Error::EmptyCloud)
    } else {
        Ok(())
    }
}

/// Symmetric Chamfer distance with unsquared Euclidean distances.
pub fn chamfer(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    check_clouds(p, q)?;
    Ok(chamfer_trees(&p.points, &KdTree::new(&p.points), &q.points, &KdTree::new(&q.points)))
}

fn chamfer_trees(p: &[P3], tp: &KdTree, q: &[P3], tq: &KdTree) -> f64 {
    0.5 * (mean(&nn_distances(p, tq)) + mean(&nn_distances(q, tp)))
}

fn fscore_from(dp: &[f64], dq: &[f64], tau: f64) -> f64 {
    let precision = dp.iter().filter(|&&d| d <= tau).count() as f64 / dp.len() as f64;
    let recall = dq.iter().filter(|&&d| d <= tau).count() as f64 / dq.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// F-score at threshold `tau`; a point counts when its nearest neighbor in
/// the other cloud is at most `tau` away.
pub fn fscore(p: &PointCloud, q: &PointCloud, tau: f64) -> Result<f64> {
    check_clouds(p, q)?;
    if !(tau > 0.0) {
        return Err(Error::BadParams(format!("tau must be positive, got {tau}")));
    }
    let dp = nn_distances(&p.points, &KdTree::new(&q.points));
    let dq = nn_distances(&q.points, &KdTree::new(&p.points));
    Ok(fscore_from(&dp, &dq, tau))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    /// Maps the source cloud toward the target cloud.
    pub transform: Rigid,
    pub rms: f64,
    /// RMS before the first fit and after every accepted fit.
    pub rms_history: Vec<f64>,
    /// Fits computed, including a final rejected one.
    pub iterations: usize,
    pub converged: bool,
}

fn centroid(points: &[P3]) -> V3 {
    points.iter().fold(V3::zeros(), |s, p| s + p.coords) / points.len() as f64
}

fn check_nondegenerate(points: &[P3]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::DegenerateCloud);
    }
    let c = centroid(points);
    let cov = points.iter().fold(nalgebra::Matrix3::zeros(), |m, p| {
        let d = p.coords - c;
        m + d * d.transpose()
    });
    let mut ev: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0] {
        return Err(Error::DegenerateCloud);
    }
    Ok(())
}

/// Least-squares rigid transform taking `src[i]` to `dst[i]` (Kabsch).
pub fn fit_rigid(src: &[P3], dst: &[P3]) -> Rigid {
    let (cs, cd) = (centroid(src), centroid(dst));
    let h = src.iter().zip(dst).fold(nalgebra::Matrix3::zeros(), |m, (s, d)| m + (s.coords - cs) * (d.coords - cd).transpose());
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let v = v_t.transpose();
    let sign = (v * u.transpose()).determinant().signum();
    let mut d = nalgebra::Matrix3::identity();
    // The reflection fix belongs on the axis with the smallest singular value.
    let smallest = (0..3).min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b])).unwrap_or(2);
    d[(smallest, smallest)] = sign;
    let rotation = v * d * u.transpose();
    Rigid { rotation, translation: cd - rotation * cs }
}

fn correspond(t: &Rigid, src: &[P3], tree: &KdTree, target: &[P3]) -> (Vec<P3>, f64) {
    let hits: Vec<(usize, f64)> = src.par_iter().map(|p| tree.nearest(&t.apply(p)).expect("target is non-empty")).collect();
    let rms = (hits.iter().map(|h| h.1).sum::<f64>() / hits.len() as f64).sqrt();
    (hits.iter().map(|h| target[h.0]).collect(), rms)
}

/// Point-to-point ICP starting from centroid alignment. Stops when the RMS
/// improves by less than `tol`, after `max_iters` fits, or when a fit would
/// raise the RMS (that fit is discarded).
pub fn icp_align(p: &PointCloud, q: &PointCloud, max_iters: usize, tol: f64) -> Result<IcpResult> {
    check_clouds(p, q)?;
    check_nondegenerate(&p.points)?;
    check_nondegenerate(&q.points)?;
    let tree = KdTree::new(&q.points);
    let mut t = Rigid::from_translation(centroid(&q.points) - centroid(&p.points));
    let (mut matched, mut rms) = correspond(&t, &p.points, &tree, &q.points);
    let mut history = vec![rms];
    let mut iterations = 0;
    let mut converged = false;
    while !converged && iterations < max_iters {
        iterations += 1;
        let cand = fit_rigid(&p.points, &matched);
        let (m2, rms2) = correspond(&cand, &p.points, &tree, &q.points);
        if rms2 > rms {
            converged = true;
            break;
        }
        converged = rms - rms2 < tol;
        t = cand;
        matched = m2;
        rms = rms2;
        history.push(rms);
    }
    Ok(IcpResult { transform: t, rms, rms_history: history, iterations, converged })
}

/// A binary image mask in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Mask> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch { a: (width, height), b: (data.len(), 1) });
        }
        Ok(Mask { width, height, data })
    }
}

/// Intersection over union; 1 when both masks are empty.
pub fn mask_iou(a: &Mask, b: &Mask) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) || a.data.len() != b.data.len() {
        return Err(Error::DimensionMismatch { a: (a.width, a.height), b: (b.width, b.height) });
    }
    let inter = a.data.iter().zip(&b.data).filter(|(x, y)| **x && **y).count();
    let union = a.data.iter().zip(&b.data).filter(|(x, y)| **x || **y).count();
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub item: String,
    pub values: Vec<f64>,
}

/// Per-item metrics with their mean, laid out like the published tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: String,
    pub chamfer_variant: String,
    /// Units of distances and thresholds.
    pub units: String,
    /// Header of the first CSV column.
    pub key: String,
    pub columns: Vec<String>,
    pub rows: Vec<EvalRow>,
    pub mean: Vec<f64>,
    pub provenance: serde_json::Value,
}

impl EvalReport {
    pub fn new(protocol: &str, key: &str, columns: Vec<String>, rows: Vec<EvalRow>, provenance: serde_json::Value) -> EvalReport {
        let mut r = EvalReport {
            protocol: protocol.into(),
            chamfer_variant: CHAMFER_VARIANT.into(),
            units: "normalized [-1,1]^3".into(),
            key: key.into(),
            columns,
            rows,
            mean: Vec::new(),
            provenance,
        };
        r.mean = r.recompute_mean();
        r
    }

    pub fn recompute_mean(&self) -> Vec<f64> {
        (0..self.columns.len())
            .map(|c| self.rows.iter().map(|r| r.values[c]).sum::<f64>() / self.rows.len().max(1) as f64)
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().map(|r| r.values[c]).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per item followed by a `mean` row.
    pub fn to_csv(&self) -> String {
        let mut s = std::iter::once(self.key.as_str()).chain(self.columns.iter().map(String::as_str)).collect::<Vec<_>>().join(",");
        s.push('\n');
        let line = |name: &str, v: &[f64]| {
            let mut l = csv_field(name);
            for x in v {
                l.push_str(&format!(",{x}"));
            }
            l.push('\n');
            l
        };
        for r in &self.rows {
            s.push_str(&line(&r.item, &r.values));
        }
        s.push_str(&line("mean", &self.mean));
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavmeshCdConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub icp_max_iters: usize,
    pub icp_tol: f64,
    /// Bake cell size in scene units; `None` is 1/256 of the larger
    /// horizontal extent.
    pub cell_size: Option<f64>,
    pub cell_height: f64,
}

impl Default for NavmeshCdConfig {
    fn default() -> Self {
        NavmeshCdConfig { n_samples: DEFAULT_SAMPLES, seed: 0, icp_max_iters: 100, icp_tol: 1e-8, cell_size: None, cell_height: DEFAULT_CELL_HEIGHT }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavmeshCdResult {
    pub cd: f64,
    /// Bake cell size after normalization.
    pub cell_size_normalized: f64,
    pub cell_size: f64,
    pub pred_transform: NormalizeTransform,
    pub gt_transform: NormalizeTransform,
    pub icp: IcpResult,
    pub pred_polygons: usize,
}

/// Navmesh Chamfer distance of a predicted scene against a ground-truth
/// navmesh.
///
/// The prediction's navmesh is baked in scene units (agent sizes are
/// physical), then both navmeshes are normalized: the prediction with its own
/// scene, the ground truth with `gt_scene` when given and otherwise with the
/// prediction's scale around its own ground-plane centroid. Surface samples
/// of the prediction are aligned to the ground truth with ICP and the Chamfer
/// distance of the aligned clouds is returned.
pub fn navmesh_cd_protocol(
    pred_scene: &TriMesh,
    gt_navmesh: &TriMesh,
    gt_scene: Option<&TriMesh>,
    agent: &AgentParams,
    cfg: &NavmeshCdConfig,
) -> Result<NavmeshCdResult> {
    if cfg.n_samples == 0 {
        return Err(Error::BadParams("n_samples must be positive".into()));
    }
    if pred_scene.is_empty() || gt_navmesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let e = pred_scene.bounds().extent();
    let cell = cfg.cell_size.unwrap_or_else(|| default_cell_size(e.x.max(e.y)));
    let pred_nav = bake_navmesh(pred_scene, agent, cell, cfg.cell_height)?;
    let pred_nav_mesh = pred_nav.to_mesh();
    let tp = normalization_for(pred_scene, &pred_nav_mesh)?;
    let tg = match gt_scene {
        Some(s) => normalization_for(s, gt_navmesh)?,
        None => {
            let c = ground_plane_centroid(gt_navmesh)?;
            NormalizeTransform { scale: tp.scale, translation: (-c.coords * tp.scale).into(), margin: NORMALIZE_MARGIN }
        }
    };
    let p = sample_surface(&tp.apply_mesh(&pred_nav_mesh), cfg.n_samples, rng::derive(cfg.seed, "navmesh-cd-pred"))?;
    let q = sample_surface(&tg.apply_mesh(gt_navmesh), cfg.n_samples, rng::derive(cfg.seed, "navmesh-cd-gt"))?;
    let icp = icp_align(&p, &q, cfg.icp_max_iters, cfg.icp_tol)?;
    let aligned = p.map(|x| icp.transform.apply(x));
    let cd = chamfer(&aligned, &q)?;
    Ok(NavmeshCdResult {
        cd,
        cell_size_normalized: cell * tp.scale,
        cell_size: cell,
        pred_transform: tp,
        gt_transform: tg,
        icp,
        pred_polygons: pred_nav.polygons.len(),
    })
}

#[derive(Debug, Clone)]
pub struct NavmeshCdItem {
    pub name: String,
    pub pred_scene: TriMesh,
    pub gt_navmesh: TriMesh,
    pub gt_scene: Option<TriMesh>,
}

/// Navmesh CD over many scene pairs, evaluated in parallel; rows keep the
/// input order.
pub fn navmesh_cd_report(items: &[NavmeshCdItem], agent: &AgentParams, cfg: &NavmeshCdConfig) -> Result<EvalReport> {
    let results: Vec<NavmeshCdResult> = items
        .par_iter()
        .map(|it| navmesh_cd_protocol(&it.pred_scene, &it.gt_navmesh, it.gt_scene.as_ref(), agent, cfg))
        .collect::<Result<_>>()?;
    let rows = items.iter().zip(&results).map(|(it, r)| EvalRow { item: it.name.clone(), values: vec![r.cd] }).collect();
    let details: Vec<serde_json::Value> = items
        .iter()
        .zip(&results)
        .map(|(it, r)| json!({ "item": it.name, "result": r }))
        .collect();
    Ok(EvalReport::new(
        "navmesh_cd",
        "item",
        vec!["navmesh_cd".into()],
        rows,
        json!({ "config": cfg, "agent": agent, "items": details }),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartEvalConfig {
    pub taus: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// Scale both sets into `[-1, 1]³` using the ground-truth bounds.
    pub normalize: bool,
}

impl Default for PartEvalConfig {
    fn default() -> Self {
        PartEvalConfig { taus: DEFAULT_TAUS.to_vec(), n_samples: DEFAULT_SAMPLES, seed: 0, normalize: true }
    }
}

/// Uniform scale and translation taking the bounds of `mesh` into
/// `[-1, 1]³` around the bounds center.
pub fn bounds_normalization(mesh: &TriMesh) -> Result<NormalizeTransform> {
    let b = mesh.bounds();
    let half = b.extent().max() / 2.0;
    if b.is_empty() || !(half > 0.0) {
        return Err(Error::DegenerateBounds);
    }
    let s = (1.0 - NORMALIZE_MARGIN) / half;
    let c = b.center();
    Ok(NormalizeTransform { scale: s, translation: [-c.x * s, -c.y * s, -c.z * s], margin: NORMALIZE_MARGIN })
}

struct Sampled {
    id: u32,
    name: String,
    points: Vec<P3>,
    tree: KdTree,
    bounds: Aabb,
}

fn box_gap(a: &Aabb, b: &Aabb) -> f64 {
    (0..3).map(|k| (a.min[k] - b.max[k]).max(b.min[k] - a.max[k]).max(0.0).powi(2)).sum::<f64>().sqrt()
}

fn sample_parts(ps: &PartSet, t: &NormalizeTransform, n: usize, seed: u64) -> Result<Vec<Sampled>> {
    ps.parts
        .par_iter()
        .map(|p| {
            let pc = sample_surface(&t.apply_mesh(&p.world_mesh()), n, seed)?;
            let tree = KdTree::new(&pc.points);
            Ok(Sampled { id: p.id, name: p.name(), bounds: Aabb::from_points(&pc.points), points: pc.points, tree })
        })
        .collect()
}

/// Match every ground-truth part to the predicted part with the smallest
/// Chamfer distance (ties to the lower id) and report CD and F-scores per
/// ground-truth part. Every part is sampled with the same seed, so identical
/// geometry yields identical samples and the result does not depend on part
/// order.
pub fn part_match_eval(pred: &PartSet, gt: &PartSet, cfg: &PartEvalConfig) -> Result<EvalReport> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptySet);
    }
    if cfg.n_samples == 0 || cfg.taus.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::BadParams("n_samples and every tau must be positive".into()));
    }
    let t = if cfg.normalize { bounds_normalization(&gt.to_mesh())? } else { NormalizeTransform::identity() };
    let seed = rng::derive(cfg.seed, "part-eval");
    let ps = sample_parts(pred, &t, cfg.n_samples, seed)?;
    let gs = sample_parts(gt, &t, cfg.n_samples, seed)?;
    let matches: Vec<(usize, f64)> = gs
        .par_iter()
        .map(|g| {
            // Every nearest-neighbor distance, and so the Chamfer distance, is
            // at least the gap between bounding boxes; farther candidates are
            // skipped once they cannot win.
            let mut cands: Vec<(f64, usize)> = ps.iter().enumerate().map(|(i, p)| (box_gap(&g.bounds, &p.bounds), i)).collect();
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(ps[a.1].id.cmp(&ps[b.1].id)));
            let mut best: Option<(usize, f64)> = None;
            for (gap, i) in cands {
                if best.is_some_and(|b| gap > b.1) {
                    break;
                }
                let cd = chamfer_trees(&g.points, &g.tree, &ps[i].points, &ps[i].tree);
                if best.is_none_or(|b| cd < b.1 || (cd == b.1 && ps[i].id < ps[b.0].id)) {
                    best = Some((i, cd));
                }
            }
            best.expect("pred is non-empty")
        })
        .collect();
    let mut rows = Vec::with_capacity(gs.len());
    let mut pairs = Vec::with_capacity(gs.len());
    for (g, &(i, cd)) in gs.iter().zip(&matches) {
        let p = &ps[i];
        let dg = nn_distances(&g.points, &p.tree);
        let dp = nn_distances(&p.points, &g.tree);
        let mut values = vec![cd];
        values.extend(cfg.taus.iter().map(|&tau| fscore_from(&dp, &dg, tau)));
        rows.push(EvalRow { item: g.name.clone(), values });
        pairs.push(json!({ "gt": g.id, "pred": p.id }));
    }
    let mut columns = vec!["chamfer".to_string()];
    columns.extend(cfg.taus.iter().map(|t| format!("fscore@{t}")));
    Ok(EvalReport::new(
        "part_match",
        "model",
        columns,
        rows,
        json!({ "config": cfg, "normalization": t, "matches": pairs, "pred_parts": pred.len(), "gt_parts": gt.len() }),
    ))
}
