//! Heuristic decomposition of a monolithic scene mesh into a ground part and
//! object parts, the quality filter used to curate decompositions, and the
//! connectivity-degree ordering of parts.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{triangle_distance, Aabb, Rigid, P3, V3};
use crate::mesh::TriMesh;

/// Faces steeper than this do not count toward a ground candidate.
pub const GROUND_MAX_MEDIAN_SLOPE_DEG: f64 = 15.0;
/// Pivot parts generated before the remainder.
pub const DEFAULT_PIVOT_COUNT: usize = 4;
pub const GROUND_NAME: &str = "ground";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityFilters {
    pub min_parts: usize,
    pub max_parts: usize,
    /// Largest over smallest object vertex count.
    pub max_imbalance_ratio: f64,
    pub min_ground_confidence: f64,
}

impl Default for QualityFilters {
    fn default() -> Self {
        QualityFilters { min_parts: 2, max_parts: 64, max_imbalance_ratio: 100.0, min_ground_confidence: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Welding distance; `None` is 1e-4 of the mesh bounding-box diagonal.
    pub weld_eps: Option<f64>,
    /// Parts with fewer vertices merge into a neighbor; `None` is 0.5% of
    /// the welded vertex count.
    pub small_part_vertex_threshold: Option<usize>,
    pub overlay_thickness: f64,
    pub filters: QualityFilters,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig { weld_eps: None, small_part_vertex_threshold: None, overlay_thickness: 0.05, filters: QualityFilters::default() }
    }
}

impl DecomposeConfig {
    pub fn validate(&self) -> Result<()> {
        let f = &self.filters;
        let ok = self.weld_eps.is_none_or(|e| e > 0.0)
            && self.small_part_vertex_threshold.is_none_or(|t| t > 0)
            && self.overlay_thickness > 0.0
            && f.min_parts > 0
            && f.max_parts >= f.min_parts
            && f.max_imbalance_ratio > 0.0
            && f.min_ground_confidence > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::BadParams("decomposition thresholds must be positive".into()))
        }
    }

    pub fn weld_eps_for(&self, mesh: &TriMesh) -> f64 {
        self.weld_eps.unwrap_or_else(|| (mesh.bounds().extent().norm() * 1e-4).max(1e-12))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartLabel {
    Ground,
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartStats {
    pub area: f64,
    /// Sum of absolute triangle areas projected on the horizontal plane.
    pub projected_area: f64,
    /// Bounding-box volume.
    pub volume_proxy: f64,
    pub vertex_count: usize,
    pub triangle_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub id: u32,
    pub label: PartLabel,
    /// Geometry centered on its vertex mean.
    pub mesh: TriMesh,
    /// Places `mesh` in the scene.
    pub pose: Rigid,
    pub stats: PartStats,
    /// Thin components merged in as overlays.
    pub overlays: u32,
    /// Small components merged in.
    pub absorbed: u32,
}

impl Part {
    /// A part from world-space geometry, stored centered on its vertex mean.
    pub fn from_world(id: u32, label: PartLabel, world: TriMesh) -> Part {
        let mean = world.vertices.iter().fold(V3::zeros(), |s, p| s + p.coords) / world.vertices.len().max(1) as f64;
        let b = world.bounds();
        let e = b.extent();
        let stats = PartStats {
            area: world.area(),
            projected_area: projected_area(&world, 0..world.triangles.len()),
            volume_proxy: e.x * e.y * e.z,
            vertex_count: world.vertices.len(),
            triangle_count: world.triangles.len(),
        };
        Part { id, label, mesh: world.translated(-mean), pose: Rigid::from_translation(mean), stats, overlays: 0, absorbed: 0 }
    }

    pub fn world_mesh(&self) -> TriMesh {
        self.mesh.map_points(|p| self.pose.apply(p))
    }

    pub fn name(&self) -> String {
        match self.label {
            PartLabel::Ground => GROUND_NAME.to_string(),
            PartLabel::Object => format!("part-{}", self.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartSet {
    pub parts: Vec<Part>,
    /// Projected-area share of the ground part; 0 without ground.
    pub ground_confidence: f64,
    pub weld_eps: f64,
}

impl PartSet {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn ground(&self) -> Option<&Part> {
        self.parts.iter().find(|p| p.label == PartLabel::Ground)
    }

    pub fn get(&self, id: u32) -> Option<&Part> {
        self.parts.iter().find(|p| p.id == id)
    }

    /// All parts in world space, one named group each.
    pub fn to_mesh(&self) -> TriMesh {
        let mut m = TriMesh::default();
        for p in &self.parts {
            m.append(&p.world_mesh(), Some(&p.name()));
        }
        m
    }

    /// One part per group; a group named `ground` becomes the ground part.
    pub fn from_mesh(mesh: &TriMesh) -> Result<PartSet> {
        if mesh.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let parts: Vec<Part> = mesh
            .split_groups()
            .into_iter()
            .enumerate()
            .map(|(i, (name, m))| {
                let label = if name == GROUND_NAME { PartLabel::Ground } else { PartLabel::Object };
                Part::from_world(i as u32, label, m)
            })
            .collect();
        let total: f64 = parts.iter().map(|p| p.stats.projected_area).sum();
        let ground = parts.iter().find(|p| p.label == PartLabel::Ground).map_or(0.0, |g| g.stats.projected_area);
        Ok(PartSet {
            parts,
            ground_confidence: if total > 0.0 { ground / total } else { 0.0 },
            weld_eps: DecomposeConfig::default().weld_eps_for(mesh),
        })
    }
}

fn projected_area(m: &TriMesh, tris: impl IntoIterator<Item = usize>) -> f64 {
    tris.into_iter().map(|t| m.cross(t).z.abs() / 2.0).sum()
}

/// Area-weighted median of face slopes in degrees.
fn median_slope_deg(m: &TriMesh, tris: &[usize]) -> f64 {
    let mut s: Vec<(f64, f64)> = tris
        .iter()
        .map(|&t| {
            let n = m.cross(t);
            let len = n.norm();
            let slope = if len > 0.0 { (n.z.abs() / len).clamp(0.0, 1.0).acos().to_degrees() } else { 90.0 };
            (slope, len / 2.0)
        })
        .collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = s.iter().map(|x| x.1).sum();
    let mut acc = 0.0;
    for (slope, a) in &s {
        acc += a;
        if acc >= total / 2.0 {
            return *slope;
        }
    }
    90.0
}

fn tri_bounds(m: &TriMesh, t: usize) -> Aabb {
    Aabb::from_points(m.corners(t))
}

/// Whether some triangle of `a` comes within `eps` of some triangle of `b`.
pub fn meshes_within(a: &TriMesh, ta: &[usize], b: &TriMesh, tb: &[usize], eps: f64) -> bool {
    let bb: Vec<(usize, Aabb)> = tb.iter().map(|&t| (t, tri_bounds(b, t).inflate(eps))).collect();
    let whole = bb.iter().fold(Aabb::empty(), |acc, (_, x)| acc.union(x));
    ta.iter().any(|&s| {
        let sa = tri_bounds(a, s);
        if !sa.intersects(&whole) {
            return false;
        }
        bb.iter().any(|(t, x)| sa.intersects(x) && triangle_distance(a.corners(s), b.corners(*t)) <= eps)
    })
}

struct Group {
    tris: Vec<usize>,
    ground: bool,
    overlays: u32,
    absorbed: u32,
}

/// Split `mesh` into ground and object parts.
///
/// Steps, in order: weld vertices; drop exactly duplicated triangles; find
/// connected components; detect the ground (largest projected area among
/// components whose median face slope is below 15°); merge thin components
/// resting on the ground into it; repeatedly merge the smallest part under
/// the vertex threshold into the object part with the nearest centroid.
/// The ground is never merged into an object nor used as a merge target.
pub fn decompose_scene(mesh: &TriMesh, cfg: &DecomposeConfig) -> Result<PartSet> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    mesh.validate()?;
    cfg.validate()?;
    let eps = cfg.weld_eps_for(mesh);
    let mut w = mesh.welded(eps);
    w.groups.clear();
    let mut seen = std::collections::HashSet::new();
    w.triangles.retain(|t| {
        let mut k = *t;
        k.sort_unstable();
        seen.insert(k)
    });
    w.drop_unused_vertices();
    if w.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }

    let (labels, k) = w.triangle_components();
    let mut groups: Vec<Group> = (0..k).map(|_| Group { tris: vec![], ground: false, overlays: 0, absorbed: 0 }).collect();
    for (t, &l) in labels.iter().enumerate() {
        groups[l].tris.push(t);
    }

    let proj: Vec<f64> = groups.iter().map(|g| projected_area(&w, g.tris.iter().copied())).collect();
    let total_proj: f64 = proj.iter().sum();
    let ground = (0..k)
        .filter(|&i| median_slope_deg(&w, &groups[i].tris) < GROUND_MAX_MEDIAN_SLOPE_DEG && proj[i] > 0.0)
        .max_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(b.cmp(&a)));
    let ground_confidence = match ground {
        Some(g) if total_proj > 0.0 => proj[g] / total_proj,
        _ => 0.0,
    };

    if let Some(g) = ground {
        groups[g].ground = true;
        let gtris = groups[g].tris.clone();
        let mut merged = Vec::new();
        for (i, grp) in groups.iter().enumerate() {
            if i == g {
                continue;
            }
            let b = Aabb::from_points(grp.tris.iter().flat_map(|&t| w.corners(t)));
            if b.extent().z < cfg.overlay_thickness && meshes_within(&w, &grp.tris, &w, &gtris, eps) {
                merged.push(i);
            }
        }
        for &i in merged.iter().rev() {
            let tris = std::mem::take(&mut groups[i].tris);
            groups[g].tris.extend(tris);
            groups[g].overlays += 1;
        }
        groups.retain(|grp| !grp.tris.is_empty());
    }

    let vcount = |grp: &Group| grp.tris.iter().flat_map(|&t| w.triangles[t]).collect::<BTreeSet<u32>>().len();
    let threshold = cfg
        .small_part_vertex_threshold
        .unwrap_or_else(|| (w.vertices.len() as f64 * 0.005).ceil() as usize);
    loop {
        let counts: Vec<usize> = groups.iter().map(vcount).collect();
        let small = (0..groups.len())
            .filter(|&i| !groups[i].ground && counts[i] < threshold)
            .min_by_key(|&i| (counts[i], i));
        let Some(s) = small else { break };
        let mean = |grp: &Group| {
            let vs: BTreeSet<u32> = grp.tris.iter().flat_map(|&t| w.triangles[t]).collect();
            vs.iter().fold(V3::zeros(), |acc, &v| acc + w.vertices[v as usize].coords) / vs.len() as f64
        };
        let cs = mean(&groups[s]);
        let target = (0..groups.len())
            .filter(|&i| i != s && !groups[i].ground)
            .min_by(|&a, &b| (mean(&groups[a]) - cs).norm().total_cmp(&(mean(&groups[b]) - cs).norm()).then(a.cmp(&b)));
        let Some(t) = target else { break };
        let moved = std::mem::take(&mut groups[s].tris);
        groups[t].tris.extend(moved);
        groups[t].absorbed += 1 + groups[s].absorbed;
        groups[t].overlays += groups[s].overlays;
        groups.remove(s);
    }

    for g in &mut groups {
        g.tris.sort_unstable();
    }
    groups.sort_by_key(|g| g.tris[0]);
    let parts = groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let label = if g.ground { PartLabel::Ground } else { PartLabel::Object };
            let mut p = Part::from_world(i as u32, label, w.extract(g.tris.iter().copied()));
            p.overlays = g.overlays;
            p.absorbed = g.absorbed;
            p
        })
        .collect();
    Ok(PartSet { parts, ground_confidence, weld_eps: eps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    PartCount,
    Imbalance,
    GroundConfidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub reasons: Vec<FilterReason>,
}

pub fn imbalance_ratio(ps: &PartSet) -> f64 {
    let counts: Vec<usize> = ps.parts.iter().filter(|p| p.label == PartLabel::Object).map(|p| p.stats.vertex_count).collect();
    match (counts.iter().max(), counts.iter().min()) {
        (Some(&hi), Some(&lo)) if lo > 0 => hi as f64 / lo as f64,
        _ => 1.0,
    }
}

pub fn quality_filter(ps: &PartSet, cfg: &DecomposeConfig) -> FilterVerdict {
    let f = &cfg.filters;
    let mut reasons = Vec::new();
    if ps.len() < f.min_parts || ps.len() > f.max_parts {
        reasons.push(FilterReason::PartCount);
    }
    if imbalance_ratio(ps) > f.max_imbalance_ratio {
        reasons.push(FilterReason::Imbalance);
    }
    if ps.ground_confidence < f.min_ground_confidence {
        reasons.push(FilterReason::GroundConfidence);
    }
    FilterVerdict { accepted: reasons.is_empty(), reasons }
}

/// Pairs of part ids `(a, b)`, `a < b`, whose meshes come within
/// `contact_eps` of each other.
pub fn contact_pairs(ps: &PartSet, contact_eps: f64) -> Vec<(u32, u32)> {
    let world: Vec<TriMesh> = ps.parts.iter().map(Part::world_mesh).collect();
    let all: Vec<Vec<usize>> = world.iter().map(|m| (0..m.triangles.len()).collect()).collect();
    let bounds: Vec<Aabb> = world.iter().map(|m| m.bounds().inflate(contact_eps)).collect();
    let n = ps.parts.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs
        .into_par_iter()
        .filter(|&(i, j)| bounds[i].intersects(&world[j].bounds()) && meshes_within(&world[i], &all[i], &world[j], &all[j], contact_eps))
        .map(|(i, j)| {
            let (a, b) = (ps.parts[i].id, ps.parts[j].id);
            (a.min(b), a.max(b))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartDegree {
    pub id: u32,
    pub degree: usize,
}

/// Parts by decreasing number of contacts; ties go to the larger projected
/// area, then the lower id. The first entries are the pivot parts.
pub fn connectivity_degree_order(ps: &PartSet, contact_eps: f64) -> Vec<PartDegree> {
    let mut degree = std::collections::HashMap::new();
    for (a, b) in contact_pairs(ps, contact_eps) {
        *degree.entry(a).or_insert(0) += 1;
        *degree.entry(b).or_insert(0) += 1;
    }
    let mut order: Vec<(&Part, usize)> = ps.parts.iter().map(|p| (p, degree.get(&p.id).copied().unwrap_or(0))).collect();
    order.sort_by(|(p, dp), (q, dq)| {
        dq.cmp(dp)
            .then(q.stats.projected_area.total_cmp(&p.stats.projected_area))
            .then(p.id.cmp(&q.id))
    });
    order.into_iter().map(|(p, degree)| PartDegree { id: p.id, degree }).collect()
}

pub fn default_contact_eps(ps: &PartSet) -> f64 {
    ps.weld_eps * 10.0
}

/// The top `pivot_count` parts by connectivity, and the rest re-split into
/// connected components of their union. Remainder parts get fresh ids after
/// the largest existing one.
pub fn pivot_remainder_split(ps: &PartSet, pivot_count: usize, contact_eps: f64) -> (Vec<Part>, Vec<Part>) {
    let order = connectivity_degree_order(ps, contact_eps);
    let pivot_ids: BTreeSet<u32> = order.iter().take(pivot_count).map(|d| d.id).collect();
    let pivots: Vec<Part> = order
        .iter()
        .take(pivot_count)
        .filter_map(|d| ps.get(d.id).cloned())
        .collect();
    let mut rest = TriMesh::default();
    for p in ps.parts.iter().filter(|p| !pivot_ids.contains(&p.id)) {
        rest.append(&p.world_mesh(), None);
    }
    rest.groups.clear();
    if rest.triangles.is_empty() {
        return (pivots, Vec::new());
    }
    let w = rest.welded(ps.weld_eps);
    let (labels, k) = w.triangle_components();
    let mut comps: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (t, &l) in labels.iter().enumerate() {
        comps[l].push(t);
    }
    let next = ps.parts.iter().map(|p| p.id + 1).max().unwrap_or(0);
    let remainder = comps
        .into_iter()
        .enumerate()
        .map(|(i, tris)| Part::from_world(next + i as u32, PartLabel::Object, w.extract(tris)))
        .collect();
    (pivots, remainder)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSummary {
    pub id: u32,
    pub label: PartLabel,
    pub translation: [f64; 3],
    pub degree: usize,
    pub overlays: u32,
    pub absorbed: u32,
    pub stats: PartStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub weld_eps: f64,
    pub contact_eps: f64,
    pub small_part_vertex_threshold: Option<usize>,
    pub overlay_thickness: f64,
    pub ground_confidence: f64,
    pub imbalance_ratio: f64,
    /// Part ids by decreasing connectivity degree.
    pub order: Vec<u32>,
    pub parts: Vec<PartSummary>,
    pub verdict: FilterVerdict,
    pub filters: QualityFilters,
}

pub fn decompose_report(ps: &PartSet, cfg: &DecomposeConfig, contact_eps: f64) -> DecomposeReport {
    let order = connectivity_degree_order(ps, contact_eps);
    let degree_of = |id: u32| order.iter().find(|d| d.id == id).map_or(0, |d| d.degree);
    DecomposeReport {
        weld_eps: ps.weld_eps,
        contact_eps,
        small_part_vertex_threshold: cfg.small_part_vertex_threshold,
        overlay_thickness: cfg.overlay_thickness,
        ground_confidence: ps.ground_confidence,
        imbalance_ratio: imbalance_ratio(ps),
        order: order.iter().map(|d| d.id).collect(),
        parts: ps
            .parts
            .iter()
            .map(|p| PartSummary {
                id: p.id,
                label: p.label,
                translation: [p.pose.translation.x, p.pose.translation.y, p.pose.translation.z],
                degree: degree_of(p.id),
                overlays: p.overlays,
                absorbed: p.absorbed,
                stats: p.stats,
            })
            .collect(),
        verdict: quality_filter(ps, cfg),
        filters: cfg.filters.clone(),
    }
}

/// Vertices of every part in world space, sorted; used to compare part
/// geometry independently of ids and order.
pub fn world_vertex_key(p: &Part) -> Vec<[u64; 3]> {
    let mut v: Vec<[u64; 3]> = p.world_mesh().vertices.iter().map(|q: &P3| [q.x, q.y, q.z].map(f64::to_bits)).collect();
    v.sort_unstable();
    v
}
