//! The blockout: ground heightfield plus posed boxes, its declarative edits,
//! and the shared scene normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Footprint, Rect, P3, V3};
use crate::mesh::{TriMesh, CUBOID_TRIANGLES};
use crate::placement::{PlacementSet, Tier};
use crate::terrain::HeightField;

pub use crate::meshio::{export_mesh, MeshFormat};

/// Label of the ground group in [`Blockout::to_mesh`].
pub const GROUND_LABEL: &str = "ground";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxPrimitive {
    pub id: u32,
    pub tier: Tier,
    pub footprint: Footprint,
    pub height: f64,
    /// Elevation of the bottom face.
    pub base_z: f64,
}

impl BoxPrimitive {
    pub fn label(&self) -> String {
        format!("box-{}", self.id)
    }

    /// Closed box: bottom corners 0-3 and top corners 4-7, both
    /// counter-clockwise seen from above.
    pub fn mesh(&self) -> TriMesh {
        let corners = self.footprint.corners();
        let mut vertices = Vec::with_capacity(8);
        for z in [self.base_z, self.base_z + self.height] {
            vertices.extend(corners.iter().map(|c| P3::new(c[0], c[1], z)));
        }
        TriMesh::new(vertices, CUBOID_TRIANGLES.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blockout {
    pub terrain: HeightField,
    pub boxes: Vec<BoxPrimitive>,
}

impl Blockout {
    /// Two triangles per heightfield cell, facing up.
    pub fn ground_mesh(&self) -> TriMesh {
        let hf = &self.terrain;
        let n = hf.resolution;
        let mut vertices = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let p = hf.node(i, j);
                vertices.push(P3::new(p[0], p[1], hf.at(i, j)));
            }
        }
        let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = (j * n + i) as u32;
                let b = a + 1;
                let c = a + n as u32 + 1;
                let d = a + n as u32;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        TriMesh::new(vertices, triangles)
    }

    /// Ground followed by every box, one labeled group each.
    pub fn to_mesh(&self) -> TriMesh {
        let mut m = TriMesh::default();
        m.append(&self.ground_mesh(), Some(GROUND_LABEL));
        for b in &self.boxes {
            m.append(&b.mesh(), Some(&b.label()));
        }
        m
    }

    pub fn bounds(&self) -> Aabb {
        let b = self.terrain.bounds();
        let (lo, hi) = self.terrain.min_max();
        let mut aabb = Aabb { min: P3::new(b.min[0], b.min[1], lo), max: P3::new(b.max[0], b.max[1], hi) };
        for bx in &self.boxes {
            for c in bx.footprint.corners() {
                aabb.grow(&P3::new(c[0], c[1], bx.base_z));
                aabb.grow(&P3::new(c[0], c[1], bx.base_z + bx.height));
            }
        }
        aabb
    }

    fn find(&self, id: u32) -> Result<usize> {
        self.boxes.iter().position(|b| b.id == id).ok_or(Error::UnknownId(id))
    }
}

/// Build the blockout from (already smoothed) terrain and placements. Each
/// box rests at the terrain height under its footprint center.
pub fn assemble_blockout(hf: &HeightField, ps: &PlacementSet) -> Result<Blockout> {
    let boxes = ps
        .placements
        .iter()
        .map(|p| {
            Ok(BoxPrimitive {
                id: p.id,
                tier: p.tier,
                footprint: p.footprint,
                height: p.height,
                base_z: hf.sample_height(p.footprint.center[0], p.footprint.center[1])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Blockout { terrain: hf.clone(), boxes })
}

/// Footprint rectangles to flatten under every placement.
pub fn pad_rects(ps: &PlacementSet) -> Vec<Rect> {
    ps.placements.iter().map(|p| p.footprint.bounds()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Edit {
    RemoveBox { id: u32 },
    SetBoxHeight { id: u32, height: f64 },
    OffsetTerrain { rect: Rect, dz: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditScript {
    pub edits: Vec<Edit>,
}

impl EditScript {
    pub fn from_json(text: &str) -> Result<EditScript> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_syntax() || inner.is_eof() {
                Error::Syntax(inner.to_string())
            } else {
                Error::schema(path, inner.to_string())
            }
        })
    }
}

/// Apply edits in order. Terrain offsets move every node inside the
/// rectangle and re-seat boxes whose pads contain a moved node.
pub fn apply_edits(b: &Blockout, edits: &EditScript) -> Result<Blockout> {
    let mut out = b.clone();
    for edit in &edits.edits {
        match *edit {
            Edit::RemoveBox { id } => {
                let i = out.find(id)?;
                out.boxes.remove(i);
            }
            Edit::SetBoxHeight { id, height } => {
                if !(height.is_finite() && height > 0.0) {
                    return Err(Error::schema("height", format!("{height} must be positive")));
                }
                let i = out.find(id)?;
                out.boxes[i].height = height;
            }
            Edit::OffsetTerrain { rect, dz } => {
                let hf = &mut out.terrain;
                let n = hf.resolution;
                let mut moved = Vec::new();
                for j in 0..n {
                    for i in 0..n {
                        let p = hf.node(i, j);
                        if rect.contains(p) {
                            let k = hf.idx(i, j);
                            hf.heights[k] += dz;
                            moved.push(p);
                        }
                    }
                }
                let cell = hf.cell_size;
                for bx in &mut out.boxes {
                    let pad = bx.footprint.bounds().inflate(cell);
                    if moved.iter().any(|&p| pad.contains(p)) {
                        let c = bx.footprint.center;
                        bx.base_z = out.terrain.sample_height(c[0], c[1])?;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Uniform scale followed by a translation: `p' = scale * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizeTransform {
    pub scale: f64,
    pub translation: [f64; 3],
    /// Fraction of the unit half-cube left free around the scene.
    pub margin: f64,
}

impl NormalizeTransform {
    pub fn identity() -> Self {
        NormalizeTransform { scale: 1.0, translation: [0.0; 3], margin: NORMALIZE_MARGIN }
    }

    pub fn apply(&self, p: &P3) -> P3 {
        P3::from(p.coords * self.scale + V3::from(self.translation))
    }

    pub fn apply_mesh(&self, m: &TriMesh) -> TriMesh {
        m.map_points(|p| self.apply(p))
    }

    pub fn inverse(&self) -> NormalizeTransform {
        let s = 1.0 / self.scale;
        NormalizeTransform {
            scale: s,
            translation: self.translation.map(|t| -t * s),
            margin: self.margin,
        }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.scale - 1.0).abs() <= tol && self.translation.iter().all(|t| t.abs() <= tol)
    }
}

pub const NORMALIZE_MARGIN: f64 = 0.02;
/// Triangles flatter than this count as ground candidates.
pub const GROUND_MAX_SLOPE_DEG: f64 = 5.0;

/// Centroid of the navmesh ground plane.
///
/// Nearly horizontal triangles (slope below 5°) are clustered by elevation
/// (single linkage, gap of 2% of the horizontal diagonal). Among clusters
/// starting in the lowest quarter of the navmesh's height range, the one with
/// the largest area is the ground plane; its area-weighted centroid is
/// returned. Every threshold is relative, so the result commutes with
/// uniform scaling and translation.
pub fn ground_plane_centroid(navmesh: &TriMesh) -> Result<P3> {
    if navmesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let bounds = navmesh.bounds();
    let e = bounds.extent();
    let cos_limit = GROUND_MAX_SLOPE_DEG.to_radians().cos();
    let mut flat: Vec<(f64, usize)> = (0..navmesh.triangles.len())
        .filter_map(|t| {
            let n = navmesh.cross(t);
            let len = n.norm();
            (len > 0.0 && n.z.abs() / len >= cos_limit).then(|| {
                let [a, b, c] = navmesh.corners(t);
                ((a.z + b.z + c.z) / 3.0, t)
            })
        })
        .collect();
    if flat.is_empty() {
        flat = (0..navmesh.triangles.len())
            .filter(|&t| navmesh.triangle_area(t) > 0.0)
            .map(|t| {
                let [a, b, c] = navmesh.corners(t);
                ((a.z + b.z + c.z) / 3.0, t)
            })
            .collect();
    }
    if flat.is_empty() {
        return Err(Error::DegenerateBounds);
    }
    flat.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let gap = 0.02 * e.x.hypot(e.y);
    let band_top = bounds.min.z + 0.25 * e.z;
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=flat.len() {
        if i == flat.len() || flat[i].0 - flat[i - 1].0 > gap {
            clusters.push((start, i));
            start = i;
        }
    }
    let area = |&(s, e): &(usize, usize)| -> f64 { flat[s..e].iter().map(|&(_, t)| navmesh.triangle_area(t)).sum() };
    let low: Vec<&(usize, usize)> = clusters.iter().filter(|c| flat[c.0].0 <= band_top).collect();
    let pool = if low.is_empty() { clusters.iter().collect() } else { low };
    let best = pool
        .into_iter()
        .max_by(|a, b| area(a).total_cmp(&area(b)).then(b.0.cmp(&a.0)))
        .expect("at least one cluster");
    let sub = navmesh.extract(flat[best.0..best.1].iter().map(|&(_, t)| t));
    Ok(sub.centroid())
}

/// Normalization that puts the navmesh ground-plane centroid at the origin
/// and scales `scale_source` into `[-1, 1]³` with a 2% margin.
///
/// The reach that sets the scale is the larger of the horizontal radius and
/// the vertical offset from the centroid, so it does not change when the
/// scene is rotated about the vertical axis.
pub fn normalization_for(scale_source: &TriMesh, navmesh: &TriMesh) -> Result<NormalizeTransform> {
    if scale_source.is_empty() || navmesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let c = ground_plane_centroid(navmesh)?;
    let b = scale_source.bounds();
    let reach = scale_source
        .vertices
        .iter()
        .map(|p| (p.x - c.x).hypot(p.y - c.y).max((p.z - c.z).abs()))
        .fold(0.0, f64::max);
    if !(reach.is_finite() && reach > 0.0) || b.extent().norm() == 0.0 {
        return Err(Error::DegenerateBounds);
    }
    let scale = (1.0 - NORMALIZE_MARGIN) / reach;
    Ok(NormalizeTransform {
        scale,
        translation: [-c.x * scale, -c.y * scale, -c.z * scale],
        margin: NORMALIZE_MARGIN,
    })
}

/// Jointly normalize a scene mesh and its navmesh.
pub fn normalize_scene(mesh: &TriMesh, navmesh: &TriMesh) -> Result<(TriMesh, TriMesh, NormalizeTransform)> {
    let t = normalization_for(mesh, navmesh)?;
    Ok((t.apply_mesh(mesh), t.apply_mesh(navmesh), t))
}

/// Inference-time variant: no scene mesh exists yet, so the scale comes from
/// the procedural blockout while the translation still centers the navmesh
/// ground plane.
pub fn normalize_navmesh_with_blockout(navmesh: &TriMesh, blockout: &Blockout) -> Result<(TriMesh, NormalizeTransform)> {
    let t = normalization_for(&blockout.to_mesh(), navmesh)?;
    Ok((t.apply_mesh(navmesh), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{Placement, PlacementConfig};
    use crate::partition::{Region, RegionRole, RegionSet};
    use crate::scene_spec::{AgentParams, PartitionStrategy};

    fn flat_blockout(boxes: Vec<BoxPrimitive>) -> Blockout {
        Blockout { terrain: HeightField::flat(11, 1.0, [-5.0, -5.0], 0.0), boxes }
    }

    fn unit_box(id: u32, center: [f64; 2], size: [f64; 3]) -> BoxPrimitive {
        BoxPrimitive {
            id,
            tier: Tier::Medium,
            footprint: Footprint { center, half: [size[0] / 2.0, size[1] / 2.0], yaw: 0.0 },
            height: size[2],
            base_z: 0.0,
        }
    }

    #[test]
    fn ground_only_triangle_count() {
        let b = flat_blockout(vec![]);
        assert_eq!(b.to_mesh().triangles.len(), 2 * 10 * 10);
        assert!(b.ground_mesh().triangles.iter().enumerate().all(|(t, _)| b.ground_mesh().cross(t).z > 0.0));
    }

    #[test]
    fn box_rests_flush_on_flat_ground() {
        let rs = RegionSet {
            extent: 10.0,
            strategy: PartitionStrategy::Grid,
            regions: vec![Region {
                id: 0,
                polygon: Rect::new([-5.0, -5.0], [5.0, 5.0]).corners().to_vec(),
                role: RegionRole::Cluster,
                cells: None,
            }],
            mask: None,
        };
        let mut ps = PlacementSet::new(&rs, &AgentParams::default(), &PlacementConfig::default());
        ps.placements.push(Placement {
            id: 0,
            tier: Tier::Hero,
            footprint: Footprint { center: [0.0, 0.0], half: [1.0, 1.0], yaw: 0.0 },
            height: 3.0,
            base_z: 123.0,
        });
        let hf = HeightField::flat(11, 1.0, [-5.0, -5.0], 0.0);
        let b = assemble_blockout(&hf, &ps).unwrap();
        let m = b.boxes[0].mesh();
        let bottom = m.vertices[..4].iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(bottom, 0.0);
        assert_eq!(m.vertices[4].z, 3.0);
    }

    #[test]
    fn edits_are_local() {
        let b = flat_blockout(vec![unit_box(0, [-2.0, -2.0], [1.0, 1.0, 2.0]), unit_box(1, [2.0, 2.0], [1.0, 1.0, 4.0])]);
        assert_eq!(apply_edits(&b, &EditScript::default()).unwrap(), b);

        let e = EditScript { edits: vec![Edit::SetBoxHeight { id: 1, height: 2.0 }] };
        let out = apply_edits(&b, &e).unwrap();
        assert_eq!(out.boxes[1].height, 2.0);
        assert_eq!(out.boxes[0], b.boxes[0]);
        assert_eq!(out.terrain, b.terrain);

        let e = EditScript { edits: vec![Edit::OffsetTerrain { rect: Rect::new([0.0, 0.0], [5.0, 5.0]), dz: -0.5 }] };
        let out = apply_edits(&b, &e).unwrap();
        assert_eq!(out.boxes[1].base_z, -0.5);
        assert_eq!(out.boxes[0], b.boxes[0]);

        let e = EditScript { edits: vec![Edit::RemoveBox { id: 0 }, Edit::RemoveBox { id: 0 }] };
        assert!(matches!(apply_edits(&b, &e), Err(Error::UnknownId(0))));
    }

    #[test]
    fn edit_script_json() {
        let s = EditScript::from_json(
            r#"{"edits":[{"op":"remove_box","id":3},{"op":"offset_terrain","rect":{"min":[0,0],"max":[1,1]},"dz":-0.5}]}"#,
        )
        .unwrap();
        assert_eq!(s.edits.len(), 2);
        assert!(matches!(EditScript::from_json(r#"{"edits":[{"op":"melt"}]}"#), Err(Error::Schema { .. })));
    }

    fn plane_and_box(offset: V3) -> (TriMesh, TriMesh) {
        let mut scene = TriMesh::quad([-2.0, -2.0], [2.0, 2.0], 0.0);
        scene.append(&TriMesh::cuboid(P3::new(-0.5, -0.5, 0.0), P3::new(0.5, 0.5, 1.0)), None);
        let nav = TriMesh::quad([-1.5, -1.5], [1.5, 1.5], 0.0);
        (scene.translated(offset), nav.translated(offset))
    }

    #[test]
    fn normalization_fits_cube_and_centers_ground() {
        let (scene, nav) = plane_and_box(V3::new(10.0, 0.0, 3.0));
        let (s, n, t) = normalize_scene(&scene, &nav).unwrap();
        let b = s.bounds();
        assert!(b.min.iter().all(|&c| c >= -1.0) && b.max.iter().all(|&c| c <= 1.0));
        assert!(ground_plane_centroid(&n).unwrap().coords.norm() < 1e-12);
        assert!((t.translation[0] + 10.0 * t.scale).abs() < 1e-12);
        let (_, _, t2) = normalize_scene(&s, &n).unwrap();
        assert!(t2.is_identity(1e-9));
        let back = t.inverse().apply(&t.apply(&P3::new(1.0, 2.0, 3.0)));
        assert!((back - P3::new(1.0, 2.0, 3.0)).norm() < 1e-12);
    }

    #[test]
    fn degenerate_scene_is_rejected() {
        let nav = TriMesh::quad([0.0, 0.0], [1.0, 1.0], 0.0);
        let point = TriMesh::new(vec![P3::new(0.5, 0.5, 0.0); 3], vec![[0, 1, 2]]);
        assert!(matches!(normalization_for(&point, &nav), Err(Error::DegenerateBounds)));
        assert!(matches!(normalization_for(&TriMesh::default(), &nav), Err(Error::EmptyMesh)));
    }
}
