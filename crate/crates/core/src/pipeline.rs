//! End-to-end scene generation: spec to terrain, partition, placement and
//! the final blockout, plus its navmesh.
//!
//! Terrain slopes are first limited to what the agent can walk, so that
//! terraces and ridges never cut the ground apart.
//!
//! Placement keeps free space connected on a 2D occupancy grid, but the
//! terrain pads under boxes add blend slopes the grid does not see. The last
//! step therefore bakes the real navmesh and removes non-hero boxes that cut
//! off ground pockets, then boxes whose unreachable roofs keep the main
//! component under `MIN_MAIN_SHARE` of the walkable area.

use serde::Serialize;

use crate::blockout::{assemble_blockout, pad_rects, Blockout};
use crate::error::Result;
use crate::geom::P3;
use crate::navmesh::{bake_navmesh, connectivity_components, default_cell_size, NavMesh, DEFAULT_CELL_HEIGHT};
use crate::partition::{assign_roles, partition, RegionSet};
use crate::placement::{place_all, PlacementConfig, PlacementSet, Tier};
use crate::scene_spec::SceneSpec;
use crate::terrain::{generate_heightfield, limit_slope, smooth_under_footprints, HeightField};

/// Ground pockets smaller than this fraction of `extent²` are tolerated.
pub const POCKET_TOLERANCE: f64 = 5e-4;

/// Smallest area share of the largest navmesh component in a finished scene,
/// unless only hero boxes remain to remove.
pub const MIN_MAIN_SHARE: f64 = 0.95;

#[derive(Debug, Clone, Serialize)]
pub struct Scene {
    pub spec: SceneSpec,
    /// Slope-limited terrain before smoothing under the placements.
    pub base_terrain: HeightField,
    pub regions: RegionSet,
    pub placements: PlacementSet,
    pub blockout: Blockout,
    /// Ids of boxes removed to reconnect ground pockets, in removal order.
    pub removed: Vec<u32>,
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    generate_scene_with(spec, &PlacementConfig::default())
}

pub fn generate_scene_with(spec: &SceneSpec, config: &PlacementConfig) -> Result<Scene> {
    spec.validate()?;
    let base_terrain = limit_slope(&generate_heightfield(spec, spec.seed), terrain_gradient(spec));
    let regions = assign_roles(&partition(spec.extent, &spec.partition, spec.seed)?, spec.density, spec.seed);
    let mut placements = place_all(&regions, &base_terrain, spec, config, spec.seed)?;
    let mut removed = Vec::new();
    loop {
        let smoothed = smooth_under_footprints(&base_terrain, &pad_rects(&placements))?;
        let blockout = assemble_blockout(&smoothed, &placements)?;
        let nm = bake_blockout(&blockout, spec)?;
        match pocket_breaker(&nm, &blockout, spec).or_else(|| share_breaker(&nm, &blockout, spec)) {
            Some(id) => {
                placements.remove(id)?;
                removed.push(id);
            }
            None => {
                return Ok(Scene { spec: spec.clone(), base_terrain, regions, placements, blockout, removed });
            }
        }
    }
}

/// Largest 4-neighbor gradient kept in the terrain. Grid triangles can be
/// `√2` steeper than their edges, and a 10% margin absorbs voxelization.
pub fn terrain_gradient(spec: &SceneSpec) -> f64 {
    0.9 * spec.agent.max_slope_deg.to_radians().tan() / std::f64::consts::SQRT_2
}

fn bake_blockout(b: &Blockout, spec: &SceneSpec) -> Result<NavMesh> {
    bake_navmesh(&b.to_mesh(), &spec.agent, default_cell_size(spec.extent), DEFAULT_CELL_HEIGHT)
}

/// The non-hero box to remove next, if some ground component other than the
/// largest one exceeds the pocket tolerance. The chosen box is the one close
/// to the most distinct ground components; ties go to the larger footprint,
/// then the lower id.
fn pocket_breaker(nm: &NavMesh, b: &Blockout, spec: &SceneSpec) -> Option<u32> {
    let comps = connectivity_components(nm);
    let on_box = |p: &P3| b.boxes.iter().any(|bx| bx.footprint.contains([p.x, p.y]));
    // Ground polygons grouped by component, as centroid and vertices.
    let mut ground: std::collections::BTreeMap<u32, (f64, Vec<P3>)> = Default::default();
    for (p, poly) in nm.polygons.iter().enumerate() {
        let c = P3::from(poly.iter().fold(P3::origin().coords, |s, q| s + q.coords) / poly.len() as f64);
        if on_box(&c) {
            continue;
        }
        let e = ground.entry(nm.region_ids[p]).or_default();
        e.0 += nm.polygon_area(p);
        e.1.extend_from_slice(poly);
    }
    let main = comps.iter().map(|c| c.0).find(|id| ground.contains_key(id))?;
    let limit = POCKET_TOLERANCE * spec.extent * spec.extent;
    if !ground.iter().any(|(&id, (area, _))| id != main && *area > limit) {
        return None;
    }
    let reach = breaker_reach(nm, b, spec);
    b.boxes
        .iter()
        .filter(|bx| bx.tier != Tier::Hero)
        .map(|bx| {
            let touching: Vec<(u32, f64)> = ground
                .iter()
                .filter(|(_, (_, pts))| pts.iter().any(|p| bx.footprint.distance([p.x, p.y]) <= reach))
                .map(|(&id, (area, _))| (id, *area))
                .collect();
            let pocket = touching.iter().filter(|&&(id, a)| id != main && a > limit).count();
            (bx.id, pocket > 0, touching.len(), bx.footprint.area())
        })
        .filter(|c| c.1)
        .max_by(|a, b| a.2.cmp(&b.2).then(a.3.total_cmp(&b.3)).then(b.0.cmp(&a.0)))
        .map(|c| c.0)
}

fn breaker_reach(nm: &NavMesh, b: &Blockout, spec: &SceneSpec) -> f64 {
    spec.agent.radius + 2.0 * b.terrain.cell_size + nm.cell_size
}

/// The non-hero box to remove next, if the largest component covers less
/// than `MIN_MAIN_SHARE` of the walkable area. The chosen box carries or
/// borders the most walkable area outside the largest component, usually
/// its own roof; ties go to the lower id.
fn share_breaker(nm: &NavMesh, b: &Blockout, spec: &SceneSpec) -> Option<u32> {
    let comps = connectivity_components(nm);
    let total: f64 = comps.iter().map(|c| c.1).sum();
    let &(main, main_area) = comps.first()?;
    if main_area >= MIN_MAIN_SHARE * total {
        return None;
    }
    let reach = breaker_reach(nm, b, spec);
    let stray: Vec<(usize, f64)> = (0..nm.polygons.len())
        .filter(|&p| nm.region_ids[p] != main)
        .map(|p| (p, nm.polygon_area(p)))
        .collect();
    b.boxes
        .iter()
        .filter(|bx| bx.tier != Tier::Hero)
        .map(|bx| {
            let area: f64 = stray
                .iter()
                .filter(|&&(p, _)| nm.polygons[p].iter().any(|q| bx.footprint.distance([q.x, q.y]) <= reach))
                .map(|s| s.1)
                .sum();
            (bx.id, area)
        })
        .filter(|c| c.1 > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|c| c.0)
}

impl Scene {
    /// Navmesh of the blockout at the default resolution for its extent.
    pub fn bake_navmesh(&self) -> Result<NavMesh> {
        bake_blockout(&self.blockout, &self.spec)
    }
}
