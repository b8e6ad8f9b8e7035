//! Hierarchical placement of box placeholders: hero assets first, then medium
//! assets around the heroes, then small assets in the residual space.
//!
//! Free space is tracked on an occupancy grid. A cell is blocked when its
//! center lies within the agent radius plus two cells of a footprint, which
//! keeps the grid conservative with respect to the navmesh's agent-radius
//! erosion. Every accepted placement keeps the free cells one 4-connected
//! component that contains every region anchor.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Footprint, Rect};
use crate::grid::{BoolGrid, NONE};
use crate::partition::{RegionRole, RegionSet};
use crate::rng;
use crate::scene_spec::{AgentParams, SceneSpec};
use crate::terrain::HeightField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Hero,
    Medium,
    Small,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Hero, Tier::Medium, Tier::Small];

    fn previous(self) -> Option<Tier> {
        match self {
            Tier::Hero => None,
            Tier::Medium => Some(Tier::Hero),
            Tier::Small => Some(Tier::Medium),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub id: u32,
    pub tier: Tier,
    pub footprint: Footprint,
    pub height: f64,
    /// Terrain height under the footprint center when placed.
    pub base_z: f64,
}

/// Size and distance bands for the three tiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementConfig {
    /// Footprint side length ranges in meters at `REFERENCE_EXTENT`; they
    /// scale linearly with the world extent so that roofs keep their share
    /// of the ground.
    pub hero_side: [f64; 2],
    pub medium_side: [f64; 2],
    pub small_side: [f64; 2],
    /// Medium assets sit this far (meters) beyond a hero's circumradius.
    pub medium_annulus: [f64; 2],
    /// Attempts per requested placement before giving up.
    pub attempts_per_target: u32,
    /// Occupancy grid cells per side.
    pub occupancy_cells: usize,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig {
            hero_side: [3.0, 5.0],
            medium_side: [1.5, 3.0],
            small_side: [0.4, 1.2],
            medium_annulus: [2.0, 8.0],
            attempts_per_target: 50,
            occupancy_cells: 256,
        }
    }
}

impl PlacementConfig {
    fn side_band(&self, tier: Tier) -> [f64; 2] {
        match tier {
            Tier::Hero => self.hero_side,
            Tier::Medium => self.medium_side,
            Tier::Small => self.small_side,
        }
    }
}

/// World side at which `PlacementConfig` footprint bands apply unscaled.
pub const REFERENCE_EXTENT: f64 = 50.0;

/// Height band for a tier in meters.
pub fn height_band(tier: Tier, verticality: f64) -> [f64; 2] {
    match tier {
        Tier::Hero => [4.0 * (0.5 + verticality), 12.0 * (0.5 + verticality)],
        Tier::Medium => [1.5, 4.0],
        Tier::Small => [0.3, 1.5],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub cell_size: f64,
    /// Dilation applied around footprints when marking cells.
    pub dilation: f64,
    pub blocked: BoolGrid,
}

impl Occupancy {
    pub fn new(extent: f64, cells: usize, agent: &AgentParams) -> Self {
        let cell_size = extent / cells as f64;
        Occupancy { cell_size, dilation: agent.radius + 2.0 * cell_size, blocked: BoolGrid::new(cells, cells, false) }
    }

    pub fn cell_center(&self, i: usize) -> [f64; 2] {
        let n = self.blocked.nx;
        [((i % n) as f64 + 0.5) * self.cell_size, ((i / n) as f64 + 0.5) * self.cell_size]
    }

    pub fn cell_of(&self, p: [f64; 2]) -> usize {
        let n = self.blocked.nx;
        let c = |v: f64| ((v / self.cell_size).floor().max(0.0) as usize).min(n - 1);
        c(p[1]) * n + c(p[0])
    }

    /// Cells a footprint blocks.
    pub fn cells_of(&self, fp: &Footprint) -> Vec<usize> {
        let n = self.blocked.nx;
        let b = fp.bounds().inflate(self.dilation);
        let lo = |v: f64| ((v / self.cell_size - 0.5).floor().max(0.0) as usize).min(n - 1);
        let hi = |v: f64| ((v / self.cell_size - 0.5).ceil().max(0.0) as usize).min(n - 1);
        let mut out = Vec::new();
        for y in lo(b.min[1])..=hi(b.max[1]) {
            for x in lo(b.min[0])..=hi(b.max[0]) {
                let i = y * n + x;
                if fp.distance(self.cell_center(i)) <= self.dilation {
                    out.push(i);
                }
            }
        }
        out
    }

    pub fn free(&self) -> BoolGrid {
        BoolGrid {
            nx: self.blocked.nx,
            ny: self.blocked.ny,
            cells: self.blocked.cells.iter().map(|&b| !b).collect(),
        }
    }

    fn rebuild(&mut self, placements: &[Placement]) {
        self.blocked.cells.fill(false);
        for p in placements {
            for c in self.cells_of(&p.footprint) {
                self.blocked.cells[c] = true;
            }
        }
    }
}

/// Outcome of one tier pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub tier: Tier,
    pub requested: u32,
    pub placed: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSet {
    pub extent: f64,
    pub agent: AgentParams,
    pub placements: Vec<Placement>,
    pub occupancy: Occupancy,
    /// Occupancy cells that must stay free, one per region in region order.
    pub anchors: Vec<usize>,
    /// Last tier that completed, if any.
    pub completed: Option<Tier>,
    pub reports: Vec<TierReport>,
}

impl PlacementSet {
    pub fn new(rs: &RegionSet, agent: &AgentParams, config: &PlacementConfig) -> Self {
        let occupancy = Occupancy::new(rs.extent, config.occupancy_cells, agent);
        let anchors: Vec<usize> = rs
            .regions
            .iter()
            .map(|r| occupancy.cell_of(r.anchor(rs.mask.as_ref())))
            .collect();
        PlacementSet {
            extent: rs.extent,
            agent: *agent,
            placements: Vec::new(),
            occupancy,
            anchors,
            completed: None,
            reports: Vec::new(),
        }
    }

    pub fn count(&self, tier: Tier) -> usize {
        self.placements.iter().filter(|p| p.tier == tier).count()
    }

    /// Remove a placement and release its occupancy cells.
    pub fn remove(&mut self, id: u32) -> Result<Placement> {
        let i = self.placements.iter().position(|p| p.id == id).ok_or(Error::UnknownId(id))?;
        let p = self.placements.remove(i);
        self.occupancy.rebuild(&self.placements);
        Ok(p)
    }

    /// Free cells form one component containing every anchor.
    pub fn is_navigable(&self) -> bool {
        let free = self.occupancy.free();
        if self.anchors.iter().any(|&a| !free.cells[a]) {
            return false;
        }
        free.is_connected()
    }

    fn conflicts(&self, fp: &Footprint) -> bool {
        let r = self.agent.radius;
        let mine = fp.dilated(r);
        let bounds = mine.bounds();
        self.placements.iter().any(|p| {
            let other = p.footprint.dilated(r);
            other.bounds().intersects(&bounds) && other.overlaps(&mine)
        })
    }

    /// Free cell of region `k` nearest to its representative point, avoiding
    /// `covered`; ties go to the lower cell index.
    fn relocated_anchor(&self, rs: &RegionSet, k: usize, covered: &[usize]) -> Option<usize> {
        let region = &rs.regions[k];
        let mask = rs.mask.as_ref();
        let target = region.anchor(mask);
        let occ = &self.occupancy;
        let n = occ.blocked.nx;
        let (lo, hi) = region.polygon.iter().fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(lo, hi), p| {
            ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
        });
        let (a, b) = (occ.cell_of(lo), occ.cell_of(hi));
        let mut best: Option<(f64, usize)> = None;
        for y in a / n..=b / n {
            for x in a % n..=b % n {
                let i = y * n + x;
                if occ.blocked.cells[i] || covered.contains(&i) {
                    continue;
                }
                let c = occ.cell_center(i);
                if !region.contains(c, mask) {
                    continue;
                }
                let d = (c[0] - target[0]).powi(2) + (c[1] - target[1]).powi(2);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
        }
        best.map(|(_, i)| i)
    }

    /// Try to add a footprint; keeps the set unchanged and returns false when
    /// it would split the free space or leave a region without a free cell.
    /// Anchors under the footprint move to the nearest free cell of their
    /// region.
    fn try_block(&mut self, rs: &RegionSet, fp: &Footprint) -> bool {
        let cells = self.occupancy.cells_of(fp);
        let saved = self.anchors.clone();
        for k in 0..self.anchors.len() {
            if cells.contains(&self.anchors[k]) {
                match self.relocated_anchor(rs, k, &cells) {
                    Some(c) => self.anchors[k] = c,
                    None => {
                        self.anchors = saved;
                        return false;
                    }
                }
            }
        }
        let fresh: Vec<usize> = cells.into_iter().filter(|&c| !self.occupancy.blocked.cells[c]).collect();
        for &c in &fresh {
            self.occupancy.blocked.cells[c] = true;
        }
        let free = self.occupancy.free();
        let ok = free.reachable_from(self.anchors[0]) == free.count();
        if !ok {
            for &c in &fresh {
                self.occupancy.blocked.cells[c] = false;
            }
            self.anchors = saved;
        }
        ok
    }
}

fn random_yaw(regularity: f64, rng: &mut rng::Rng) -> f64 {
    if regularity > 2.0 / 3.0 {
        f64::from(rng.random_range(0..6u32)) * PI / 12.0
    } else {
        rng.random::<f64>() * FRAC_PI_2
    }
}

fn sample_in_region(rs: &RegionSet, region: usize, rng: &mut rng::Rng) -> [f64; 2] {
    let r = &rs.regions[region];
    match (&r.cells, &rs.mask) {
        (Some(cells), Some(m)) => {
            let c = m.cell_center(cells[rng.random_range(0..cells.len())] as usize);
            let j = m.cell_size * 0.5;
            [c[0] + rng.random_range(-j..j), c[1] + rng.random_range(-j..j)]
        }
        _ => {
            let b = r.polygon.iter().fold(
                Rect::new([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |b, p| Rect::new([b.min[0].min(p[0]), b.min[1].min(p[1])], [b.max[0].max(p[0]), b.max[1].max(p[1])]),
            );
            let mut p = b.min;
            for _ in 0..32 {
                p = [rng.random_range(b.min[0]..=b.max[0]), rng.random_range(b.min[1]..=b.max[1])];
                if r.contains(p, None) {
                    break;
                }
            }
            p
        }
    }
}

/// Place one tier. Tiers must be placed hero → medium → small.
///
/// Candidates are rejection-sampled: hero assets inside cluster regions,
/// medium assets in an annulus around a random hero, small assets around
/// seeded cluster centers in the residual space. A candidate is discarded
/// when its footprint leaves the usable extent, its agent-radius dilation
/// overlaps another dilated footprint, or it would disconnect free space.
/// Sampling stops at the tier target or after `attempts_per_target` times the
/// target; a shortfall is recorded in [`PlacementSet::reports`].
pub fn place_tier(
    rs: &RegionSet,
    hf: &HeightField,
    tier: Tier,
    spec: &SceneSpec,
    config: &PlacementConfig,
    existing: &PlacementSet,
    seed: u64,
) -> Result<PlacementSet> {
    if existing.completed != tier.previous() {
        return Err(Error::TierOrder { requested: tier, completed: existing.completed });
    }
    let counts = spec.tier_counts();
    let target = match tier {
        Tier::Hero => counts.hero,
        Tier::Medium => counts.medium,
        Tier::Small => counts.small,
    };
    let mut ps = existing.clone();
    ps.completed = Some(tier);
    if target == 0 {
        ps.reports.push(TierReport { tier, requested: 0, placed: 0 });
        return Ok(ps);
    }

    let mut rng = rng::stream(seed, match tier {
        Tier::Hero => "hero",
        Tier::Medium => "medium",
        Tier::Small => "small",
    });
    let extent = rs.extent;
    // Footprints keep one terrain cell clear of the border so pads fit.
    let usable = Rect::new([0.0, 0.0], [extent, extent]).inflate(-hf.cell_size);

    let cluster: Vec<usize> = {
        let c: Vec<usize> = (0..rs.regions.len()).filter(|&i| rs.regions[i].role == RegionRole::Cluster).collect();
        if c.is_empty() { (0..rs.regions.len()).collect() } else { c }
    };
    let cluster_area: Vec<f64> = cluster.iter().map(|&i| rs.regions[i].area(rs.mask.as_ref())).collect();
    let total_area: f64 = cluster_area.iter().sum();
    // With no open region the border band stays clear of hero assets.
    let border_band = if rs.count(RegionRole::Open) == 0 { 0.15 * extent } else { 0.0 };

    let heroes: Vec<Footprint> =
        ps.placements.iter().filter(|p| p.tier == Tier::Hero).map(|p| p.footprint).collect();
    let small_centers: Vec<[f64; 2]> = (0..target.div_ceil(6))
        .map(|_| [rng.random_range(0.0..extent), rng.random_range(0.0..extent)])
        .collect();
    let scatter = Normal::new(0.0, 2.5).expect("valid sigma");

    let [side_lo, side_hi] = config.side_band(tier).map(|s| s * extent / REFERENCE_EXTENT);
    let [h_lo, h_hi] = height_band(tier, spec.verticality);
    let mut placed = 0;
    let mut attempts = 0;
    let max_attempts = target * config.attempts_per_target;
    while placed < target && attempts < max_attempts {
        attempts += 1;
        let half = [0.5 * rng.random_range(side_lo..=side_hi), 0.5 * rng.random_range(side_lo..=side_hi)];
        let yaw = random_yaw(spec.regularity, &mut rng);
        let mut region = None;
        let center = match tier {
            Tier::Hero => {
                let mut pick = rng.random::<f64>() * total_area;
                let mut k = 0;
                while k + 1 < cluster.len() && pick >= cluster_area[k] {
                    pick -= cluster_area[k];
                    k += 1;
                }
                region = Some(cluster[k]);
                sample_in_region(rs, cluster[k], &mut rng)
            }
            Tier::Medium if !heroes.is_empty() => {
                let h = heroes[rng.random_range(0..heroes.len())];
                let theta = rng.random::<f64>() * 2.0 * PI;
                let d = h.half[0].hypot(h.half[1])
                    + rng.random_range(config.medium_annulus[0]..=config.medium_annulus[1]);
                [h.center[0] + d * theta.cos(), h.center[1] + d * theta.sin()]
            }
            Tier::Small => {
                let c = small_centers[rng.random_range(0..small_centers.len())];
                [c[0] + scatter.sample(&mut rng), c[1] + scatter.sample(&mut rng)]
            }
            Tier::Medium => [rng.random_range(0.0..extent), rng.random_range(0.0..extent)],
        };
        let fp = Footprint { center, half, yaw };
        let bounds = fp.bounds();
        if !(usable.contains(bounds.min) && usable.contains(bounds.max)) {
            continue;
        }
        if border_band > 0.0 && !Rect::new([0.0, 0.0], [extent, extent]).inflate(-border_band).contains(bounds.min) {
            continue;
        }
        if border_band > 0.0 && !Rect::new([0.0, 0.0], [extent, extent]).inflate(-border_band).contains(bounds.max) {
            continue;
        }
        if let Some(r) = region {
            let reg = &rs.regions[r];
            if !fp.corners().iter().all(|&c| reg.contains(c, rs.mask.as_ref())) {
                continue;
            }
        }
        if ps.conflicts(&fp) || !ps.try_block(rs, &fp) {
            continue;
        }
        let base_z = hf.sample_height(center[0], center[1])?;
        let id = ps.placements.last().map_or(0, |p| p.id + 1);
        ps.placements.push(Placement { id, tier, footprint: fp, height: rng.random_range(h_lo..=h_hi), base_z });
        placed += 1;
    }
    ps.reports.push(TierReport { tier, requested: target, placed });
    Ok(ps)
}

/// Restore a single free-space component by greedily removing medium and
/// small placements, most-blocking first (the placement whose blocked cells
/// border the most distinct free components; ties go to the larger
/// footprint, then the lower id). Hero placements are never removed.
pub fn enforce_navigability(ps: &PlacementSet, agent: &AgentParams) -> Result<PlacementSet> {
    let mut out = ps.clone();
    out.agent = *agent;
    let cells = out.occupancy.blocked.nx;
    out.occupancy = Occupancy::new(out.extent, cells, agent);
    out.occupancy.rebuild(&out.placements);
    if out.occupancy.free().is_connected() {
        return Ok(out);
    }
    loop {
        let free = out.occupancy.free();
        let (labels, k) = free.components();
        if k <= 1 {
            return Ok(out);
        }
        let best = out
            .placements
            .iter()
            .enumerate()
            .filter(|(_, p)| p.tier != Tier::Hero)
            .map(|(i, p)| {
                let mut touching: Vec<u32> = out
                    .occupancy
                    .cells_of(&p.footprint)
                    .into_iter()
                    .flat_map(|c| free.neighbors4(c).collect::<Vec<_>>())
                    .map(|c| labels[c])
                    .filter(|&l| l != NONE)
                    .collect();
                touching.sort_unstable();
                touching.dedup();
                (i, touching.len(), p.footprint.area(), p.id)
            })
            .max_by(|a, b| a.1.cmp(&b.1).then(a.2.total_cmp(&b.2)).then(b.3.cmp(&a.3)));
        match best {
            None => return Err(Error::NavigabilityImpossible),
            Some((i, ..)) => {
                out.placements.remove(i);
                out.occupancy.rebuild(&out.placements);
            }
        }
    }
}

/// Run all three tiers and the navigability repair.
pub fn place_all(
    rs: &RegionSet,
    hf: &HeightField,
    spec: &SceneSpec,
    config: &PlacementConfig,
    seed: u64,
) -> Result<PlacementSet> {
    let mut ps = PlacementSet::new(rs, &spec.agent, config);
    for tier in Tier::ALL {
        ps = place_tier(rs, hf, tier, spec, config, &ps, seed)?;
    }
    enforce_navigability(&ps, &spec.agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{assign_roles, partition, Region};
    use crate::scene_spec::{Density, PartitionSpec, PartitionStrategy, TierCounts};

    fn flat(extent: f64) -> HeightField {
        HeightField::flat(33, extent / 32.0, [0.0, 0.0], 0.0)
    }

    fn one_cluster(extent: f64) -> RegionSet {
        RegionSet {
            extent,
            strategy: PartitionStrategy::Grid,
            regions: vec![Region {
                id: 0,
                polygon: Rect::new([0.0, 0.0], [extent, extent]).corners().to_vec(),
                role: RegionRole::Cluster,
                cells: None,
            }],
            mask: None,
        }
    }

    fn spec_with(counts: TierCounts) -> SceneSpec {
        SceneSpec { counts: Some(counts), ..SceneSpec::default() }
    }

    #[test]
    fn empty_hero_tier_leaves_set_unchanged() {
        let rs = one_cluster(20.0);
        let spec = spec_with(TierCounts { hero: 0, medium: 3, small: 3 });
        let cfg = PlacementConfig::default();
        let ps = PlacementSet::new(&rs, &spec.agent, &cfg);
        let out = place_tier(&rs, &flat(20.0), Tier::Hero, &spec, &cfg, &ps, 1).unwrap();
        assert_eq!(out.placements, ps.placements);
        assert_eq!(out.occupancy, ps.occupancy);
    }

    #[test]
    fn tiers_must_run_in_order() {
        let rs = one_cluster(20.0);
        let spec = SceneSpec::default();
        let cfg = PlacementConfig::default();
        let ps = PlacementSet::new(&rs, &spec.agent, &cfg);
        let err = place_tier(&rs, &flat(20.0), Tier::Medium, &spec, &cfg, &ps, 1).unwrap_err();
        assert!(matches!(err, Error::TierOrder { requested: Tier::Medium, completed: None }));
    }

    #[test]
    fn single_hero_inside_small_cluster_region() {
        // A 10 x 10 m cluster region in a world at the reference extent, so
        // the [3, 6] m band applies unscaled.
        let mut rs = one_cluster(REFERENCE_EXTENT);
        rs.regions[0].polygon = Rect::new([20.0, 20.0], [30.0, 30.0]).corners().to_vec();
        rs.regions.push(Region {
            id: 1,
            polygon: Rect::new([0.0, 0.0], [5.0, 5.0]).corners().to_vec(),
            role: RegionRole::Open,
            cells: None,
        });
        let spec = spec_with(TierCounts { hero: 1, medium: 0, small: 0 });
        let cfg = PlacementConfig { hero_side: [3.0, 6.0], ..PlacementConfig::default() };
        let ps = PlacementSet::new(&rs, &spec.agent, &cfg);
        let out = place_tier(&rs, &flat(REFERENCE_EXTENT), Tier::Hero, &spec, &cfg, &ps, 9).unwrap();
        assert_eq!(out.placements.len(), 1);
        let fp = out.placements[0].footprint;
        for c in fp.corners() {
            assert!((20.0..=30.0).contains(&c[0]) && (20.0..=30.0).contains(&c[1]));
        }
        for s in fp.half {
            assert!((1.5..=3.0).contains(&s));
        }
    }

    #[test]
    fn full_placement_keeps_invariants() {
        let spec = SceneSpec { density: Density::High, ..SceneSpec::default() };
        let rs = partition(spec.extent, &PartitionSpec::default(), 4).unwrap();
        let rs = assign_roles(&rs, spec.density, 4);
        let hf = flat(spec.extent);
        let ps = place_all(&rs, &hf, &spec, &PlacementConfig::default(), 4).unwrap();
        assert!(ps.is_navigable());
        let free = ps.occupancy.free();
        assert!(free.count() as f64 >= 0.6 * free.cells.len() as f64);
        for (i, a) in ps.placements.iter().enumerate() {
            assert!(a.height > 0.0 && a.footprint.area() > 0.0);
            for b in &ps.placements[i + 1..] {
                assert!(!a.footprint.dilated(0.4).overlaps(&b.footprint.dilated(0.4)));
            }
        }
        let again = place_all(&rs, &hf, &spec, &PlacementConfig::default(), 4).unwrap();
        assert_eq!(ps, again);
    }

    fn manual(rs: &RegionSet, fps: &[(Tier, Footprint)]) -> PlacementSet {
        let mut ps = PlacementSet::new(rs, &AgentParams::default(), &PlacementConfig::default());
        for (i, (tier, fp)) in fps.iter().enumerate() {
            ps.placements.push(Placement { id: i as u32, tier: *tier, footprint: *fp, height: 1.0, base_z: 0.0 });
        }
        ps.occupancy.rebuild(&ps.placements);
        ps.completed = Some(Tier::Small);
        ps
    }

    #[test]
    fn connected_set_is_returned_unchanged() {
        let rs = one_cluster(20.0);
        let ps = manual(&rs, &[(Tier::Small, Footprint { center: [5.0, 5.0], half: [0.5, 0.5], yaw: 0.0 })]);
        let out = enforce_navigability(&ps, &AgentParams::default()).unwrap();
        assert_eq!(out, ps);
    }

    #[test]
    fn wall_of_small_boxes_gets_a_gap() {
        let rs = one_cluster(20.0);
        let wall: Vec<(Tier, Footprint)> = (0..10)
            .map(|k| (Tier::Small, Footprint { center: [10.0, 1.0 + 2.0 * k as f64], half: [0.5, 1.0], yaw: 0.0 }))
            .collect();
        let ps = manual(&rs, &wall);
        assert!(ps.occupancy.free().components().1 >= 2);
        let out = enforce_navigability(&ps, &AgentParams::default()).unwrap();
        assert!(out.placements.len() < wall.len());
        assert_eq!(out.occupancy.free().components().1, 1);
    }

    #[test]
    fn hero_wall_is_impossible() {
        let rs = one_cluster(20.0);
        let ps = manual(
            &rs,
            &[
                (Tier::Hero, Footprint { center: [10.0, 5.0], half: [1.0, 5.0], yaw: 0.0 }),
                (Tier::Hero, Footprint { center: [10.0, 15.0], half: [1.0, 5.0], yaw: 0.0 }),
                (Tier::Small, Footprint { center: [3.0, 3.0], half: [0.5, 0.5], yaw: 0.0 }),
            ],
        );
        assert!(matches!(enforce_navigability(&ps, &AgentParams::default()), Err(Error::NavigabilityImpossible)));
    }
}
