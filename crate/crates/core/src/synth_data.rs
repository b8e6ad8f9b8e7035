//! Synthetic data: grid scenes with exact part annotations, mesh
//! degradations, and the procedural benchmark writer.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{DecomposeConfig, Part, PartLabel, PartSet};
use crate::depth_render::{best_azimuth, perturb_depth, render_depth, write_depth_png, DEFAULT_SIGMA_REL};
use crate::error::{Error, Result};
use crate::geom::{P3, V3};
use crate::mesh::TriMesh;
use crate::meshio::{export_mesh, write_file_atomic, MeshFormat};
use crate::navmesh::{connectivity_components, sample_surface, NavMesh};
use crate::pipeline::{generate_scene, Scene};
use crate::rng;
use crate::scene_spec::{Density, SceneSpec, TierCounts};

/// File names inside a scene directory.
pub const SCENE_MESH: &str = "scene.obj";
pub const BLOCKOUT_JSON: &str = "blockout.json";
pub const NAVMESH_OBJ: &str = "navmesh.obj";
pub const NAVMESH_JSON: &str = "navmesh.json";
pub const DEPTH_PNG: &str = "depth.png";
pub const DEPTH_JSON: &str = "depth.json";
pub const PARTS_GLTF: &str = "parts.gltf";
pub const SPEC_JSON: &str = "spec.json";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridSize {
    #[serde(rename = "2x2")]
    Two,
    #[serde(rename = "3x3")]
    Three,
}

impl GridSize {
    pub fn side(self) -> usize {
        match self {
            GridSize::Two => 2,
            GridSize::Three => 3,
        }
    }

    pub fn cells(self) -> usize {
        self.side() * self.side()
    }
}

impl std::str::FromStr for GridSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2x2" => Ok(GridSize::Two),
            "3x3" => Ok(GridSize::Three),
            _ => Err(Error::BadParams(format!("grid must be 2x2 or 3x3, got {s}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSceneSpec {
    pub grid: GridSize,
    /// Gap in meters between neighboring unit boxes.
    pub spacing: f64,
    pub assets: Vec<TriMesh>,
    pub seed: u64,
    /// Draw assets independently per cell instead of without repetition.
    pub with_replacement: bool,
}

impl GridSceneSpec {
    pub fn new(grid: GridSize, seed: u64) -> GridSceneSpec {
        GridSceneSpec { grid, spacing: 0.5, assets: builtin_assets(), seed, with_replacement: false }
    }

    pub fn pitch(&self) -> f64 {
        1.0 + self.spacing
    }

    /// Center of cell `(i, j)`; the grid is centered on the origin.
    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        let half = self.grid.side() as f64 * self.pitch() / 2.0;
        [(i as f64 + 0.5) * self.pitch() - half, (j as f64 + 0.5) * self.pitch() - half]
    }
}

fn closed_mesh(vertices: Vec<[f64; 3]>, triangles: Vec<[u32; 3]>) -> TriMesh {
    TriMesh::new(vertices.into_iter().map(P3::from).collect(), triangles)
}

fn prism(n: usize) -> TriMesh {
    let mut v = Vec::with_capacity(2 * n);
    for z in [0.0, 1.0] {
        for k in 0..n {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            v.push([a.cos(), a.sin(), z]);
        }
    }
    let n = n as u32;
    let mut t = Vec::new();
    for k in 1..n - 1 {
        t.push([0, k + 1, k]);
        t.push([n, n + k, n + k + 1]);
    }
    for k in 0..n {
        let k1 = (k + 1) % n;
        t.push([k, k1, n + k1]);
        t.push([k, n + k1, n + k]);
    }
    closed_mesh(v, t)
}

/// Closed primitives used when no asset files are given: cube, slab,
/// pyramid, hexagonal prism, octahedron and wedge.
pub fn builtin_assets() -> Vec<TriMesh> {
    let cube = TriMesh::cuboid(P3::origin(), P3::new(1.0, 1.0, 1.0));
    let slab = TriMesh::cuboid(P3::origin(), P3::new(2.0, 1.0, 1.0));
    let pyramid = closed_mesh(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 1.0]],
        vec![[0, 2, 1], [0, 3, 2], [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
    );
    let octahedron = closed_mesh(
        vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
        vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5]],
    );
    let wedge = closed_mesh(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]],
        vec![[0, 2, 1], [3, 4, 5], [0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4], [2, 0, 3], [2, 3, 5]],
    );
    vec![cube, slab, pyramid, prism(6), octahedron, wedge]
}

/// Uniformly scale `m` so its largest extent is 1, center it on `xy`, and
/// rest its lowest point at `z = 0`.
fn fit_unit_box(m: &TriMesh, xy: [f64; 2]) -> Result<TriMesh> {
    let b = m.bounds();
    let s = b.extent().max();
    if b.is_empty() || !(s > 0.0) {
        return Err(Error::DegenerateBounds);
    }
    let c = b.center();
    Ok(m.map_points(|p| P3::new((p.x - c.x) / s + xy[0], (p.y - c.y) / s + xy[1], (p.z - b.min.z) / s)))
}

/// Arrange assets one per grid cell on a ground plane. Returns the labeled
/// scene (groups `ground`, `part-1`, ...) and its exact part annotation.
pub fn compose_grid_scene(gs: &GridSceneSpec) -> Result<(TriMesh, PartSet)> {
    let n = gs.grid.cells();
    if gs.assets.is_empty() || (!gs.with_replacement && gs.assets.len() < n) {
        return Err(Error::InsufficientAssets { needed: n, available: gs.assets.len() });
    }
    if !(gs.spacing.is_finite() && gs.spacing >= 0.0) {
        return Err(Error::BadParams(format!("spacing must be non-negative, got {}", gs.spacing)));
    }
    let mut rng = rng::stream(gs.seed, "grid-assets");
    let picks: Vec<usize> = if gs.with_replacement {
        (0..n).map(|_| rng.random_range(0..gs.assets.len())).collect()
    } else {
        let mut idx: Vec<usize> = (0..gs.assets.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n);
        idx
    };
    let half = gs.grid.side() as f64 * gs.pitch() / 2.0;
    let mut parts = vec![Part::from_world(0, PartLabel::Ground, TriMesh::quad([-half, -half], [half, half], 0.0))];
    let side = gs.grid.side();
    for (k, &a) in picks.iter().enumerate() {
        let world = fit_unit_box(&gs.assets[a], gs.cell_center(k % side, k / side))?;
        parts.push(Part::from_world(k as u32 + 1, PartLabel::Object, world));
    }
    let total: f64 = parts.iter().map(|p| p.stats.projected_area).sum();
    let mut ps = PartSet { ground_confidence: parts[0].stats.projected_area / total, parts, weld_eps: 0.0 };
    let scene = ps.to_mesh();
    ps.weld_eps = DecomposeConfig::default().weld_eps_for(&scene);
    Ok((scene, ps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradeParams {
    pub floater_prob: f64,
    pub floater_count: usize,
    /// Floater size relative to the mesh bounding-box diagonal.
    pub floater_size: f64,
    pub mask_prob: f64,
    pub mask_spheres: usize,
    /// Mask sphere radius relative to the diagonal.
    pub mask_radius: f64,
    pub break_prob: f64,
    pub break_patches: usize,
    /// Patch radius relative to the diagonal.
    pub break_radius: f64,
    /// Largest displacement per coordinate, in mesh units.
    pub break_amp: f64,
    /// Largest fraction of input triangles the masks may delete.
    pub max_removal: f64,
}

impl Default for DegradeParams {
    fn default() -> Self {
        DegradeParams {
            floater_prob: 0.5,
            floater_count: 3,
            floater_size: 0.01,
            mask_prob: 0.5,
            mask_spheres: 2,
            mask_radius: 0.05,
            break_prob: 0.5,
            break_patches: 2,
            break_radius: 0.05,
            break_amp: 0.01,
            max_removal: 0.2,
        }
    }
}

impl DegradeParams {
    /// Every artifact disabled.
    pub fn none() -> Self {
        DegradeParams { floater_prob: 0.0, mask_prob: 0.0, break_prob: 0.0, ..DegradeParams::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let ok = unit(self.floater_prob)
            && unit(self.mask_prob)
            && unit(self.break_prob)
            && unit(self.max_removal)
            && [self.floater_size, self.mask_radius, self.break_radius, self.break_amp].iter().all(|v| v.is_finite() && *v >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::BadParams("probabilities and max_removal must lie in [0, 1], sizes must be non-negative".into()))
        }
    }
}

/// Simulate reconstruction artifacts. Masking runs first and never deletes
/// more than `max_removal` of the input triangles, then surface breaks, then
/// floaters (small octahedra offset from the surface, each its own
/// component). Group labels are kept; floaters join a `floaters` group when
/// the input is labeled.
pub fn degrade_mesh(m: &TriMesh, seed: u64, params: &DegradeParams) -> TriMesh {
    if m.triangles.is_empty() {
        return m.clone();
    }
    let mut rng = rng::stream(seed, "degrade");
    let diag = m.bounds().extent().norm();
    let n_in = m.triangles.len();
    let mut group_of: Vec<usize> = vec![usize::MAX; n_in];
    for (g, grp) in m.groups.iter().enumerate() {
        for t in grp.triangles.clone() {
            group_of[t] = g;
        }
    }
    let mut vertices = m.vertices.clone();
    let mut keep = vec![true; n_in];

    if rng.random::<f64>() < params.mask_prob {
        let budget = (params.max_removal.clamp(0.0, 1.0) * n_in as f64).floor() as usize;
        let mut removed = 0;
        for _ in 0..params.mask_spheres {
            let c = triangle_centroid(m, rng.random_range(0..n_in));
            let r = params.mask_radius * diag;
            let mut hit: Vec<(f64, usize)> = (0..n_in)
                .filter(|&t| keep[t])
                .map(|t| ((triangle_centroid(m, t) - c).norm(), t))
                .filter(|(d, _)| *d <= r)
                .collect();
            hit.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (_, t) in hit.into_iter().take(budget - removed) {
                keep[t] = false;
                removed += 1;
            }
        }
    }

    if rng.random::<f64>() < params.break_prob {
        for _ in 0..params.break_patches {
            let c = vertices[rng.random_range(0..vertices.len())];
            let r = params.break_radius * diag;
            for v in vertices.iter_mut() {
                let d = (*v - c).norm();
                if d <= r && r > 0.0 {
                    let falloff = 1.0 - d / r;
                    let u = V3::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
                    *v += u * (params.break_amp * falloff);
                }
            }
        }
    }

    let mut out = TriMesh { vertices, triangles: Vec::new(), groups: Vec::new() };
    let mut labels: Vec<usize> = Vec::new();
    for t in 0..n_in {
        if keep[t] {
            out.triangles.push(m.triangles[t]);
            labels.push(group_of[t]);
        }
    }
    if !m.groups.is_empty() {
        let mut start = 0;
        for i in 1..=labels.len() {
            if i == labels.len() || labels[i] != labels[start] {
                out.groups.push(crate::mesh::Group { name: m.groups[labels[start]].name.clone(), triangles: start..i });
                start = i;
            }
        }
    }
    out.drop_unused_vertices();

    if rng.random::<f64>() < params.floater_prob && params.floater_count > 0 {
        let size = (params.floater_size * diag).max(f64::MIN_POSITIVE);
        let anchors = sample_surface(m, params.floater_count, rng::derive(seed, "floaters")).ok();
        let mut blobs = TriMesh::default();
        for k in 0..params.floater_count {
            let (p, n) = match &anchors {
                Some(pc) => (pc.points[k], pc.normals.as_ref().map_or(V3::z(), |n| n[k])),
                None => (m.vertices[0], V3::z()),
            };
            let center = p + n * (3.0 * size);
            blobs.append(&octahedron(center, size), None);
        }
        blobs.groups.clear();
        out.append(&blobs, (!m.groups.is_empty()).then_some("floaters"));
    }
    out
}

fn triangle_centroid(m: &TriMesh, t: usize) -> P3 {
    let [a, b, c] = m.corners(t);
    P3::from((a.coords + b.coords + c.coords) / 3.0)
}

fn octahedron(c: P3, r: f64) -> TriMesh {
    let v = [V3::x(), V3::y(), -V3::x(), -V3::y(), V3::z(), -V3::z()].map(|d| c + d * r);
    TriMesh::new(
        v.to_vec(),
        vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5]],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtifactOptions {
    pub depth_resolution: usize,
    pub sigma_rel: f64,
}

impl Default for ArtifactOptions {
    fn default() -> Self {
        ArtifactOptions { depth_resolution: 256, sigma_rel: DEFAULT_SIGMA_REL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavmeshSummary {
    pub polygons: usize,
    pub components: usize,
    pub area: f64,
    /// Area share of the largest component.
    pub main_share: f64,
    pub cell_size: f64,
}

impl NavmeshSummary {
    pub fn of(nm: &NavMesh) -> NavmeshSummary {
        let comps = connectivity_components(nm);
        let area: f64 = comps.iter().map(|c| c.1).sum();
        NavmeshSummary {
            polygons: nm.polygons.len(),
            components: comps.len(),
            area,
            main_share: comps.first().map_or(0.0, |c| c.1 / area),
            cell_size: nm.cell_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSummary {
    pub azimuth_deg: f64,
    pub resolution: usize,
    pub sigma_rel: f64,
    pub noise_seed: u64,
}

/// Everything needed to regenerate a scene directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub spec: SceneSpec,
    pub options: ArtifactOptions,
    pub object_count: usize,
    pub removed_boxes: Vec<u32>,
    pub navmesh: NavmeshSummary,
    pub depth: DepthSummary,
    pub files: Vec<String>,
}

/// Write every artifact of `scene` into `dir`; the manifest goes last.
pub fn write_scene_dir(scene: &Scene, dir: &Path, opts: &ArtifactOptions) -> Result<SceneManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mesh = scene.blockout.to_mesh();
    export_mesh(&mesh, MeshFormat::Obj, &dir.join(SCENE_MESH))?;
    export_mesh(&mesh, MeshFormat::Gltf, &dir.join(PARTS_GLTF))?;
    let blockout_json = serde_json::to_string(&scene.blockout).expect("blockout serializes");
    write_file_atomic(&dir.join(BLOCKOUT_JSON), blockout_json.as_bytes())?;
    write_file_atomic(&dir.join(SPEC_JSON), scene.spec.to_json().as_bytes())?;

    let nm = scene.bake_navmesh()?;
    nm.write_obj(&dir.join(NAVMESH_OBJ))?;
    nm.write_json(&dir.join(NAVMESH_JSON))?;

    let az = best_azimuth(&scene.blockout, opts.depth_resolution);
    let noise_seed = rng::derive(scene.spec.seed, "depth-noise");
    let dm = perturb_depth(&render_depth(&scene.blockout, az, opts.depth_resolution), opts.sigma_rel, noise_seed)?;
    write_depth_png(&dm, &dir.join(DEPTH_PNG))?;

    let manifest = SceneManifest {
        spec: scene.spec.clone(),
        options: opts.clone(),
        object_count: scene.blockout.boxes.len(),
        removed_boxes: scene.removed.clone(),
        navmesh: NavmeshSummary::of(&nm),
        depth: DepthSummary { azimuth_deg: az.to_degrees(), resolution: opts.depth_resolution, sigma_rel: opts.sigma_rel, noise_seed },
        files: [SCENE_MESH, PARTS_GLTF, BLOCKOUT_JSON, SPEC_JSON, NAVMESH_OBJ, NAVMESH_JSON, DEPTH_PNG, DEPTH_JSON]
            .map(String::from)
            .to_vec(),
    };
    write_json_atomic(&dir.join(MANIFEST_JSON), &manifest)?;
    Ok(manifest)
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_file_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub n_scenes: usize,
    /// Inclusive range of boxes per scene.
    pub objects_range: [usize; 2],
    /// Base spec; seed and tier counts are set per scene.
    pub template: SceneSpec,
    pub seed: u64,
    /// Generation attempts per scene before giving up on the object range.
    pub max_attempts: usize,
    pub artifacts: ArtifactOptions,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            n_scenes: 50,
            objects_range: [10, 30],
            template: SceneSpec { density: Density::High, verticality: 0.5, ..SceneSpec::default() },
            seed: 0,
            max_attempts: 8,
            artifacts: ArtifactOptions::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.objects_range;
        if self.n_scenes == 0 || lo == 0 || lo > hi || self.max_attempts == 0 {
            return Err(Error::BadParams("need n_scenes >= 1, max_attempts >= 1 and 1 <= objects_range[0] <= objects_range[1]".into()));
        }
        self.template.validate()
    }

    /// Target box count of scene `index`, uniform in `objects_range`.
    pub fn target_count(&self, index: usize) -> usize {
        let [lo, hi] = self.objects_range;
        rng::Rng::seed_from_u64(rng::derive_indexed(self.seed, "benchmark-count", index as u64)).random_range(lo..=hi)
    }

    /// Spec for one attempt at scene `index`. The target is split over the
    /// tiers in the 1:3:6 ratio of the density tiers.
    pub fn scene_spec(&self, index: usize, attempt: usize) -> SceneSpec {
        let n = self.target_count(index) as u32;
        let hero = ((n as f64 / 10.0).round() as u32).max(1).min(n);
        let medium = ((3.0 * n as f64 / 10.0).round() as u32).min(n - hero);
        let base = rng::derive_indexed(self.seed, "benchmark-scene", index as u64);
        SceneSpec {
            seed: rng::derive_indexed(base, "attempt", attempt as u64),
            counts: Some(TierCounts { hero, medium, small: n - hero - medium }),
            ..self.template.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub index: usize,
    pub dir: String,
    pub seed: u64,
    pub target_count: usize,
    pub object_count: usize,
    pub attempts: usize,
    pub main_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub config: BenchmarkConfig,
    pub scenes: Vec<BenchmarkEntry>,
}

pub fn scene_dir_name(index: usize) -> String {
    format!("scene-{index:03}")
}

/// Generate `n_scenes` scenes into `out/scene-NNN/` in parallel, then write
/// `out/manifest.json`. A scene whose box count misses `objects_range` is
/// regenerated with the next attempt seed.
pub fn build_benchmark(cfg: &BenchmarkConfig, out: &Path) -> Result<BenchmarkManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let [lo, hi] = cfg.objects_range;
    let scenes: Vec<BenchmarkEntry> = (0..cfg.n_scenes)
        .into_par_iter()
        .map(|i| {
            for attempt in 0..cfg.max_attempts {
                let spec = cfg.scene_spec(i, attempt);
                let scene = generate_scene(&spec)?;
                let count = scene.blockout.boxes.len();
                if !(lo..=hi).contains(&count) {
                    continue;
                }
                let dir: PathBuf = out.join(scene_dir_name(i));
                let m = write_scene_dir(&scene, &dir, &cfg.artifacts)?;
                return Ok(BenchmarkEntry {
                    index: i,
                    dir: scene_dir_name(i),
                    seed: spec.seed,
                    target_count: cfg.target_count(i),
                    object_count: count,
                    attempts: attempt + 1,
                    main_share: m.navmesh.main_share,
                });
            }
            Err(Error::BadParams(format!("scene {i}: no attempt produced {lo}..={hi} boxes")))
        })
        .collect::<Result<_>>()?;
    let manifest = BenchmarkManifest { config: cfg.clone(), scenes };
    write_json_atomic(&out.join(MANIFEST_JSON), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridManifest {
    pub grid: GridSize,
    pub spacing: f64,
    pub seed: u64,
    pub with_replacement: bool,
    pub degrade: Option<DegradeParams>,
    pub part_count: usize,
    pub files: Vec<String>,
}

/// Write a grid scene: `scene.obj`, exact parts in `parts.gltf`, and with
/// `degrade` set a `degraded.obj` simulating reconstruction artifacts.
pub fn write_grid_dir(gs: &GridSceneSpec, degrade: Option<&DegradeParams>, dir: &Path) -> Result<GridManifest> {
    let (scene, parts) = compose_grid_scene(gs)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    export_mesh(&scene, MeshFormat::Obj, &dir.join(SCENE_MESH))?;
    export_mesh(&parts.to_mesh(), MeshFormat::Gltf, &dir.join(PARTS_GLTF))?;
    let mut files = vec![SCENE_MESH.to_string(), PARTS_GLTF.to_string()];
    if let Some(p) = degrade {
        p.validate()?;
        export_mesh(&degrade_mesh(&scene, rng::derive(gs.seed, "degrade"), p), MeshFormat::Obj, &dir.join("degraded.obj"))?;
        files.push("degraded.obj".into());
    }
    let m = GridManifest {
        grid: gs.grid,
        spacing: gs.spacing,
        seed: gs.seed,
        with_replacement: gs.with_replacement,
        degrade: degrade.cloned(),
        part_count: parts.len(),
        files,
    };
    write_json_atomic(&dir.join(MANIFEST_JSON), &m)?;
    Ok(m)
}
