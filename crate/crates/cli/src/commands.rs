use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use blockworld::blockout::{apply_edits, Blockout, EditScript};
use blockworld::decompose::{decompose_report, decompose_scene, default_contact_eps, pivot_remainder_split, DecomposeConfig, PartSet, DEFAULT_PIVOT_COUNT};
use blockworld::depth_render::{best_azimuth, perturb_depth, render_depth, write_depth_png, DEFAULT_SIGMA_REL};
use blockworld::mesh::TriMesh;
use blockworld::meshio::{export_mesh, import_mesh, write_file_atomic, MeshFormat};
use blockworld::metrics::{navmesh_cd_report, part_match_eval, EvalReport, NavmeshCdConfig, NavmeshCdItem, PartEvalConfig};
use blockworld::navmesh::{bake_navmesh, connectivity_components, default_cell_size, NavMesh, DEFAULT_CELL_HEIGHT};
use blockworld::pipeline::generate_scene;
use blockworld::rng;
use blockworld::scene_spec::{parse_scene_spec, AgentParams, SceneSpec};
use blockworld::synth_data::{
    build_benchmark, scene_dir_name, write_grid_dir, write_json_atomic, write_scene_dir, ArtifactOptions, BenchmarkConfig, DegradeParams, GridSceneSpec,
    NavmeshSummary, BLOCKOUT_JSON, DEPTH_JSON, DEPTH_PNG, MANIFEST_JSON, NAVMESH_JSON, NAVMESH_OBJ, PARTS_GLTF, SCENE_MESH,
};
use blockworld::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{read_text, ConfigFile};
use crate::{Cli, Command, SynthKind};

/// Manifest written by every command except `generate` and `synth`, whose
/// library writers produce their own.
#[derive(Serialize)]
struct Manifest<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    inputs: BTreeMap<&'a str, Vec<String>>,
    config: &'a C,
    result: R,
    files: Vec<&'a str>,
}

fn manifest<C: Serialize, R: Serialize>(out: &Path, command: &str, inputs: BTreeMap<&str, Vec<String>>, config: &C, result: R, files: Vec<&str>) -> Result<()> {
    let m = Manifest { command, version: env!("CARGO_PKG_VERSION"), inputs, config, result, files };
    write_json_atomic(&out.join(MANIFEST_JSON), &m)
}

fn paths(p: &[&Path]) -> Vec<String> {
    p.iter().map(|p| p.display().to_string()).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &'static str) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Import { format: what, message: format!("{}: {e}", path.display()) })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::BadParams(format!("{name} must be positive, got {v}")))
    }
}

pub fn run(cli: &Cli) -> Result<Value> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(Error::BadParams("--jobs must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let file = ConfigFile::load(cli.global.config.as_deref())?;
    let out = cli.global.out.as_path();
    let seed = cli.global.seed;
    match &cli.command {
        Command::Generate { spec, depth_resolution, sigma } => generate(&file, out, seed, spec.as_deref(), *depth_resolution, *sigma),
        Command::Edit { blockout, script } => edit(&file, out, blockout, script),
        Command::Navmesh { mesh, cell_size, cell_height } => navmesh(&file, out, mesh, *cell_size, *cell_height),
        Command::RenderDepth { blockout, azimuth, resolution, sigma } => render(&file, out, seed, blockout, *azimuth, *resolution, *sigma),
        Command::Decompose { mesh, weld_eps, small_part_threshold, pivots } => decompose(&file, out, mesh, *weld_eps, *small_part_threshold, *pivots),
        Command::EvalNavmesh { pred, gt, gt_scene, samples } => eval_navmesh(&file, out, seed, pred, gt, gt_scene, *samples),
        Command::EvalParts { pred, gt, samples, taus } => eval_parts(&file, out, seed, pred, gt, *samples, taus.clone()),
        Command::Synth { kind: SynthKind::Benchmark { scenes, min_objects, max_objects, spec } } => {
            synth_benchmark(&file, out, seed, *scenes, *min_objects, *max_objects, spec.as_deref())
        }
        Command::Synth { kind: SynthKind::Grid { grid, count, spacing, degrade, with_replacement } } => {
            synth_grid(&file, out, seed, *grid, *count, *spacing, *degrade, *with_replacement)
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenerateConfig {
    spec: SceneSpec,
    artifacts: ArtifactOptions,
}

fn check_artifacts(a: &ArtifactOptions) -> Result<()> {
    if a.depth_resolution == 0 || !(a.sigma_rel.is_finite() && a.sigma_rel >= 0.0) {
        return Err(Error::BadParams("depth_resolution must be positive and sigma non-negative".into()));
    }
    Ok(())
}

fn generate(file: &ConfigFile, out: &Path, seed: Option<u64>, spec: Option<&Path>, res: Option<usize>, sigma: Option<f64>) -> Result<Value> {
    let mut cfg: GenerateConfig = file.section("generate")?;
    if let Some(p) = spec {
        cfg.spec = parse_scene_spec(&read_text(p)?)?;
    }
    if let Some(s) = seed {
        cfg.spec.seed = s;
    }
    if let Some(r) = res {
        cfg.artifacts.depth_resolution = r;
    }
    if let Some(s) = sigma {
        cfg.artifacts.sigma_rel = s;
    }
    cfg.spec.validate()?;
    check_artifacts(&cfg.artifacts)?;
    log::info!("generating scene with seed {}", cfg.spec.seed);
    let scene = generate_scene(&cfg.spec)?;
    let m = write_scene_dir(&scene, out, &cfg.artifacts)?;
    log::info!("{} boxes, navmesh main share {:.4}", m.object_count, m.navmesh.main_share);
    Ok(json!({
        "command": "generate",
        "seed": cfg.spec.seed,
        "objects": m.object_count,
        "removed_boxes": m.removed_boxes.len(),
        "navmesh": m.navmesh,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BakeConfig {
    agent: AgentParams,
    /// `None` is 1/256 of the larger horizontal extent.
    cell_size: Option<f64>,
    cell_height: f64,
}

impl Default for BakeConfig {
    fn default() -> Self {
        BakeConfig { agent: AgentParams::default(), cell_size: None, cell_height: DEFAULT_CELL_HEIGHT }
    }
}

impl BakeConfig {
    fn bake(&self, mesh: &TriMesh) -> Result<NavMesh> {
        let e = mesh.bounds().extent();
        let cell = self.cell_size.unwrap_or_else(|| default_cell_size(e.x.max(e.y)));
        bake_navmesh(mesh, &self.agent, cell, self.cell_height)
    }
}

fn edit(file: &ConfigFile, out: &Path, blockout: &Path, script: &Path) -> Result<Value> {
    let cfg: BakeConfig = file.section("edit")?;
    let b: Blockout = read_json(blockout, "blockout JSON")?;
    let edits = EditScript::from_json(&read_text(script)?)?;
    let edited = apply_edits(&b, &edits)?;
    let mesh = edited.to_mesh();
    let nm = cfg.bake(&mesh)?;
    create_dir(out)?;
    write_json_atomic(&out.join(BLOCKOUT_JSON), &edited)?;
    export_mesh(&mesh, MeshFormat::Obj, &out.join(SCENE_MESH))?;
    nm.write_obj(&out.join(NAVMESH_OBJ))?;
    nm.write_json(&out.join(NAVMESH_JSON))?;
    let summary = NavmeshSummary::of(&nm);
    let result = json!({ "edits": edits.edits.len(), "boxes": edited.boxes.len(), "navmesh": summary });
    let inputs = BTreeMap::from([("blockout", paths(&[blockout])), ("script", paths(&[script]))]);
    manifest(out, "edit", inputs, &cfg, &result, vec![BLOCKOUT_JSON, SCENE_MESH, NAVMESH_OBJ, NAVMESH_JSON])?;
    log::info!("applied {} edits, navmesh main share {:.4}", edits.edits.len(), summary.main_share);
    Ok(json!({ "command": "edit", "result": result }))
}

fn navmesh(file: &ConfigFile, out: &Path, mesh_path: &Path, cell_size: Option<f64>, cell_height: Option<f64>) -> Result<Value> {
    let mut cfg: BakeConfig = file.section("navmesh")?;
    if cell_size.is_some() {
        cfg.cell_size = cell_size;
    }
    if let Some(h) = cell_height {
        cfg.cell_height = h;
    }
    let mesh = import_mesh(mesh_path)?;
    let nm = cfg.bake(&mesh)?;
    create_dir(out)?;
    nm.write_obj(&out.join(NAVMESH_OBJ))?;
    nm.write_json(&out.join(NAVMESH_JSON))?;
    let components: Vec<Value> = connectivity_components(&nm).iter().map(|(id, area)| json!({ "region": id, "area": area })).collect();
    let summary = NavmeshSummary::of(&nm);
    let result = json!({ "navmesh": summary, "components": components });
    manifest(out, "navmesh", BTreeMap::from([("mesh", paths(&[mesh_path]))]), &cfg, &result, vec![NAVMESH_OBJ, NAVMESH_JSON])?;
    log::info!("{} polygons in {} components", summary.polygons, summary.components);
    Ok(json!({ "command": "navmesh", "navmesh": summary }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RenderConfig {
    /// `None` picks the canonical azimuth hiding the fewest boxes.
    azimuth_deg: Option<f64>,
    resolution: usize,
    sigma_rel: f64,
    seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { azimuth_deg: None, resolution: 256, sigma_rel: DEFAULT_SIGMA_REL, seed: 0 }
    }
}

fn render(file: &ConfigFile, out: &Path, seed: Option<u64>, blockout: &Path, az: Option<f64>, res: Option<usize>, sigma: Option<f64>) -> Result<Value> {
    let mut cfg: RenderConfig = file.section("render-depth")?;
    if az.is_some() {
        cfg.azimuth_deg = az;
    }
    if let Some(r) = res {
        cfg.resolution = r;
    }
    if let Some(s) = sigma {
        cfg.sigma_rel = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    check_artifacts(&ArtifactOptions { depth_resolution: cfg.resolution, sigma_rel: cfg.sigma_rel })?;
    let b: Blockout = read_json(blockout, "blockout JSON")?;
    let azimuth = cfg.azimuth_deg.map_or_else(|| best_azimuth(&b, cfg.resolution), f64::to_radians);
    let noise_seed = rng::derive(cfg.seed, "depth-noise");
    let dm = perturb_depth(&render_depth(&b, azimuth, cfg.resolution), cfg.sigma_rel, noise_seed)?;
    create_dir(out)?;
    write_depth_png(&dm, &out.join(DEPTH_PNG))?;
    let result = json!({ "azimuth_deg": azimuth.to_degrees(), "noise_seed": noise_seed, "depth_range": dm.finite_range() });
    manifest(out, "render-depth", BTreeMap::from([("blockout", paths(&[blockout]))]), &cfg, &result, vec![DEPTH_PNG, DEPTH_JSON])?;
    Ok(json!({ "command": "render-depth", "result": result }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DecomposeCmdConfig {
    decompose: DecomposeConfig,
    pivots: usize,
    /// `None` is ten times the weld distance.
    contact_eps: Option<f64>,
}

impl Default for DecomposeCmdConfig {
    fn default() -> Self {
        DecomposeCmdConfig { decompose: DecomposeConfig::default(), pivots: DEFAULT_PIVOT_COUNT, contact_eps: None }
    }
}

fn decompose(file: &ConfigFile, out: &Path, mesh_path: &Path, weld_eps: Option<f64>, small: Option<usize>, pivots: Option<usize>) -> Result<Value> {
    let mut cfg: DecomposeCmdConfig = file.section("decompose")?;
    if weld_eps.is_some() {
        cfg.decompose.weld_eps = weld_eps;
    }
    if small.is_some() {
        cfg.decompose.small_part_vertex_threshold = small;
    }
    if let Some(k) = pivots {
        cfg.pivots = k;
    }
    if let Some(e) = cfg.contact_eps {
        positive("contact_eps", e)?;
    }
    let mesh = import_mesh(mesh_path)?;
    let ps = decompose_scene(&mesh, &cfg.decompose)?;
    let eps = cfg.contact_eps.unwrap_or_else(|| default_contact_eps(&ps));
    let report = decompose_report(&ps, &cfg.decompose, eps);
    let (piv, rest) = pivot_remainder_split(&ps, cfg.pivots, eps);
    create_dir(out)?;
    export_mesh(&ps.to_mesh(), MeshFormat::Gltf, &out.join(PARTS_GLTF))?;
    let full = json!({
        "report": report,
        "pivots": piv.iter().map(|p| p.id).collect::<Vec<_>>(),
        "remainder_parts": rest.len(),
    });
    write_json_atomic(&out.join("report.json"), &full)?;
    let result = json!({ "parts": ps.len(), "accepted": report.verdict.accepted, "ground_confidence": ps.ground_confidence });
    manifest(out, "decompose", BTreeMap::from([("mesh", paths(&[mesh_path]))]), &cfg, &result, vec![PARTS_GLTF, "report.json"])?;
    log::info!("{} parts, ground confidence {:.3}, accepted {}", ps.len(), ps.ground_confidence, report.verdict.accepted);
    Ok(json!({ "command": "decompose", "result": result, "reasons": report.verdict.reasons }))
}

fn load_navmesh_mesh(path: &Path) -> Result<TriMesh> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        Ok(NavMesh::from_json(&read_text(path)?)?.to_mesh())
    } else {
        import_mesh(path)
    }
}

fn write_report(out: &Path, csv_name: &str, report: &EvalReport) -> Result<()> {
    create_dir(out)?;
    write_file_atomic(&out.join(csv_name), report.to_csv().as_bytes())?;
    write_file_atomic(&out.join("report.json"), report.to_json().as_bytes())
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalNavmeshConfig {
    navmesh_cd: NavmeshCdConfig,
    agent: AgentParams,
}

fn eval_navmesh(file: &ConfigFile, out: &Path, seed: Option<u64>, pred: &[PathBuf], gt: &[PathBuf], gt_scene: &[PathBuf], samples: Option<usize>) -> Result<Value> {
    let mut cfg: EvalNavmeshConfig = file.section("eval-navmesh")?;
    if let Some(s) = seed {
        cfg.navmesh_cd.seed = s;
    }
    if let Some(n) = samples {
        cfg.navmesh_cd.n_samples = n;
    }
    if pred.len() != gt.len() || !(gt_scene.is_empty() || gt_scene.len() == pred.len()) {
        return Err(Error::BadParams("--pred and --gt (and --gt-scene when given) must be repeated the same number of times".into()));
    }
    let items = pred
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(NavmeshCdItem {
                name: p.display().to_string(),
                pred_scene: import_mesh(p)?,
                gt_navmesh: load_navmesh_mesh(&gt[i])?,
                gt_scene: gt_scene.get(i).map(|s| import_mesh(s)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = navmesh_cd_report(&items, &cfg.agent, &cfg.navmesh_cd)?;
    write_report(out, "table1.csv", &report)?;
    let refs = |v: &[PathBuf]| v.iter().map(|p| p.display().to_string()).collect::<Vec<_>>();
    let inputs = BTreeMap::from([("pred", refs(pred)), ("gt", refs(gt)), ("gt_scene", refs(gt_scene))]);
    manifest(out, "eval-navmesh", inputs, &cfg, json!({ "mean": report.mean }), vec!["table1.csv", "report.json"])?;
    Ok(json!({ "command": "eval-navmesh", "columns": report.columns, "mean": report.mean }))
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalPartsConfig {
    part_eval: PartEvalConfig,
}

fn eval_parts(file: &ConfigFile, out: &Path, seed: Option<u64>, pred: &Path, gt: &Path, samples: Option<usize>, taus: Option<Vec<f64>>) -> Result<Value> {
    let mut cfg: EvalPartsConfig = file.section("eval-parts")?;
    if let Some(s) = seed {
        cfg.part_eval.seed = s;
    }
    if let Some(n) = samples {
        cfg.part_eval.n_samples = n;
    }
    if let Some(t) = taus {
        cfg.part_eval.taus = t;
    }
    let p = PartSet::from_mesh(&import_mesh(pred)?)?;
    let g = PartSet::from_mesh(&import_mesh(gt)?)?;
    let report = part_match_eval(&p, &g, &cfg.part_eval)?;
    write_report(out, "table2.csv", &report)?;
    let inputs = BTreeMap::from([("pred", paths(&[pred])), ("gt", paths(&[gt]))]);
    manifest(out, "eval-parts", inputs, &cfg, json!({ "mean": report.mean }), vec!["table2.csv", "report.json"])?;
    Ok(json!({ "command": "eval-parts", "columns": report.columns, "mean": report.mean }))
}

fn synth_benchmark(file: &ConfigFile, out: &Path, seed: Option<u64>, scenes: Option<usize>, lo: Option<usize>, hi: Option<usize>, spec: Option<&Path>) -> Result<Value> {
    let mut cfg: BenchmarkConfig = file.section("synth-benchmark")?;
    if let Some(p) = spec {
        cfg.template = parse_scene_spec(&read_text(p)?)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = scenes {
        cfg.n_scenes = n;
    }
    if let Some(l) = lo {
        cfg.objects_range[0] = l;
    }
    if let Some(h) = hi {
        cfg.objects_range[1] = h;
    }
    log::info!("building {} scenes with {:?} objects", cfg.n_scenes, cfg.objects_range);
    let m = build_benchmark(&cfg, out)?;
    let min_share = m.scenes.iter().map(|s| s.main_share).fold(1.0, f64::min);
    let counts: Vec<usize> = m.scenes.iter().map(|s| s.object_count).collect();
    Ok(json!({ "command": "synth benchmark", "scenes": m.scenes.len(), "object_counts": counts, "min_main_share": min_share }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GridConfig {
    spacing: f64,
    seed: u64,
    degrade: DegradeParams,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { spacing: 0.5, seed: 0, degrade: DegradeParams::default() }
    }
}

#[allow(clippy::too_many_arguments)]
fn synth_grid(
    file: &ConfigFile,
    out: &Path,
    seed: Option<u64>,
    grid: blockworld::synth_data::GridSize,
    count: usize,
    spacing: Option<f64>,
    degrade: bool,
    with_replacement: bool,
) -> Result<Value> {
    use rayon::prelude::*;
    let mut cfg: GridConfig = file.section("synth-grid")?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = spacing {
        cfg.spacing = s;
    }
    if count == 0 {
        return Err(Error::BadParams("--count must be at least 1".into()));
    }
    create_dir(out)?;
    let scenes = (0..count)
        .into_par_iter()
        .map(|i| {
            let gs = GridSceneSpec {
                spacing: cfg.spacing,
                with_replacement,
                ..GridSceneSpec::new(grid, rng::derive_indexed(cfg.seed, "grid", i as u64))
            };
            let dir = out.join(scene_dir_name(i));
            write_grid_dir(&gs, degrade.then_some(&cfg.degrade), &dir).map(|m| json!({ "dir": scene_dir_name(i), "manifest": m }))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = json!({
        "command": "synth grid",
        "version": env!("CARGO_PKG_VERSION"),
        "grid": grid,
        "count": count,
        "with_replacement": with_replacement,
        "degrade": degrade,
        "config": cfg,
        "scenes": scenes,
    });
    write_json_atomic(&out.join(MANIFEST_JSON), &m)?;
    Ok(json!({ "command": "synth grid", "scenes": count }))
}
