//! Worked examples checked against independent oracles: hand arithmetic,
//! brute force, or a second straightforward implementation written here.

use std::collections::{BTreeMap, BTreeSet};

use blockworld::blockout::{apply_edits, normalize_navmesh_with_blockout, normalize_scene, Edit, EditScript};
use blockworld::decompose::{
    connectivity_degree_order, decompose_scene, default_contact_eps, pivot_remainder_split, quality_filter,
    DecomposeConfig, Part, PartLabel, PartSet,
};
use blockworld::depth_render::{read_depth_png, render_depth, write_depth_png};
use blockworld::geom::{Footprint, Rect, Rigid, P3, V3};
use blockworld::meshio::{export_mesh, import_mesh, MeshFormat};
use blockworld::metrics::{fscore, icp_align, part_match_eval, PartEvalConfig};
use blockworld::navmesh::{bake_navmesh, connectivity_components, fps_indices, sample_surface, NavMesh, PointCloud};
use blockworld::partition::{assign_roles, partition, Region, RegionRole, RegionSet};
use blockworld::pipeline::generate_scene;
use blockworld::placement::{
    enforce_navigability, place_tier, Placement, PlacementConfig, PlacementSet, Tier, REFERENCE_EXTENT,
};
use blockworld::scene_spec::{
    AgentParams, Density, PartitionSpec, PartitionStrategy, SceneSpec, TerrainKind, TerrainSpec, TierCounts,
};
use blockworld::synth_data::{compose_grid_scene, degrade_mesh, DegradeParams, GridSceneSpec, GridSize};
use blockworld::terrain::{generate_heightfield, smooth_under_footprints, HeightField};
use blockworld::{rng, TriMesh};
use rand::seq::SliceRandom as _;
use rand::Rng as _;

/// 4-connected components of a boolean grid by breadth-first search.
fn grid_components(cells: &[bool], n: usize) -> usize {
    let mut seen = vec![false; cells.len()];
    let mut count = 0;
    for start in 0..cells.len() {
        if !cells[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % n, i / n);
            let mut next = Vec::with_capacity(4);
            if x > 0 {
                next.push(i - 1);
            }
            if x + 1 < n {
                next.push(i + 1);
            }
            if y > 0 {
                next.push(i - n);
            }
            if y + 1 < n {
                next.push(i + n);
            }
            for j in next {
                if cells[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    count
}

/// Components of a triangle mesh joined through shared vertex indices.
fn index_components(m: &TriMesh) -> usize {
    let mut parent: Vec<usize> = (0..m.vertices.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for t in &m.triangles {
        for k in 1..3 {
            let (a, b) = (find(&mut parent, t[0] as usize), find(&mut parent, t[k] as usize));
            parent[a] = b;
        }
    }
    let used: BTreeSet<usize> = m.triangles.iter().flatten().map(|&v| v as usize).collect();
    used.into_iter().map(|v| find(&mut parent, v)).collect::<BTreeSet<_>>().len()
}

fn shoelace(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1]).sum::<f64>() / 2.0
}

fn projected_area(m: &TriMesh) -> f64 {
    m.triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| m.vertices[i as usize]);
            ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs() / 2.0
        })
        .sum()
}

fn cube(min: [f64; 3], side: f64) -> TriMesh {
    TriMesh::cuboid(P3::from(min), P3::new(min[0] + side, min[1] + side, min[2] + side))
}

fn union(meshes: &[TriMesh]) -> TriMesh {
    let mut out = TriMesh::default();
    for m in meshes {
        out.append(m, None);
    }
    out.groups.clear();
    out
}

// ---------------------------------------------------------------- terrain

#[test]
fn perlin_heights_stay_in_elevation_range() {
    let spec = SceneSpec {
        terrain: TerrainSpec { kind: TerrainKind::Perlin, resolution: 64, elevation_range: [0.0, 5.0], ..TerrainSpec::default() },
        ..SceneSpec::default()
    };
    let hf = generate_heightfield(&spec, 17);
    assert_eq!(hf.heights.len(), 64 * 64);
    let n = hf.heights.len() as f64;
    let mean = hf.heights.iter().sum::<f64>() / n;
    let var = hf.heights.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(hf.heights.iter().all(|&h| (0.0..=5.0).contains(&h)));
    assert!(var > 0.0);
}

#[test]
fn bilinear_sampling_matches_reference() {
    let mut rng = rng::stream(5, "bilinear-oracle");
    let n = 17;
    let hf = HeightField {
        resolution: n,
        cell_size: 0.75,
        origin: [-3.0, 2.0],
        heights: (0..n * n).map(|_| rng.random_range(-4.0..4.0)).collect(),
    };
    let side = (n - 1) as f64 * hf.cell_size;
    for _ in 0..1000 {
        let (x, y) = (hf.origin[0] + rng.random::<f64>() * side, hf.origin[1] + rng.random::<f64>() * side);
        let (u, v) = ((x - hf.origin[0]) / hf.cell_size, (y - hf.origin[1]) / hf.cell_size);
        let (i, j) = ((u as usize).min(n - 2), (v as usize).min(n - 2));
        let (s, t) = (u - i as f64, v - j as f64);
        let h = |a: usize, b: usize| hf.heights[b * n + a];
        let expected = h(i, j) * (1.0 - s) * (1.0 - t)
            + h(i + 1, j) * s * (1.0 - t)
            + h(i, j + 1) * (1.0 - s) * t
            + h(i + 1, j + 1) * s * t;
        assert!((hf.sample_height(x, y).unwrap() - expected).abs() <= 1e-12);
    }
}

#[test]
fn footprint_pad_levels_to_mean_and_blends_monotonically() {
    let n = 13;
    let mut hf = HeightField::flat(n, 1.0, [0.0, 0.0], 0.0);
    for (k, (i, j)) in [(6, 6), (7, 6), (6, 7), (7, 7)].into_iter().enumerate() {
        hf.heights[j * n + i] = (k + 1) as f64;
    }
    let out = smooth_under_footprints(&hf, &[Rect::new([6.0, 6.0], [7.0, 7.0])]).unwrap();
    for (i, j) in [(6, 6), (7, 6), (6, 7), (7, 7)] {
        assert_eq!(out.at(i, j), 2.5);
    }
    // Away from the pad the surface falls from 2.5 back to the original 0.
    for j in [6, 7] {
        let right: Vec<f64> = (7..n).map(|i| out.at(i, j)).collect();
        let left: Vec<f64> = (0..=6).rev().map(|i| out.at(i, j)).collect();
        for row in [right, left] {
            assert!(row.windows(2).all(|w| w[1] <= w[0]), "{row:?}");
            assert_eq!(*row.last().unwrap(), 0.0);
        }
    }
}

// -------------------------------------------------------------- partition

#[test]
fn bsp_rectangles_tile_the_extent() {
    let spec = PartitionSpec { strategy: PartitionStrategy::Bsp, region_count_hint: 8, ..PartitionSpec::default() };
    let rs = partition(50.0, &spec, 11).unwrap();
    assert_eq!(rs.regions.len(), 8);
    let mut total = 0.0;
    for r in &rs.regions {
        assert_eq!(r.polygon.len(), 4);
        for k in 0..4 {
            let (a, b) = (r.polygon[k], r.polygon[(k + 1) % 4]);
            assert!(a[0] == b[0] || a[1] == b[1], "edge {a:?} -> {b:?} is not axis-aligned");
        }
        total += shoelace(&r.polygon);
    }
    assert!((total - 2500.0).abs() <= 1e-9);
}

#[test]
fn drunkard_walk_carves_one_component() {
    let mut spec = PartitionSpec { strategy: PartitionStrategy::Drunkard, ..PartitionSpec::default() };
    spec.params.insert("coverage".into(), 0.45);
    for seed in 0..5 {
        let rs = partition(50.0, &spec, seed).unwrap();
        let mask = rs.mask.as_ref().unwrap();
        assert_eq!((mask.walkable.nx, mask.walkable.ny), (64, 64));
        let carved = mask.walkable.cells.iter().filter(|&&c| c).count() as f64 / 4096.0;
        assert!((0.40..=0.50).contains(&carved), "coverage {carved}");
        assert_eq!(grid_components(&mask.walkable.cells, 64), 1);
    }
}

#[test]
fn dense_grid_gets_mostly_clusters() {
    let spec = PartitionSpec { strategy: PartitionStrategy::Grid, region_count_hint: 9, ..PartitionSpec::default() };
    let rs = assign_roles(&partition(50.0, &spec, 3).unwrap(), Density::High, 3);
    assert_eq!(rs.regions.len(), 9);
    let count = |role| rs.regions.iter().filter(|r| r.role == role).count();
    assert!(count(RegionRole::Cluster) >= 6);
    assert!(count(RegionRole::Open) >= 1);
}

// -------------------------------------------------------------- placement

fn square_region(id: u32, min: [f64; 2], max: [f64; 2], role: RegionRole) -> Region {
    Region { id, polygon: Rect::new(min, max).corners().to_vec(), role, cells: None }
}

#[test]
fn lone_hero_lands_inside_its_cluster() {
    let rs = RegionSet {
        extent: REFERENCE_EXTENT,
        strategy: PartitionStrategy::Grid,
        regions: vec![
            square_region(0, [20.0, 20.0], [30.0, 30.0], RegionRole::Cluster),
            square_region(1, [0.0, 0.0], [5.0, 5.0], RegionRole::Open),
        ],
        mask: None,
    };
    let hf = HeightField::flat(33, REFERENCE_EXTENT / 32.0, [0.0, 0.0], 0.0);
    let spec = SceneSpec { counts: Some(TierCounts { hero: 1, medium: 0, small: 0 }), ..SceneSpec::default() };
    let cfg = PlacementConfig { hero_side: [3.0, 6.0], ..PlacementConfig::default() };
    for seed in 0..10 {
        let ps = PlacementSet::new(&rs, &spec.agent, &cfg);
        let out = place_tier(&rs, &hf, Tier::Hero, &spec, &cfg, &ps, seed).unwrap();
        assert_eq!(out.placements.len(), 1);
        let fp = out.placements[0].footprint;
        let (c, s) = (fp.yaw.cos(), fp.yaw.sin());
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            let (dx, dy) = (sx * fp.half[0], sy * fp.half[1]);
            let corner = [fp.center[0] + c * dx - s * dy, fp.center[1] + s * dx + c * dy];
            assert!(corner.iter().all(|v| (20.0 - 1e-9..=30.0 + 1e-9).contains(v)), "{corner:?}");
        }
    }
}

#[test]
fn wall_of_small_boxes_is_opened() {
    let rs = RegionSet {
        extent: 20.0,
        strategy: PartitionStrategy::Grid,
        regions: vec![square_region(0, [0.0, 0.0], [20.0, 20.0], RegionRole::Cluster)],
        mask: None,
    };
    let agent = AgentParams::default();
    let mut ps = PlacementSet::new(&rs, &agent, &PlacementConfig::default());
    for k in 0..10 {
        let footprint = Footprint { center: [10.0, 1.0 + 2.0 * k as f64], half: [0.5, 1.0], yaw: 0.0 };
        ps.placements.push(Placement { id: k, tier: Tier::Small, footprint, height: 1.0, base_z: 0.0 });
    }
    ps.completed = Some(Tier::Small);

    // Flood fill over cells whose centers stay clear of every dilated box.
    let free_components = |ps: &PlacementSet| {
        let occ = &ps.occupancy;
        let n = occ.blocked.nx;
        let free: Vec<bool> = (0..n * n)
            .map(|i| {
                let c = [((i % n) as f64 + 0.5) * occ.cell_size, ((i / n) as f64 + 0.5) * occ.cell_size];
                ps.placements.iter().all(|p| p.footprint.distance(c) > occ.dilation)
            })
            .collect();
        grid_components(&free, n)
    };
    assert_eq!(free_components(&ps), 2);
    let out = enforce_navigability(&ps, &agent).unwrap();
    assert!(out.placements.len() < ps.placements.len());
    assert_eq!(free_components(&out), 1);
}

// --------------------------------------------------------------- blockout

#[test]
fn every_box_is_a_closed_cuboid() {
    let scene = generate_scene(&SceneSpec { seed: 21, ..SceneSpec::default() }).unwrap();
    let mesh = scene.blockout.to_mesh();
    let boxes: Vec<(String, TriMesh)> = mesh.split_groups().into_iter().filter(|(n, _)| n.starts_with("box-")).collect();
    assert_eq!(boxes.len(), scene.blockout.boxes.len());
    for (name, m) in boxes {
        let mut edges: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let (v, e, f) = (m.vertices.len(), edges.len(), m.triangles.len());
        assert_eq!((v, f), (8, 12), "{name}");
        assert_eq!(v as i64 - e as i64 + f as i64, 2, "{name}");
        assert!(edges.values().all(|&c| c == 2), "{name} is not watertight");
    }
}

#[test]
fn lowering_terrain_under_a_box_lowers_the_box() {
    let spec = SceneSpec { seed: 8, density: Density::Low, ..SceneSpec::default() };
    let b = generate_scene(&spec).unwrap().blockout;
    let target = b.boxes.iter().find(|x| x.tier == Tier::Hero).unwrap();
    let r = target.footprint.bounds().inflate(0.5);
    let script = EditScript { edits: vec![Edit::OffsetTerrain { rect: r, dz: -0.5 }] };
    let out = apply_edits(&b, &script).unwrap();
    let moved = out.boxes.iter().find(|x| x.id == target.id).unwrap();
    assert!((moved.base_z - (target.base_z - 0.5)).abs() <= 1e-9, "{} -> {}", target.base_z, moved.base_z);
    assert_eq!(moved.height, target.height);
}

#[test]
fn offset_unit_cube_normalizes_around_its_roof() {
    let mesh = cube([9.5, -0.5, 0.0], 1.0);
    let nav = TriMesh::quad([9.5, -0.5], [10.5, 0.5], 1.0);
    let (out, _, t) = normalize_scene(&mesh, &nav).unwrap();
    // The roof centroid (10, 0, 1) goes to the origin.
    let s = t.scale;
    assert!((t.translation[0] + 10.0 * s).abs() <= 1e-12);
    assert!(t.translation[1].abs() <= 1e-12);
    assert!((t.translation[2] + s).abs() <= 1e-12);
    // Reach is the drop from the roof to the cube floor (1 m), which beats
    // the roof half-diagonal; the scene is kept 2% inside the unit cube.
    assert!((s - 0.98).abs() <= 1e-12);
    assert!(out.vertices.iter().all(|p| p.iter().all(|c| c.abs() <= 1.0)));
}

#[test]
fn blockout_scale_serves_when_no_scene_mesh_exists() {
    let scene = generate_scene(&SceneSpec { seed: 2, density: Density::Low, ..SceneSpec::default() }).unwrap();
    let nav = scene.bake_navmesh().unwrap().to_mesh();
    let (_, _, joint) = normalize_scene(&scene.blockout.to_mesh(), &nav).unwrap();
    let (normalized, inferred) = normalize_navmesh_with_blockout(&nav, &scene.blockout).unwrap();
    assert_eq!(joint, inferred);
    assert!(normalized.vertices.iter().all(|p| p.iter().all(|c| c.abs() <= 1.0)));
}

// ----------------------------------------------------------------- meshio

#[test]
fn export_import_round_trip_keeps_coordinates() {
    let mut rng = rng::stream(9, "meshio-oracle");
    // glTF stores f32, whose spacing stays below 1e-6 for magnitudes under 8.
    let vertices: Vec<P3> =
        (0..200).map(|_| P3::new(rng.random_range(-8.0..8.0), rng.random_range(-1.0..1.0), rng.random_range(-1e-3..1e-3))).collect();
    let triangles: Vec<[u32; 3]> = (0..198).map(|i| [i, i + 1, i + 2]).collect();
    let mesh = TriMesh::new(vertices, triangles);
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [(MeshFormat::Obj, "m.obj"), (MeshFormat::Gltf, "m.gltf")] {
        let path = dir.path().join(name);
        export_mesh(&mesh, format, &path).unwrap();
        let back = import_mesh(&path).unwrap();
        assert_eq!(back.triangles, mesh.triangles);
        for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
            assert!((a - b).abs().max() <= 1e-6, "{name}: {a} vs {b}");
        }
    }
}

// ---------------------------------------------------------------- navmesh

fn fan_area(poly: &[P3]) -> f64 {
    (1..poly.len() - 1).map(|k| (poly[k] - poly[0]).cross(&(poly[k + 1] - poly[0])).norm() / 2.0).sum()
}

#[test]
fn flat_plane_erodes_by_agent_radius() {
    let cell = 0.1;
    let nm = bake_navmesh(&TriMesh::quad([0.0, 0.0], [10.0, 10.0], 0.0), &AgentParams::default(), cell, 0.2).unwrap();
    let comps = connectivity_components(&nm);
    assert_eq!(comps.len(), 1);
    let inner = 10.0 - 2.0 * 0.4;
    let area: f64 = nm.polygons.iter().map(|p| fan_area(p)).sum();
    assert!(area >= inner * inner - 2.0 * cell * 4.0 * inner, "area {area}");
    assert!(area <= 100.0);
}

fn plane_with_ramp(deg: f64) -> TriMesh {
    let rise = 10.0 * deg.to_radians().tan();
    let v = [
        [0.0, 0.0, 0.0],
        [10.0, 0.0, 0.0],
        [10.0, 10.0, 0.0],
        [0.0, 10.0, 0.0],
        [20.0, 0.0, rise],
        [20.0, 10.0, rise],
    ];
    TriMesh::new(v.into_iter().map(P3::from).collect(), vec![[0, 1, 2], [0, 2, 3], [1, 4, 5], [1, 5, 2]])
}

fn ramp_area(nm: &NavMesh) -> f64 {
    nm.polygons
        .iter()
        .filter(|p| {
            let cx = p.iter().map(|q| q.x).sum::<f64>() / p.len() as f64;
            (11.0..19.0).contains(&cx)
        })
        .map(|p| fan_area(p))
        .sum()
}

#[test]
fn ramp_walkability_follows_slope_limit() {
    let mesh = plane_with_ramp(30.0);
    let steep = AgentParams { max_slope_deg: 45.0, ..AgentParams::default() };
    let shallow = AgentParams { max_slope_deg: 20.0, ..AgentParams::default() };
    assert!(ramp_area(&bake_navmesh(&mesh, &steep, 0.1, 0.2).unwrap()) > 40.0);
    assert_eq!(ramp_area(&bake_navmesh(&mesh, &shallow, 0.1, 0.2).unwrap()), 0.0);
}

#[test]
fn two_islands_are_two_components() {
    let mut mesh = TriMesh::quad([0.0, 0.0], [10.0, 10.0], 0.0);
    mesh.append(&TriMesh::quad([15.0, 0.0], [25.0, 10.0], 0.0), None);
    let nm = bake_navmesh(&mesh, &AgentParams::default(), 0.1, 0.2).unwrap();
    let comps = connectivity_components(&nm);
    assert_eq!(comps.len(), 2);
    let mut by_island = [0.0; 2];
    let mut by_region: BTreeMap<u32, usize> = BTreeMap::new();
    for (p, poly) in nm.polygons.iter().enumerate() {
        let island = usize::from(poly[0].x > 12.5);
        by_island[island] += fan_area(poly);
        assert_eq!(*by_region.entry(nm.region_ids[p]).or_insert(island), island);
    }
    for (region, area) in comps {
        assert!((area - by_island[by_region[&region]]).abs() <= 1e-9);
    }
}

#[test]
fn area_weighted_sampling_follows_binomial() {
    let v = [[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [10.0, 0.0, 0.0], [12.0, 0.0, 0.0], [10.0, 1.0, 0.0]];
    let mesh = TriMesh::new(v.into_iter().map(P3::from).collect(), vec![[0, 1, 2], [3, 4, 5]]);
    let sigma = (4000.0f64 * 0.75 * 0.25).sqrt();
    for seed in 0..5 {
        let pc = sample_surface(&mesh, 4000, seed).unwrap();
        let big = pc.points.iter().filter(|p| p.x < 5.0).count() as f64;
        assert!((big - 3000.0).abs() <= 3.0 * sigma, "seed {seed}: {big}");
    }
}

fn min_pairwise(points: &[P3]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

#[test]
fn farthest_point_subset_beats_random_subsets() {
    let mut rng = rng::stream(4, "fps-oracle");
    let pc = PointCloud::new((0..1024).map(|_| P3::new(rng.random(), rng.random(), rng.random())).collect());
    let chosen: Vec<P3> = fps_indices(&pc, 16).unwrap().into_iter().map(|i| pc.points[i]).collect();
    let fps_gap = min_pairwise(&chosen);
    let mut idx: Vec<usize> = (0..pc.len()).collect();
    for _ in 0..100 {
        idx.shuffle(&mut rng);
        let random: Vec<P3> = idx[..16].iter().map(|&i| pc.points[i]).collect();
        assert!(fps_gap >= min_pairwise(&random));
    }
}

// ------------------------------------------------------------ depth render

#[test]
fn depth_png_round_trip_stays_within_one_step() {
    let scene = generate_scene(&SceneSpec { seed: 4, density: Density::Low, ..SceneSpec::default() }).unwrap();
    let dm = render_depth(&scene.blockout, 45f64.to_radians(), 96);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.png");
    write_depth_png(&dm, &path).unwrap();
    let back = read_depth_png(&path).unwrap();
    let (lo, hi) = dm.finite_range().unwrap();
    let step = (hi - lo) / 65534.0;
    assert_eq!(back.terrain_mask, dm.terrain_mask);
    for (a, b) in dm.depth.iter().zip(&back.depth) {
        if a.is_finite() {
            assert!((a - b).abs() <= step, "{a} vs {b}");
        } else {
            assert!(b.is_infinite());
        }
    }
}

// --------------------------------------------------------------- decompose

#[test]
fn two_cubes_over_a_plane_give_three_parts() {
    let plane = TriMesh::quad([-10.0, -10.0], [10.0, 10.0], 0.0);
    let mesh = union(&[plane.clone(), cube([-3.0, 0.0, 0.5], 1.0), cube([3.0, 0.0, 0.5], 1.0)]);
    let ps = decompose_scene(&mesh, &DecomposeConfig::default()).unwrap();
    assert_eq!(ps.len(), 3);
    assert_eq!(ps.parts.iter().filter(|p| p.label == PartLabel::Ground).count(), 1);
    let expected = projected_area(&plane) / projected_area(&mesh);
    assert!((ps.ground_confidence - expected).abs() <= 1e-9, "{} vs {expected}", ps.ground_confidence);
}

#[test]
fn thin_stripe_merges_into_the_ground() {
    let stripe = TriMesh::cuboid(P3::new(0.0, 0.0, 0.0), P3::new(5.0, 0.5, 0.01));
    let mesh = union(&[TriMesh::quad([-10.0, -10.0], [10.0, 10.0], 0.0), stripe]);
    let ps = decompose_scene(&mesh, &DecomposeConfig::default()).unwrap();
    assert_eq!(ps.len(), 1);
    assert_eq!(ps.parts[0].label, PartLabel::Ground);
    assert_eq!(ps.parts[0].overlays, 1);
}

fn ground_with_cubes(k: usize) -> PartSet {
    let mut parts = vec![Part::from_world(0, PartLabel::Ground, TriMesh::quad([-15.0, -15.0], [15.0, 15.0], 0.0))];
    for i in 0..k {
        parts.push(Part::from_world(i as u32 + 1, PartLabel::Object, cube([-13.0 + 4.0 * i as f64, 0.0, 0.0], 1.0)));
    }
    PartSet { parts, ground_confidence: 0.9, weld_eps: 1e-4 }
}

#[test]
fn balanced_parts_pass_quality_filters() {
    let mut ps = ground_with_cubes(2);
    ps.ground_confidence = 0.6;
    let verdict = quality_filter(&ps, &DecomposeConfig::default());
    assert!(verdict.accepted, "{:?}", verdict.reasons);
}

/// Gap between axis-aligned bounds; exact for cubes and flat quads.
fn aabb_gap(a: &TriMesh, b: &TriMesh) -> f64 {
    let (a, b) = (a.bounds(), b.bounds());
    (0..3).map(|k| (a.min[k] - b.max[k]).max(b.min[k] - a.max[k]).max(0.0)).map(|g| g * g).sum::<f64>().sqrt()
}

#[test]
fn ground_touching_five_objects_comes_first() {
    let ps = ground_with_cubes(5);
    let eps = default_contact_eps(&ps);
    let world: Vec<TriMesh> = ps.parts.iter().map(Part::world_mesh).collect();
    let mut degree = vec![0usize; world.len()];
    for i in 0..world.len() {
        for j in i + 1..world.len() {
            if aabb_gap(&world[i], &world[j]) <= eps {
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    assert_eq!(degree, vec![5, 1, 1, 1, 1, 1]);
    let order = connectivity_degree_order(&ps, eps);
    let got: Vec<(u32, usize)> = order.iter().map(|d| (d.id, d.degree)).collect();
    assert_eq!(got, vec![(0, 5), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1)]);
}

#[test]
fn single_pivot_leaves_objects_as_remainder() {
    let ps = ground_with_cubes(6);
    let (pivots, rest) = pivot_remainder_split(&ps, 1, default_contact_eps(&ps));
    assert_eq!(pivots.len(), 1);
    assert_eq!(pivots[0].label, PartLabel::Ground);
    let key = |m: &TriMesh| {
        let b = m.bounds();
        [b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z].map(f64::to_bits)
    };
    let expected: BTreeSet<_> = ps.parts[1..].iter().map(|p| key(&p.world_mesh())).collect();
    let got: BTreeSet<_> = rest.iter().map(|p| key(&p.world_mesh())).collect();
    assert_eq!(rest.len(), 6);
    assert_eq!(got, expected);
}

// ----------------------------------------------------------------- metrics

#[test]
fn half_precision_full_recall_scores_two_thirds() {
    let p = PointCloud::new(vec![P3::new(0.0, 0.0, 0.0), P3::new(0.1, 0.0, 0.0), P3::new(10.0, 0.0, 0.0), P3::new(20.0, 0.0, 0.0)]);
    let q = PointCloud::new(vec![P3::new(0.05, 0.0, 0.0)]);
    assert!((fscore(&p, &q, 0.1).unwrap() - 2.0 / 3.0).abs() <= 1e-15);
}

fn icp_cloud() -> PointCloud {
    let mut rng = rng::stream(12, "icp-oracle");
    PointCloud::new(
        (0..800)
            .map(|_| P3::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5), rng.random_range(-0.25..0.25)))
            .collect(),
    )
}

#[test]
fn icp_recovers_a_pure_translation() {
    let p = icp_cloud();
    let q = p.map(|x| x + V3::new(0.1, 0.0, 0.0));
    let r = icp_align(&p, &q, 100, 1e-12).unwrap();
    assert!((r.transform.translation - V3::new(0.1, 0.0, 0.0)).norm() <= 1e-6, "{}", r.transform.translation);
    assert!(r.transform.angle() <= 1e-6);
}

#[test]
fn icp_recovers_a_twenty_degree_turn() {
    let p = icp_cloud();
    let turn = Rigid::from_axis_angle(V3::z(), 20f64.to_radians(), V3::zeros());
    let q = p.map(|x| turn.apply(x));
    let r = icp_align(&p, &q, 100, 1e-12).unwrap();
    assert!(r.transform.then(&turn.inverse()).angle() <= 1e-4);
}

#[test]
fn dropped_part_has_the_largest_distance() {
    let (_, gt) = compose_grid_scene(&GridSceneSpec { with_replacement: true, ..GridSceneSpec::new(GridSize::Three, 6) }).unwrap();
    let dropped = 5;
    let pred = PartSet { parts: gt.parts.iter().filter(|p| p.id != dropped).cloned().collect(), ..gt.clone() };
    let cfg = PartEvalConfig { n_samples: 2000, ..PartEvalConfig::default() };
    let report = part_match_eval(&pred, &gt, &cfg).unwrap();
    let cds = report.column("chamfer").unwrap();
    let row = gt.parts.iter().position(|p| p.id == dropped).unwrap();
    assert!(cds.iter().enumerate().all(|(i, &cd)| i == row || cd < cds[row]), "{cds:?}");
    let matched = report.provenance["matches"][row]["pred"].as_u64().unwrap();
    assert_ne!(matched, u64::from(dropped));
}

// -------------------------------------------------------------- synth data

#[test]
fn grid_of_unit_cubes_sits_on_cell_centers() {
    let gs = GridSceneSpec {
        spacing: 1.0,
        assets: vec![cube([0.0, 0.0, 0.0], 1.0)],
        with_replacement: true,
        ..GridSceneSpec::new(GridSize::Two, 1)
    };
    let (_, ps) = compose_grid_scene(&gs).unwrap();
    assert_eq!(ps.len(), 5);
    assert_eq!(ps.parts[0].label, PartLabel::Ground);
    // Pitch 2 around the origin puts the centers at (±1, ±1).
    let expected = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]];
    for (p, e) in ps.parts[1..].iter().zip(expected) {
        let t = p.pose.translation;
        assert!((t.x - e[0]).abs() <= 1e-12 && (t.y - e[1]).abs() <= 1e-12, "{t} vs {e:?}");
    }
}

fn tiled_plane(n: usize) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            v.push(P3::new(i as f64, j as f64, 0.0));
        }
    }
    let w = n as u32 + 1;
    let mut t = Vec::new();
    for j in 0..n as u32 {
        for i in 0..n as u32 {
            let a = j * w + i;
            t.push([a, a + 1, a + w + 1]);
            t.push([a, a + w + 1, a + w]);
        }
    }
    TriMesh::new(v, t)
}

#[test]
fn masking_removes_at_most_the_allowed_share() {
    let mesh = tiled_plane(40);
    let params = DegradeParams {
        mask_prob: 1.0,
        mask_spheres: 1,
        mask_radius: 0.4,
        max_removal: 0.6,
        ..DegradeParams::none()
    };
    for seed in 0..10 {
        let out = degrade_mesh(&mesh, seed, &params);
        let before = mesh.triangles.len() as f64;
        let after = out.triangles.len() as f64;
        assert!(after < before, "seed {seed} removed nothing");
        assert!(before - after <= 0.6 * before, "seed {seed} removed {}", before - after);
    }
}

#[test]
fn floaters_add_exactly_their_count_in_components() {
    let (scene, _) = compose_grid_scene(&GridSceneSpec::new(GridSize::Two, 3)).unwrap();
    let params = DegradeParams { floater_prob: 1.0, floater_count: 3, ..DegradeParams::none() };
    for seed in 0..5 {
        let out = degrade_mesh(&scene, seed, &params);
        assert_eq!(index_components(&out), index_components(&scene) + 3);
    }
}

// ------------------------------------------------------------ frozen values

#[test]
fn default_scene_is_frozen() {
    let scene = generate_scene(&SceneSpec::default()).unwrap();
    let nm = scene.bake_navmesh().unwrap();
    let summary = (scene.blockout.boxes.len(), scene.removed.clone(), nm.polygons.len());
    assert_eq!(summary, (40, vec![], 1121));
}
