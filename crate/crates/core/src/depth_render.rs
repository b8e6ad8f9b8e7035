//! Orthographic depth rendering of a blockout at 45° elevation, the
//! depth-proportional perturbation applied to non-terrain pixels, and the
//! 16-bit PNG encoding with its JSON sidecar.

use std::path::{Path, PathBuf};

use base64::Engine as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockout::Blockout;
use crate::error::{Error, Result};
use crate::geom::{Aabb, P3, V3};
use crate::mesh::TriMesh;
use crate::meshio::write_file_atomic;
use crate::rng;

pub const ELEVATION_DEG: f64 = 45.0;
pub const FRAME_MARGIN: f64 = 0.05;
pub const DEFAULT_SIGMA_REL: f64 = 0.02;
/// Relative perturbations are clamped to `±MAX_REL_PERTURBATION`.
pub const MAX_REL_PERTURBATION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthoCamera {
    pub azimuth: f64,
    pub elevation: f64,
    /// Center of the image plane in world space.
    pub eye: P3,
    /// Unit view direction.
    pub forward: V3,
    pub right: V3,
    pub up: V3,
    /// World size of one pixel.
    pub pixel_size: f64,
    /// Distance from the image plane to the nearest scene point bound.
    pub near: f64,
}

impl OrthoCamera {
    /// Camera whose square frame encloses `bounds` with a 5% margin.
    pub fn framing(bounds: &Aabb, azimuth: f64, resolution: usize) -> OrthoCamera {
        let e = ELEVATION_DEG.to_radians();
        let forward = -V3::new(azimuth.cos() * e.cos(), azimuth.sin() * e.cos(), e.sin());
        let right = forward.cross(&V3::z()).normalize();
        let up = right.cross(&forward);
        let center = bounds.center();
        let corners = (0..8).map(|k| {
            P3::new(
                if k & 1 == 0 { bounds.min.x } else { bounds.max.x },
                if k & 2 == 0 { bounds.min.y } else { bounds.max.y },
                if k & 4 == 0 { bounds.min.z } else { bounds.max.z },
            )
        });
        let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for c in corners {
            let d = c - center;
            u0 = u0.min(d.dot(&right));
            u1 = u1.max(d.dot(&right));
            v0 = v0.min(d.dot(&up));
            v1 = v1.max(d.dot(&up));
        }
        let side = ((u1 - u0).max(v1 - v0) * (1.0 + FRAME_MARGIN)).max(f64::MIN_POSITIVE);
        let radius = bounds.extent().norm() / 2.0;
        let standoff = radius + 1.0;
        let plane_center = center + right * ((u0 + u1) / 2.0) + up * ((v0 + v1) / 2.0);
        OrthoCamera {
            azimuth,
            elevation: e,
            eye: plane_center - forward * standoff,
            forward,
            right,
            up,
            pixel_size: side / resolution as f64,
            near: standoff - radius,
        }
    }

    /// Pixel coordinates (x right, y down, pixel centers at half-integers)
    /// and depth of a world point.
    pub fn project(&self, p: &P3, resolution: usize) -> (f64, f64, f64) {
        let d = p - self.eye;
        let half = resolution as f64 / 2.0;
        (half + d.dot(&self.right) / self.pixel_size, half - d.dot(&self.up) / self.pixel_size, d.dot(&self.forward))
    }

    /// World-space origin of the ray through the center of pixel `(x, y)`.
    pub fn ray_origin(&self, x: usize, y: usize, resolution: usize) -> P3 {
        let half = resolution as f64 / 2.0;
        self.eye + self.right * ((x as f64 + 0.5 - half) * self.pixel_size) + self.up * ((half - y as f64 - 0.5) * self.pixel_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub sigma_rel: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// Row-major, `+inf` where no geometry is hit.
    pub depth: Vec<f64>,
    pub terrain_mask: Vec<bool>,
    pub camera: OrthoCamera,
    pub perturbation: Option<Perturbation>,
}

impl DepthMap {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let mut it = self.depth.iter().copied().filter(|d| d.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d))))
    }
}

struct Raster {
    depth: Vec<f64>,
    /// Winning triangle per pixel, `u32::MAX` for background.
    tri: Vec<u32>,
}

fn rasterize(mesh: &TriMesh, cam: &OrthoCamera, res: usize) -> Raster {
    // Screen-space triangles with a consistent orientation.
    let tris: Vec<(u32, [f64; 3], [f64; 3], [f64; 3], f64)> = (0..mesh.triangles.len())
        .filter_map(|t| {
            let [a, b, c] = mesh.corners(t).map(|p| cam.project(p, res));
            let (a, b, c) = ([a.0, a.1, a.2], [b.0, b.1, b.2], [c.0, c.1, c.2]);
            let area = edge(&a, &b, &c);
            if area > 0.0 {
                Some((t as u32, a, b, c, area))
            } else if area < 0.0 {
                Some((t as u32, a, c, b, -area))
            } else {
                None
            }
        })
        .collect();
    let rows: Vec<(Vec<f64>, Vec<u32>)> = (0..res)
        .into_par_iter()
        .map(|y| {
            let mut depth = vec![f64::INFINITY; res];
            let mut winner = vec![u32::MAX; res];
            let py = y as f64 + 0.5;
            for (t, a, b, c, area) in &tris {
                if py < a[1].min(b[1]).min(c[1]) || py > a[1].max(b[1]).max(c[1]) {
                    continue;
                }
                let x0 = (a[0].min(b[0]).min(c[0]) - 0.5).ceil().max(0.0) as usize;
                let x1 = (a[0].max(b[0]).max(c[0]) - 0.5).floor();
                if x1 < 0.0 {
                    continue;
                }
                for x in x0..=(x1 as usize).min(res - 1) {
                    let p = [x as f64 + 0.5, py, 0.0];
                    let (w0, w1, w2) = (edge(b, c, &p), edge(c, a, &p), edge(a, b, &p));
                    if !(covers(w0, b, c) && covers(w1, c, a) && covers(w2, a, b)) {
                        continue;
                    }
                    let z = (w0 * a[2] + w1 * b[2] + w2 * c[2]) / *area;
                    if z < depth[x] {
                        depth[x] = z;
                        winner[x] = *t;
                    }
                }
            }
            (depth, winner)
        })
        .collect();
    let mut out = Raster { depth: Vec::with_capacity(res * res), tri: Vec::with_capacity(res * res) };
    for (d, w) in rows {
        out.depth.extend(d);
        out.tri.extend(w);
    }
    out
}

fn edge(a: &[f64; 3], b: &[f64; 3], p: &[f64; 3]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Top-left rule: pixels exactly on an edge belong to one side only.
fn covers(w: f64, a: &[f64; 3], b: &[f64; 3]) -> bool {
    if w != 0.0 {
        return w > 0.0;
    }
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

/// Render `mesh`; triangles in `ground` count as terrain.
pub fn render_mesh_depth(mesh: &TriMesh, ground: std::ops::Range<usize>, bounds: &Aabb, azimuth: f64, resolution: usize) -> DepthMap {
    let camera = OrthoCamera::framing(bounds, azimuth, resolution);
    let r = rasterize(mesh, &camera, resolution);
    DepthMap {
        width: resolution,
        height: resolution,
        terrain_mask: r.tri.iter().map(|&t| t != u32::MAX && ground.contains(&(t as usize))).collect(),
        depth: r.depth,
        camera,
        perturbation: None,
    }
}

pub fn render_depth(b: &Blockout, azimuth: f64, resolution: usize) -> DepthMap {
    let mesh = b.to_mesh();
    let ground = mesh.groups.first().map_or(0..0, |g| g.triangles.clone());
    render_mesh_depth(&mesh, ground, &b.bounds(), azimuth, resolution)
}

/// The canonical azimuth (multiples of 45°) that leaves the fewest boxes
/// without a single visible pixel. Ties go to the smaller angle.
pub fn best_azimuth(b: &Blockout, resolution: usize) -> f64 {
    let mesh = b.to_mesh();
    let bounds = b.bounds();
    let mut owner = vec![usize::MAX; mesh.triangles.len()];
    for (k, g) in mesh.groups.iter().enumerate().skip(1) {
        owner[g.triangles.clone()].fill(k - 1);
    }
    (0..8)
        .map(|k| {
            let az = k as f64 * std::f64::consts::FRAC_PI_4;
            let cam = OrthoCamera::framing(&bounds, az, resolution);
            let r = rasterize(&mesh, &cam, resolution);
            let mut seen = vec![false; b.boxes.len()];
            for &t in &r.tri {
                if t != u32::MAX && owner[t as usize] != usize::MAX {
                    seen[owner[t as usize]] = true;
                }
            }
            (seen.iter().filter(|s| !**s).count(), k, az)
        })
        .min_by_key(|&(hidden, k, _)| (hidden, k))
        .map_or(0.0, |c| c.2)
}

/// Multiply every non-terrain finite depth by `1 + ε`, `ε ~ N(0, sigma_rel)`
/// clamped to `±MAX_REL_PERTURBATION`. Pixels are visited in row-major order.
pub fn perturb_depth(dm: &DepthMap, sigma_rel: f64, seed: u64) -> Result<DepthMap> {
    if !(sigma_rel >= 0.0 && sigma_rel.is_finite()) {
        return Err(Error::BadParams(format!("sigma_rel must be a finite value >= 0, got {sigma_rel}")));
    }
    let mut out = dm.clone();
    out.perturbation = Some(Perturbation { sigma_rel, seed });
    if sigma_rel == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma_rel).map_err(|e| Error::BadParams(e.to_string()))?;
    let mut rng = rng::stream(seed, "depth-perturbation");
    for (d, &terrain) in out.depth.iter_mut().zip(&dm.terrain_mask) {
        if terrain || !d.is_finite() {
            continue;
        }
        let eps: f64 = normal.sample(&mut rng);
        *d *= 1.0 + eps.clamp(-MAX_REL_PERTURBATION, MAX_REL_PERTURBATION);
    }
    Ok(out)
}

/// Linear depth encoding stored next to the PNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub width: usize,
    pub height: usize,
    /// Finite depths map to `1 + round((d - min) / (max - min) * 65534)`;
    /// background is 0.
    pub min_depth: Option<f64>,
    pub max_depth: Option<f64>,
    pub camera: OrthoCamera,
    pub sigma_rel: Option<f64>,
    pub seed: Option<u64>,
    /// Row-major terrain mask packed LSB-first and base64 encoded.
    pub terrain_mask: String,
}

impl DepthSidecar {
    fn step(&self) -> f64 {
        match (self.min_depth, self.max_depth) {
            (Some(lo), Some(hi)) => (hi - lo) / 65534.0,
            _ => 0.0,
        }
    }
}

pub fn encode_depth(dm: &DepthMap) -> (Vec<u16>, DepthSidecar) {
    let range = dm.finite_range();
    let pixels = dm
        .depth
        .iter()
        .map(|&d| match range {
            Some((lo, hi)) if d.is_finite() => {
                let t = if hi > lo { (d - lo) / (hi - lo) } else { 0.0 };
                1 + (t * 65534.0).round() as u16
            }
            _ => 0,
        })
        .collect();
    let mut bits = vec![0u8; dm.terrain_mask.len().div_ceil(8)];
    for (i, &m) in dm.terrain_mask.iter().enumerate() {
        if m {
            bits[i / 8] |= 1 << (i % 8);
        }
    }
    let sidecar = DepthSidecar {
        width: dm.width,
        height: dm.height,
        min_depth: range.map(|r| r.0),
        max_depth: range.map(|r| r.1),
        camera: dm.camera,
        sigma_rel: dm.perturbation.map(|p| p.sigma_rel),
        seed: dm.perturbation.map(|p| p.seed),
        terrain_mask: base64::engine::general_purpose::STANDARD.encode(bits),
    };
    (pixels, sidecar)
}

pub fn sidecar_path(png: &Path) -> PathBuf {
    png.with_extension("json")
}

/// Write the 16-bit PNG and its sidecar (same stem, `.json`).
pub fn write_depth_png(dm: &DepthMap, path: &Path) -> Result<()> {
    let (pixels, sidecar) = encode_depth(dm);
    let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(dm.width as u32, dm.height as u32, pixels)
        .expect("pixel buffer matches dimensions");
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::Encode { path: path.to_path_buf(), message: e.to_string() })?;
    write_file_atomic(path, &bytes)?;
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    write_file_atomic(&sidecar_path(path), json.as_bytes())
}

/// Decode a PNG written by [`write_depth_png`] using its sidecar. Depths come
/// back within half a quantization step.
pub fn read_depth_png(path: &Path) -> Result<DepthMap> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sc: DepthSidecar =
        serde_json::from_str(&text).map_err(|e| Error::Import { format: "depth sidecar", message: e.to_string() })?;
    let img = image::open(path)
        .map_err(|e| Error::Import { format: "PNG", message: e.to_string() })?
        .into_luma16();
    if (img.width() as usize, img.height() as usize) != (sc.width, sc.height) {
        return Err(Error::Import { format: "PNG", message: "size differs from sidecar".into() });
    }
    let step = sc.step();
    let lo = sc.min_depth.unwrap_or(0.0);
    let depth = img
        .as_raw()
        .iter()
        .map(|&v| if v == 0 { f64::INFINITY } else { lo + f64::from(v - 1) * step })
        .collect();
    let bits = base64::engine::general_purpose::STANDARD
        .decode(&sc.terrain_mask)
        .map_err(|e| Error::Import { format: "depth sidecar", message: e.to_string() })?;
    let terrain_mask = (0..sc.width * sc.height).map(|i| bits.get(i / 8).is_some_and(|b| b >> (i % 8) & 1 == 1)).collect();
    Ok(DepthMap {
        width: sc.width,
        height: sc.height,
        depth,
        terrain_mask,
        camera: sc.camera,
        perturbation: sc.sigma_rel.zip(sc.seed).map(|(sigma_rel, seed)| Perturbation { sigma_rel, seed }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockout::BoxPrimitive;
    use crate::geom::Footprint;
    use crate::placement::Tier;
    use crate::terrain::HeightField;

    fn ground_only() -> Blockout {
        Blockout { terrain: HeightField::flat(11, 1.0, [-5.0, -5.0], 0.0), boxes: vec![] }
    }

    fn one_box() -> Blockout {
        let mut b = ground_only();
        b.boxes.push(BoxPrimitive {
            id: 0,
            tier: Tier::Hero,
            footprint: Footprint { center: [0.0, 0.0], half: [0.5, 0.5], yaw: 0.0 },
            height: 1.0,
            base_z: 0.0,
        });
        b
    }

    /// Ray against the unit box and the ground plane, slab method.
    fn analytic_depth(o: P3, d: V3) -> f64 {
        let (lo, hi) = (P3::new(-0.5, -0.5, 0.0), P3::new(0.5, 0.5, 1.0));
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..3 {
            let (a, b) = ((lo[k] - o[k]) / d[k], (hi[k] - o[k]) / d[k]);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        let ground = -o.z / d.z;
        if t0 <= t1 { t0.min(ground) } else { ground }
    }

    #[test]
    fn flat_ground_is_all_terrain() {
        let dm = render_depth(&ground_only(), 0.3, 64);
        let finite = dm.depth.iter().filter(|d| d.is_finite()).count();
        assert!(finite > 0);
        for (d, m) in dm.depth.iter().zip(&dm.terrain_mask) {
            assert_eq!(d.is_finite(), *m);
            assert!(!d.is_finite() || *d >= dm.camera.near);
        }
    }

    #[test]
    fn box_pixels_match_analytic_rays() {
        let b = one_box();
        for (az, res) in [(0.0, 64), (0.7, 65), (std::f64::consts::FRAC_PI_4, 128)] {
            let dm = render_depth(&b, az, res);
            let (x, y) = (res / 2, res / 2);
            let o = dm.camera.ray_origin(x, y, res);
            let expect = analytic_depth(o, dm.camera.forward);
            assert!((dm.at(x, y) - expect).abs() <= dm.camera.pixel_size / 2.0, "az {az}: {} vs {expect}", dm.at(x, y));
            assert!(!dm.terrain_mask[y * res + x]);
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let b = one_box();
        assert_eq!(render_depth(&b, 1.0, 96), render_depth(&b, 1.0, 96));
    }

    #[test]
    fn shared_edges_are_drawn_once() {
        // Every pixel inside a ground quad split along its diagonal is
        // covered by exactly one of the two triangles.
        let quad = TriMesh::quad([0.0, 0.0], [1.0, 1.0], 0.0);
        let bounds = quad.bounds();
        for az in [0.0, 0.5, std::f64::consts::FRAC_PI_4] {
            let cam = OrthoCamera::framing(&bounds, az, 40);
            let mut hits = vec![0u32; 40 * 40];
            for t in 0..2 {
                let one = quad.extract([t]);
                let r = rasterize(&one, &cam, 40);
                for (h, &w) in hits.iter_mut().zip(&r.tri) {
                    *h += u32::from(w != u32::MAX);
                }
            }
            assert!(hits.iter().all(|&h| h <= 1));
        }
    }

    #[test]
    fn perturbation_leaves_terrain_alone() {
        let dm = render_depth(&one_box(), 0.2, 128);
        assert_eq!(perturb_depth(&dm, 0.0, 5).unwrap().depth, dm.depth);
        let ground = render_depth(&ground_only(), 0.2, 64);
        assert_eq!(perturb_depth(&ground, 0.05, 5).unwrap().depth, ground.depth);
        let p = perturb_depth(&dm, 0.02, 9).unwrap();
        for i in 0..dm.depth.len() {
            if dm.terrain_mask[i] || !dm.depth[i].is_finite() {
                assert_eq!(p.depth[i].to_bits(), dm.depth[i].to_bits());
            }
        }
        assert!(p.depth != dm.depth);
        assert!(perturb_depth(&dm, -1.0, 0).is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("depth.png");
        let dm = perturb_depth(&render_depth(&one_box(), 0.4, 80), 0.02, 1).unwrap();
        write_depth_png(&dm, &path).unwrap();
        let back = read_depth_png(&path).unwrap();
        let (lo, hi) = dm.finite_range().unwrap();
        let step = (hi - lo) / 65534.0;
        for (a, b) in dm.depth.iter().zip(&back.depth) {
            assert_eq!(a.is_finite(), b.is_finite());
            if a.is_finite() {
                assert!((a - b).abs() <= step / 2.0 + 1e-12);
            }
        }
        assert_eq!(back.terrain_mask, dm.terrain_mask);
        assert_eq!(back.perturbation, dm.perturbation);
    }

    #[test]
    fn constant_and_empty_maps_encode() {
        let mut dm = render_depth(&ground_only(), 0.0, 8);
        dm.depth.iter_mut().for_each(|d| *d = 3.0);
        let (px, _) = encode_depth(&dm);
        assert!(px.iter().all(|&v| v == 1));
        dm.depth.iter_mut().for_each(|d| *d = f64::INFINITY);
        let (px, sc) = encode_depth(&dm);
        assert!(px.iter().all(|&v| v == 0));
        assert_eq!(sc.min_depth, None);
    }

    #[test]
    fn best_azimuth_sees_hidden_box() {
        // A tall wall at x = 2 hides a small box behind it when seen from +x.
        let mut b = one_box();
        b.boxes[0].height = 0.3;
        b.boxes.push(BoxPrimitive {
            id: 1,
            tier: Tier::Hero,
            footprint: Footprint { center: [1.5, 0.0], half: [0.2, 4.5], yaw: 0.0 },
            height: 6.0,
            base_z: 0.0,
        });
        let az = best_azimuth(&b, 96);
        let dm = render_depth(&b, az, 96);
        let cam = dm.camera;
        // The small box is visible from the chosen view.
        let (x, y, _) = cam.project(&P3::new(0.0, 0.0, 0.3), 96);
        assert!(!dm.terrain_mask[y as usize * 96 + x as usize]);
        assert!(az != 0.0);
    }
}
