//! Heightfield terrain: synthesis, bilinear sampling and pad smoothing under
//! placed assets.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::rng;
use crate::scene_spec::{SceneSpec, TerrainKind};

/// Square grid of elevations. Node `(i, j)` sits at
/// `origin + (i, j) * cell_size`; heights are stored row-major with `i`
/// varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightField {
    pub resolution: usize,
    pub cell_size: f64,
    pub origin: [f64; 2],
    pub heights: Vec<f64>,
}

impl HeightField {
    pub fn flat(resolution: usize, cell_size: f64, origin: [f64; 2], z: f64) -> Self {
        HeightField { resolution, cell_size, origin, heights: vec![z; resolution * resolution] }
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.heights[self.idx(i, j)]
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.cell_size, self.origin[1] + j as f64 * self.cell_size]
    }

    /// Side length in meters.
    pub fn extent(&self) -> f64 {
        (self.resolution - 1) as f64 * self.cell_size
    }

    pub fn bounds(&self) -> Rect {
        let e = self.extent();
        Rect::new(self.origin, [self.origin[0] + e, self.origin[1] + e])
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.heights
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| (lo.min(h), hi.max(h)))
    }

    /// Bilinear interpolation of the four nodes around `(x, y)`.
    pub fn sample_height(&self, x: f64, y: f64) -> Result<f64> {
        let fx = (x - self.origin[0]) / self.cell_size;
        let fy = (y - self.origin[1]) / self.cell_size;
        let last = (self.resolution - 1) as f64;
        // Tolerate round-off at the far edge.
        let slack = 1e-9;
        if !(fx >= -slack && fy >= -slack && fx <= last + slack && fy <= last + slack) {
            return Err(Error::OutOfBounds { x, y });
        }
        let fx = fx.clamp(0.0, last);
        let fy = fy.clamp(0.0, last);
        let i = (fx.floor() as usize).min(self.resolution - 2);
        let j = (fy.floor() as usize).min(self.resolution - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let h00 = self.at(i, j);
        let h10 = self.at(i + 1, j);
        let h01 = self.at(i, j + 1);
        let h11 = self.at(i + 1, j + 1);
        let bottom = h00 + (h10 - h00) * tx;
        let top = h01 + (h11 - h01) * tx;
        Ok(bottom + (top - bottom) * ty)
    }

    /// Write a 16-bit grayscale PNG, mapping `range[0]..=range[1]` linearly
    /// onto `0..=65535`. A zero-width range maps everything to 0.
    pub fn write_png(&self, path: &Path, range: [f64; 2]) -> Result<()> {
        let span = range[1] - range[0];
        let n = self.resolution as u32;
        let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(n, n, |x, y| {
            // Image rows run top-down; world y runs up.
            let h = self.at(x as usize, self.resolution - 1 - y as usize);
            let t = if span > 0.0 { ((h - range[0]) / span).clamp(0.0, 1.0) } else { 0.0 };
            image::Luma([(t * 65535.0).round() as u16])
        });
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Encode { path: path.to_path_buf(), message: e.to_string() })
    }
}

/// Classic 2D gradient noise over a seeded permutation table.
#[derive(Debug, Clone)]
pub struct Perlin {
    perm: [u8; 512],
}

const GRADIENTS: [[f64; 2]; 8] = [
    [1.0, 1.0],
    [-1.0, 1.0],
    [1.0, -1.0],
    [-1.0, -1.0],
    [1.0, 0.0],
    [-1.0, 0.0],
    [0.0, 1.0],
    [0.0, -1.0],
];

impl Perlin {
    pub fn new(seed: u64) -> Self {
        let mut table: Vec<u8> = (0..=255).collect();
        table.shuffle(&mut rng::stream(seed, "perlin"));
        let mut perm = [0u8; 512];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = table[i & 255];
        }
        Perlin { perm }
    }

    fn grad(&self, ix: i64, iy: i64, dx: f64, dy: f64) -> f64 {
        let h = self.perm[self.perm[(ix & 255) as usize] as usize + (iy & 255) as usize] & 7;
        let g = GRADIENTS[h as usize];
        g[0] * dx + g[1] * dy
    }

    pub fn noise(&self, x: f64, y: f64) -> f64 {
        let fade = |t: f64| t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
        let (x0, y0) = (x.floor(), y.floor());
        let (dx, dy) = (x - x0, y - y0);
        let (ix, iy) = (x0 as i64, y0 as i64);
        let n00 = self.grad(ix, iy, dx, dy);
        let n10 = self.grad(ix + 1, iy, dx - 1.0, dy);
        let n01 = self.grad(ix, iy + 1, dx, dy - 1.0);
        let n11 = self.grad(ix + 1, iy + 1, dx - 1.0, dy - 1.0);
        let (u, v) = (fade(dx), fade(dy));
        let a = n00 + (n10 - n00) * u;
        let b = n01 + (n11 - n01) * u;
        a + (b - a) * v
    }

    /// Fractal sum: `octaves` layers, frequency doubling, amplitude scaled by
    /// `persistence` per layer, normalized by the total amplitude.
    pub fn fbm(&self, x: f64, y: f64, octaves: u32, persistence: f64) -> f64 {
        let (mut sum, mut norm, mut amp, mut freq) = (0.0, 0.0, 1.0, 1.0);
        for _ in 0..octaves {
            sum += amp * self.noise(x * freq, y * freq);
            norm += amp;
            amp *= persistence;
            freq *= LACUNARITY;
        }
        sum / norm
    }
}

pub const OCTAVES: u32 = 4;
pub const LACUNARITY: f64 = 2.0;
/// Base noise cycles across the world extent.
const BASE_CYCLES: f64 = 1.5;
/// Number of terrace levels for plateau terrain.
const TERRACES: f64 = 3.0;
/// Fraction of each terrace band spent on the ramp to the next level.
const TERRACE_RAMP: f64 = 0.5;

/// Fractal noise sampled on the heightfield nodes, stretched to `[0, 1]`.
fn unit_noise_grid(n: usize, seed: u64, persistence: f64) -> Vec<f64> {
    let perlin = Perlin::new(seed);
    // Offset away from integer lattice points where classic noise is zero.
    let (ox, oy) = (0.31, 0.57);
    let scale = BASE_CYCLES / (n - 1) as f64;
    let mut raw = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            raw.push(perlin.fbm(ox + i as f64 * scale, oy + j as f64 * scale, OCTAVES, persistence));
        }
    }
    let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let span = hi - lo;
    raw.iter().map(|&v| if span > 0.0 { (v - lo) / span } else { 0.5 }).collect()
}

/// Synthesize the base landscape for `spec`. Pure in `(spec, rng_seed)`.
pub fn generate_heightfield(spec: &SceneSpec, rng_seed: u64) -> HeightField {
    let t = &spec.terrain;
    let n = t.resolution;
    let cell = spec.extent / (n - 1) as f64;
    let [lo, hi] = t.elevation_range;
    let span = hi - lo;
    let unit: Vec<f64> = match t.kind {
        TerrainKind::Flat => vec![0.0; n * n],
        TerrainKind::Steep => (0..n * n).map(|k| (k % n) as f64 / (n - 1) as f64).collect(),
        TerrainKind::Perlin => unit_noise_grid(n, rng_seed, t.roughness),
        TerrainKind::Plateau => unit_noise_grid(n, rng_seed, t.roughness)
            .into_iter()
            .map(|u| {
                let q = u * TERRACES;
                let k = q.floor();
                let f = ((q - k - (1.0 - TERRACE_RAMP)) / TERRACE_RAMP).clamp(0.0, 1.0);
                let smooth = f * f * (3.0 - 2.0 * f);
                ((k + smooth) / TERRACES).min(1.0)
            })
            .collect(),
    };
    let heights = unit.into_iter().map(|u| (lo + u * span).clamp(lo, hi)).collect();
    HeightField { resolution: n, cell_size: cell, origin: [0.0, 0.0], heights }
}

/// Lower `hf` to the highest field whose height difference between
/// 4-neighbors is at most `max_gradient * cell_size`.
///
/// The result is the lower envelope `min_k h_k + g·d₁(x, x_k)` over all
/// nodes with the city-block distance `d₁`, computed exactly by one forward
/// and one backward raster pass. Any triangle of the grid then has a slope
/// gradient of at most `√2 · max_gradient`. Heights only go down, so they
/// stay inside the input's range.
pub fn limit_slope(hf: &HeightField, max_gradient: f64) -> HeightField {
    let n = hf.resolution;
    let step = max_gradient * hf.cell_size;
    let mut out = hf.clone();
    let h = &mut out.heights;
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if i > 0 {
                h[k] = h[k].min(h[k - 1] + step);
            }
            if j > 0 {
                h[k] = h[k].min(h[k - n] + step);
            }
        }
    }
    for j in (0..n).rev() {
        for i in (0..n).rev() {
            let k = j * n + i;
            if i + 1 < n {
                h[k] = h[k].min(h[k + 1] + step);
            }
            if j + 1 < n {
                h[k] = h[k].min(h[k + n] + step);
            }
        }
    }
    out
}

/// Number of nodes over which a pad blends back into the terrain.
pub const BLEND_MARGIN: usize = 2;

/// Flatten the terrain under each footprint.
///
/// Nodes inside a footprint dilated by one cell take the mean of the
/// pre-smoothing heights of the nodes inside the footprint itself. Pads whose
/// dilated node sets touch are merged and share one mean, so every footprint
/// sits on a single level. Nodes within [`BLEND_MARGIN`] nodes of a pad
/// (Chebyshev distance) are cosine-blended toward the nearest pad; all other
/// nodes are left untouched.
pub fn smooth_under_footprints(hf: &HeightField, footprints: &[Rect]) -> Result<HeightField> {
    let n = hf.resolution;
    let bounds = hf.bounds().inflate(1e-9);
    for r in footprints {
        for c in r.corners() {
            if !bounds.contains(c) {
                return Err(Error::OutOfBounds { x: c[0], y: c[1] });
            }
        }
    }
    if footprints.is_empty() {
        return Ok(hf.clone());
    }

    // Node index ranges (inclusive) inside each rectangle.
    let node_range = |r: &Rect| -> Option<[usize; 4]> {
        let lo_i = ((r.min[0] - hf.origin[0]) / hf.cell_size - 1e-9).ceil().max(0.0) as usize;
        let lo_j = ((r.min[1] - hf.origin[1]) / hf.cell_size - 1e-9).ceil().max(0.0) as usize;
        let hi_i = (((r.max[0] - hf.origin[0]) / hf.cell_size + 1e-9).floor() as usize).min(n - 1);
        let hi_j = (((r.max[1] - hf.origin[1]) / hf.cell_size + 1e-9).floor() as usize).min(n - 1);
        (lo_i <= hi_i && lo_j <= hi_j).then_some([lo_i, lo_j, hi_i, hi_j])
    };

    let inner: Vec<Option<[usize; 4]>> = footprints.iter().map(node_range).collect();
    let padded: Vec<[usize; 4]> = footprints
        .iter()
        .map(|r| node_range(&r.inflate(hf.cell_size)).expect("inflated footprint covers a node"))
        .collect();

    // Group footprints whose pads share nodes.
    let mut uf = crate::geom::UnionFind::new(footprints.len());
    for a in 0..padded.len() {
        for b in a + 1..padded.len() {
            let (p, q) = (padded[a], padded[b]);
            if p[0] <= q[2] && q[0] <= p[2] && p[1] <= q[3] && q[1] <= p[3] {
                uf.union(a, b);
            }
        }
    }
    let (group_of, groups) = uf.labels();

    let mut sums = vec![(0.0, 0usize); groups];
    for (f, range) in inner.iter().enumerate() {
        let [i0, j0, i1, j1] = range.unwrap_or(padded[f]);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let s = &mut sums[group_of[f]];
                s.0 += hf.at(i, j);
                s.1 += 1;
            }
        }
    }
    let level: Vec<f64> = sums.iter().map(|&(s, c)| s / c as f64).collect();

    // Distance (in nodes) to the nearest pad and the pad's group.
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; n * n];
    for (f, &[i0, j0, i1, j1]) in padded.iter().enumerate() {
        let g = group_of[f];
        let m = BLEND_MARGIN;
        for j in j0.saturating_sub(m)..=(j1 + m).min(n - 1) {
            for i in i0.saturating_sub(m)..=(i1 + m).min(n - 1) {
                let di = if i < i0 { i0 - i } else { i.saturating_sub(i1) };
                let dj = if j < j0 { j0 - j } else { j.saturating_sub(j1) };
                let d = di.max(dj);
                let slot = &mut owner[hf.idx(i, j)];
                let better = match *slot {
                    None => true,
                    Some((od, og)) => d < od || (d == od && g < og),
                };
                if better {
                    *slot = Some((d, g));
                }
            }
        }
    }

    let mut out = hf.clone();
    for (k, o) in owner.iter().enumerate() {
        if let Some((d, g)) = *o {
            let w = 0.5 * (1.0 + (std::f64::consts::PI * d as f64 / (BLEND_MARGIN + 1) as f64).cos());
            out.heights[k] = if d == 0 { level[g] } else { w * level[g] + (1.0 - w) * hf.heights[k] };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_spec::TerrainSpec;
    use rand::{Rng, SeedableRng};

    fn spec(kind: TerrainKind, range: [f64; 2], resolution: usize) -> SceneSpec {
        SceneSpec {
            terrain: TerrainSpec { kind, roughness: 0.5, elevation_range: range, resolution },
            ..SceneSpec::default()
        }
    }

    #[test]
    fn limit_slope_bounds_neighbor_steps() {
        let spec = SceneSpec { terrain: TerrainSpec { kind: TerrainKind::Plateau, ..Default::default() }, extent: 20.0, ..SceneSpec::default() };
        let hf = generate_heightfield(&spec, 3);
        let g = 0.5;
        let out = limit_slope(&hf, g);
        let n = hf.resolution;
        let step = g * hf.cell_size * (1.0 + 1e-12);
        for j in 0..n {
            for i in 0..n {
                assert!(out.at(i, j) <= hf.at(i, j));
                if i + 1 < n {
                    assert!((out.at(i + 1, j) - out.at(i, j)).abs() <= step);
                }
                if j + 1 < n {
                    assert!((out.at(i, j + 1) - out.at(i, j)).abs() <= step);
                }
            }
        }
        // Already gentle terrain is left alone, and the result is a fixed point.
        assert_eq!(limit_slope(&out, g), out);
        let flat = HeightField::flat(9, 1.0, [0.0, 0.0], 2.0);
        assert_eq!(limit_slope(&flat, g), flat);
    }

    #[test]
    fn limit_slope_matches_envelope_oracle() {
        let mut rng = rng::stream(8, "slope-oracle");
        let n = 7;
        let heights: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..5.0)).collect();
        let hf = HeightField { resolution: n, cell_size: 0.5, origin: [0.0, 0.0], heights };
        let g = 0.8;
        let out = limit_slope(&hf, g);
        for k in 0..n * n {
            let (i, j) = ((k % n) as f64, (k / n) as f64);
            let expect = (0..n * n)
                .map(|m| {
                    let d = (i - (m % n) as f64).abs() + (j - (m / n) as f64).abs();
                    hf.heights[m] + g * hf.cell_size * d
                })
                .fold(f64::INFINITY, f64::min);
            assert!((out.heights[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_is_exactly_constant() {
        let hf = generate_heightfield(&spec(TerrainKind::Flat, [0.0, 0.0], 33), 3);
        assert!(hf.heights.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn perlin_is_deterministic() {
        let s = spec(TerrainKind::Perlin, [0.0, 5.0], 64);
        let a = generate_heightfield(&s, 11);
        let b = generate_heightfield(&s, 11);
        assert_eq!(a, b);
        assert_ne!(a, generate_heightfield(&s, 12));
    }

    #[test]
    fn perlin_respects_range_and_varies() {
        let hf = generate_heightfield(&spec(TerrainKind::Perlin, [0.0, 5.0], 64), 5);
        let (lo, hi) = hf.min_max();
        assert!(lo >= 0.0 && hi <= 5.0);
        let mean = hf.heights.iter().sum::<f64>() / hf.heights.len() as f64;
        let var = hf.heights.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / hf.heights.len() as f64;
        assert!(var > 0.0);
        assert!(hf.heights.iter().all(|h| h.is_finite()));
    }

    #[test]
    fn steep_is_a_monotone_ramp_and_plateau_in_range() {
        let hf = generate_heightfield(&spec(TerrainKind::Steep, [1.0, 3.0], 17), 0);
        for j in 0..17 {
            for i in 1..17 {
                assert!(hf.at(i, j) > hf.at(i - 1, j));
            }
        }
        assert_eq!(hf.at(0, 4), 1.0);
        assert_eq!(hf.at(16, 4), 3.0);
        let p = generate_heightfield(&spec(TerrainKind::Plateau, [0.0, 6.0], 65), 2);
        let (lo, hi) = p.min_max();
        assert!(lo >= 0.0 && hi <= 6.0);
    }

    #[test]
    fn sampling_at_nodes_and_midpoints() {
        let mut hf = HeightField::flat(2, 1.0, [0.0, 0.0], 0.0);
        hf.heights = vec![0.0, 0.0, 4.0, 4.0];
        assert_eq!(hf.sample_height(0.0, 1.0).unwrap(), 4.0);
        assert_eq!(hf.sample_height(0.5, 0.5).unwrap(), 2.0);
        assert!(matches!(hf.sample_height(1.5, 0.0), Err(Error::OutOfBounds { .. })));
        assert!(matches!(hf.sample_height(0.2, -0.1), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn sampling_matches_direct_bilinear() {
        let hf = generate_heightfield(&spec(TerrainKind::Perlin, [0.0, 5.0], 20), 9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let e = hf.extent();
        for _ in 0..1000 {
            let (x, y) = (rng.random::<f64>() * e, rng.random::<f64>() * e);
            // Straightforward weighted sum over the enclosing cell.
            let (gx, gy) = (x / hf.cell_size, y / hf.cell_size);
            let (i, j) = ((gx as usize).min(18), (gy as usize).min(18));
            let (u, v) = (gx - i as f64, gy - j as f64);
            let expected = hf.at(i, j) * (1.0 - u) * (1.0 - v)
                + hf.at(i + 1, j) * u * (1.0 - v)
                + hf.at(i, j + 1) * (1.0 - u) * v
                + hf.at(i + 1, j + 1) * u * v;
            assert!((hf.sample_height(x, y).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_identity_cases() {
        let hf = generate_heightfield(&spec(TerrainKind::Perlin, [0.0, 5.0], 33), 1);
        assert_eq!(smooth_under_footprints(&hf, &[]).unwrap(), hf);
        let flat = HeightField::flat(33, 1.0, [0.0, 0.0], 2.0);
        let r = Rect::new([10.0, 10.0], [14.0, 13.0]);
        assert_eq!(smooth_under_footprints(&flat, &[r]).unwrap(), flat);
        assert!(matches!(
            smooth_under_footprints(&flat, &[Rect::new([30.0, 30.0], [34.0, 31.0])]),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn smoothing_pads_to_mean_and_blends_monotonically() {
        let mut hf = HeightField::flat(12, 1.0, [0.0, 0.0], 0.0);
        // Footprint covers nodes (5..=6, 5..=6) holding 1, 2, 3, 4.
        for (k, (i, j)) in [(5, 5), (6, 5), (5, 6), (6, 6)].into_iter().enumerate() {
            let idx = hf.idx(i, j);
            hf.heights[idx] = (k + 1) as f64;
        }
        let out = smooth_under_footprints(&hf, &[Rect::new([4.9, 4.9], [6.1, 6.1])]).unwrap();
        for (i, j) in [(5, 5), (6, 5), (5, 6), (6, 6), (4, 4), (7, 7)] {
            assert_eq!(out.at(i, j), 2.5);
        }
        // Moving away along +x from the pad edge: 2.5 -> blend -> untouched 0.
        let row: Vec<f64> = (7..=10).map(|i| out.at(i, 5)).collect();
        assert_eq!(row[0], 2.5);
        assert!(row[1] < row[0] && row[1] > 0.0);
        assert!(row[2] < row[1] && row[2] > 0.0);
        assert_eq!(row[3], 0.0);
        assert!((row[1] - 0.75 * 2.5).abs() < 1e-12);
        assert!((row[2] - 0.25 * 2.5).abs() < 1e-12);
    }

    #[test]
    fn smoothing_is_local() {
        let hf = generate_heightfield(&spec(TerrainKind::Perlin, [0.0, 5.0], 41), 4);
        let r = Rect::new([10.0, 12.0], [14.0, 15.0]);
        let out = smooth_under_footprints(&hf, &[r]).unwrap();
        let reach = r.inflate(hf.cell_size * (1 + BLEND_MARGIN) as f64 + 1e-9);
        for j in 0..41 {
            for i in 0..41 {
                if !reach.contains(hf.node(i, j)) {
                    assert_eq!(out.at(i, j).to_bits(), hf.at(i, j).to_bits());
                }
            }
        }
    }

    #[test]
    fn touching_pads_share_a_level() {
        let hf = generate_heightfield(&spec(TerrainKind::Perlin, [0.0, 5.0], 41), 4);
        let a = Rect::new([10.0, 10.0], [12.0, 12.0]);
        let b = Rect::new([12.6, 10.0], [15.0, 12.0]);
        let out = smooth_under_footprints(&hf, &[a, b]).unwrap();
        let ha = out.sample_height(11.0, 11.0).unwrap();
        let hb = out.sample_height(13.8, 11.0).unwrap();
        assert_eq!(ha, hb);
    }
}
