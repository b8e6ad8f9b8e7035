//! Small geometric kernels shared by several stages.

use nalgebra::{Point2, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub type P2 = Point2<f64>;
pub type P3 = Point3<f64>;
pub type V2 = Vector2<f64>;
pub type V3 = Vector3<f64>;

/// Axis-aligned box in 3D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: P3,
    pub max: P3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: P3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: P3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a P3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &P3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb { min: self.min.inf(&other.min), max: self.max.sup(&other.max) }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn extent(&self) -> V3 {
        self.max - self.min
    }

    pub fn center(&self) -> P3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn inflate(&self, d: f64) -> Aabb {
        Aabb { min: self.min - V3::repeat(d), max: self.max + V3::repeat(d) }
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }
}

/// Axis-aligned rectangle in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Rect { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min[0] <= other.max[0]
            && other.min[0] <= self.max[0]
            && self.min[1] <= other.max[1]
            && other.min[1] <= self.max[1]
    }

    pub fn inflate(&self, d: f64) -> Rect {
        Rect::new([self.min[0] - d, self.min[1] - d], [self.max[0] + d, self.max[1] + d])
    }

    /// Corners in counter-clockwise order starting at `min`.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }
}

/// Yawed rectangle: the ground footprint of a placed box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub center: [f64; 2],
    /// Half side lengths along the box's local x and y axes.
    pub half: [f64; 2],
    /// Rotation about +z in radians.
    pub yaw: f64,
}

impl Footprint {
    pub fn area(&self) -> f64 {
        4.0 * self.half[0] * self.half[1]
    }

    fn axes(&self) -> (V2, V2) {
        let (s, c) = self.yaw.sin_cos();
        (V2::new(c, s), V2::new(-s, c))
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (u, v) = self.axes();
        let c = V2::new(self.center[0], self.center[1]);
        let (hu, hv) = (u * self.half[0], v * self.half[1]);
        [c - hu - hv, c + hu - hv, c + hu + hv, c - hu + hv].map(|p| [p.x, p.y])
    }

    pub fn bounds(&self) -> Rect {
        let mut r = Rect::new([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in self.corners() {
            r.min = [r.min[0].min(p[0]), r.min[1].min(p[1])];
            r.max = [r.max[0].max(p[0]), r.max[1].max(p[1])];
        }
        r
    }

    /// Same rectangle grown by `d` on every side (square-cornered dilation).
    pub fn dilated(&self, d: f64) -> Footprint {
        Footprint { half: [self.half[0] + d, self.half[1] + d], ..*self }
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let (u, v) = self.axes();
        let d = V2::new(p[0] - self.center[0], p[1] - self.center[1]);
        let lu = (d.dot(&u).abs() - self.half[0]).max(0.0);
        let lv = (d.dot(&v).abs() - self.half[1]).max(0.0);
        lu.hypot(lv)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.distance(p) == 0.0
    }

    /// Separating-axis overlap test; touching rectangles count as overlapping.
    pub fn overlaps(&self, other: &Footprint) -> bool {
        let (a0, a1) = self.axes();
        let (b0, b1) = other.axes();
        let ca = self.corners();
        let cb = other.corners();
        for axis in [a0, a1, b0, b1] {
            let project = |cs: &[[f64; 2]; 4]| {
                cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let t = axis.x * p[0] + axis.y * p[1];
                    (lo.min(t), hi.max(t))
                })
            };
            let (alo, ahi) = project(&ca);
            let (blo, bhi) = project(&cb);
            if ahi < blo || bhi < alo {
                return false;
            }
        }
        true
    }
}

/// Signed area of a 2D polygon (positive when counter-clockwise).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

pub fn polygon_centroid(poly: &[[f64; 2]]) -> [f64; 2] {
    let n = poly.len();
    let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    if a.abs() < 1e-300 {
        let s = poly.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0], s[1] + p[1]]);
        return [s[0] / n as f64, s[1] / n as f64];
    }
    [cx / (3.0 * a), cy / (3.0 * a)]
}

/// Point-in-polygon for counter-clockwise convex polygons (boundary inclusive).
pub fn convex_contains(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12
    })
}

/// Clip a polygon against the half-plane `n·p <= c` (Sutherland–Hodgman).
pub fn clip_half_plane(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let side = |p: [f64; 2]| n[0] * p[0] + n[1] * p[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (da, db) = (side(a), side(b));
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Rotation followed by translation: `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rigid {
    pub rotation: nalgebra::Matrix3<f64>,
    pub translation: V3,
}

impl Default for Rigid {
    fn default() -> Self {
        Rigid::identity()
    }
}

impl Rigid {
    pub fn identity() -> Self {
        Rigid { rotation: nalgebra::Matrix3::identity(), translation: V3::zeros() }
    }

    pub fn from_translation(t: V3) -> Self {
        Rigid { translation: t, ..Rigid::identity() }
    }

    pub fn from_axis_angle(axis: V3, angle: f64, translation: V3) -> Self {
        let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Rigid { rotation: *r.matrix(), translation }
    }

    pub fn apply(&self, p: &P3) -> P3 {
        P3::from(self.rotation * p.coords + self.translation)
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &Rigid) -> Rigid {
        Rigid {
            rotation: other.rotation * self.rotation,
            translation: other.rotation * self.translation + other.translation,
        }
    }

    pub fn inverse(&self) -> Rigid {
        let rt = self.rotation.transpose();
        Rigid { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        let r = &self.rotation;
        let s = V3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]).norm() / 2.0;
        s.atan2((r.trace() - 1.0) / 2.0)
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    /// Dense labels `0..k` in order of first appearance.
    pub fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut map = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut k = 0;
        for (i, label) in labels.iter_mut().enumerate() {
            let r = self.find(i);
            if map[r] == usize::MAX {
                map[r] = k;
                k += 1;
            }
            *label = map[r];
        }
        (labels, k)
    }
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection §5.1.5).
pub fn closest_point_on_triangle(p: &P3, a: &P3, b: &P3, c: &P3) -> P3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Squared distance between segments `p1q1` and `p2q2`.
pub fn segment_segment_dist2(p1: &P3, q1: &P3, p2: &P3, q2: &P3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let eps = 1e-300;
    let (s, t);
    if a <= eps && e <= eps {
        return r.norm_squared();
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm_squared()
}

fn segment_hits_triangle(p: &P3, q: &P3, a: &P3, b: &P3, c: &P3) -> bool {
    // Möller–Trumbore restricted to the segment parameter range.
    let dir = q - p;
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-300 {
        return false;
    }
    let inv = 1.0 / det;
    let s = p - a;
    let u = s.dot(&h) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qv = s.cross(&e1);
    let v = dir.dot(&qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    let t = e2.dot(&qv) * inv;
    (0.0..=1.0).contains(&t)
}

/// Minimum distance between two triangles (0 when they intersect).
pub fn triangle_distance(t1: [&P3; 3], t2: [&P3; 3]) -> f64 {
    for i in 0..3 {
        let (p, q) = (t1[i], t1[(i + 1) % 3]);
        if segment_hits_triangle(p, q, t2[0], t2[1], t2[2]) {
            return 0.0;
        }
        let (p, q) = (t2[i], t2[(i + 1) % 3]);
        if segment_hits_triangle(p, q, t1[0], t1[1], t1[2]) {
            return 0.0;
        }
    }
    let mut best = f64::INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            best = best.min(segment_segment_dist2(
                t1[i],
                t1[(i + 1) % 3],
                t2[j],
                t2[(j + 1) % 3],
            ));
        }
        best = best.min((t1[i] - closest_point_on_triangle(t1[i], t2[0], t2[1], t2[2])).norm_squared());
        best = best.min((t2[i] - closest_point_on_triangle(t2[i], t1[0], t1[1], t1[2])).norm_squared());
    }
    best.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn footprint_overlap_and_distance() {
        let a = Footprint { center: [0.0, 0.0], half: [1.0, 1.0], yaw: 0.0 };
        let b = Footprint { center: [2.5, 0.0], half: [1.0, 1.0], yaw: 0.0 };
        assert!(!a.overlaps(&b));
        assert!(a.dilated(0.3).overlaps(&b.dilated(0.3)));
        assert!((a.distance([3.0, 0.0]) - 2.0).abs() < 1e-12);
        let r = Footprint { yaw: std::f64::consts::FRAC_PI_4, ..b };
        // Rotated square reaches sqrt(2) toward `a`.
        assert!(a.overlaps(&Footprint { center: [2.3, 0.0], ..r }));
        assert!(!a.overlaps(&Footprint { center: [2.5, 0.0], ..r }));
    }

    #[test]
    fn clipping_keeps_area_consistent() {
        let sq = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let left = clip_half_plane(&sq, [1.0, 0.0], 0.5);
        let right = clip_half_plane(&sq, [-1.0, 0.0], -0.5);
        assert!((polygon_area(&left) - 1.0).abs() < 1e-12);
        assert!((polygon_area(&left) + polygon_area(&right) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_distance_cases() {
        let a = [P3::new(0.0, 0.0, 0.0), P3::new(1.0, 0.0, 0.0), P3::new(0.0, 1.0, 0.0)];
        let up = a.map(|p| p + V3::new(0.0, 0.0, 0.5));
        assert!((triangle_distance([&a[0], &a[1], &a[2]], [&up[0], &up[1], &up[2]]) - 0.5).abs() < 1e-12);
        let pierce = [P3::new(0.2, 0.2, -1.0), P3::new(0.2, 0.2, 1.0), P3::new(0.3, 0.2, 1.0)];
        assert_eq!(triangle_distance([&a[0], &a[1], &a[2]], [&pierce[0], &pierce[1], &pierce[2]]), 0.0);
    }
}
