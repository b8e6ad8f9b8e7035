//! Indexed triangle meshes with optional named part groups.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geom::{Aabb, UnionFind, P3, V3};

/// A named, contiguous run of triangles inside a [`TriMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub name: String,
    pub triangles: Range<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<P3>,
    pub triangles: Vec<[u32; 3]>,
    /// Part labels. Empty for an unlabeled mesh; otherwise the ranges tile
    /// `0..triangles.len()` in order.
    pub groups: Vec<Group>,
}

impl TriMesh {
    pub fn new(vertices: Vec<P3>, triangles: Vec<[u32; 3]>) -> Self {
        TriMesh { vertices, triangles, groups: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidMesh(format!("triangle {t:?} indexes past {n} vertices")));
        }
        if self.vertices.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex".into()));
        }
        let mut next = 0;
        for g in &self.groups {
            if g.triangles.start != next {
                return Err(Error::InvalidMesh(format!("group `{}` is not contiguous", g.name)));
            }
            next = g.triangles.end;
        }
        if !self.groups.is_empty() && next != self.triangles.len() {
            return Err(Error::InvalidMesh("groups do not cover every triangle".into()));
        }
        Ok(())
    }

    pub fn corners(&self, t: usize) -> [&P3; 3] {
        let [a, b, c] = self.triangles[t];
        [&self.vertices[a as usize], &self.vertices[b as usize], &self.vertices[c as usize]]
    }

    /// Unnormalized normal (length = twice the area).
    pub fn cross(&self, t: usize) -> V3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.cross(t).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.used_vertices().map(|i| &self.vertices[i]))
    }

    fn used_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i as usize] = true;
            }
        }
        (0..self.vertices.len()).filter(move |&i| used[i])
    }

    /// Area-weighted surface centroid; falls back to the vertex mean for
    /// zero-area meshes.
    pub fn centroid(&self) -> P3 {
        let mut acc = V3::zeros();
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            let w = self.triangle_area(t);
            acc += (a.coords + b.coords + c.coords) * (w / 3.0);
            total += w;
        }
        if total > 0.0 {
            return P3::from(acc / total);
        }
        let n = self.vertices.len().max(1) as f64;
        P3::from(self.vertices.iter().fold(V3::zeros(), |s, p| s + p.coords) / n)
    }

    /// Append `other`, optionally recording it as a named group. Appending a
    /// labeled mesh without a name keeps its groups.
    pub fn append(&mut self, other: &TriMesh, name: Option<&str>) {
        let base = self.vertices.len() as u32;
        let t0 = self.triangles.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        match name {
            Some(name) => self.groups.push(Group {
                name: name.to_string(),
                triangles: t0..self.triangles.len(),
            }),
            None => self.groups.extend(other.groups.iter().map(|g| Group {
                name: g.name.clone(),
                triangles: g.triangles.start + t0..g.triangles.end + t0,
            })),
        }
    }

    pub fn map_points(&self, f: impl Fn(&P3) -> P3) -> TriMesh {
        TriMesh { vertices: self.vertices.iter().map(f).collect(), ..self.clone() }
    }

    pub fn translated(&self, d: V3) -> TriMesh {
        self.map_points(|p| p + d)
    }

    /// Sub-mesh made of the given triangles with unused vertices dropped.
    pub fn extract(&self, tris: impl IntoIterator<Item = usize>) -> TriMesh {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut out = TriMesh::default();
        for t in tris {
            let tri = self.triangles[t].map(|i| {
                let slot = &mut remap[i as usize];
                if *slot == u32::MAX {
                    *slot = out.vertices.len() as u32;
                    out.vertices.push(self.vertices[i as usize]);
                }
                *slot
            });
            out.triangles.push(tri);
        }
        out
    }

    /// One sub-mesh per group, or the whole mesh when unlabeled.
    pub fn split_groups(&self) -> Vec<(String, TriMesh)> {
        if self.groups.is_empty() {
            return vec![(String::from("mesh"), self.clone())];
        }
        self.groups
            .iter()
            .map(|g| (g.name.clone(), self.extract(g.triangles.clone())))
            .collect()
    }

    /// Merge vertices closer than `eps` and drop triangles that collapse.
    /// Vertices are snapped to a hash grid of pitch `eps` and compared against
    /// the neighboring cells, so the result does not depend on vertex order
    /// beyond the choice of representative (the lowest index).
    pub fn welded(&self, eps: f64) -> TriMesh {
        use std::collections::HashMap;
        let eps = eps.max(f64::MIN_POSITIVE);
        let key = |p: &P3| -> [i64; 3] { [p.x, p.y, p.z].map(|c| (c / eps).floor() as i64) };
        let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let mut remap = vec![0u32; self.vertices.len()];
        let mut out_vertices: Vec<P3> = Vec::new();
        for (i, p) in self.vertices.iter().enumerate() {
            let k = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            for &j in list {
                                if (out_vertices[j as usize] - p).norm() <= eps {
                                    found = Some(j);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            remap[i] = match found {
                Some(j) => j,
                None => {
                    let j = out_vertices.len() as u32;
                    out_vertices.push(*p);
                    grid.entry(k).or_default().push(j);
                    j
                }
            };
        }
        let mut triangles = Vec::with_capacity(self.triangles.len());
        let mut kept = Vec::with_capacity(self.triangles.len());
        for (ti, t) in self.triangles.iter().enumerate() {
            let m = t.map(|i| remap[i as usize]);
            if m[0] != m[1] && m[1] != m[2] && m[0] != m[2] {
                triangles.push(m);
                kept.push(ti);
            }
        }
        let groups = regroup(&self.groups, &kept);
        let mut out = TriMesh { vertices: out_vertices, triangles, groups };
        out.drop_unused_vertices();
        out
    }

    pub fn drop_unused_vertices(&mut self) {
        let used: Vec<usize> = self.used_vertices().collect();
        if used.len() == self.vertices.len() {
            return;
        }
        let mut remap = vec![u32::MAX; self.vertices.len()];
        for (new, &old) in used.iter().enumerate() {
            remap[old] = new as u32;
        }
        self.vertices = used.iter().map(|&i| self.vertices[i]).collect();
        for t in &mut self.triangles {
            *t = t.map(|i| remap[i as usize]);
        }
    }

    /// Topological connected components: triangles sharing a vertex index are
    /// connected. Returns per-triangle labels and the component count.
    pub fn triangle_components(&self) -> (Vec<usize>, usize) {
        let mut uf = UnionFind::new(self.vertices.len());
        for t in &self.triangles {
            uf.union(t[0] as usize, t[1] as usize);
            uf.union(t[1] as usize, t[2] as usize);
        }
        let (vlabels, _) = uf.labels();
        let mut map = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(self.triangles.len());
        for t in &self.triangles {
            let next = map.len();
            labels.push(*map.entry(vlabels[t[0] as usize]).or_insert(next));
        }
        let k = map.len();
        (labels, k)
    }

    pub fn component_count(&self) -> usize {
        self.triangle_components().1
    }

    /// Triangles as coordinate triples in a canonical order: each triangle is
    /// rotated to start at its lexicographically smallest corner, and the list
    /// is sorted. Identical surfaces give identical lists regardless of
    /// indexing.
    pub fn canonical_triangles(&self) -> Vec<[P3; 3]> {
        let lex = |a: &P3, b: &P3| {
            a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
        };
        let mut tris: Vec<[P3; 3]> = (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                let mut tri = [*a, *b, *c];
                let first = (0..3).min_by(|&i, &j| lex(&tri[i], &tri[j])).unwrap_or(0);
                tri.rotate_left(first);
                tri
            })
            .collect();
        tris.sort_by(|s, t| {
            lex(&s[0], &t[0]).then(lex(&s[1], &t[1])).then(lex(&s[2], &t[2]))
        });
        tris
    }

    /// Axis-aligned box with its 8 corners and 12 outward-facing triangles.
    pub fn cuboid(min: P3, max: P3) -> TriMesh {
        let v = |x: bool, y: bool, z: bool| {
            P3::new(
                if x { max.x } else { min.x },
                if y { max.y } else { min.y },
                if z { max.z } else { min.z },
            )
        };
        let vertices = vec![
            v(false, false, false),
            v(true, false, false),
            v(true, true, false),
            v(false, true, false),
            v(false, false, true),
            v(true, false, true),
            v(true, true, true),
            v(false, true, true),
        ];
        TriMesh::new(vertices, CUBOID_TRIANGLES.to_vec())
    }

    /// Rectangle in the plane `z`, facing +z, as two triangles.
    pub fn quad(min: [f64; 2], max: [f64; 2], z: f64) -> TriMesh {
        TriMesh::new(
            vec![
                P3::new(min[0], min[1], z),
                P3::new(max[0], min[1], z),
                P3::new(max[0], max[1], z),
                P3::new(min[0], max[1], z),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }
}

/// Triangle indices for the corner order used by [`TriMesh::cuboid`]:
/// bottom face 0-3 counter-clockwise seen from above, top face 4-7.
pub const CUBOID_TRIANGLES: [[u32; 3]; 12] = [
    [0, 2, 1],
    [0, 3, 2],
    [4, 5, 6],
    [4, 6, 7],
    [0, 1, 5],
    [0, 5, 4],
    [1, 2, 6],
    [1, 6, 5],
    [2, 3, 7],
    [2, 7, 6],
    [3, 0, 4],
    [3, 4, 7],
];

/// Re-derive group ranges after keeping only the triangles in `kept`
/// (strictly increasing indices into the old triangle list).
pub(crate) fn regroup(groups: &[Group], kept: &[usize]) -> Vec<Group> {
    let mut out = Vec::with_capacity(groups.len());
    let mut cursor = 0;
    for g in groups {
        let start = cursor;
        while cursor < kept.len() && kept[cursor] < g.triangles.end {
            cursor += 1;
        }
        if cursor > start {
            out.push(Group { name: g.name.clone(), triangles: start..cursor });
        }
    }
    out
}
