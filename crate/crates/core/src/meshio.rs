//! OBJ and glTF 2.0 reading and writing for [`TriMesh`].
//!
//! OBJ output is ASCII: all `v` lines first, then faces with 1-based indices,
//! with an `o <label>` line before each group's faces. Coordinates use the
//! shortest representation that round-trips exactly.
//!
//! glTF output is a single `.gltf` JSON file with one embedded base64 buffer.
//! Each group becomes a node whose translation is the group's vertex mean;
//! positions are stored relative to it as 32-bit floats, as the format
//! requires.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use base64::Engine as _;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geom::{P3, V3};
use crate::mesh::{Group, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Gltf,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "gltf" => Some(MeshFormat::Gltf),
            _ => None,
        }
    }
}

pub fn to_obj(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 40 + mesh.triangles.len() * 24);
    for p in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    let face = |s: &mut String, t: &[u32; 3]| {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    };
    if mesh.groups.is_empty() {
        mesh.triangles.iter().for_each(|t| face(&mut s, t));
    } else {
        for g in &mesh.groups {
            let _ = writeln!(s, "o {}", g.name);
            mesh.triangles[g.triangles.clone()].iter().for_each(|t| face(&mut s, t));
        }
    }
    s
}

fn import_err(format: &'static str, message: impl Into<String>) -> Error {
    Error::Import { format, message: message.into() }
}

/// Parse OBJ text. Polygonal faces are fan-triangulated; `o` and `g` lines
/// start labeled groups. Texture and normal indices are ignored.
pub fn from_obj(text: &str) -> Result<TriMesh> {
    let mut mesh = TriMesh::default();
    let mut current: Option<(String, usize)> = None;
    let close = |mesh: &mut TriMesh, current: &mut Option<(String, usize)>| {
        if let Some((name, start)) = current.take() {
            if mesh.triangles.len() > start {
                mesh.groups.push(Group { name, triangles: start..mesh.triangles.len() });
            }
        }
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| import_err("OBJ", format!("line {}: {e}", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(import_err("OBJ", format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                mesh.vertices.push(P3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let n = mesh.vertices.len() as i64;
                let idx: Vec<u32> = it
                    .map(|t| {
                        let i: i64 = t
                            .split('/')
                            .next()
                            .unwrap_or("")
                            .parse()
                            .map_err(|_| import_err("OBJ", format!("line {}: bad index `{t}`", lineno + 1)))?;
                        let i = if i < 0 { n + i } else { i - 1 };
                        if i < 0 || i >= n {
                            return Err(import_err("OBJ", format!("line {}: index out of range", lineno + 1)));
                        }
                        Ok(i as u32)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(import_err("OBJ", format!("line {}: face needs 3 vertices", lineno + 1)));
                }
                if current.is_none() && !mesh.groups.is_empty() {
                    current = Some((String::from("default"), mesh.triangles.len()));
                }
                for k in 1..idx.len() - 1 {
                    mesh.triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            Some("o") | Some("g") => {
                close(&mut mesh, &mut current);
                let name = it.collect::<Vec<_>>().join(" ");
                current = Some((if name.is_empty() { "default".into() } else { name }, mesh.triangles.len()));
            }
            _ => {}
        }
    }
    close(&mut mesh, &mut current);
    // Faces before the first group are unlabeled; label them so the groups
    // tile the triangle list.
    if let Some(first) = mesh.groups.first() {
        if first.triangles.start > 0 {
            let end = first.triangles.start;
            mesh.groups.insert(0, Group { name: "default".into(), triangles: 0..end });
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

fn groups_or_whole(mesh: &TriMesh) -> Vec<(String, TriMesh)> {
    mesh.split_groups()
}

/// Build the glTF JSON document for `mesh`.
pub fn to_gltf(mesh: &TriMesh) -> String {
    let parts = groups_or_whole(mesh);
    let mut buffer: Vec<u8> = Vec::new();
    let (mut views, mut accessors, mut meshes, mut nodes) = (vec![], vec![], vec![], vec![]);
    for (k, (name, part)) in parts.iter().enumerate() {
        let n = part.vertices.len().max(1) as f64;
        let origin = part.vertices.iter().fold(V3::zeros(), |s, p| s + p.coords) / n;
        let local: Vec<[f32; 3]> = part
            .vertices
            .iter()
            .map(|p| {
                let d = p.coords - origin;
                [d.x as f32, d.y as f32, d.z as f32]
            })
            .collect();
        let mut lo = [f32::INFINITY; 3];
        let mut hi = [f32::NEG_INFINITY; 3];
        let pos_offset = buffer.len();
        for v in &local {
            for i in 0..3 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
                buffer.extend_from_slice(&v[i].to_le_bytes());
            }
        }
        let idx_offset = buffer.len();
        for t in &part.triangles {
            for i in t {
                buffer.extend_from_slice(&i.to_le_bytes());
            }
        }
        views.push(json!({"buffer": 0, "byteOffset": pos_offset, "byteLength": idx_offset - pos_offset, "target": 34962}));
        views.push(json!({"buffer": 0, "byteOffset": idx_offset, "byteLength": buffer.len() - idx_offset, "target": 34963}));
        accessors.push(json!({
            "bufferView": 2 * k, "componentType": 5126, "count": local.len(), "type": "VEC3",
            "min": lo, "max": hi,
        }));
        accessors.push(json!({
            "bufferView": 2 * k + 1, "componentType": 5125, "count": part.triangles.len() * 3, "type": "SCALAR",
        }));
        meshes.push(json!({
            "name": name,
            "primitives": [{"attributes": {"POSITION": 2 * k}, "indices": 2 * k + 1, "mode": 4}],
        }));
        nodes.push(json!({"name": name, "mesh": k, "translation": [origin.x, origin.y, origin.z]}));
    }
    let uri = format!(
        "data:application/octet-stream;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(&buffer)
    );
    let doc = json!({
        "asset": {"version": "2.0", "generator": "blockworld"},
        "scene": 0,
        "scenes": [{"nodes": (0..parts.len()).collect::<Vec<_>>()}],
        "nodes": nodes,
        "meshes": meshes,
        "accessors": accessors,
        "bufferViews": views,
        "buffers": [{"byteLength": buffer.len(), "uri": uri}],
    });
    serde_json::to_string_pretty(&doc).expect("glTF document serializes")
}

/// Read glTF files in the subset written by [`to_gltf`]: embedded base64
/// buffers, float positions, integer indices, translation-only nodes.
pub fn from_gltf(text: &str) -> Result<TriMesh> {
    let bad = |m: &str| import_err("glTF", m.to_string());
    let doc: Value = serde_json::from_str(text).map_err(|e| import_err("glTF", e.to_string()))?;
    let buffers: Vec<Vec<u8>> = doc["buffers"]
        .as_array()
        .ok_or_else(|| bad("missing buffers"))?
        .iter()
        .map(|b| {
            let uri = b["uri"].as_str().ok_or_else(|| bad("buffer without uri"))?;
            let data = uri.split_once(";base64,").ok_or_else(|| bad("only embedded base64 buffers are supported"))?.1;
            base64::engine::general_purpose::STANDARD.decode(data).map_err(|e| import_err("glTF", e.to_string()))
        })
        .collect::<Result<_>>()?;
    let accessor_bytes = |a: usize| -> Result<(&[u8], &Value)> {
        let acc = &doc["accessors"][a];
        let view = &doc["bufferViews"][acc["bufferView"].as_u64().ok_or_else(|| bad("accessor without view"))? as usize];
        let buf = &buffers[view["buffer"].as_u64().unwrap_or(0) as usize];
        let start = (view["byteOffset"].as_u64().unwrap_or(0) + acc["byteOffset"].as_u64().unwrap_or(0)) as usize;
        let end = view["byteOffset"].as_u64().unwrap_or(0) as usize + view["byteLength"].as_u64().unwrap_or(0) as usize;
        buf.get(start..end).map(|b| (b, acc)).ok_or_else(|| bad("buffer view out of range"))
    };
    let mut out = TriMesh::default();
    let scene = doc["scene"].as_u64().unwrap_or(0) as usize;
    let roots: Vec<usize> = doc["scenes"][scene]["nodes"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_u64().map(|v| v as usize)).collect())
        .unwrap_or_else(|| (0..doc["nodes"].as_array().map_or(0, |n| n.len())).collect());
    for ni in roots {
        let node = &doc["nodes"][ni];
        let Some(mi) = node["mesh"].as_u64() else { continue };
        let t = node["translation"].as_array().map_or([0.0; 3], |a| {
            [0, 1, 2].map(|i| a.get(i).and_then(Value::as_f64).unwrap_or(0.0))
        });
        let name = node["name"].as_str().map(str::to_string).unwrap_or_else(|| format!("node-{ni}"));
        let mut part = TriMesh::default();
        for prim in doc["meshes"][mi as usize]["primitives"].as_array().ok_or_else(|| bad("mesh without primitives"))? {
            let base = part.vertices.len() as u32;
            let (bytes, acc) = accessor_bytes(prim["attributes"]["POSITION"].as_u64().ok_or_else(|| bad("no POSITION"))? as usize)?;
            if acc["componentType"].as_u64() != Some(5126) {
                return Err(bad("positions must be FLOAT"));
            }
            let count = acc["count"].as_u64().unwrap_or(0) as usize;
            let f = |k: usize| f32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().expect("4 bytes")) as f64;
            if bytes.len() < 12 * count {
                return Err(bad("position buffer too short"));
            }
            for v in 0..count {
                part.vertices.push(P3::new(f(3 * v) + t[0], f(3 * v + 1) + t[1], f(3 * v + 2) + t[2]));
            }
            let idx: Vec<u32> = match prim["indices"].as_u64() {
                None => (0..count as u32).collect(),
                Some(ai) => {
                    let (bytes, acc) = accessor_bytes(ai as usize)?;
                    let n = acc["count"].as_u64().unwrap_or(0) as usize;
                    match acc["componentType"].as_u64() {
                        Some(5125) => (0..n).map(|k| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().expect("4 bytes"))).collect(),
                        Some(5123) => (0..n).map(|k| u16::from_le_bytes(bytes[2 * k..2 * k + 2].try_into().expect("2 bytes")) as u32).collect(),
                        Some(5121) => bytes[..n].iter().map(|&b| b as u32).collect(),
                        _ => return Err(bad("unsupported index type")),
                    }
                }
            };
            for t in idx.chunks_exact(3) {
                part.triangles.push([t[0] + base, t[1] + base, t[2] + base]);
            }
        }
        out.append(&part, Some(&name));
    }
    out.validate()?;
    Ok(out)
}

/// Write `bytes` to a temporary sibling and rename it over `path`, so readers
/// never observe a partial file.
pub fn write_file_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Write `mesh` to `path` in the given format.
pub fn export_mesh(mesh: &TriMesh, format: MeshFormat, path: &Path) -> Result<()> {
    let text = match format {
        MeshFormat::Obj => to_obj(mesh),
        MeshFormat::Gltf => to_gltf(mesh),
    };
    write_file_atomic(path, text.as_bytes())
}

/// Read a mesh, choosing the parser from the file extension.
pub fn import_mesh(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match MeshFormat::from_path(path) {
        Some(MeshFormat::Obj) => from_obj(&text),
        Some(MeshFormat::Gltf) => from_gltf(&text),
        None => Err(import_err("mesh", format!("{}: unknown extension (expected .obj or .gltf)", path.display()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_obj() {
        let m = TriMesh::new(vec![P3::new(0.0, 0.0, 0.0), P3::new(1.0, 0.0, 0.0), P3::new(0.0, 1.0, 0.0)], vec![[0, 1, 2]]);
        let text = to_obj(&m);
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 1);
        assert!(text.contains("f 1 2 3"));
    }

    #[test]
    fn obj_round_trip_keeps_groups_and_coordinates() {
        let mut m = TriMesh::default();
        m.append(&TriMesh::quad([0.1, 0.2], [1.3, 1.7], 0.123456789), Some("ground"));
        m.append(&TriMesh::cuboid(P3::new(0.3, 0.3, 0.0), P3::new(0.7, 0.9, 1.0 / 3.0)), Some("box-0"));
        let back = from_obj(&to_obj(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn obj_parser_handles_polygons_and_slashes() {
        let m = from_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert!(from_obj("v 0 0\n").is_err());
        assert!(from_obj("v 0 0 0\nf 1 2 3\n").is_err());
    }

    #[test]
    fn gltf_two_parts_two_nodes() {
        let mut m = TriMesh::default();
        m.append(&TriMesh::quad([0.0, 0.0], [1.0, 1.0], 0.0), Some("a"));
        m.append(&TriMesh::cuboid(P3::new(2.0, 2.0, 0.0), P3::new(3.0, 3.0, 1.0)), Some("b"));
        let doc: Value = serde_json::from_str(&to_gltf(&m)).unwrap();
        assert_eq!(doc["nodes"].as_array().unwrap().len(), 2);
        let back = from_gltf(&to_gltf(&m)).unwrap();
        assert_eq!(back.groups.len(), 2);
        assert_eq!(back.triangles.len(), m.triangles.len());
        for t in 0..m.triangles.len() {
            for (p, q) in back.corners(t).iter().zip(m.corners(t).iter()) {
                assert!((*p - *q).norm() < 1e-6);
            }
        }
    }
}
