//! Wavefront OBJ and binary STL output, plus a small OBJ reader.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{SurfaceMesh, SurfaceSet};
use crate::error::{Error, MeshError};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// One `o` group of an OBJ file, with vertex indices local to the group.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjObject {
    pub name: String,
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

/// Renders `surfaces` as OBJ text: one object per surface, global 1-based
/// vertex indices, face winding preserved.
pub fn write_obj<T: Real>(surfaces: &SurfaceSet<T>) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for m in surfaces.meshes() {
        let _ = writeln!(out, "o surface_{}", m.surface_id);
        for p in &m.vertices {
            let [x, y, z] = p.to_f64();
            let _ = writeln!(out, "v {x:.17e} {y:.17e} {z:.17e}");
        }
        for f in &m.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + base, f[1] + base, f[2] + base);
        }
        base += m.vertices.len();
    }
    out
}

pub fn export_obj<T: Real>(surfaces: &SurfaceSet<T>, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    fs::write(path, write_obj(surfaces)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses OBJ text into per-object meshes. Faces with more than three
/// vertices are fanned; texture/normal indices are ignored.
pub fn parse_obj(text: &str) -> Result<Vec<ObjObject>, MeshError> {
    let mut all_vertices: Vec<[f64; 3]> = Vec::new();
    // (name, global face list)
    let mut groups: Vec<(String, Vec<[usize; 3]>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Invalid(format!("line {}: {e}", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(MeshError::Invalid(format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                all_vertices.push([c[0], c[1], c[2]]);
            }
            Some("o") | Some("g") => {
                let name = it.collect::<Vec<_>>().join(" ");
                groups.push((name, Vec::new()));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|e| MeshError::Invalid(format!("line {}: {e}", lineno + 1)))?;
                    let i = if i < 0 { all_vertices.len() as i64 + i } else { i - 1 };
                    if i < 0 {
                        return Err(MeshError::Invalid(format!("line {}: bad index", lineno + 1)));
                    }
                    idx.push(i as usize);
                }
                if idx.len() < 3 {
                    return Err(MeshError::Invalid(format!("line {}: face needs 3 vertices", lineno + 1)));
                }
                if groups.is_empty() {
                    groups.push(("default".into(), Vec::new()));
                }
                let g = &mut groups.last_mut().unwrap().1;
                for k in 1..idx.len() - 1 {
                    g.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let mut objects = Vec::new();
    for (name, faces) in groups {
        if faces.is_empty() {
            continue;
        }
        // keep the file's vertex order within each object
        let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        if let Some(&g) = used.last().filter(|&&g| g >= all_vertices.len()) {
            return Err(MeshError::Invalid(format!("face references missing vertex {}", g + 1)));
        }
        let map: std::collections::HashMap<usize, usize> = used.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let verts: Vec<[f64; 3]> = used.iter().map(|&g| all_vertices[g]).collect();
        let local: Vec<[usize; 3]> = faces.iter().map(|f| f.map(|g| map[&g])).collect();
        objects.push(ObjObject {
            name,
            vertices: verts,
            faces: local,
        });
    }
    Ok(objects)
}

/// Reads an OBJ file into meshes (surface ids assigned 1, 2, ...).
pub fn read_obj<T: Real>(path: impl AsRef<Path>) -> Result<Vec<SurfaceMesh<T>>, Error> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let objects = parse_obj(&text)?;
    let mut out = Vec::with_capacity(objects.len());
    for (i, o) in objects.into_iter().enumerate() {
        let verts = o.vertices.into_iter().map(Vec3::from_f64).collect();
        out.push(SurfaceMesh::new(verts, o.faces, i + 1)?);
    }
    Ok(out)
}

/// Binary STL of all surfaces (80-byte header, little-endian records).
pub fn export_stl<T: Real>(surfaces: &SurfaceSet<T>, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    let nf: usize = surfaces.meshes().iter().map(|m| m.faces.len()).sum();
    let mut buf = Vec::with_capacity(84 + 50 * nf);
    let mut header = [0u8; 80];
    let tag = b"surfseg binary stl";
    header[..tag.len()].copy_from_slice(tag);
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(nf as u32).to_le_bytes());
    for m in surfaces.meshes() {
        for f in 0..m.faces.len() {
            let n = m.face_cross(f).normalized().unwrap_or_else(Vec3::zero);
            for c in n.to_f64() {
                buf.extend_from_slice(&(c as f32).to_le_bytes());
            }
            for p in m.face_points(f) {
                for c in p.to_f64() {
                    buf.extend_from_slice(&(c as f32).to_le_bytes());
                }
            }
            buf.extend_from_slice(&0u16.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trimesh::tests::{octahedron, unit_cube};
    use crate::trimesh::RegionPair;

    #[test]
    fn single_triangle_obj() {
        let m = SurfaceMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            1,
        )
        .unwrap();
        let mut s = SurfaceSet::new();
        s.push(m, RegionPair::new(1, 2)).unwrap();
        let text = write_obj(&s);
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 1);
        assert!(text.contains("f 1 2 3"));
    }

    #[test]
    fn two_surfaces_two_objects() {
        let mut s = SurfaceSet::new();
        s.push(octahedron(), RegionPair::new(1, 2)).unwrap();
        s.push(unit_cube(), RegionPair::new(1, 2)).unwrap();
        let text = write_obj(&s);
        let objs = parse_obj(&text).unwrap();
        assert_eq!(objs.len(), 2);
        assert_eq!(objs[0].faces, octahedron().faces);
        assert_eq!(objs[1].faces, unit_cube().faces);
        for (o, m) in objs.iter().zip(s.meshes()) {
            for (a, b) in o.vertices.iter().zip(&m.vertices) {
                assert!((Vec3::from_f64(*a) - *b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parses_slash_indices_and_quads() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n";
        let objs = parse_obj(text).unwrap();
        assert_eq!(objs[0].faces, vec![[0, 1, 2], [0, 2, 3]]);
    }
}
