//! Oriented triangle meshes with face-to-face adjacency.
//!
//! Local edge `e` of face `[a, b, c]` runs from vertex `e` to vertex
//! `(e + 1) % 3`, i.e. the edges are `a→b`, `b→c`, `c→a`. `neighbors[f][e]`
//! holds the face sharing that edge, or [`FREE`] while the edge is open.

mod io;
mod seed;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::aabb::Aabb;
use crate::error::MeshError;
use crate::scalar::Real;
use crate::vec3::Vec3;

pub use io::{export_obj, export_stl, parse_obj, read_obj, write_obj, ObjObject};
pub use seed::{make_seed, Seed};

/// Neighbor slot of a free (unmatched) edge.
pub const FREE: usize = usize::MAX;

/// Relative area threshold below which a face counts as degenerate.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub faces: Vec<[usize; 3]>,
    pub neighbors: Vec<[usize; 3]>,
    pub surface_id: usize,
}

/// Connectivity and geometry summary of one mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler: i64,
    pub genus: Option<i64>,
    pub closed: bool,
    pub area: f64,
    pub volume: Option<f64>,
}

/// Edge key independent of direction.
#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<T: Real> SurfaceMesh<T> {
    /// Builds a mesh and its adjacency. Fails if a face repeats a vertex,
    /// references a missing vertex, or an edge is shared by more than two
    /// faces or by two faces with equal orientation.
    pub fn new(
        vertices: Vec<Vec3<T>>,
        faces: Vec<[usize; 3]>,
        surface_id: usize,
    ) -> Result<Self, MeshError> {
        let mut m = SurfaceMesh {
            vertices,
            neighbors: vec![[FREE; 3]; faces.len()],
            faces,
            surface_id,
        };
        m.rebuild_adjacency()?;
        Ok(m)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Recomputes `neighbors` from the face list.
    pub fn rebuild_adjacency(&mut self) -> Result<(), MeshError> {
        let nv = self.vertices.len();
        let mut half: HashMap<(usize, usize), (usize, usize)> =
            HashMap::with_capacity(self.faces.len() * 3);
        for (f, tri) in self.faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(MeshError::Invalid(format!("face {f} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Invalid(format!("face {f} repeats a vertex")));
            }
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                if half.insert((a, b), (f, e)).is_some() {
                    return Err(MeshError::Invalid(format!(
                        "directed edge {a}->{b} used twice (inconsistent orientation or non-manifold)"
                    )));
                }
            }
        }
        let mut nbr = vec![[FREE; 3]; self.faces.len()];
        for (f, tri) in self.faces.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                if let Some(&(g, _)) = half.get(&(b, a)) {
                    nbr[f][e] = g;
                }
            }
        }
        self.neighbors = nbr;
        Ok(())
    }

    #[inline]
    pub fn face_points(&self, f: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// `(q2 - q1) × (q3 - q1)`: twice the area times the unit normal.
    #[inline]
    pub fn face_cross(&self, f: usize) -> Vec3<T> {
        let [p, q, r] = self.face_points(f);
        (q - p).cross(r - p)
    }

    pub fn face_area(&self, f: usize) -> T {
        self.face_cross(f).norm() * T::lit(0.5)
    }

    pub fn bounds(&self) -> Option<Aabb<T>> {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// Area below which a face is treated as degenerate.
    pub fn degenerate_area_threshold(&self) -> T {
        let d = self.bounds().map(|b| b.diagonal()).unwrap_or_else(T::zero);
        T::lit(DEGENERATE_AREA_FACTOR) * d * d
    }

    /// Area and unit normal of face `f`, oriented by the stored vertex order.
    pub fn face_area_normal(&self, f: usize) -> Result<(T, Vec3<T>), MeshError> {
        self.face_area_normal_above(f, self.degenerate_area_threshold())
    }

    /// Fails on the first face whose area is at or below the degeneracy threshold.
    pub fn check_face_areas(&self) -> Result<(), MeshError> {
        let thr = self.degenerate_area_threshold();
        (0..self.faces.len()).try_for_each(|f| self.face_area_normal_above(f, thr).map(|_| ()))
    }

    fn face_area_normal_above(&self, f: usize, thr: T) -> Result<(T, Vec3<T>), MeshError> {
        let c = self.face_cross(f);
        let area = c.norm() * T::lit(0.5);
        if !(area > thr) {
            return Err(MeshError::DegenerateFace {
                surface: self.surface_id,
                face: f,
                area: area.to_f64_lossy(),
            });
        }
        Ok((area, c / (area + area)))
    }

    /// For every vertex, the list of incident faces.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut vf = vec![Vec::new(); self.vertices.len()];
        for (f, tri) in self.faces.iter().enumerate() {
            for &v in tri {
                vf[v].push(f);
            }
        }
        vf
    }

    /// Star areas `|Λ_v|` and area-weighted normals `ω_v` for all vertices.
    /// Vertices without faces get zero area and a zero normal.
    pub fn star_areas_and_normals(&self) -> (Vec<T>, Vec<Vec3<T>>) {
        let n = self.vertices.len();
        let mut area = vec![T::zero(); n];
        let mut acc = vec![Vec3::zero(); n];
        for (f, tri) in self.faces.iter().enumerate() {
            // |f| ν_f = cross / 2
            let c = self.face_cross(f) * T::lit(0.5);
            let a = c.norm();
            for &v in tri {
                area[v] += a;
                acc[v] += c;
            }
        }
        let normals = acc
            .into_iter()
            .zip(&area)
            .map(|(w, &a)| if a > T::zero() { w / a } else { Vec3::zero() })
            .collect();
        (area, normals)
    }

    /// `ω_v = Σ_f |f| ν_f / Σ_f |f|` over the faces incident to `v`.
    pub fn weighted_vertex_normal(&self, v: usize) -> Result<Vec3<T>, MeshError> {
        let mut area = T::zero();
        let mut acc = Vec3::zero();
        for (f, tri) in self.faces.iter().enumerate() {
            if tri.contains(&v) {
                let c = self.face_cross(f) * T::lit(0.5);
                area += c.norm();
                acc += c;
            }
        }
        if !(area > T::zero()) {
            return Err(MeshError::IsolatedVertex(v));
        }
        Ok(acc / area)
    }

    /// Unit version of [`weighted_vertex_normal`](Self::weighted_vertex_normal).
    pub fn unit_vertex_normal(&self, v: usize) -> Result<Vec3<T>, MeshError> {
        self.weighted_vertex_normal(v)?
            .normalized()
            .ok_or(MeshError::DegenerateNormal(v))
    }

    pub fn free_edge_count(&self) -> usize {
        self.neighbors
            .iter()
            .map(|n| n.iter().filter(|&&g| g == FREE).count())
            .sum()
    }

    pub fn is_closed(&self) -> bool {
        !self.faces.is_empty() && self.free_edge_count() == 0
    }

    pub fn total_area(&self) -> T {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed enclosed volume `(1/6) Σ det(q1, q2, q3)`; positive for
    /// outward orientation.
    pub fn signed_volume(&self) -> T {
        let c = self.bounds().map(|b| b.center()).unwrap_or_else(Vec3::zero);
        let mut s = T::zero();
        for f in 0..self.faces.len() {
            let [p, q, r] = self.face_points(f);
            s += (p - c).dot((q - c).cross(r - c));
        }
        s / T::lit(6.0)
    }

    /// Enclosed volume (absolute value) and surface area of a closed mesh.
    pub fn enclosed_volume_and_area(&self) -> Result<(T, T), MeshError> {
        let free = self.free_edge_count();
        if free > 0 || self.faces.is_empty() {
            return Err(MeshError::Open(free));
        }
        Ok((self.signed_volume().abs(), self.total_area()))
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut seen = std::collections::HashSet::with_capacity(self.faces.len() * 2);
        for tri in &self.faces {
            for e in 0..3 {
                seen.insert(edge_key(tri[e], tri[(e + 1) % 3]));
            }
        }
        seen.len()
    }

    pub fn referenced_vertex_count(&self) -> usize {
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.faces {
            for &v in tri {
                used[v] = true;
            }
        }
        used.iter().filter(|&&u| u).count()
    }

    /// `V - E + F` counting only referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        self.referenced_vertex_count() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Genus of a closed orientable mesh, `(2 - χ) / 2`.
    pub fn genus(&self) -> Option<i64> {
        let chi = self.euler_characteristic();
        if !self.is_closed() || chi > 2 || (2 - chi) % 2 != 0 {
            return None;
        }
        Some((2 - chi) / 2)
    }

    /// Verifies that the mesh is a closed, consistently oriented 2-manifold:
    /// symmetric adjacency, every edge shared by exactly two faces with
    /// opposite direction, and every vertex link a single cycle.
    pub fn check_closed_manifold(&self) -> Result<(), MeshError> {
        if self.faces.is_empty() {
            return Err(MeshError::Invalid("mesh has no faces".into()));
        }
        let mut probe = self.clone();
        probe.rebuild_adjacency()?;
        if probe.neighbors != self.neighbors {
            return Err(MeshError::Invalid("stored adjacency is stale".into()));
        }
        let free = self.free_edge_count();
        if free > 0 {
            return Err(MeshError::Open(free));
        }
        for (f, n) in self.neighbors.iter().enumerate() {
            for e in 0..3 {
                let g = n[e];
                if !self.neighbors[g].contains(&f) {
                    return Err(MeshError::Invalid(format!("adjacency {f}->{g} is not symmetric")));
                }
            }
        }
        // Each vertex: incident faces must form one fan around it.
        let vf = self.vertex_faces();
        for (v, faces) in vf.iter().enumerate() {
            if faces.is_empty() {
                continue;
            }
            let start = faces[0];
            let mut cur = start;
            let mut count = 0usize;
            loop {
                let tri = self.faces[cur];
                let lv = tri.iter().position(|&x| x == v).unwrap();
                // edge leaving v is local edge lv (v -> next); cross it.
                cur = self.neighbors[cur][lv];
                count += 1;
                if cur == start || count > faces.len() {
                    break;
                }
            }
            if cur != start || count != faces.len() {
                return Err(MeshError::Invalid(format!("vertex {v} is not a manifold vertex")));
            }
        }
        Ok(())
    }

    /// Removes vertices not referenced by any face and renumbers the rest.
    /// Returns the old→new index map.
    pub fn compact(&mut self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.vertices.len()];
        let mut next = 0;
        for tri in &self.faces {
            for &v in tri {
                if map[v].is_none() {
                    map[v] = Some(usize::MAX);
                }
            }
        }
        let mut verts = Vec::with_capacity(self.vertices.len());
        for (v, slot) in map.iter_mut().enumerate() {
            if slot.is_some() {
                *slot = Some(next);
                next += 1;
                verts.push(self.vertices[v]);
            }
        }
        for tri in &mut self.faces {
            for v in tri.iter_mut() {
                *v = map[*v].unwrap();
            }
        }
        self.vertices = verts;
        map
    }

    /// Minimum and maximum interior angle of face `f` in degrees.
    pub fn face_angles_deg(&self, f: usize) -> [T; 3] {
        let p = self.face_points(f);
        let mut out = [T::zero(); 3];
        for i in 0..3 {
            let a = p[(i + 1) % 3] - p[i];
            let b = p[(i + 2) % 3] - p[i];
            out[i] = a.angle_deg(b).unwrap_or_else(T::zero);
        }
        out
    }

    pub fn stats(&self) -> MeshStats {
        let closed = self.is_closed();
        let euler = self.euler_characteristic();
        MeshStats {
            vertices: self.referenced_vertex_count(),
            edges: self.edge_count(),
            faces: self.faces.len(),
            euler,
            genus: self.genus(),
            closed,
            area: self.total_area().to_f64_lossy(),
            volume: self.enclosed_volume_and_area().ok().map(|(v, _)| v.to_f64_lossy()),
        }
    }

    pub fn translate(&mut self, d: Vec3<T>) {
        for p in &mut self.vertices {
            *p += d;
        }
    }

    /// Centroid of the vertex positions.
    pub fn vertex_centroid(&self) -> Vec3<T> {
        let mut c = Vec3::zero();
        for &p in &self.vertices {
            c += p;
        }
        c / T::from_usize(self.vertices.len().max(1)).unwrap()
    }

    /// Centroid of the enclosed solid (closed meshes).
    pub fn volume_centroid(&self) -> Vec3<T> {
        let o = self.vertex_centroid();
        let mut acc = Vec3::zero();
        let mut vol = T::zero();
        for f in 0..self.faces.len() {
            let [p, q, r] = self.face_points(f);
            let v = (p - o).dot((q - o).cross(r - o));
            vol += v;
            acc += (p + q + r - o * T::lit(3.0)) * v;
        }
        if vol == T::zero() {
            return o;
        }
        o + acc / (vol * T::lit(4.0))
    }
}

/// Region labels on the two sides of an oriented surface: the unit normal
/// points from region `minus` into region `plus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionPair {
    pub plus: usize,
    pub minus: usize,
}

impl RegionPair {
    pub fn new(plus: usize, minus: usize) -> Self {
        RegionPair { plus, minus }
    }
}

/// Collection of surfaces with their region pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSet<T> {
    meshes: Vec<SurfaceMesh<T>>,
    regions: Vec<RegionPair>,
}

impl<T: Real> Default for SurfaceSet<T> {
    fn default() -> Self {
        SurfaceSet {
            meshes: Vec::new(),
            regions: Vec::new(),
        }
    }
}

impl<T: Real> SurfaceSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a surface, assigning the next free surface id.
    pub fn push(&mut self, mut mesh: SurfaceMesh<T>, regions: RegionPair) -> Result<usize, MeshError> {
        if regions.plus == regions.minus || regions.plus == 0 || regions.minus == 0 {
            return Err(MeshError::Invalid(format!(
                "region labels must be distinct and >= 1, got {regions:?}"
            )));
        }
        let id = self.next_id();
        mesh.surface_id = id;
        self.meshes.push(mesh);
        self.regions.push(regions);
        Ok(id)
    }

    fn next_id(&self) -> usize {
        self.meshes.iter().map(|m| m.surface_id + 1).max().unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.meshes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meshes.is_empty()
    }

    pub fn meshes(&self) -> &[SurfaceMesh<T>] {
        &self.meshes
    }

    pub fn meshes_mut(&mut self) -> &mut [SurfaceMesh<T>] {
        &mut self.meshes
    }

    pub fn mesh(&self, i: usize) -> &SurfaceMesh<T> {
        &self.meshes[i]
    }

    pub fn mesh_mut(&mut self, i: usize) -> &mut SurfaceMesh<T> {
        &mut self.meshes[i]
    }

    pub fn regions(&self) -> &[RegionPair] {
        &self.regions
    }

    pub fn region_pair(&self, i: usize) -> RegionPair {
        self.regions[i]
    }

    /// Position in the set of the surface with id `id`.
    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.meshes.iter().position(|m| m.surface_id == id)
    }

    /// Number of regions `N_R` (largest label used).
    pub fn num_regions(&self) -> usize {
        self.regions
            .iter()
            .map(|r| r.plus.max(r.minus))
            .max()
            .unwrap_or(0)
    }

    pub fn remove(&mut self, i: usize) -> (SurfaceMesh<T>, RegionPair) {
        (self.meshes.remove(i), self.regions.remove(i))
    }

    /// Replaces surface `i` in place, keeping its id.
    pub fn replace(&mut self, i: usize, mut mesh: SurfaceMesh<T>) {
        mesh.surface_id = self.meshes[i].surface_id;
        self.meshes[i] = mesh;
    }

    pub fn total_vertices(&self) -> usize {
        self.meshes.iter().map(|m| m.vertices.len()).sum()
    }

    pub fn total_area(&self) -> T {
        self.meshes.iter().map(|m| m.total_area()).sum()
    }

    pub fn bounds(&self) -> Option<Aabb<T>> {
        self.meshes
            .iter()
            .filter_map(|m| m.bounds())
            .reduce(|a, b| a.union(b))
    }

    /// Checks that surface ids are unique and labels are valid.
    pub fn validate(&self) -> Result<(), MeshError> {
        let mut ids: Vec<usize> = self.meshes.iter().map(|m| m.surface_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(MeshError::Invalid("duplicate surface ids".into()));
        }
        for r in &self.regions {
            if r.plus == r.minus || r.plus == 0 || r.minus == 0 {
                return Err(MeshError::Invalid(format!("bad region pair {r:?}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn octahedron() -> SurfaceMesh<f64> {
        let v = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let f = vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ];
        SurfaceMesh::new(v, f, 1).unwrap()
    }

    pub fn unit_cube() -> SurfaceMesh<f64> {
        let mut v = Vec::new();
        for k in 0..2 {
            for j in 0..2 {
                for i in 0..2 {
                    v.push(Vec3::new(i as f64, j as f64, k as f64));
                }
            }
        }
        // vertex index = i + 2j + 4k
        let quads = [
            [0, 2, 3, 1], // z = 0, normal -z
            [4, 5, 7, 6], // z = 1
            [0, 1, 5, 4], // y = 0
            [2, 6, 7, 3], // y = 1
            [0, 4, 6, 2], // x = 0
            [1, 3, 7, 5], // x = 1
        ];
        let mut f = Vec::new();
        for q in quads {
            f.push([q[0], q[1], q[2]]);
            f.push([q[0], q[2], q[3]]);
        }
        SurfaceMesh::new(v, f, 1).unwrap()
    }

    #[test]
    fn triangle_area_and_normal() {
        let m = SurfaceMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            1,
        )
        .unwrap();
        let (a, n) = m.face_area_normal(0).unwrap();
        assert!((a - 0.5f64).abs() < 1e-15);
        assert_eq!(n, Vec3::new(0.0, 0.0, 1.0));
        let r = SurfaceMesh::new(m.vertices.clone(), vec![[0, 2, 1]], 1).unwrap();
        assert_eq!(r.face_area_normal(0).unwrap().1, Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn collinear_face_is_degenerate() {
        let m = SurfaceMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
            3,
        )
        .unwrap();
        assert!(matches!(
            m.face_area_normal(0),
            Err(MeshError::DegenerateFace { surface: 3, face: 0, .. })
        ));
    }

    #[test]
    fn octahedron_apex_normal() {
        let m = octahedron();
        let w = m.weighted_vertex_normal(4).unwrap();
        // four faces with normals (±1, ±1, 1)/√3, equal areas
        let expect = 1.0 / 3f64.sqrt();
        assert!(w.x().abs() < 1e-15 && w.y().abs() < 1e-15);
        assert!((w.z() - expect).abs() < 1e-15);
        let u = m.unit_vertex_normal(4).unwrap();
        assert!((u.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn isolated_vertex_has_no_normal() {
        let mut m = octahedron();
        m.vertices.push(Vec3::new(5.0, 5.0, 5.0));
        assert_eq!(m.weighted_vertex_normal(6), Err(MeshError::IsolatedVertex(6)));
    }

    #[test]
    fn flat_fan_normal() {
        let mut v = vec![Vec3::new(0.0, 0.0, 0.0)];
        for i in 0..6 {
            let t = i as f64 * std::f64::consts::PI / 3.0;
            v.push(Vec3::new(t.cos(), t.sin(), 0.0));
        }
        let f: Vec<[usize; 3]> = (0..6).map(|i| [0, 1 + i, 1 + (i + 1) % 6]).collect();
        let m = SurfaceMesh::new(v, f, 1).unwrap();
        let w = m.weighted_vertex_normal(0).unwrap();
        assert!((w - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn cube_volume_area_euler() {
        let m = unit_cube();
        m.check_closed_manifold().unwrap();
        let (vol, area) = m.enclosed_volume_and_area().unwrap();
        assert!((vol - 1.0).abs() < 1e-14);
        assert!((area - 6.0).abs() < 1e-14);
        assert!(m.signed_volume() > 0.0);
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.genus(), Some(0));
        let mut t = m.clone();
        t.translate(Vec3::new(3.0, -7.0, 11.0));
        assert!((t.enclosed_volume_and_area().unwrap().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_has_no_volume() {
        let mut m = unit_cube();
        m.faces.pop();
        m.rebuild_adjacency().unwrap();
        assert!(matches!(m.enclosed_volume_and_area(), Err(MeshError::Open(3))));
        assert!(m.check_closed_manifold().is_err());
    }

    #[test]
    fn compact_drops_unused_vertices() {
        let mut m = octahedron();
        m.vertices.insert(0, Vec3::new(9.0, 9.0, 9.0));
        for t in &mut m.faces {
            for v in t.iter_mut() {
                *v += 1;
            }
        }
        m.compact();
        assert_eq!(m.vertices.len(), 6);
        assert_eq!(m.faces, octahedron().faces);
    }

    #[test]
    fn surface_set_ids_and_regions() {
        let mut s = SurfaceSet::new();
        let a = s.push(octahedron(), RegionPair::new(1, 2)).unwrap();
        let b = s.push(unit_cube(), RegionPair::new(1, 3)).unwrap();
        assert_ne!(a, b);
        assert_eq!(s.num_regions(), 3);
        s.validate().unwrap();
        assert!(s.push(octahedron(), RegionPair::new(2, 2)).is_err());
    }
}
