//! Mesh quality control: largest-edge bisection of big or obtuse faces and
//! removal of tiny or needle-like faces.

use std::collections::{HashMap, HashSet};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::Real;
use crate::trimesh::{SurfaceMesh, FREE};
use crate::vec3::Vec3;

/// Refinement stops after this many sweeps.
pub const MAX_REFINE_PASSES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityParams {
    pub a_desired: f64,
    pub refine_factor: f64,
    pub max_angle: f64,
    pub min_angle: f64,
    pub min_area_fraction: f64,
}

impl Default for QualityParams {
    fn default() -> Self {
        QualityParams {
            a_desired: 1e-3,
            refine_factor: 2.0,
            max_angle: 160.0,
            min_angle: 2.0,
            min_area_fraction: 0.01,
        }
    }
}

impl QualityParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.a_desired > 0.0) {
            return Err(Error::Param("a_desired must be positive".into()));
        }
        if !(self.refine_factor > 1.0) {
            return Err(Error::Param("refine_factor must exceed 1".into()));
        }
        if !(0.0 < self.min_angle && self.min_angle < 60.0 && 60.0 < self.max_angle && self.max_angle < 180.0) {
            return Err(Error::Param("need 0 < min_angle < 60 < max_angle < 180".into()));
        }
        if !(self.min_area_fraction >= 0.0 && self.min_area_fraction < self.refine_factor) {
            return Err(Error::Param("min_area_fraction out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassReport {
    pub changed: usize,
    pub skipped: usize,
}

/// Local index of the longest edge of face `f` (lowest index on ties).
fn longest_edge<T: Real>(m: &SurfaceMesh<T>, f: usize) -> usize {
    let p = m.face_points(f);
    let mut best = (0usize, T::neg_infinity());
    for e in 0..3 {
        let l = (p[(e + 1) % 3] - p[e]).norm_squared();
        if l > best.1 {
            best = (e, l);
        }
    }
    best.0
}

fn max_angle<T: Real>(m: &SurfaceMesh<T>, f: usize) -> T {
    let a = m.face_angles_deg(f);
    a[0].max(a[1]).max(a[2])
}

/// Bisects faces with area above `refine_factor·a_desired` or an angle
/// above `max_angle` across their longest edge, together with the
/// neighbor on that edge. Repeats until nothing qualifies. Faces produced
/// by a bisection are only refined again for their area: bisecting a
/// flat cap-shaped triangle yields another cap.
pub fn refine_pass<T: Real>(m: &mut SurfaceMesh<T>, p: &QualityParams) -> Result<PassReport, Error> {
    let area_limit = T::lit(p.refine_factor * p.a_desired);
    let angle_limit = T::lit(p.max_angle);
    let mut report = PassReport::default();
    let mut original = vec![true; m.faces.len()];
    for pass in 0.. {
        if pass == MAX_REFINE_PASSES {
            warn!("refinement stopped after {MAX_REFINE_PASSES} passes");
            break;
        }
        let nf = m.faces.len();
        let mut touched = vec![false; nf];
        let mut count = 0;
        for f in 0..nf {
            if touched[f] || !(m.face_area(f) > area_limit || original[f] && max_angle(m, f) > angle_limit) {
                continue;
            }
            let e = longest_edge(m, f);
            let g = m.neighbors[f][e];
            if g == FREE || touched[g] {
                continue;
            }
            let [a, b, c] = rotate(m.faces[f], e);
            let ge = (0..3).find(|&k| m.faces[g][k] == b && m.faces[g][(k + 1) % 3] == a).unwrap();
            let d = m.faces[g][(ge + 2) % 3];
            let mid = m.vertices[a].midpoint(m.vertices[b]);
            m.vertices.push(mid);
            let x = m.vertices.len() - 1;
            m.faces[f] = [a, x, c];
            m.faces.push([x, b, c]);
            m.faces[g] = [b, x, d];
            m.faces.push([x, a, d]);
            touched[f] = true;
            touched[g] = true;
            original[f] = false;
            original[g] = false;
            count += 1;
        }
        if count == 0 {
            break;
        }
        original.resize(m.faces.len(), false);
        m.rebuild_adjacency()?;
        report.changed += count;
    }
    Ok(report)
}

fn rotate(t: [usize; 3], e: usize) -> [usize; 3] {
    [t[e], t[(e + 1) % 3], t[(e + 2) % 3]]
}

/// Faces with per-vertex incidence, edited in place by collapses.
struct Collapser<'a, T> {
    verts: &'a mut Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
    alive: Vec<bool>,
    vf: Vec<Vec<usize>>,
    thr: T,
    live_faces: usize,
}

impl<T: Real> Collapser<'_, T> {
    fn cross(&self, t: [usize; 3]) -> Vec3<T> {
        let v = &self.verts;
        (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]])
    }

    fn star(&self, group: &[usize]) -> Vec<usize> {
        let mut fs: Vec<usize> = group.iter().flat_map(|&g| self.vf[g].iter().copied()).filter(|&f| self.alive[f]).collect();
        fs.sort_unstable();
        fs.dedup();
        fs
    }

    fn faces_with(&self, u: usize, w: usize) -> usize {
        self.vf[u].iter().filter(|&&f| self.alive[f] && self.faces[f].contains(&w)).count()
    }

    /// Merges `group` into its first vertex placed at `target`. Refuses (and
    /// changes nothing) if a face would flip or degenerate, or the new star
    /// of the kept vertex would not be a disk.
    fn collapse(&mut self, group: &[usize], target: Vec3<T>) -> bool {
        let keep = group[0];
        let star = self.star(group);
        let mut survivors = Vec::new();
        for &f in &star {
            let t = self.faces[f];
            let nt = t.map(|v| if group.contains(&v) { keep } else { v });
            if nt[0] != nt[1] && nt[1] != nt[2] && nt[0] != nt[2] {
                survivors.push((f, t, nt));
            }
        }
        if self.live_faces - (star.len() - survivors.len()) < 4 {
            return false;
        }
        // link of `keep`: directed edges u→w of faces [keep, u, w]
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &(_, _, nt) in &survivors {
            let k = nt.iter().position(|&v| v == keep).unwrap();
            let (u, w) = (nt[(k + 1) % 3], nt[(k + 2) % 3]);
            if next.insert(u, w).is_some() {
                return false;
            }
        }
        let Some(&start) = next.keys().min() else {
            return false;
        };
        let (mut cur, mut len) = (start, 0);
        loop {
            let Some(&w) = next.get(&cur) else {
                return false;
            };
            len += 1;
            cur = w;
            if cur == start || len > next.len() {
                break;
            }
        }
        if cur != start || len != next.len() || len < 3 {
            return false;
        }
        // each link edge must keep exactly one face on the far side
        for (&u, &w) in &next {
            let outside = self.faces_with(u, w) - star.iter().filter(|&&f| self.faces[f].contains(&u) && self.faces[f].contains(&w)).count();
            if outside != 1 {
                return false;
            }
        }
        let old_pos = self.verts[keep];
        let before: Vec<Vec3<T>> = survivors.iter().map(|&(_, t, _)| self.cross(t)).collect();
        self.verts[keep] = target;
        for (&(_, _, nt), b) in survivors.iter().zip(&before) {
            let c = self.cross(nt);
            if !(b.dot(c) > T::zero()) || !(c.norm() * T::lit(0.5) > self.thr) {
                self.verts[keep] = old_pos;
                return false;
            }
        }
        for &f in &star {
            self.alive[f] = false;
        }
        self.live_faces -= star.len() - survivors.len();
        let mut kept_faces = Vec::with_capacity(survivors.len());
        for &(f, _, nt) in &survivors {
            self.faces[f] = nt;
            self.alive[f] = true;
            kept_faces.push(f);
        }
        for &g in &group[1..] {
            self.vf[g].clear();
        }
        self.vf[keep] = kept_faces;
        true
    }
}

/// Removes faces with area below `min_area_fraction·a_desired` (the face's
/// three vertices collapse to its centroid, removing it and its three
/// neighbors) and faces with an angle below `min_angle` (the shortest edge
/// collapses to its midpoint, removing the face and its neighbor).
/// Collapses that would break the manifold or flip a face are skipped.
pub fn delete_pass<T: Real>(m: &mut SurfaceMesh<T>, p: &QualityParams) -> Result<PassReport, Error> {
    let area_limit = T::lit(p.min_area_fraction * p.a_desired);
    let angle_limit = T::lit(p.min_angle);
    let mut report = PassReport::default();
    let thr = m.degenerate_area_threshold();
    let nf = m.faces.len();
    let mut c = Collapser {
        vf: m.vertex_faces(),
        faces: std::mem::take(&mut m.faces),
        alive: vec![true; nf],
        verts: &mut m.vertices,
        thr,
        live_faces: nf,
    };
    let mut skipped: HashSet<[usize; 3]> = HashSet::new();
    loop {
        let mut changed = 0;
        for f in 0..nf {
            if !c.alive[f] {
                continue;
            }
            let t = c.faces[f];
            let [pa, pb, pc] = t.map(|v| c.verts[v]);
            let area = (pb - pa).cross(pc - pa).norm() * T::lit(0.5);
            let angles = triangle_angles_deg(pa, pb, pc);
            let min_ang = angles[0].min(angles[1]).min(angles[2]);
            let done = if area < area_limit {
                Some(c.collapse(&t, (pa + pb + pc) / T::lit(3.0)))
            } else if min_ang < angle_limit {
                // shortest edge is opposite the smallest angle
                let k = (0..3).min_by(|&i, &j| angles[i].partial_cmp(&angles[j]).unwrap()).unwrap();
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                let target = c.verts[a].midpoint(c.verts[b]);
                Some(c.collapse(&[a, b], target))
            } else {
                None
            };
            match done {
                Some(true) => changed += 1,
                Some(false) => {
                    if skipped.insert(t) {
                        debug!("skipped deletion of face {t:?} of surface {}", m.surface_id);
                        report.skipped += 1;
                    }
                }
                None => {}
            }
        }
        report.changed += changed;
        if changed == 0 {
            break;
        }
    }
    let faces: Vec<[usize; 3]> = c.faces.iter().zip(&c.alive).filter(|(_, &a)| a).map(|(t, _)| *t).collect();
    m.faces = faces;
    if report.changed > 0 {
        m.compact();
    }
    m.rebuild_adjacency()?;
    m.check_closed_manifold()?;
    Ok(report)
}

fn triangle_angles_deg<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> [T; 3] {
    let ang = |p: Vec3<T>, q: Vec3<T>, r: Vec3<T>| {
        let (u, v) = (q - p, r - p);
        let s = u.cross(v).norm();
        s.atan2(u.dot(v)).to_degrees()
    };
    [ang(a, b, c), ang(b, c, a), ang(c, a, b)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trimesh::{make_seed, Seed};

    fn sphere(h: f64) -> SurfaceMesh<f64> {
        make_seed(&Seed::Sphere { center: [0.0; 3], radius: 1.0 }, h).unwrap()
    }

    #[test]
    fn fixed_point_when_nothing_qualifies() {
        let mut m = sphere(0.3);
        let before = m.clone();
        let p = QualityParams { a_desired: 1.0, ..Default::default() };
        assert_eq!(refine_pass(&mut m, &p).unwrap().changed, 0);
        assert_eq!(delete_pass(&mut m, &p).unwrap().changed, 0);
        assert_eq!(m, before);
    }

    #[test]
    fn sliver_is_collapsed() {
        let mut m = sphere(0.3);
        let [a, b, _] = m.faces[0];
        let (pa, pb) = (m.vertices[a], m.vertices[b]);
        m.vertices[a] = pb + (pa - pb) * 0.01;
        let nv = m.vertices.len();
        let r = delete_pass(&mut m, &QualityParams::default()).unwrap();
        assert!(r.changed >= 1);
        assert!(m.vertices.len() < nv);
        assert_eq!(m.euler_characteristic(), 2);
        m.check_closed_manifold().unwrap();
        for f in 0..m.faces.len() {
            let ang = m.face_angles_deg(f);
            assert!(ang.iter().all(|&x| x >= QualityParams::default().min_angle));
        }
    }

    #[test]
    fn refinement_keeps_area_and_topology() {
        let mut m = sphere(0.5);
        let area = m.total_area();
        let max_area = (0..m.faces.len()).map(|f| m.face_area(f)).fold(0.0, f64::max);
        let p = QualityParams { a_desired: max_area / 4.0, ..Default::default() };
        let r = refine_pass(&mut m, &p).unwrap();
        assert!(r.changed > 0);
        assert!((m.total_area() - area).abs() < 1e-12 * area.max(1.0));
        assert_eq!(m.euler_characteristic(), 2);
        m.check_closed_manifold().unwrap();
        let new_max = (0..m.faces.len()).map(|f| m.face_area(f)).fold(0.0, f64::max);
        assert!(new_max <= max_area);
    }
}
