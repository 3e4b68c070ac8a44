//! Voxel-to-region labelling, region means and the nodal external force.
//!
//! A voxel belongs to the region containing its center. Membership is found
//! by casting rays along +x through each row of voxel centers and counting
//! signed crossings per surface. Ties (ray through an edge or vertex) are
//! resolved by a fixed symbolic perturbation so that every closed surface is
//! crossed a consistent number of times.

use log::warn;

use crate::error::RegionError;
use crate::scalar::Real;
use crate::trimesh::SurfaceSet;
use crate::vec3::Vec3;
use crate::voxel_image::VoxelGrid;

/// Default half-width of the re-test band, in voxels.
pub const DEFAULT_BAND_WIDTH: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionState<T> {
    /// Region id (1-based) per voxel, x-fastest.
    pub labels: Vec<u16>,
    /// `n_k`, indexed by region id (slot 0 unused).
    pub counts: Vec<usize>,
    /// `C_k`, indexed by region id.
    pub sums: Vec<T>,
    /// `c_k = C_k / n_k` (NaN for empty regions).
    pub means: Vec<T>,
}

/// Result of an incremental relabel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub flipped: usize,
    pub fell_back: bool,
}

impl<T: Real> RegionState<T> {
    pub fn num_regions(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    /// `c_k`, or `None` if region `k` is empty or unknown.
    pub fn mean(&self, k: usize) -> Option<T> {
        if k == 0 || k >= self.counts.len() || self.counts[k] == 0 {
            None
        } else {
            Some(self.means[k])
        }
    }

    fn recompute_means(&mut self) {
        for k in 0..self.counts.len() {
            self.means[k] = if self.counts[k] > 0 {
                self.sums[k] / T::from_usize(self.counts[k]).unwrap()
            } else {
                T::nan()
            };
        }
    }

    /// Moves one voxel with intensity `u` from region `from` to `to`.
    pub fn transfer(&mut self, from: usize, to: usize, u: T) {
        self.counts[to] += 1;
        self.counts[from] -= 1;
        self.sums[to] += u;
        self.sums[from] -= u;
    }
}

/// Signed crossing of a row ray with one triangle.
#[derive(Clone, Copy, Debug)]
struct Crossing<T> {
    x: T,
    surface: usize,
    /// +1 when the face normal has a positive x component.
    sign: i32,
}

/// Per-surface data needed to turn winding numbers into labels.
struct Labeller {
    depth: Vec<usize>,
    plus: Vec<usize>,
    minus: Vec<usize>,
    exterior: usize,
}

impl Labeller {
    /// `winding[i]` is the left-crossing count of surface `i`: +1 inside an
    /// outward oriented surface, -1 inside an inward oriented one.
    fn label(&self, winding: &[i32]) -> usize {
        let mut best: Option<usize> = None;
        for (i, &w) in winding.iter().enumerate() {
            if w != 0 && best.map_or(true, |b| self.depth[i] > self.depth[b]) {
                best = Some(i);
            }
        }
        match best {
            None => self.exterior,
            Some(i) if winding[i] > 0 => self.minus[i],
            Some(i) => self.plus[i],
        }
    }
}

#[inline]
fn lex_less<T: Real>(a: (T, T, usize), b: (T, T, usize)) -> bool {
    (a.0, a.1, a.2) < (b.0, b.1, b.2)
}

/// Tests whether the +x ray through `(y, z)` hits triangle `(a, b, c)`,
/// returning the signed crossing. Ties are broken by shifting the ray to
/// `(y + ε, z + ε²)`; edges are evaluated in a canonical direction so faces
/// sharing an edge agree.
#[inline]
fn ray_hit<T: Real>(pts: [Vec3<T>; 3], ids: [usize; 3], y: T, z: T) -> Option<(T, i32)> {
    let area2 = (pts[1][1] - pts[0][1]) * (pts[2][2] - pts[0][2])
        - (pts[1][2] - pts[0][2]) * (pts[2][1] - pts[0][1]);
    if area2 == T::zero() {
        return None;
    }
    let ccw = area2 > T::zero();
    for e in 0..3 {
        let (i, j) = (e, (e + 1) % 3);
        let ka = (pts[i][1], pts[i][2], ids[i]);
        let kb = (pts[j][1], pts[j][2], ids[j]);
        let matches = lex_less(ka, kb);
        let (p0, p1) = if matches { (pts[i], pts[j]) } else { (pts[j], pts[i]) };
        let (dy, dz) = (p1[1] - p0[1], p1[2] - p0[2]);
        let mut o = dy * (z - p0[2]) - dz * (y - p0[1]);
        if o == T::zero() {
            o = if dz != T::zero() { -dz } else { dy };
        }
        let s = if matches { o } else { -o };
        let inside = if ccw { s > T::zero() } else { s < T::zero() };
        if !inside {
            return None;
        }
    }
    let n = (pts[1] - pts[0]).cross(pts[2] - pts[0]);
    let x = pts[0][0] - (n[1] * (y - pts[0][1]) + n[2] * (z - pts[0][2])) / n[0];
    Some((x, if n[0] > T::zero() { 1 } else { -1 }))
}

/// Row-wise crossing lists for all voxel-center rows `(j, k)`.
fn row_crossings<T: Real>(
    g: &VoxelGrid<T>,
    s: &SurfaceSet<T>,
    row_filter: Option<&[bool]>,
) -> Vec<Vec<Crossing<T>>> {
    let [_, ny, nz] = g.dims();
    let o = g.origin();
    let h = g.spacing();
    let half = T::lit(0.5);
    let mut rows: Vec<Vec<Crossing<T>>> = vec![Vec::new(); ny * nz];
    let range = |lo: T, hi: T, axis: usize, n: usize| -> Option<(usize, usize)> {
        let a = ((lo - o[axis]) / h[axis] - half).ceil();
        let b = ((hi - o[axis]) / h[axis] - half).floor();
        let a = if a < T::zero() { T::zero() } else { a };
        let b = b.min(T::from_usize(n - 1).unwrap());
        if b < a {
            return None;
        }
        Some((a.to_usize()?, b.to_usize()?))
    };
    for (si, m) in s.meshes().iter().enumerate() {
        for tri in &m.faces {
            let pts = [m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]];
            let ylo = pts[0][1].min(pts[1][1]).min(pts[2][1]);
            let yhi = pts[0][1].max(pts[1][1]).max(pts[2][1]);
            let zlo = pts[0][2].min(pts[1][2]).min(pts[2][2]);
            let zhi = pts[0][2].max(pts[1][2]).max(pts[2][2]);
            let (Some((j0, j1)), Some((k0, k1))) = (range(ylo, yhi, 1, ny), range(zlo, zhi, 2, nz)) else {
                continue;
            };
            for k in k0..=k1 {
                let z = o[2] + (T::from_usize(k).unwrap() + half) * h[2];
                for j in j0..=j1 {
                    let r = j + ny * k;
                    if let Some(f) = row_filter {
                        if !f[r] {
                            continue;
                        }
                    }
                    let y = o[1] + (T::from_usize(j).unwrap() + half) * h[1];
                    if let Some((x, sign)) = ray_hit(pts, *tri, y, z) {
                        rows[r].push(Crossing { x, surface: si, sign });
                    }
                }
            }
        }
    }
    for r in &mut rows {
        r.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal));
    }
    rows
}

/// Winding of `p` with respect to surface `si` (+1/-1 inside, 0 outside),
/// by brute force over all faces.
fn point_winding<T: Real>(s: &SurfaceSet<T>, si: usize, p: Vec3<T>) -> i32 {
    let m = s.mesh(si);
    let mut w = 0;
    for tri in &m.faces {
        let pts = [m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]];
        if let Some((x, sign)) = ray_hit(pts, *tri, p[1], p[2]) {
            if x < p[0] {
                w -= sign;
            }
        }
    }
    w
}

fn build_labeller<T: Real>(s: &SurfaceSet<T>) -> Result<Labeller, RegionError> {
    let n = s.len();
    if n == 0 {
        return Err(RegionError::Inconsistent("no surfaces".into()));
    }
    let plus: Vec<usize> = s.regions().iter().map(|r| r.plus).collect();
    let minus: Vec<usize> = s.regions().iter().map(|r| r.minus).collect();
    let outward: Vec<bool> = s.meshes().iter().map(|m| m.signed_volume() > T::zero()).collect();
    // containment: contains[i][j] = surface j contains surface i
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let Some(&probe) = s.mesh(i).vertices.first() else {
            return Err(RegionError::Inconsistent(format!("surface {i} has no vertices")));
        };
        for j in 0..n {
            if i != j && point_winding(s, j, probe) != 0 {
                parents[i].push(j);
            }
        }
    }
    let depth: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let inside_label = |j: usize| if outward[j] { minus[j] } else { plus[j] };
    let outside_label = |j: usize| if outward[j] { plus[j] } else { minus[j] };
    let mut exterior = None;
    for i in 0..n {
        if depth[i] == 0 {
            let e = outside_label(i);
            match exterior {
                None => exterior = Some(e),
                Some(x) if x != e => {
                    return Err(RegionError::Inconsistent(format!(
                        "outermost surfaces disagree on the exterior region ({x} vs {e})"
                    )))
                }
                _ => {}
            }
        } else {
            let parent = *parents[i].iter().max_by_key(|&&j| depth[j]).unwrap();
            if inside_label(parent) != outside_label(i) {
                return Err(RegionError::Inconsistent(format!(
                    "surface {i} sits in region {} of surface {parent} but its outer label is {}",
                    inside_label(parent),
                    outside_label(i)
                )));
            }
        }
    }
    Ok(Labeller {
        depth,
        plus,
        minus,
        exterior: exterior.expect("at least one outermost surface"),
    })
}

/// Labels the voxels of row `r` selected by `pick` (all when `None`) and
/// hands `(voxel index, label)` to `emit`.
fn label_row<T: Real, F: FnMut(usize, usize)>(
    g: &VoxelGrid<T>,
    lab: &Labeller,
    row: &[Crossing<T>],
    r: usize,
    winding: &mut [i32],
    pick: Option<&dyn Fn(usize) -> bool>,
    mut emit: F,
) {
    let [nx, _, _] = g.dims();
    let ox = g.origin()[0];
    let hx = g.spacing()[0];
    let half = T::lit(0.5);
    winding.iter_mut().for_each(|w| *w = 0);
    let mut c = 0usize;
    let base = r * nx;
    for i in 0..nx {
        let x = ox + (T::from_usize(i).unwrap() + half) * hx;
        while c < row.len() && row[c].x < x {
            winding[row[c].surface] -= row[c].sign;
            c += 1;
        }
        if let Some(p) = pick {
            if !p(base + i) {
                continue;
            }
        }
        let mut label = lab.label(winding);
        // center exactly on a surface: take the lower of the two labels
        let mut t = c;
        if t < row.len() && row[t].x == x {
            let mut w2 = winding.to_vec();
            while t < row.len() && row[t].x == x {
                w2[row[t].surface] -= row[t].sign;
                t += 1;
            }
            label = label.min(lab.label(&w2));
        }
        emit(base + i, label);
    }
}

/// Labels every voxel and computes `n_k`, `C_k`, `c_k`.
pub fn init_regions<T: Real>(g: &VoxelGrid<T>, s: &SurfaceSet<T>) -> Result<RegionState<T>, RegionError> {
    let lab = build_labeller(s)?;
    let nr = s.num_regions().max(lab.exterior);
    let rows = row_crossings(g, s, None);
    let mut labels = vec![0u16; g.len()];
    let mut winding = vec![0i32; s.len()];
    for (r, row) in rows.iter().enumerate() {
        label_row(g, &lab, row, r, &mut winding, None, |v, l| labels[v] = l as u16);
    }
    let mut counts = vec![0usize; nr + 1];
    let mut sums = vec![T::zero(); nr + 1];
    for (v, &l) in labels.iter().enumerate() {
        counts[l as usize] += 1;
        sums[l as usize] += g.data()[v];
    }
    let mut st = RegionState {
        labels,
        counts,
        sums,
        means: vec![T::nan(); nr + 1],
    };
    st.recompute_means();
    Ok(st)
}

/// Re-tests only voxels within `band_width` voxels of a surface triangle and
/// applies the increment/decrement rule for every voxel that changed region.
/// Falls back to a full relabel if a change shows up on the outer layer of
/// the band.
pub fn update_regions_incremental<T: Real>(
    r: &mut RegionState<T>,
    g: &VoxelGrid<T>,
    s: &SurfaceSet<T>,
    band_width: usize,
) -> Result<UpdateOutcome, RegionError> {
    let lab = build_labeller(s)?;
    let nr = s.num_regions().max(lab.exterior);
    if r.labels.len() != g.len() || nr + 1 > r.counts.len() {
        *r = init_regions(g, s)?;
        return Ok(UpdateOutcome { flipped: 0, fell_back: true });
    }
    let [nx, ny, nz] = g.dims();
    // ring distance (Chebyshev, in voxels) from the nearest triangle box
    let mut ring = vec![u8::MAX; g.len()];
    let mut row_used = vec![false; ny * nz];
    let bw = band_width.min(u8::MAX as usize - 1);
    for m in s.meshes() {
        for tri in &m.faces {
            let a = g.world_to_voxel_clamped(m.vertices[tri[0]]);
            let b = g.world_to_voxel_clamped(m.vertices[tri[1]]);
            let c = g.world_to_voxel_clamped(m.vertices[tri[2]]);
            let lo: [usize; 3] = std::array::from_fn(|d| a[d].min(b[d]).min(c[d]));
            let hi: [usize; 3] = std::array::from_fn(|d| a[d].max(b[d]).max(c[d]));
            let dims = [nx, ny, nz];
            let elo: [usize; 3] = std::array::from_fn(|d| lo[d].saturating_sub(bw));
            let ehi: [usize; 3] = std::array::from_fn(|d| (hi[d] + bw).min(dims[d] - 1));
            for k in elo[2]..=ehi[2] {
                let dk = dist1(k, lo[2], hi[2]);
                for j in elo[1]..=ehi[1] {
                    let dj = dist1(j, lo[1], hi[1]).max(dk);
                    row_used[j + ny * k] = true;
                    let base = nx * (j + ny * k);
                    for i in elo[0]..=ehi[0] {
                        let d = dist1(i, lo[0], hi[0]).max(dj) as u8;
                        let slot = &mut ring[base + i];
                        if d < *slot {
                            *slot = d;
                        }
                    }
                }
            }
        }
    }
    let rows = row_crossings(g, s, Some(&row_used));
    let mut winding = vec![0i32; s.len()];
    let mut changes: Vec<(usize, usize)> = Vec::new();
    let mut boundary_flip = false;
    let in_band = |v: usize| ring[v] != u8::MAX;
    for (ri, row) in rows.iter().enumerate() {
        if !row_used[ri] {
            continue;
        }
        label_row(g, &lab, row, ri, &mut winding, Some(&in_band), |v, l| {
            if r.labels[v] as usize != l {
                changes.push((v, l));
                if ring[v] as usize >= bw {
                    boundary_flip = true;
                }
            }
        });
    }
    if boundary_flip {
        warn!("region update: voxel flipped on the band boundary; relabelling from scratch");
        *r = init_regions(g, s)?;
        return Ok(UpdateOutcome {
            flipped: changes.len(),
            fell_back: true,
        });
    }
    if r.counts.len() < nr + 1 {
        r.counts.resize(nr + 1, 0);
        r.sums.resize(nr + 1, T::zero());
        r.means.resize(nr + 1, T::nan());
    }
    for &(v, l) in &changes {
        let old = r.labels[v] as usize;
        r.transfer(old, l, g.data()[v]);
        r.labels[v] = l as u16;
    }
    r.recompute_means();
    Ok(UpdateOutcome {
        flipped: changes.len(),
        fell_back: false,
    })
}

#[inline]
fn dist1(i: usize, lo: usize, hi: usize) -> usize {
    if i < lo {
        lo - i
    } else if i > hi {
        i - hi
    } else {
        0
    }
}

/// `F = λ [(u0(q) - c_{k+})^2 - (u0(q) - c_{k-})^2]` at every vertex, with
/// `u0(q)` the intensity of the voxel containing `q` (nearest voxel if `q`
/// lies outside the image).
pub fn nodal_force<T: Real>(
    g: &VoxelGrid<T>,
    r: &RegionState<T>,
    s: &SurfaceSet<T>,
    lambda: T,
) -> Result<Vec<Vec<T>>, RegionError> {
    let mut out = Vec::with_capacity(s.len());
    for (m, pair) in s.meshes().iter().zip(s.regions()) {
        let cp = r.mean(pair.plus).ok_or(RegionError::EmptyRegion(pair.plus))?;
        let cm = r.mean(pair.minus).ok_or(RegionError::EmptyRegion(pair.minus))?;
        out.push(
            m.vertices
                .iter()
                .map(|&q| force_value(g.sample(q), cp, cm, lambda))
                .collect(),
        );
    }
    Ok(out)
}

#[inline]
pub fn force_value<T: Real>(u: T, c_plus: T, c_minus: T, lambda: T) -> T {
    let a = u - c_plus;
    let b = u - c_minus;
    lambda * (a * a - b * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aabb::Aabb;
    use crate::trimesh::{make_seed, RegionPair, Seed};

    fn sphere_set(center: [f64; 3], radius: f64, h: f64) -> SurfaceSet<f64> {
        let mut s = SurfaceSet::new();
        s.push(make_seed(&Seed::Sphere { center, radius }, h).unwrap(), RegionPair::new(1, 2))
            .unwrap();
        s
    }

    #[test]
    fn rays_through_vertices_and_edges_count_once() {
        let mut s = SurfaceSet::new();
        s.push(crate::trimesh::tests::octahedron(), RegionPair::new(1, 2)).unwrap();
        // (y, z) = (0, 0) passes through two vertices, (0.5, 0) along an edge
        for (y, z) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.25, 0.25)] {
            assert_ne!(point_winding(&s, 0, Vec3::new(0.0, y, z)), 0, "inside at y={y} z={z}");
            assert_eq!(point_winding(&s, 0, Vec3::new(2.0, y, z)), 0);
            assert_eq!(point_winding(&s, 0, Vec3::new(-2.0, y, z)), 0);
        }
    }

    #[test]
    fn constant_image_means() {
        let g = VoxelGrid::from_fn([10, 10, 10], Aabb::from_f64([-1.0; 3], [1.0; 3]), |_| 1.0).unwrap();
        let s = sphere_set([0.0; 3], 0.6, 0.2);
        let r = init_regions(&g, &s).unwrap();
        assert_eq!(r.mean(1), Some(1.0));
        assert_eq!(r.mean(2), Some(1.0));
        assert_eq!(r.counts[1] + r.counts[2], 1000);
    }

    #[test]
    fn inside_outside_matches_geometry() {
        let g = VoxelGrid::from_fn([16, 16, 16], Aabb::from_f64([-1.0; 3], [1.0; 3]), |_| 0.0).unwrap();
        let s = sphere_set([0.05, -0.02, 0.03], 0.7, 0.05);
        let r = init_regions(&g, &s).unwrap();
        let m = s.mesh(0);
        for v in 0..g.len() {
            let c = g.voxel_center(g.unravel(v));
            let d = (c - Vec3::new(0.05, -0.02, 0.03)).norm();
            if (d - 0.7).abs() > 0.02 {
                let expect = if d < 0.7 { 2 } else { 1 };
                assert_eq!(r.labels[v], expect, "voxel {v} at distance {d}");
            }
            assert_eq!(point_winding(&s, 0, c) != 0, r.labels[v] == 2);
        }
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn single_flip_updates_sums() {
        let g = VoxelGrid::from_fn([4, 4, 4], Aabb::from_f64([0.0; 3], [1.0; 3]), |_| 0.7).unwrap();
        let s = sphere_set([0.5; 3], 0.3, 0.1);
        let mut r = init_regions(&g, &s).unwrap();
        let (n1, n2, c1, c2) = (r.counts[1], r.counts[2], r.sums[1], r.sums[2]);
        r.transfer(2, 1, 0.7);
        assert_eq!((r.counts[1], r.counts[2]), (n1 + 1, n2 - 1));
        assert!((r.sums[1] - (c1 + 0.7)).abs() < 1e-12);
        assert!((r.sums[2] - (c2 - 0.7)).abs() < 1e-12);
    }

    #[test]
    fn unmoved_surfaces_are_a_fixed_point() {
        let g = VoxelGrid::from_fn([12, 12, 12], Aabb::from_f64([-1.0; 3], [1.0; 3]), |p| p.x() + 2.0).unwrap();
        let s = sphere_set([0.0; 3], 0.5, 0.1);
        let r0 = init_regions(&g, &s).unwrap();
        let mut r = r0.clone();
        let out = update_regions_incremental(&mut r, &g, &s, 3).unwrap();
        assert_eq!(out, UpdateOutcome { flipped: 0, fell_back: false });
        assert_eq!(r.labels, r0.labels);
        assert_eq!(r.counts, r0.counts);
    }

    #[test]
    fn force_values() {
        assert_eq!(force_value(0.3, 0.5, 0.5, 100.0), 0.0);
        assert_eq!(force_value(1.0, 1.0, 0.0, 100.0), -100.0);
        assert_eq!(force_value(0.0, 1.0, 0.0, 100.0), 100.0);
    }

    #[test]
    fn empty_region_is_an_error() {
        let g = VoxelGrid::from_fn([4, 4, 4], Aabb::from_f64([0.0; 3], [1.0; 3]), |_| 1.0).unwrap();
        // sphere far outside the grid: region 2 gets no voxels
        let s = sphere_set([5.0; 3], 0.3, 0.2);
        let r = init_regions(&g, &s).unwrap();
        assert_eq!(r.counts[2], 0);
        assert_eq!(nodal_force(&g, &r, &s, 1.0), Err(RegionError::EmptyRegion(2)));
    }

    #[test]
    fn nested_surfaces_need_consistent_labels() {
        let mut s = SurfaceSet::new();
        s.push(make_seed(&Seed::Sphere { center: [0.0; 3], radius: 0.8 }, 0.2).unwrap(), RegionPair::new(1, 2))
            .unwrap();
        s.push(make_seed(&Seed::Sphere { center: [0.0; 3], radius: 0.3 }, 0.2).unwrap(), RegionPair::new(2, 3))
            .unwrap();
        let g = VoxelGrid::from_fn([10, 10, 10], Aabb::from_f64([-1.0; 3], [1.0; 3]), |_| 1.0).unwrap();
        let r = init_regions(&g, &s).unwrap();
        assert!(r.counts[1] > 0 && r.counts[2] > 0 && r.counts[3] > 0);
        assert_eq!(r.labels[g.linear_index([5, 5, 5])], 3);
        let mut bad = SurfaceSet::new();
        bad.push(make_seed(&Seed::Sphere { center: [0.0; 3], radius: 0.8 }, 0.2).unwrap(), RegionPair::new(1, 2))
            .unwrap();
        bad.push(make_seed(&Seed::Sphere { center: [0.0; 3], radius: 0.3 }, 0.2).unwrap(), RegionPair::new(1, 3))
            .unwrap();
        assert!(matches!(init_regions(&g, &bad), Err(RegionError::Inconsistent(_))));
    }
}
