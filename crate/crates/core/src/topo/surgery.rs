//! Mesh surgery for the four kinds of topology change.
//!
//! Both procedures first delete every face touching the affected nodes and
//! then, repeatedly, every face left with two or more free edges. Holes are
//! either capped (split, genus decrease) or stitched pairwise (merge, genus
//! increase).

use std::collections::{HashMap, HashSet};

use super::hungarian::hungarian_match;
use super::{EventKind, TopoEvent};
use crate::error::{Error, SurgeryError};
use crate::scalar::Real;
use crate::trimesh::{RegionPair, SurfaceMesh, SurfaceSet};
use crate::vec3::Vec3;

/// Maximal number of faces around a fresh cap vertex.
pub const MAX_CAP_VALENCE: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SurgeryOutcome {
    pub kind: EventKind,
    /// Surface ids of the resulting surfaces.
    pub surfaces: Vec<usize>,
}

/// Removes faces touching `remove` and then faces with ≥ 2 free edges.
fn delete_faces(faces: &[[usize; 3]], remove: &HashSet<usize>) -> Vec<[usize; 3]> {
    let mut keep: Vec<[usize; 3]> = faces.iter().copied().filter(|t| !t.iter().any(|v| remove.contains(v))).collect();
    loop {
        let half: HashSet<(usize, usize)> = keep.iter().flat_map(|t| (0..3).map(move |e| (t[e], t[(e + 1) % 3]))).collect();
        let before = keep.len();
        keep.retain(|t| (0..3).filter(|&e| !half.contains(&(t[(e + 1) % 3], t[e]))).count() < 2);
        if keep.len() == before {
            return keep;
        }
    }
}

/// Connected components of faces (edge adjacency), as lists of face indices
/// ordered by their smallest member.
fn components(faces: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut by_edge: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
    for (f, t) in faces.iter().enumerate() {
        for e in 0..3 {
            by_edge.insert((t[e], t[(e + 1) % 3]), f);
        }
    }
    let mut comp = vec![usize::MAX; faces.len()];
    let mut out = Vec::new();
    for start in 0..faces.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut stack = vec![start];
        while let Some(f) = stack.pop() {
            let t = faces[f];
            for e in 0..3 {
                if let Some(&g) = by_edge.get(&(t[(e + 1) % 3], t[e])) {
                    if comp[g] == usize::MAX {
                        comp[g] = id;
                        members.push(g);
                        stack.push(g);
                    }
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Free-edge loops, each listed in the direction of its faces' edges.
fn boundary_loops(faces: &[[usize; 3]]) -> Result<Vec<Vec<usize>>, SurgeryError> {
    let half: HashSet<(usize, usize)> = faces.iter().flat_map(|t| (0..3).map(move |e| (t[e], t[(e + 1) % 3]))).collect();
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut order: Vec<usize> = Vec::new();
    for t in faces {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if !half.contains(&(b, a)) {
                if next.insert(a, b).is_some() {
                    return Err(SurgeryError::NonSimpleLoop);
                }
                order.push(a);
            }
        }
    }
    let mut seen: HashSet<usize> = HashSet::new();
    let mut loops = Vec::new();
    for &start in &order {
        if seen.contains(&start) {
            continue;
        }
        let mut lp = vec![start];
        seen.insert(start);
        let mut cur = next[&start];
        while cur != start {
            if !seen.insert(cur) {
                return Err(SurgeryError::NonSimpleLoop);
            }
            lp.push(cur);
            cur = *next.get(&cur).ok_or(SurgeryError::NonSimpleLoop)?;
        }
        if lp.len() < 3 {
            return Err(SurgeryError::NonSimpleLoop);
        }
        loops.push(lp);
    }
    Ok(loops)
}

/// Caps `lp` with a fan to a new vertex at `p`, then lowers the fan size
/// below [`MAX_CAP_VALENCE`] by pairing neighboring fan triangles.
fn cap_loop<T: Real>(verts: &mut Vec<Vec3<T>>, faces: &mut Vec<[usize; 3]>, lp: &[usize], p: Vec3<T>) {
    let c = verts.len();
    verts.push(p);
    // fan triangles [r_i, r_{i+1}, c] run against the free edges
    let mut ring: Vec<usize> = lp.iter().rev().copied().collect();
    let mut fan: Vec<[usize; 3]> = (0..ring.len()).map(|i| [ring[i], ring[(i + 1) % ring.len()], c]).collect();
    while ring.len() > MAX_CAP_VALENCE {
        let k = ring.len();
        let mut mid = HashMap::new();
        for i in (0..k).step_by(2) {
            let r = ring[i];
            verts.push((verts[r] + p) * T::lit(0.5));
            mid.insert(i, verts.len() - 1);
        }
        let m = |i: usize| mid[&(i % k)];
        let mut new_fan = Vec::new();
        let mut new_ring = Vec::new();
        let mut i = 0;
        while i + 1 < k {
            let (r0, r1, r2) = (ring[i], ring[i + 1], ring[(i + 2) % k]);
            let (m0, m2) = (m(i), m((i + 2) % k));
            faces.push([r0, r1, m0]);
            faces.push([r1, m2, m0]);
            faces.push([r1, r2, m2]);
            new_fan.push([m0, m2, c]);
            new_ring.push(m0);
            i += 2;
        }
        if k % 2 == 1 {
            let (r0, r1) = (ring[k - 1], ring[0]);
            let (mk, m0) = (m(k - 1), m(0));
            faces.push([r0, r1, m0]);
            faces.push([r0, m0, mk]);
            new_fan.push([mk, m0, c]);
            new_ring.push(mk);
        }
        ring = new_ring;
        fan = new_fan;
    }
    faces.extend(fan);
}

fn finish<T: Real>(verts: Vec<Vec3<T>>, faces: Vec<[usize; 3]>, id: usize) -> Result<SurfaceMesh<T>, SurgeryError> {
    let mut m = SurfaceMesh::new(verts, faces, id).map_err(|e| SurgeryError::NotManifold(e.to_string()))?;
    m.compact();
    m.rebuild_adjacency().map_err(|e| SurgeryError::NotManifold(e.to_string()))?;
    m.check_closed_manifold()
        .map_err(|e| SurgeryError::NotManifold(e.to_string()))?;
    m.check_face_areas().map_err(|e| SurgeryError::NotManifold(e.to_string()))?;
    Ok(m)
}

/// Deletes the faces around the event nodes and caps the holes. Two
/// remaining components give a split (the second component becomes a new
/// surface with the same region pair); one component with two holes gives
/// a genus decrease. A split-off piece enclosing less than `debris_volume`
/// is discarded instead (kind `Debris`). On error `s` is unchanged.
pub fn split_or_genus_decrease<T: Real>(
    s: &mut SurfaceSet<T>,
    e: &TopoEvent,
    debris_volume: f64,
) -> Result<SurgeryOutcome, Error> {
    let surfs = e.surfaces();
    if surfs.len() != 1 {
        return Err(SurgeryError::NotApplicable(format!("nodes span {} surfaces", surfs.len())).into());
    }
    let si = surfs[0];
    let mesh = s.mesh(si);
    let nodes: HashSet<usize> = e.nodes.iter().map(|n| n.vertex).collect();
    let mut pe = Vec3::zero();
    for n in &e.nodes {
        pe += mesh.vertices[n.vertex];
    }
    pe = pe / T::from_usize(e.nodes.len()).unwrap();
    let kept = delete_faces(&mesh.faces, &nodes);
    let comps = components(&kept);
    let loops = boundary_loops(&kept)?;
    let kind = match (comps.len(), loops.len()) {
        (2, 2) => EventKind::Split,
        (1, 2) => EventKind::GenusDecrease,
        (c, _) if c != 1 && c != 2 => {
            return Err(SurgeryError::ComponentCount {
                expected: "one or two components",
                found: c,
            }
            .into())
        }
        (_, l) => return Err(SurgeryError::LoopCount(l).into()),
    };
    if kind != e.kind && e.kind != EventKind::Split {
        log::info!("classified {} but deletion left {} component(s); treating as {kind}", e.kind, comps.len());
    }
    let mut verts = mesh.vertices.clone();
    let mut faces = kept.clone();
    for lp in &loops {
        cap_loop(&mut verts, &mut faces, lp, pe);
    }
    let id = mesh.surface_id;
    let chi_before = mesh.euler_characteristic();
    // the deleted patch must be an annulus, otherwise the cut changed nothing
    let chi = |parts: &[&SurfaceMesh<T>]| parts.iter().map(|m| m.euler_characteristic()).sum::<i64>();
    if kind == EventKind::GenusDecrease {
        let m = finish(verts, faces, id)?;
        if chi(&[&m]) != chi_before + 2 {
            return Err(SurgeryError::NotApplicable("deleted patch is not an annulus".into()).into());
        }
        s.replace(si, m);
        return Ok(SurgeryOutcome { kind, surfaces: vec![id] });
    }
    // split: the capped halves are the two edge-connected components
    let capped = components(&faces);
    if capped.len() != 2 {
        return Err(SurgeryError::ComponentCount {
            expected: "two components after capping",
            found: capped.len(),
        }
        .into());
    }
    let parts: [Vec<[usize; 3]>; 2] = [0, 1].map(|k| capped[k].iter().map(|&f| faces[f]).collect());
    let [pa, pb] = parts;
    let ma = finish(verts.clone(), pa, id)?;
    let mb = finish(verts, pb, id)?;
    if chi(&[&ma, &mb]) != chi_before + 2 {
        return Err(SurgeryError::NotApplicable("deleted patch is not an annulus".into()).into());
    }
    let orient = mesh.signed_volume() > T::zero();
    let vol = |m: &SurfaceMesh<T>| m.signed_volume().to_f64_lossy();
    let (va, vb) = (vol(&ma), vol(&mb));
    let small = |v: f64| v.abs() < debris_volume || (v > 0.0) != orient;
    if small(va) || small(vb) {
        let keep = if small(vb) && (!small(va) || va.abs() >= vb.abs()) { ma } else { mb };
        if small(vol(&keep)) && s.len() == 1 {
            return Err(SurgeryError::NotApplicable("both parts are debris".into()).into());
        }
        s.replace(si, keep);
        return Ok(SurgeryOutcome {
            kind: EventKind::Debris,
            surfaces: vec![id],
        });
    }
    let regions = s.region_pair(si);
    s.replace(si, ma);
    let new_id = s.push(mb, regions)?;
    Ok(SurgeryOutcome {
        kind,
        surfaces: vec![id, new_id],
    })
}

/// Deletes the faces around the event nodes, matches the two resulting
/// holes node by node and fuses them. Nodes from two surfaces give a merge
/// (the second surface is absorbed into the first), nodes from one surface
/// a genus increase. On error `s` is unchanged.
pub fn merge_or_genus_increase<T: Real>(s: &mut SurfaceSet<T>, e: &TopoEvent) -> Result<SurgeryOutcome, Error> {
    let surfs = e.surfaces();
    let (kind, verts, faces, nodes) = match surfs.len() {
        1 => {
            let m = s.mesh(surfs[0]);
            let nodes: HashSet<usize> = e.nodes.iter().map(|n| n.vertex).collect();
            (EventKind::GenusIncrease, m.vertices.clone(), m.faces.clone(), nodes)
        }
        2 => {
            let (a, b) = (surfs[0], surfs[1]);
            let (ra, rb): (RegionPair, RegionPair) = (s.region_pair(a), s.region_pair(b));
            if ra != rb {
                return Err(SurgeryError::RegionMismatch((ra.plus, ra.minus), (rb.plus, rb.minus)).into());
            }
            let (ma, mb) = (s.mesh(a), s.mesh(b));
            let off = ma.vertices.len();
            let mut verts = ma.vertices.clone();
            verts.extend_from_slice(&mb.vertices);
            let mut faces = ma.faces.clone();
            faces.extend(mb.faces.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
            let nodes = e
                .nodes
                .iter()
                .map(|n| if n.surface == a { n.vertex } else { n.vertex + off })
                .collect();
            (EventKind::Merge, verts, faces, nodes)
        }
        n => return Err(SurgeryError::NotApplicable(format!("nodes span {n} surfaces")).into()),
    };
    let kept = delete_faces(&faces, &nodes);
    let comps = components(&kept);
    let want = if kind == EventKind::Merge { 2 } else { 1 };
    if comps.len() != want {
        return Err(SurgeryError::ComponentCount {
            expected: if want == 2 { "two components" } else { "one component" },
            found: comps.len(),
        }
        .into());
    }
    let loops = boundary_loops(&kept)?;
    if loops.len() != 2 {
        return Err(SurgeryError::LoopCount(loops.len()).into());
    }
    let mut verts = verts;
    let mut faces = kept;
    let (l1, l2) = equalize(&mut verts, &mut faces, loops[0].clone(), loops[1].clone())?;
    let n = l1.len();
    let cost: Vec<Vec<T>> = l1.iter().map(|&u| l2.iter().map(|&w| verts[u].distance(verts[w])).collect()).collect();
    let assign = hungarian_match(&cost)?;
    let mut pi = vec![0usize; n];
    for &(r, c) in &assign.pairs {
        pi[r] = c;
    }
    let shift = (pi[0]) % n;
    let reversed_shift = (0..n).all(|i| pi[i] == (shift + n - i) % n);
    if !reversed_shift {
        // keep the seam free of crossings: best orientation-compatible alignment
        let mut best = (T::infinity(), 0usize);
        for s0 in 0..n {
            let c: T = (0..n).map(|i| cost[i][(s0 + n - i) % n]).sum();
            if c < best.0 {
                best = (c, s0);
            }
        }
        for (i, slot) in pi.iter_mut().enumerate() {
            *slot = (best.1 + n - i) % n;
        }
    }
    let mut remap: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let (u, w) = (l1[i], l2[pi[i]]);
        verts[u] = verts[u].midpoint(verts[w]);
        remap.insert(w, u);
    }
    for t in &mut faces {
        for v in t.iter_mut() {
            if let Some(&u) = remap.get(v) {
                *v = u;
            }
        }
    }
    let keep_pos = surfs[0];
    let id = s.mesh(keep_pos).surface_id;
    let chi_before: i64 = surfs.iter().map(|&i| s.mesh(i).euler_characteristic()).sum();
    let m = finish(verts, faces, id)?;
    if m.euler_characteristic() != chi_before - 2 {
        return Err(SurgeryError::NotApplicable("deleted patches are not two disks".into()).into());
    }
    if kind == EventKind::Merge {
        s.replace(keep_pos, m);
        s.remove(surfs[1]);
    } else {
        s.replace(keep_pos, m);
    }
    Ok(SurgeryOutcome { kind, surfaces: vec![id] })
}

/// Bisects free edges of the shorter loop until both loops have the same
/// length. Each insertion goes on the free edge nearest to the first node
/// of the longer loop left unmatched by a rectangular assignment.
fn equalize<T: Real>(
    verts: &mut Vec<Vec3<T>>,
    faces: &mut Vec<[usize; 3]>,
    a: Vec<usize>,
    b: Vec<usize>,
) -> Result<(Vec<usize>, Vec<usize>), Error> {
    let swap = a.len() > b.len();
    let (mut short, long) = if swap { (b, a) } else { (a, b) };
    let cap = long.len() - short.len();
    for _ in 0..cap {
        let cost: Vec<Vec<T>> = short
            .iter()
            .map(|&u| long.iter().map(|&w| verts[u].distance(verts[w])).collect())
            .collect();
        let asg = hungarian_match(&cost)?;
        let matched: HashSet<usize> = asg.pairs.iter().map(|&(_, c)| c).collect();
        let Some(lone) = (0..long.len()).find(|c| !matched.contains(c)) else {
            break;
        };
        let q = verts[long[lone]];
        let k = short.len();
        let (ei, _) = (0..k)
            .map(|i| (i, verts[short[i]].midpoint(verts[short[(i + 1) % k]]).distance(q)))
            .fold((0, T::infinity()), |acc, x| if x.1 < acc.1 { x } else { acc });
        let (u, w) = (short[ei], short[(ei + 1) % k]);
        let mid = verts[u].midpoint(verts[w]);
        verts.push(mid);
        let m = verts.len() - 1;
        bisect_free_edge(faces, u, w, m)?;
        short.insert(ei + 1, m);
    }
    if short.len() != long.len() {
        return Err(SurgeryError::Matching(cap).into());
    }
    Ok(if swap { (long, short) } else { (short, long) })
}

/// Splits the face holding directed edge `u→w` at new vertex `m`.
fn bisect_free_edge(faces: &mut Vec<[usize; 3]>, u: usize, w: usize, m: usize) -> Result<(), SurgeryError> {
    for f in 0..faces.len() {
        let t = faces[f];
        for e in 0..3 {
            if t[e] == u && t[(e + 1) % 3] == w {
                let c = t[(e + 2) % 3];
                faces[f] = [u, m, c];
                faces.push([m, w, c]);
                return Ok(());
            }
        }
    }
    Err(SurgeryError::NonSimpleLoop)
}
