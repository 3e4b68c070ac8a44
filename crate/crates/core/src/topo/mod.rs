//! Topology changes: detection on a background grid of cubes, identification
//! from the weighted vertex normals, and mesh surgery.

mod hungarian;
mod surgery;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use hungarian::{hungarian_match, Assignment};
pub use surgery::{merge_or_genus_increase, split_or_genus_decrease, SurgeryOutcome};

use crate::aabb::Aabb;
use crate::error::Error;
use crate::scalar::Real;
use crate::trimesh::SurfaceSet;
use crate::vec3::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionParams {
    /// Cube edge length.
    pub a: f64,
    pub n_detect: usize,
    /// Angle thresholds in degrees, `thr1 < thr3 < thr2`.
    pub thr1: f64,
    pub thr2: f64,
    pub thr3: f64,
    pub outlier_fraction: f64,
    pub split_fraction: f64,
    /// Use `a = max(a, 2·δXn)` with the last step's normal displacement.
    pub adaptive: bool,
    /// Closed pieces enclosing less than `debris_cubes · a³` are dropped.
    /// Zero keeps everything.
    pub debris_cubes: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            a: 0.025,
            n_detect: 10,
            thr1: 30.0,
            thr2: 150.0,
            thr3: 40.0,
            outlier_fraction: 0.05,
            split_fraction: 1.0 / 3.0,
            adaptive: false,
            debris_cubes: 64.0,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::Param(format!("grid size a must be positive, got {}", self.a)));
        }
        if self.n_detect < 2 {
            return Err(Error::Param("n_detect must be at least 2".into()));
        }
        if !(0.0 < self.thr1 && self.thr1 < self.thr3 && self.thr3 < self.thr2 && self.thr2 < 180.0) {
            return Err(Error::Param(format!(
                "need 0 < thr1 < thr3 < thr2 < 180 (got {}, {}, {})",
                self.thr1, self.thr3, self.thr2
            )));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) || !(0.0..1.0).contains(&self.split_fraction) {
            return Err(Error::Param("fractions must lie in [0, 1)".into()));
        }
        if !(self.debris_cubes >= 0.0) || !self.debris_cubes.is_finite() {
            return Err(Error::Param("debris_cubes must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn debris_volume(&self) -> f64 {
        self.debris_cubes * self.a.powi(3)
    }
}

/// A vertex: position of its surface in the set and its local index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub surface: usize,
    pub vertex: usize,
}

/// Sparse uniform cube grid holding the nodes that fall in each cube.
#[derive(Clone, Debug)]
pub struct BackgroundGrid {
    pub a: f64,
    pub origin: [f64; 3],
    pub dims: [usize; 3],
    pub cubes: HashMap<usize, Vec<NodeRef>>,
}

impl BackgroundGrid {
    pub fn cube_coords(&self, idx: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn cube_index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub fn cube_of(&self, p: [f64; 3]) -> [usize; 3] {
        std::array::from_fn(|d| {
            let t = ((p[d] - self.origin[d]) / self.a).floor();
            if t < 0.0 {
                0
            } else {
                (t as usize).min(self.dims[d] - 1)
            }
        })
    }

    /// Nodes of cube `idx` and its (up to 26) neighbors, in a fixed order.
    pub fn neighborhood(&self, idx: usize) -> Vec<NodeRef> {
        let c = self.cube_coords(idx);
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let q = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                    if (0..3).any(|d| q[d] < 0 || q[d] >= self.dims[d] as i64) {
                        continue;
                    }
                    let k = self.cube_index([q[0] as usize, q[1] as usize, q[2] as usize]);
                    if let Some(list) = self.cubes.get(&k) {
                        out.extend_from_slice(list);
                    }
                }
            }
        }
        out
    }

    pub fn registered_nodes(&self) -> usize {
        self.cubes.values().map(|v| v.len()).sum()
    }
}

/// Unit weighted normals of every vertex (zero where undefined).
pub fn unit_normals<T: Real>(s: &SurfaceSet<T>) -> Vec<Vec<Vec3<f64>>> {
    s.meshes()
        .iter()
        .map(|m| {
            let (_, w) = m.star_areas_and_normals();
            w.into_iter()
                .map(|v| Vec3::from_f64(v.to_f64()).normalized().unwrap_or_else(Vec3::zero))
                .collect()
        })
        .collect()
}

#[inline]
fn angle(a: Vec3<f64>, b: Vec3<f64>) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Flagged cubes in processing order (node count descending, then index).
#[derive(Clone, Debug)]
pub struct Detection {
    pub grid: BackgroundGrid,
    pub flagged: Vec<usize>,
}

/// One pass over all nodes. A cube is flagged when it holds more than
/// `n_detect` nodes, nodes of two surfaces, or two nodes whose normals
/// differ by more than `thr2`.
pub fn detect<T: Real>(s: &SurfaceSet<T>, p: &DetectionParams, domain: &Aabb<T>) -> Result<Detection, Error> {
    p.validate()?;
    let normals = unit_normals(s);
    Ok(detect_with_normals(s, &normals, p, domain))
}

fn detect_with_normals<T: Real>(
    s: &SurfaceSet<T>,
    normals: &[Vec<Vec3<f64>>],
    p: &DetectionParams,
    domain: &Aabb<T>,
) -> Detection {
    let mut lo = domain.min.to_f64();
    let mut hi = domain.max.to_f64();
    if let Some(b) = s.bounds() {
        let (bl, bh) = (b.min.to_f64(), b.max.to_f64());
        for d in 0..3 {
            lo[d] = lo[d].min(bl[d]);
            hi[d] = hi[d].max(bh[d]);
        }
    }
    let dims: [usize; 3] = std::array::from_fn(|d| (((hi[d] - lo[d]) / p.a).ceil() as usize).max(1));
    let mut grid = BackgroundGrid {
        a: p.a,
        origin: lo,
        dims,
        cubes: HashMap::with_capacity(s.total_vertices() / 2),
    };
    let mut flagged: HashSet<usize> = HashSet::new();
    for (si, m) in s.meshes().iter().enumerate() {
        for (vi, q) in m.vertices.iter().enumerate() {
            let c = grid.cube_of(q.to_f64());
            let k = grid.cube_index(c);
            let node = NodeRef { surface: si, vertex: vi };
            let list = grid.cubes.entry(k).or_default();
            if !flagged.contains(&k) {
                if list.len() + 1 > p.n_detect {
                    flagged.insert(k);
                } else {
                    let n = normals[si][vi];
                    let hit = list.iter().any(|o| o.surface != si || angle(normals[o.surface][o.vertex], n) > p.thr2);
                    if hit {
                        flagged.insert(k);
                    }
                }
            }
            list.push(node);
        }
    }
    let mut flagged: Vec<usize> = flagged.into_iter().collect();
    flagged.sort_by(|a, b| grid.cubes[b].len().cmp(&grid.cubes[a].len()).then(a.cmp(b)));
    Detection { grid, flagged }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Split,
    Merge,
    GenusIncrease,
    GenusDecrease,
    /// A pinched-off piece or a whole surface too small to keep was removed.
    Debris,
    None,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Split => "split",
            EventKind::Merge => "merge",
            EventKind::GenusIncrease => "genus_increase",
            EventKind::GenusDecrease => "genus_decrease",
            EventKind::Debris => "debris",
            EventKind::None => "none",
        };
        f.write_str(s)
    }
}

/// Outcome of identifying a flagged cube. `Split` stands for "split or
/// genus decrease"; the surgery decides which from the component count.
#[derive(Clone, Debug, PartialEq)]
pub struct TopoEvent {
    pub kind: EventKind,
    pub cube: usize,
    pub nodes: Vec<NodeRef>,
    pub n1: Option<Vec3<f64>>,
    pub n2: Option<Vec3<f64>>,
    pub n0: usize,
}

impl TopoEvent {
    /// Distinct surface positions among the affected nodes, ascending.
    pub fn surfaces(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.nodes.iter().map(|n| n.surface).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Groups the normals around `cube` and names the topology change.
pub fn classify<T: Real>(
    cube: usize,
    grid: &BackgroundGrid,
    _s: &SurfaceSet<T>,
    normals: &[Vec<Vec3<f64>>],
    p: &DetectionParams,
) -> TopoEvent {
    let nodes = grid.neighborhood(cube);
    let nc = nodes.len();
    let w: Vec<Vec3<f64>> = nodes.iter().map(|n| normals[n.surface][n.vertex]).collect();
    let mut ev = TopoEvent {
        kind: EventKind::None,
        cube,
        nodes,
        n1: None,
        n2: None,
        n0: 0,
    };
    if nc < 2 {
        return ev;
    }
    let min_group = p.outlier_fraction * nc as f64;
    let seeds = nc.min(11);
    for seed in 0..seeds {
        let mut g1 = vec![seed];
        let mut g2: Vec<usize> = Vec::new();
        let mut rest: Vec<usize> = Vec::new();
        for j in 0..nc {
            if j == seed {
                continue;
            }
            if angle(w[seed], w[j]) < p.thr1 {
                g1.push(j);
            } else if let Some(&k0) = g2.first() {
                if angle(w[k0], w[j]) < p.thr1 {
                    g2.push(j);
                } else {
                    rest.push(j);
                }
            } else if angle(w[seed], w[j]) > p.thr2 {
                g2.push(j);
            } else {
                rest.push(j);
            }
        }
        if g2.is_empty() {
            continue;
        }
        let avg = |g: &[usize]| {
            let mut a = Vec3::zero();
            for &j in g {
                a += w[j];
            }
            a.normalized().unwrap_or(w[g[0]])
        };
        let n1 = avg(&g1);
        let n2 = avg(&g2);
        let mut left = Vec::new();
        for j in rest {
            if angle(w[j], n1) < p.thr1 {
                g1.push(j);
            } else if angle(w[j], n2) < p.thr1 {
                g2.push(j);
            } else {
                left.push(j);
            }
        }
        if (g1.len() as f64) < min_group || (g2.len() as f64) < min_group {
            continue;
        }
        let n0 = left
            .iter()
            .filter(|&&j| angle(w[j], n1) > p.thr3 && angle(w[j], n2) > p.thr3)
            .count();
        ev.n1 = Some(n1);
        ev.n2 = Some(n2);
        ev.n0 = n0;
        ev.kind = if n0 as f64 > p.split_fraction * nc as f64 {
            EventKind::Split
        } else if ev.surfaces().len() >= 2 {
            EventKind::Merge
        } else {
            EventKind::GenusIncrease
        };
        return ev;
    }
    ev
}

/// One executed (or attempted) topology change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub step: usize,
    pub kind: EventKind,
    pub cube: usize,
    pub nodes: usize,
    pub euler_before: i64,
    pub euler_after: i64,
    pub surfaces_before: usize,
    pub surfaces_after: usize,
}

impl EventRecord {
    /// Single-line text form used by the event log.
    pub fn log_line(&self) -> String {
        format!(
            "step={} kind={} cube={} nodes={} chi_before={} chi_after={} surfaces={}->{}",
            self.step,
            self.kind,
            self.cube,
            self.nodes,
            self.euler_before,
            self.euler_after,
            self.surfaces_before,
            self.surfaces_after
        )
    }
}

fn total_euler<T: Real>(s: &SurfaceSet<T>) -> i64 {
    s.meshes().iter().map(|m| m.euler_characteristic()).sum()
}

/// Executes the surgery for an identified event. On failure `s` is left
/// untouched and the reason is returned.
pub fn execute<T: Real>(
    s: &mut SurfaceSet<T>,
    ev: &TopoEvent,
    p: &DetectionParams,
) -> Result<SurgeryOutcome, Error> {
    match ev.kind {
        EventKind::Split | EventKind::GenusDecrease => split_or_genus_decrease(s, ev, p.debris_volume()),
        EventKind::Merge | EventKind::GenusIncrease => merge_or_genus_increase(s, ev),
        EventKind::Debris | EventKind::None => Err(crate::error::SurgeryError::NotApplicable("no topology change".into()).into()),
    }
}

/// Detects, identifies and performs all topology changes of one time step.
/// Surfaces enclosing less than the debris volume are removed first (the
/// last one is always kept). After each surgery detection is repeated on
/// the new surfaces; cubes within two cubes of one already handled this
/// step are skipped.
pub fn detect_and_apply<T: Real>(
    s: &mut SurfaceSet<T>,
    p: &DetectionParams,
    domain: &Aabb<T>,
    step: usize,
) -> Result<Vec<EventRecord>, Error> {
    p.validate()?;
    const MAX_EVENTS: usize = 32;
    let mut records = Vec::new();
    let mut handled: Vec<[f64; 3]> = Vec::new();
    let mut tried: HashSet<usize> = HashSet::new();
    let dv = p.debris_volume();
    while s.len() > 1 {
        let Some(i) = (0..s.len()).find(|&i| s.mesh(i).signed_volume().to_f64_lossy().abs() < dv) else {
            break;
        };
        let before = total_euler(s);
        let nsurf = s.len();
        let nodes = s.mesh(i).vertices.len();
        s.remove(i);
        let rec = EventRecord {
            step,
            kind: EventKind::Debris,
            cube: usize::MAX,
            nodes,
            euler_before: before,
            euler_after: total_euler(s),
            surfaces_before: nsurf,
            surfaces_after: s.len(),
        };
        log::info!("{}", rec.log_line());
        records.push(rec);
    }
    loop {
        if records.len() >= MAX_EVENTS {
            break;
        }
        let normals = unit_normals(s);
        let det = detect_with_normals(s, &normals, p, domain);
        let near_handled = |idx: usize| {
            let c = det.grid.cube_coords(idx);
            let center: [f64; 3] = std::array::from_fn(|d| det.grid.origin[d] + (c[d] as f64 + 0.5) * p.a);
            handled
                .iter()
                .any(|h| (0..3).all(|d| (center[d] - h[d]).abs() <= 2.5 * p.a))
        };
        let mut progressed = false;
        for &cube in &det.flagged {
            if tried.contains(&cube) || near_handled(cube) {
                continue;
            }
            tried.insert(cube);
            let ev = classify(cube, &det.grid, s, &normals, p);
            if ev.kind == EventKind::None {
                log::trace!("step={step} cube={cube} nodes={} surfaces={:?}: no event", ev.nodes.len(), ev.surfaces());
                continue;
            }
            let before = total_euler(s);
            let nsurf = s.len();
            match execute(s, &ev, p) {
                Ok(out) => {
                    let c = det.grid.cube_coords(cube);
                    handled.push(std::array::from_fn(|d| det.grid.origin[d] + (c[d] as f64 + 0.5) * p.a));
                    let rec = EventRecord {
                        step,
                        kind: out.kind,
                        cube,
                        nodes: ev.nodes.len(),
                        euler_before: before,
                        euler_after: total_euler(s),
                        surfaces_before: nsurf,
                        surfaces_after: s.len(),
                    };
                    log::info!("{}", rec.log_line());
                    records.push(rec);
                    progressed = true;
                    break;
                }
                Err(e) => {
                    log::debug!("step={step} cube={cube} classified {} but surgery skipped: {e}", ev.kind);
                }
            }
        }
        if !progressed {
            break;
        }
        // the grid may have moved with the new bounds
        tried.clear();
    }
    Ok(records)
}
