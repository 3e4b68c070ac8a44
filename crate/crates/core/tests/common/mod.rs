#![allow(dead_code)]

use rand::Rng;
use surfseg::topo::{classify, detect, execute, unit_normals, DetectionParams, EventKind};
use surfseg::trimesh::{make_seed, RegionPair, Seed, SurfaceMesh, SurfaceSet};
use surfseg::{Aabb, Vec3};

pub fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

pub fn random_point<R: Rng>(rng: &mut R, h: f64) -> [f64; 3] {
    std::array::from_fn(|_| rng.gen_range(-h..h))
}

pub fn single(m: SurfaceMesh<f64>) -> SurfaceSet<f64> {
    let mut s = SurfaceSet::new();
    s.push(m, RegionPair::new(1, 2)).unwrap();
    s
}

fn dot(a: Vec3<f64>, b: [f64; 3]) -> f64 {
    a.dot(Vec3::from_f64(b))
}

/// Two spheres whose gap (negative for overlap) is `gap`.
pub fn touching_spheres<R: Rng>(rng: &mut R, gap: f64, h: f64) -> SurfaceSet<f64> {
    let d = random_unit(rng);
    let p = random_point(rng, 0.05);
    let r1 = rng.gen_range(0.3..0.45);
    let r2 = rng.gen_range(0.3..0.45);
    let c1: [f64; 3] = std::array::from_fn(|k| p[k] - (r1 + gap / 2.0) * d[k]);
    let c2: [f64; 3] = std::array::from_fn(|k| p[k] + (r2 + gap / 2.0) * d[k]);
    let mut s = SurfaceSet::new();
    for (c, r) in [(c1, r1), (c2, r2)] {
        s.push(make_seed(&Seed::Sphere { center: c, radius: r }, h).unwrap(), RegionPair::new(1, 2))
            .unwrap();
    }
    s
}

/// Sphere pressed in from both poles so the middle becomes a membrane of
/// thickness `thickness`.
pub fn dimpled_sphere<R: Rng>(rng: &mut R, thickness: f64, h: f64) -> SurfaceSet<f64> {
    let n = random_unit(rng);
    let c = random_point(rng, 0.05);
    let r = rng.gen_range(0.45..0.6);
    let w = rng.gen_range(0.2..0.3);
    let k = 1.0 - thickness / (2.0 * r);
    let mut m = make_seed::<f64>(&Seed::Sphere { center: c, radius: r }, h).unwrap();
    let cv = Vec3::from_f64(c);
    let nv = Vec3::from_f64(n);
    for p in &mut m.vertices {
        let q = *p - cv;
        let z = dot(q, n);
        let rho2 = q.norm_squared() - z * z;
        let dz = -z * k * (-(rho2 / (w * w)).powi(3)).exp();
        *p += nv * dz;
    }
    single(m)
}

/// Capsule with a neck of radius `neck` in the middle.
pub fn necked_capsule<R: Rng>(rng: &mut R, neck: f64, h: f64) -> SurfaceSet<f64> {
    let d = random_unit(rng);
    let c = random_point(rng, 0.05);
    let r = rng.gen_range(0.25..0.35);
    let len = rng.gen_range(0.8..1.2);
    let w = rng.gen_range(0.15..0.25);
    let mut m = make_seed::<f64>(
        &Seed::Capsule {
            center: c,
            axis: d,
            length: len,
            radius: r,
        },
        h,
    )
    .unwrap();
    let cv = Vec3::from_f64(c);
    let dv = Vec3::from_f64(d);
    for p in &mut m.vertices {
        let q = *p - cv;
        let s = dot(q, d);
        let radial = q - dv * s;
        let f = 1.0 - (1.0 - neck / r) * (-(s / w) * (s / w)).exp();
        *p = cv + dv * s + radial * f;
    }
    single(m)
}

/// Torus whose tube narrows to `neck` around one meridian.
pub fn necked_torus<R: Rng>(rng: &mut R, neck: f64, h: f64) -> SurfaceSet<f64> {
    let n = random_unit(rng);
    let c = random_point(rng, 0.05);
    let major = rng.gen_range(0.5..0.6);
    let minor = rng.gen_range(0.18..0.24);
    let w = rng.gen_range(0.35..0.5);
    let mut m = make_seed::<f64>(
        &Seed::Torus {
            center: c,
            axis: n,
            major,
            minor,
        },
        h,
    )
    .unwrap();
    let cv = Vec3::from_f64(c);
    let nv = Vec3::from_f64(n);
    let u = {
        let t = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let tv = Vec3::from_f64(t);
        (tv - nv * tv.dot(nv)).normalized().unwrap()
    };
    let v = nv.cross(u);
    for p in &mut m.vertices {
        let q = *p - cv;
        let phi = q.dot(v).atan2(q.dot(u));
        let center = (u * phi.cos() + v * phi.sin()) * major;
        let off = q - center;
        let f = 1.0 - (1.0 - neck / minor) * (-(phi / w) * (phi / w)).exp();
        *p = cv + center + off * f;
    }
    single(m)
}

/// Expected change of the total Euler characteristic for one event.
pub fn euler_delta_ok(kind: EventKind, before: i64, after: i64) -> bool {
    let d = after - before;
    match kind {
        EventKind::Split | EventKind::GenusDecrease => d == 2,
        EventKind::Merge | EventKind::GenusIncrease => d == -2,
        // a dropped sphere-like piece: either a split whose second half is
        // thrown away (net 0) or a whole small sphere removed (-2)
        EventKind::Debris => d == 0 || d == -2,
        EventKind::None => false,
    }
}

pub struct SurgeryLog {
    pub kinds: Vec<EventKind>,
    pub failures: Vec<String>,
}

/// Detects and executes events one at a time, checking every resulting
/// surface set.
pub fn surgery_round(s: &mut SurfaceSet<f64>, p: &DetectionParams, max_events: usize) -> SurgeryLog {
    let domain = Aabb::from_f64([-2.0; 3], [2.0; 3]);
    let mut log = SurgeryLog {
        kinds: Vec::new(),
        failures: Vec::new(),
    };
    let chi = |s: &SurfaceSet<f64>| s.meshes().iter().map(|m| m.euler_characteristic()).sum::<i64>();
    'outer: while log.kinds.len() < max_events {
        let normals = unit_normals(s);
        let det = detect(s, p, &domain).unwrap();
        for &cube in &det.flagged {
            let ev = classify(cube, &det.grid, s, &normals, p);
            if ev.kind == EventKind::None {
                continue;
            }
            let before = chi(s);
            let mut trial = s.clone();
            if let Ok(out) = execute(&mut trial, &ev, p) {
                for m in trial.meshes() {
                    if let Err(e) = m.check_closed_manifold().and_then(|_| m.check_face_areas()) {
                        log.failures.push(format!("{} left a bad mesh: {e}", out.kind));
                    }
                }
                let after = chi(&trial);
                if !euler_delta_ok(out.kind, before, after) {
                    log.failures.push(format!("{}: chi {before} -> {after}", out.kind));
                }
                log.kinds.push(out.kind);
                *s = trial;
                continue 'outer;
            }
        }
        break;
    }
    log
}
