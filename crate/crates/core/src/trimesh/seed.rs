//! Initial surfaces: icospheres, capsules and tori.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{edge_key, SurfaceMesh};
use crate::error::MeshError;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Seed shape description. Lengths are in world units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Seed {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Cylinder of `length` along `axis` closed by hemispherical caps.
    Capsule {
        center: [f64; 3],
        axis: [f64; 3],
        length: f64,
        radius: f64,
    },
    /// Torus around `axis` through `center`.
    Torus {
        center: [f64; 3],
        #[serde(default = "z_axis")]
        axis: [f64; 3],
        major: f64,
        minor: f64,
    },
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Builds a closed, outward-oriented mesh of `seed` whose edges are about
/// `edge_length` long.
pub fn make_seed<T: Real>(seed: &Seed, edge_length: f64) -> Result<SurfaceMesh<T>, MeshError> {
    if !(edge_length > 0.0) {
        return Err(MeshError::SeedParams(format!(
            "edge length must be positive, got {edge_length}"
        )));
    }
    let (verts, faces) = match *seed {
        Seed::Sphere { center, radius } => {
            if !(radius > 0.0) {
                return Err(MeshError::SeedParams(format!("radius must be positive, got {radius}")));
            }
            icosphere(center, radius, edge_length)
        }
        Seed::Capsule {
            center,
            axis,
            length,
            radius,
        } => {
            if !(radius > 0.0) || !(length >= 0.0) {
                return Err(MeshError::SeedParams(format!(
                    "capsule needs radius > 0 and length >= 0, got r={radius}, L={length}"
                )));
            }
            let (u, v, d) = frame(axis)?;
            capsule(center, u, v, d, length, radius, edge_length)
        }
        Seed::Torus {
            center,
            axis,
            major,
            minor,
        } => {
            if !(minor > 0.0 && major > minor) {
                return Err(MeshError::SeedParams(format!(
                    "torus needs 0 < minor < major, got R={major}, r={minor}"
                )));
            }
            let (u, v, d) = frame(axis)?;
            torus(center, u, v, d, major, minor, edge_length)
        }
    };
    let vertices = verts.into_iter().map(Vec3::from_f64).collect();
    let mut mesh = SurfaceMesh::new(vertices, faces, 0)?;
    if mesh.signed_volume() < T::zero() {
        for f in &mut mesh.faces {
            f.swap(1, 2);
        }
        mesh.rebuild_adjacency()?;
    }
    if mesh.faces.len() < 8 {
        return Err(MeshError::SeedParams("resolution yields fewer than 8 faces".into()));
    }
    Ok(mesh)
}

type Raw = (Vec<[f64; 3]>, Vec<[usize; 3]>);

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Right-handed orthonormal frame `(u, v, d)` with `d` along `axis`.
fn frame(axis: [f64; 3]) -> Result<([f64; 3], [f64; 3], [f64; 3]), MeshError> {
    let n = norm(axis);
    if !(n > 0.0) {
        return Err(MeshError::SeedParams("axis must be non-zero".into()));
    }
    let d = scale(axis, 1.0 / n);
    let helper = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = cross(helper, d);
    let u = scale(u, 1.0 / norm(u));
    let v = cross(d, u);
    Ok((u, v, d))
}

fn icosphere(center: [f64; 3], radius: f64, edge_length: f64) -> Raw {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    for p in &mut verts {
        *p = scale(*p, 1.0 / norm(*p));
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    // unit icosahedron edge length
    let mut edge = 4.0 / (10.0 + 2.0 * 5f64.sqrt()).sqrt();
    while edge * radius > edge_length {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            *mid.entry(edge_key(a, b)).or_insert_with(|| {
                let p = [
                    verts[a][0] + verts[b][0],
                    verts[a][1] + verts[b][1],
                    verts[a][2] + verts[b][2],
                ];
                verts.push(scale(p, 1.0 / norm(p)));
                verts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
        edge *= 0.5;
    }
    let verts = verts
        .into_iter()
        .map(|p| {
            [
                center[0] + radius * p[0],
                center[1] + radius * p[1],
                center[2] + radius * p[2],
            ]
        })
        .collect();
    (verts, faces)
}

/// Surface of revolution around `d` from a profile of `(axial, radius)`
/// pairs. The first and last profile points must have radius zero (poles).
/// Rings with different vertex counts are stitched by angle.
fn revolve(center: [f64; 3], u: [f64; 3], v: [f64; 3], d: [f64; 3], profile: &[(f64, f64)], edge_length: f64) -> Raw {
    let mut verts = Vec::new();
    let mut rings: Vec<Vec<usize>> = Vec::new();
    let mut offsets = Vec::new();
    for (k, &(a, rho)) in profile.iter().enumerate() {
        let n = if rho <= 0.0 {
            1
        } else {
            ((2.0 * PI * rho / edge_length).round() as usize).max(6)
        };
        // stagger consecutive rings by half a segment
        let off = if k % 2 == 0 { 0.0 } else { 0.5 / n as f64 };
        let mut ring = Vec::with_capacity(n);
        for i in 0..n {
            let phi = 2.0 * PI * (i as f64 / n as f64 + off);
            let (s, c) = phi.sin_cos();
            let r = if n == 1 { 0.0 } else { rho };
            verts.push([
                center[0] + d[0] * a + r * (u[0] * c + v[0] * s),
                center[1] + d[1] * a + r * (u[1] * c + v[1] * s),
                center[2] + d[2] * a + r * (u[2] * c + v[2] * s),
            ]);
            ring.push(verts.len() - 1);
        }
        rings.push(ring);
        offsets.push(off);
    }
    let mut faces = Vec::new();
    for k in 0..rings.len() - 1 {
        let (a, b) = (&rings[k], &rings[k + 1]);
        let (na, nb) = (a.len(), b.len());
        let angle = |i: usize, n: usize, off: f64| i as f64 / n as f64 + off;
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let adv_a = if i >= na {
                false
            } else if j >= nb {
                true
            } else {
                angle(i + 1, na, offsets[k]) <= angle(j + 1, nb, offsets[k + 1])
            };
            if adv_a && na > 1 {
                faces.push([a[i % na], a[(i + 1) % na], b[j % nb]]);
                i += 1;
            } else if !adv_a && nb > 1 {
                faces.push([a[i % na], b[(j + 1) % nb], b[j % nb]]);
                j += 1;
            } else if adv_a {
                i += 1;
            } else {
                j += 1;
            }
        }
    }
    (verts, faces)
}

fn capsule(center: [f64; 3], u: [f64; 3], v: [f64; 3], d: [f64; 3], length: f64, radius: f64, h: f64) -> Raw {
    let half = 0.5 * length;
    let n_cap = ((0.5 * PI * radius / h).ceil() as usize).max(2);
    let n_cyl = (length / h).ceil() as usize;
    let mut profile = Vec::new();
    for k in 0..=n_cap {
        let th = 0.5 * PI * k as f64 / n_cap as f64;
        profile.push((-half - radius * th.cos(), radius * th.sin()));
    }
    for k in 1..n_cyl {
        profile.push((-half + length * k as f64 / n_cyl as f64, radius));
    }
    for k in (0..=n_cap).rev() {
        let th = 0.5 * PI * k as f64 / n_cap as f64;
        profile.push((half + radius * th.cos(), radius * th.sin()));
    }
    // poles exactly on the axis
    profile[0].1 = 0.0;
    profile.last_mut().unwrap().1 = 0.0;
    revolve(center, u, v, d, &profile, h)
}

fn torus(center: [f64; 3], u: [f64; 3], v: [f64; 3], d: [f64; 3], major: f64, minor: f64, h: f64) -> Raw {
    let nu = ((2.0 * PI * major / h).ceil() as usize).max(6);
    let nv = ((2.0 * PI * minor / h).ceil() as usize).max(4);
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let (su, cu) = (2.0 * PI * i as f64 / nu as f64).sin_cos();
        let radial = [u[0] * cu + v[0] * su, u[1] * cu + v[1] * su, u[2] * cu + v[2] * su];
        for j in 0..nv {
            let (sv, cv) = (2.0 * PI * j as f64 / nv as f64).sin_cos();
            let r = major + minor * cv;
            verts.push([
                center[0] + radial[0] * r + d[0] * minor * sv,
                center[1] + radial[1] * r + d[1] * minor * sv,
                center[2] + radial[2] * r + d[2] * minor * sv,
            ]);
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, e) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, e]);
        }
    }
    (verts, faces)
}
