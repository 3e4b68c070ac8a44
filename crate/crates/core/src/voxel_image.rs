//! Scalar volumetric images: the raw on-disk format, synthetic phantoms and
//! the mapping between world coordinates and voxel indices.
//!
//! A [`VoxelGrid`] is piecewise constant: each voxel is an axis-aligned cell
//! `origin + [i, i+1) * spacing` carrying one intensity. Data is stored
//! x-fastest, i.e. voxel `(i, j, k)` lives at `i + nx * (j + ny * k)`.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aabb::Aabb;
use crate::error::LoadError;
use crate::scalar::Real;
use crate::vec3::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid<T> {
    dims: [usize; 3],
    origin: Vec3<T>,
    spacing: Vec3<T>,
    data: Vec<T>,
}

/// JSON sidecar describing a raw payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub dtype: String,
    /// Payload path, relative to the header's directory.
    pub data: String,
}

impl<T: Real> VoxelGrid<T> {
    pub fn new(
        dims: [usize; 3],
        origin: Vec3<T>,
        spacing: Vec3<T>,
        data: Vec<T>,
    ) -> Result<Self, LoadError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(LoadError::EmptyDims(dims));
        }
        if (0..3).any(|a| !(spacing[a] > T::zero()) || !spacing[a].is_finite()) {
            return Err(LoadError::NonPositiveSpacing(spacing.to_f64()));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(LoadError::SizeMismatch {
                expected: expected * 4,
                actual: data.len() * 4,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(LoadError::NonFinite(i));
        }
        Ok(VoxelGrid {
            dims,
            origin,
            spacing,
            data,
        })
    }

    /// Grid covering `domain` exactly with `dims` cells, filled by sampling
    /// `f` at voxel centers.
    pub fn from_fn<F: FnMut(Vec3<T>) -> T>(
        dims: [usize; 3],
        domain: Aabb<T>,
        mut f: F,
    ) -> Result<Self, LoadError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(LoadError::EmptyDims(dims));
        }
        let ext = domain.extent();
        let spacing = Vec3::new(
            ext[0] / T::from_usize(dims[0]).unwrap(),
            ext[1] / T::from_usize(dims[1]).unwrap(),
            ext[2] / T::from_usize(dims[2]).unwrap(),
        );
        let mut grid = VoxelGrid {
            dims,
            origin: domain.min,
            spacing,
            data: Vec::new(),
        };
        let mut data = Vec::with_capacity(grid.len());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(grid.voxel_center([i, j, k])));
                }
            }
        }
        grid.data = data;
        VoxelGrid::new(grid.dims, grid.origin, grid.spacing, grid.data)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }
    pub fn spacing(&self) -> Vec3<T> {
        self.spacing
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn voxel_volume(&self) -> T {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    pub fn bounds(&self) -> Aabb<T> {
        let mut max = self.origin;
        for a in 0..3 {
            max[a] += self.spacing[a] * T::from_usize(self.dims[a]).unwrap();
        }
        Aabb::new(self.origin, max)
    }

    #[inline]
    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    #[inline]
    pub fn unravel(&self, lin: usize) -> [usize; 3] {
        let i = lin % self.dims[0];
        let r = lin / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    #[inline]
    pub fn value(&self, idx: [usize; 3]) -> T {
        self.data[self.linear_index(idx)]
    }

    pub fn voxel_center(&self, idx: [usize; 3]) -> Vec3<T> {
        let half = T::lit(0.5);
        let mut c = self.origin;
        for a in 0..3 {
            c[a] += (T::from_usize(idx[a]).unwrap() + half) * self.spacing[a];
        }
        c
    }

    /// Voxel whose closed cell contains `p`. A point on a face shared by two
    /// voxels belongs to the one with the lower index; points outside the
    /// grid give `None`.
    pub fn world_to_voxel(&self, p: Vec3<T>) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let t = (p[a] - self.origin[a]) / self.spacing[a];
            let n = T::from_usize(self.dims[a]).unwrap();
            if !(t >= T::zero() && t <= n) {
                return None;
            }
            let c = t.ceil().to_usize().unwrap_or(0);
            idx[a] = c.saturating_sub(1).min(self.dims[a] - 1);
        }
        Some(idx)
    }

    /// Like [`world_to_voxel`](Self::world_to_voxel) but points outside the
    /// grid snap to the nearest boundary voxel.
    pub fn world_to_voxel_clamped(&self, p: Vec3<T>) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let t = (p[a] - self.origin[a]) / self.spacing[a];
            let c = if t.is_nan() || t <= T::zero() {
                0
            } else {
                t.ceil().to_usize().unwrap_or(usize::MAX).saturating_sub(1)
            };
            idx[a] = c.min(self.dims[a] - 1);
        }
        idx
    }

    /// Intensity of the voxel containing `p` (nearest voxel when outside).
    pub fn sample(&self, p: Vec3<T>) -> T {
        self.value(self.world_to_voxel_clamped(p))
    }

    pub fn min_max(&self) -> (T, T) {
        self.data.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }

    pub fn mean(&self) -> T {
        let sum: f64 = self.data.iter().map(|v| v.to_f64_lossy()).sum();
        T::lit(sum / self.data.len() as f64)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> LoadError {
    if e.kind() == ErrorKind::NotFound {
        LoadError::Missing(path.to_path_buf())
    } else {
        LoadError::Io {
            path: path.to_path_buf(),
            source: e,
        }
    }
}

/// Reads a JSON header and its little-endian `f32` payload.
pub fn load_raw<T: Real>(header_path: impl AsRef<Path>) -> Result<VoxelGrid<T>, LoadError> {
    let header_path = header_path.as_ref();
    let text = fs::read_to_string(header_path).map_err(|e| io_err(header_path, e))?;
    let header: RawHeader = serde_json::from_str(&text).map_err(|e| LoadError::Header {
        path: header_path.to_path_buf(),
        message: e.to_string(),
    })?;
    if header.dtype != "f32" {
        return Err(LoadError::Dtype(header.dtype));
    }
    if header.spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(LoadError::NonPositiveSpacing(header.spacing));
    }
    if header.dims.iter().any(|&d| d == 0) {
        return Err(LoadError::EmptyDims(header.dims));
    }
    let payload_path = payload_path(header_path, &header.data);
    let bytes = fs::read(&payload_path).map_err(|e| io_err(&payload_path, e))?;
    let n = header.dims[0] * header.dims[1] * header.dims[2];
    if bytes.len() != 4 * n {
        return Err(LoadError::SizeMismatch {
            expected: 4 * n,
            actual: bytes.len(),
        });
    }
    let data: Vec<T> = bytes
        .chunks_exact(4)
        .map(|c| T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect();
    VoxelGrid::new(
        header.dims,
        Vec3::from_f64(header.origin),
        Vec3::from_f64(header.spacing),
        data,
    )
}

fn payload_path(header_path: &Path, rel: &str) -> PathBuf {
    match header_path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => dir.join(rel),
        _ => PathBuf::from(rel),
    }
}

/// Writes `grid` as `header_path` plus a payload file next to it named after
/// the header stem with a `.raw` extension. Returns the payload path.
pub fn save_raw<T: Real>(
    grid: &VoxelGrid<T>,
    header_path: impl AsRef<Path>,
) -> Result<PathBuf, LoadError> {
    let header_path = header_path.as_ref();
    let stem = header_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".to_string());
    let rel = format!("{stem}.raw");
    let header = RawHeader {
        dims: grid.dims,
        spacing: grid.spacing.to_f64(),
        origin: grid.origin.to_f64(),
        dtype: "f32".to_string(),
        data: rel.clone(),
    };
    let mut bytes = Vec::with_capacity(grid.len() * 4);
    for v in &grid.data {
        bytes.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
    let payload = payload_path(header_path, &rel);
    fs::write(&payload, bytes).map_err(|e| io_err(&payload, e))?;
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(header_path, text).map_err(|e| io_err(header_path, e))?;
    Ok(payload)
}

/// Synthetic binary test volumes: 0 inside the object, 1 outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phantom {
    /// Balls of radius 0.8 centred at `(±1.2, 0, 0)`.
    TwoBalls,
    /// Ball at the origin.
    OneBall { radius: f64 },
    /// Torus around the z axis with major radius 1.2 and tube radius 0.4.
    Torus,
    CustomBall { center: [f64; 3], radius: f64 },
    CustomTorus { major: f64, minor: f64 },
}

impl Phantom {
    /// Parses the CLI spelling of a phantom kind.
    pub fn parse(kind: &str, radius: Option<f64>, center: Option<[f64; 3]>, major: Option<f64>, minor: Option<f64>) -> Option<Self> {
        Some(match kind {
            "two_balls" => Phantom::TwoBalls,
            "one_ball" => Phantom::OneBall {
                radius: radius.unwrap_or(0.6),
            },
            "torus" => Phantom::Torus,
            "custom_ball" | "custom-ball" => Phantom::CustomBall {
                center: center.unwrap_or([0.0; 3]),
                radius: radius?,
            },
            "custom_torus" | "custom-torus" => Phantom::CustomTorus {
                major: major?,
                minor: minor?,
            },
            _ => return None,
        })
    }

    /// Domain used by the reference experiments for this phantom.
    pub fn default_domain(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            Phantom::TwoBalls => ([-2.5, -1.5, -1.5], [2.5, 1.5, 1.5]),
            Phantom::OneBall { radius } if *radius <= 0.6 => ([-1.2, -0.8, -0.8], [1.2, 0.8, 0.8]),
            Phantom::OneBall { radius } => {
                let h = 1.5 * radius;
                ([-h; 3], [h; 3])
            }
            Phantom::Torus => ([-1.8, -1.8, -1.8], [1.8, 1.8, 1.8]),
            Phantom::CustomBall { center, radius } => {
                let h = 1.5 * radius;
                (
                    [center[0] - h, center[1] - h, center[2] - h],
                    [center[0] + h, center[1] + h, center[2] + h],
                )
            }
            Phantom::CustomTorus { major, minor } => {
                let h = 1.5 * (major + minor);
                ([-h; 3], [h; 3])
            }
        }
    }

    /// True if `p` lies in the (closed) object.
    pub fn inside(&self, p: [f64; 3]) -> bool {
        let ball = |c: [f64; 3], r: f64| {
            let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= r * r
        };
        let torus = |big: f64, small: f64| {
            let rho = (p[0] * p[0] + p[1] * p[1]).sqrt() - big;
            rho * rho + p[2] * p[2] <= small * small
        };
        match self {
            Phantom::TwoBalls => ball([-1.2, 0.0, 0.0], 0.8) || ball([1.2, 0.0, 0.0], 0.8),
            Phantom::OneBall { radius } => ball([0.0; 3], *radius),
            Phantom::Torus => torus(1.2, 0.4),
            Phantom::CustomBall { center, radius } => ball(*center, *radius),
            Phantom::CustomTorus { major, minor } => torus(*major, *minor),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            Phantom::OneBall { radius } | Phantom::CustomBall { radius, .. } if !(*radius > 0.0) => {
                Err(format!("radius must be positive, got {radius}"))
            }
            Phantom::CustomTorus { major, minor } if !(*minor > 0.0 && *major > *minor) => {
                Err(format!("torus needs 0 < minor < major, got R={major}, r={minor}"))
            }
            _ => Ok(()),
        }
    }
}

/// Samples `phantom` at the voxel centers of a `dims` grid spanning `domain`.
pub fn make_phantom<T: Real>(
    phantom: &Phantom,
    dims: [usize; 3],
    domain: Aabb<T>,
) -> Result<VoxelGrid<T>, crate::Error> {
    phantom.validate().map_err(crate::Error::Param)?;
    if dims.iter().any(|&d| d < 2) {
        return Err(crate::Error::Param(format!("phantom dims must be >= 2 per axis, got {dims:?}")));
    }
    if !domain.is_solid() {
        return Err(crate::Error::Param("phantom domain has zero extent".into()));
    }
    let grid = VoxelGrid::from_fn(dims, domain, |c| {
        if phantom.inside(c.to_f64()) {
            T::zero()
        } else {
            T::one()
        }
    })?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> VoxelGrid<f64> {
        VoxelGrid::new(
            [2, 2, 2],
            Vec3::zero(),
            Vec3::splat(1.0),
            vec![1.0; 8],
        )
        .unwrap()
    }

    #[test]
    fn voxel_lookup_center_and_ties() {
        let g = unit_grid();
        assert_eq!(g.world_to_voxel(Vec3::splat(0.5)), Some([0, 0, 0]));
        assert_eq!(g.world_to_voxel(Vec3::new(1.0, 0.5, 1.5)), Some([0, 0, 1]));
        assert_eq!(g.world_to_voxel(Vec3::new(0.0, 0.0, 0.0)), Some([0, 0, 0]));
        assert_eq!(g.world_to_voxel(Vec3::new(2.0, 2.0, 2.0)), Some([1, 1, 1]));
        assert_eq!(g.world_to_voxel(Vec3::new(2.1, 0.5, 0.5)), None);
        assert_eq!(g.world_to_voxel(Vec3::new(-1e-9, 0.5, 0.5)), None);
    }

    #[test]
    fn clamped_lookup_snaps_to_boundary() {
        let g = unit_grid();
        assert_eq!(g.world_to_voxel_clamped(Vec3::new(-5.0, 9.0, 0.2)), [0, 1, 0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            VoxelGrid::new([2, 2, 2], Vec3::zero(), Vec3::new(1.0, 0.0, 1.0), vec![0.0; 8]),
            Err(LoadError::NonPositiveSpacing(_))
        ));
        assert!(matches!(
            VoxelGrid::new([2, 2, 2], Vec3::zero(), Vec3::splat(1.0), vec![0.0; 7]),
            Err(LoadError::SizeMismatch { .. })
        ));
        let mut d = vec![0.0; 8];
        d[3] = f64::NAN;
        assert!(matches!(
            VoxelGrid::new([2, 2, 2], Vec3::zero(), Vec3::splat(1.0), d),
            Err(LoadError::NonFinite(3))
        ));
    }

    #[test]
    fn two_balls_values() {
        let p = Phantom::TwoBalls;
        assert!(p.inside([1.2, 0.0, 0.0]));
        assert!(p.inside([-1.2, 0.0, 0.0]));
        assert!(!p.inside([-2.5, -1.5, -1.5]));
        assert!(!p.inside([0.0, 0.0, 0.0]));
    }

    #[test]
    fn one_ball_and_torus_values() {
        assert!(Phantom::OneBall { radius: 0.6 }.inside([0.0; 3]));
        assert!(Phantom::OneBall { radius: 0.6 }.inside([0.6, 0.0, 0.0]));
        assert!(Phantom::Torus.inside([1.2, 0.0, 0.0]));
        assert!(!Phantom::Torus.inside([0.0, 0.0, 0.0]));
    }

    #[test]
    fn phantom_grid_is_binary() {
        let (lo, hi) = Phantom::TwoBalls.default_domain();
        let g = make_phantom::<f64>(&Phantom::TwoBalls, [20, 12, 12], Aabb::from_f64(lo, hi)).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0 || v == 1.0));
        // voxel containing (1.2, 0, 0) is inside the right ball
        assert_eq!(g.sample(Vec3::new(1.2, 0.0, 0.0)), 0.0);
        assert_eq!(g.sample(Vec3::new(-2.49, -1.49, -1.49)), 1.0);
    }

    #[test]
    fn phantom_rejects_degenerate_domain() {
        let r = make_phantom::<f64>(
            &Phantom::TwoBalls,
            [4, 4, 4],
            Aabb::from_f64([0.0; 3], [1.0, 0.0, 1.0]),
        );
        assert!(r.is_err());
        assert!(Phantom::parse("cube", None, None, None, None).is_none());
    }
}
