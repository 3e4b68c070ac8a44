//! Segmentation of volumetric images with evolving triangulated surfaces.
//!
//! Surfaces move under the piecewise-constant region energy
//! `σ |Γ| + λ Σ_k ∫_{Ω_k} (u0 - c_k)^2`, discretized with a mass-lumped
//! parametric finite element scheme. Splits, merges and genus changes are
//! found on a uniform background grid and carried out by mesh surgery.
//!
//! The numerical core is generic over [`Real`] (`f32`/`f64`); the aliases at
//! the crate root fix it to `f64`.

pub mod aabb;
pub mod driver;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod quality;
pub mod region;
pub mod scalar;
pub mod topo;
pub mod trimesh;
pub mod vec3;
pub mod voxel_image;

pub use aabb::Aabb;
pub use error::{Error, Result};
pub use scalar::Real;
pub use vec3::Vec3;

/// `f64` instantiations of the generic types.
pub type Point = vec3::Vec3<f64>;
pub type Grid = voxel_image::VoxelGrid<f64>;
pub type Mesh = trimesh::SurfaceMesh<f64>;
pub type Surfaces = trimesh::SurfaceSet<f64>;
pub type Regions = region::RegionState<f64>;
pub type System = fem::StepSystem<f64>;
pub type Config = driver::RunConfig<f64>;
