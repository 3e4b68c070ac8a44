use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::vec3::Vec3;

/// Axis-aligned box `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Self {
        Aabb { min, max }
    }

    pub fn from_f64(min: [f64; 3], max: [f64; 3]) -> Self {
        Aabb::new(Vec3::from_f64(min), Vec3::from_f64(max))
    }

    /// Smallest box containing all points; `None` for an empty iterator.
    pub fn from_points<I: IntoIterator<Item = Vec3<T>>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Aabb::new(first, first), |b, p| b.grow_to(p)))
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn diagonal(&self) -> T {
        self.extent().norm()
    }

    /// True if every extent is strictly positive.
    pub fn is_solid(&self) -> bool {
        let e = self.extent();
        (0..3).all(|a| e[a] > T::zero() && e[a].is_finite())
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn grow_to(self, p: Vec3<T>) -> Self {
        Aabb::new(self.min.component_min(p), self.max.component_max(p))
    }

    pub fn union(self, o: Self) -> Self {
        Aabb::new(self.min.component_min(o.min), self.max.component_max(o.max))
    }

    pub fn center(&self) -> Vec3<T> {
        self.min.midpoint(self.max)
    }
}
