//! Small fixed-size 3-vector used for vertex positions and normals.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T>(pub [T; 3]);

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Vec3([x, y, z])
    }

    #[inline]
    pub fn zero() -> Self {
        Vec3([T::zero(); 3])
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Vec3([v; 3])
    }

    pub fn from_f64(p: [f64; 3]) -> Self {
        Vec3([T::lit(p[0]), T::lit(p[1]), T::lit(p[2])])
    }

    pub fn to_f64(self) -> [f64; 3] {
        [
            self.0[0].to_f64_lossy(),
            self.0[1].to_f64_lossy(),
            self.0[2].to_f64_lossy(),
        ]
    }

    #[inline]
    pub fn x(self) -> T {
        self.0[0]
    }
    #[inline]
    pub fn y(self) -> T {
        self.0[1]
    }
    #[inline]
    pub fn z(self) -> T {
        self.0[2]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        let [a0, a1, a2] = self.0;
        let [b0, b1, b2] = o.0;
        Vec3([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }

    pub fn midpoint(self, o: Self) -> Self {
        (self + o) * T::lit(0.5)
    }

    pub fn component_min(self, o: Self) -> Self {
        Vec3([self.0[0].min(o.0[0]), self.0[1].min(o.0[1]), self.0[2].min(o.0[2])])
    }

    pub fn component_max(self, o: Self) -> Self {
        Vec3([self.0[0].max(o.0[0]), self.0[1].max(o.0[1]), self.0[2].max(o.0[2])])
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Angle to `o` in degrees; `None` if either vector is zero.
    pub fn angle_deg(self, o: Self) -> Option<T> {
        let d = self.norm() * o.norm();
        if d <= T::zero() {
            return None;
        }
        let c = (self.dot(o) / d).max(-T::one()).min(T::one());
        Some(c.acos().to_degrees())
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Vec3([self.0[0] / s, self.0[1] / s, self.0[2] / s])
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec3<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_right_handed() {
        let x = Vec3::<f64>::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn angle_of_opposite_vectors() {
        let a = Vec3::<f64>::new(0.0, 0.0, 2.0);
        assert!((a.angle_deg(-a).unwrap() - 180.0).abs() < 1e-9);
        assert!(a.angle_deg(Vec3::zero()).is_none());
    }
}
