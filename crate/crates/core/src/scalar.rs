//! Floating point abstraction shared by the geometry, image and solver code.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Bounded, Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type the numerical core is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + Bounded
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// Relative tolerance suited to the precision of the type.
    fn default_rtol() -> Self;
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
    fn default_rtol() -> Self {
        1e-5
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
    fn default_rtol() -> Self {
        1e-10
    }
}

/// Converts a count or index to a scalar.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).unwrap_or_else(<T as Float>::max_value)
}
