//! Scalar abstraction for the numeric core.
//!
//! Geometry, vehicle dynamics, and the tree solver are generic over [`Real`]
//! so the same code runs at `f32` or `f64`. The planning pipeline itself is
//! instantiated at `f64` through the aliases exported from the crate root.

use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the numeric core.
pub trait Real: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}

impl<T> Real for T where T: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn real<T: Real>(value: f64) -> T {
    T::from_f64(value).expect("literal not representable in scalar type")
}

/// Converts the working scalar to `f64` for diagnostics and export.
#[inline]
pub fn to_f64<T: Real>(value: T) -> f64 {
    value.to_f64().expect("scalar representable as f64")
}
