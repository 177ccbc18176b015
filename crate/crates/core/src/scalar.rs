use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by every routine in the crate (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

/// Tolerance for "exact up to representation error" checks such as skew
/// or symmetric structure: `1e-12` in double precision, scaled up with the
/// machine epsilon for narrower types.
pub fn representation_tol<T: Real>() -> T {
    let eps = T::default_epsilon() * lit(1000.0);
    eps.max(lit(1e-12))
}
