//! Scalar abstraction for the set calculus.
//!
//! Everything numeric in the core modules is generic over [`Real`], a small
//! bundle of the num-traits and nalgebra capabilities we actually use. The
//! crate root exports `f64` aliases for the common case; `f32` works the same
//! way with looser tolerances.

use std::fmt;

/// Floating-point scalar usable by the set operations and the LP kernel.
pub trait Real:
    Copy
    + fmt::Display
    + nalgebra::RealField
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
{
    /// Feasibility / optimality tolerance matched to the scalar's precision.
    fn default_tol() -> Self;

    /// True when the value is neither infinite nor NaN.
    fn is_finite(self) -> bool;
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-9
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-5
    }

    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

/// Converts an `f64` literal into the working scalar.
///
/// Panics only on conversions that cannot represent the value at all, which
/// cannot happen for the finite constants this crate feeds it.
pub fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 converts to the working scalar")
}
