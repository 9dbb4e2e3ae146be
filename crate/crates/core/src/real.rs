//! Scalar abstraction for the unit-safe photonics math.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the core math is generic over: `f32` or `f64`.
///
/// The event-level simulation pipeline always runs on `f64` (see the
/// concrete aliases at the crate root); the conversions, entropy and
/// response formulas also instantiate at `f32`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

/// Shorthand for lowering an `f64` literal into the generic scalar.
#[inline]
pub(crate) fn lit<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("literal representable in scalar type")
}

/// Lossy view of a generic scalar as `f64`, for error payloads.
#[inline]
pub(crate) fn as_f64<F: Real>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
