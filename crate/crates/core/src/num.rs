//! Scalar abstraction shared by the cost model and the swarm optimizer.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point type usable by the generic numeric code (`f32`, `f64`).
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {}

/// Converts an `f64` constant into the target scalar.
#[inline]
pub fn lit<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("f64 constant representable in scalar type")
}

/// Converts a scalar back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Scalar>(value: T) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
