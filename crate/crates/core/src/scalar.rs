//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point type usable by the geometry kernels.
///
/// Implemented for `f32` and `f64`. The verification layer and the command
/// line driver are pinned to `f64`; the algebraic kernels are generic.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Scalar>(k: usize) -> T {
    T::from_usize(k).expect("count representable in scalar type")
}

/// Largest absolute value in a slice, zero for an empty slice.
pub fn max_abs<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}
