//! Floating-point scalar abstraction shared by every numeric kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the pipeline is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Magnitude below which a simplex pivot element or reduced cost is
    /// treated as zero.
    const PIVOT_TOLERANCE: f64;

    /// Converts from `f64`, panicking only on values the type cannot
    /// represent at all (never the case for finite inputs).
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to scalar")
    }

    #[inline]
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }

    #[inline]
    fn pivot_tolerance() -> Self {
        Self::of(Self::PIVOT_TOLERANCE)
    }
}

impl Scalar for f32 {
    const PIVOT_TOLERANCE: f64 = 1e-5;
}

impl Scalar for f64 {
    const PIVOT_TOLERANCE: f64 = 1e-9;
}

/// Numerically careful dot product.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
