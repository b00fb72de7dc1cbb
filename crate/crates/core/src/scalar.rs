//! Scalar abstraction: every numeric kernel in this crate is generic over
//! [`Real`], instantiated as `f32` or `f64`. The crate root exposes `f64`
//! aliases for the common types.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar usable throughout the toolkit.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for constants and tolerances.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dot product of two equal-length slices.
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Squared Euclidean norm.
pub(crate) fn norm_sq<F: Real>(a: &[F]) -> F {
    dot(a, a)
}
