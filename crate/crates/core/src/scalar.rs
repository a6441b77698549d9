//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + FftNum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Smallest positive denominator used when a division would otherwise be 0/0.
    fn division_guard() -> Self;

    /// Lossy conversion from `f64`; constants in this crate always fit.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn division_guard() -> Self {
        1e-30
    }
}

impl Scalar for f64 {
    fn division_guard() -> Self {
        1e-30
    }
}
