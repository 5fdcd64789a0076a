//! Floating-point scalar abstraction for the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Parses the shortest round-trip decimal form written by `Display`.
    fn parse_exact(s: &str) -> Option<Self>;

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn parse_exact(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Scalar for f64 {
    fn parse_exact(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}
