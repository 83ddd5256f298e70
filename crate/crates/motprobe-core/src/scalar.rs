//! Floating-point abstraction: every quantity in this crate is generic over
//! [`Real`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign, NumCast};

/// Scalar type for all physical quantities: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal (parameter defaults, tolerances).
    fn from_f64(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("literal not representable")
    }

    /// Widening (or identity) conversion to `f64`.
    fn to_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("scalar convertible to f64")
    }

    /// Parse from the decimal representation written by `Display`.
    fn parse_repr(s: &str) -> Option<Self>;
}

impl Real for f32 {
    fn parse_repr(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

impl Real for f64 {
    fn parse_repr(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

/// 3-vector of scalars, axes (x, y, z); z runs along the fiber.
pub type Vec3<F> = [F; 3];
