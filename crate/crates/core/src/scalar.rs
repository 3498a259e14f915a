//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use ndarray::NdFloat;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Bundles the bounds needed by the factorization kernels.
///
/// Implemented for `f32` and `f64`. `Display` and `FromStr` are required to be
/// shortest round-trip, which both primitive floats guarantee, so matrices can
/// be written to text and read back bit-exactly.
pub trait Scalar:
    NdFloat + Float + FromPrimitive + ToPrimitive + Sum + FromStr + Debug + Display + LowerExp + Default
{
    /// Converts an `f64` constant into the scalar type.
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("finite literal")
    }

    /// Widens to `f64` for reporting.
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: NdFloat + Float + FromPrimitive + ToPrimitive + Sum + FromStr + Debug + Display + LowerExp + Default
{
}
