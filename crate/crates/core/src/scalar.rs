//! Floating point abstraction shared by every module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the solver is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every supported scalar can represent (a rounding of) any `f64`.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    fn from_usize_lossy(value: usize) -> Self {
        Self::from_usize(value).expect("usize representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
