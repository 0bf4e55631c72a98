//! Scalar abstraction for weights and aggregate scores.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type usable for weights and aggregates: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance for "weights sum to one".
    fn weight_tolerance() -> Self;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal fits in scalar")
    }
}

impl Scalar for f64 {
    fn weight_tolerance() -> Self {
        1e-9
    }
}

// f32 cannot hold a 1e-9 sum tolerance; a few ulps near 1.0 is the honest bound.
impl Scalar for f32 {
    fn weight_tolerance() -> Self {
        1e-6
    }
}
