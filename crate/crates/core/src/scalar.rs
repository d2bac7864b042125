//! Scalar abstraction shared by the codec and the metrics.
//!
//! Vertices are stored as `f32` and attribute values as `f64`; both flow
//! through the same quantizer and error statistics via [`Scalar`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point component type: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Name used for the declared component type.
    const NAME: &'static str;

    /// Widen to `f64` without loss.
    fn to_f64_lossless(self) -> f64;

    /// Narrow from `f64`, rounding to nearest.
    fn from_f64_nearest(v: f64) -> Self;
}

impl Scalar for f32 {
    const NAME: &'static str = "float32";

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64_nearest(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "float64";

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64_nearest(v: f64) -> Self {
        v
    }
}
