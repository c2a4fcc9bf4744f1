//! Scalar abstraction: everything numeric in this crate is generic over
//! [`Real`], which is implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar used throughout the pipeline.
///
/// The supertraits cover what the numeric kernels actually need: IEEE
/// float semantics, in-place arithmetic, summation, conversion from
/// literals, and thread-safety so tensors can be processed with rayon.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Send + Sync + Debug + Display + 'static
{
    /// Lossy conversion from `f64`, for literals and precomputed
    /// constants. Infallible: every `f64` has a nearest representable
    /// value in both supported types.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    /// Lossy conversion to `f64`, for accumulation and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_between_widths() {
        assert_eq!(f32::of(0.5), 0.5f32);
        assert_eq!(f64::of(0.5), 0.5f64);
        assert_eq!(1.25f32.to_f64_lossy(), 1.25f64);
        assert_eq!(f32::of(1e300), f32::INFINITY);
    }
}
