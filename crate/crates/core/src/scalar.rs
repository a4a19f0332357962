//! Scalar abstraction shared by the numeric modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the dynamics, estimation, regulation and
/// geometry code. Implemented for `f32` and `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal. Infallible for the implementing types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn finite(self) -> bool {
        self.to_f64().is_some_and(f64::is_finite)
    }
}

impl<T: RealField + Copy + FromPrimitive + ToPrimitive> Real for T {}
