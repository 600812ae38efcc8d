//! Scalar abstraction: the numeric element type of every matrix in this crate.
//!
//! All linear algebra here is generic over [`Scalar`] so the same code runs in
//! f32 and f64. Concrete f64 aliases live at the crate root; f64 is what the
//! benchmark harness uses.

use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type usable as a matrix element.
///
/// `nalgebra::RealField` supplies the field operations and elementary
/// functions; the `num-traits` conversions bridge to the f64 constants used
/// for tolerances and budgets.
pub trait Scalar:
    nalgebra::RealField
    + Copy
    + Default
    + FromPrimitive
    + ToPrimitive
    + PartialOrd
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon of the concrete type.
    fn eps() -> Self;

    /// Shorthand for lossy conversion from an f64 constant.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant converts to Scalar")
    }

    /// Lossy view as f64 (used for reports and RNG thresholds).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f64 {
    fn eps() -> f64 {
        f64::EPSILON
    }
}

impl Scalar for f32 {
    fn eps() -> f32 {
        f32::EPSILON
    }
}
