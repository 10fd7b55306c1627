//! Scalar abstraction: every numerical routine in this crate is generic over the
//! real scalar type, so the whole stack can run in `f32` or `f64`. The crate root
//! exports `f64` aliases for the common types; `f64` is what the CLI uses.

use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the solvers are generic over. `nalgebra::RealField` supplies the
/// transcendental functions and matrix support, the `num-traits` bounds supply
/// lossless-enough conversions from literal constants.
pub trait Scalar:
    nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Default + std::fmt::Display
{
    /// Convert an `f64` constant into this scalar type.
    ///
    /// Panics if the conversion is not representable, which cannot happen for
    /// the finite constants used in this crate.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert")
    }

    /// Back to `f64`, for I/O formatting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }

    /// Machine epsilon of this scalar type, for width-aware tolerances.
    fn eps() -> Self {
        <Self as approx::AbsDiffEq>::default_epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Angular frequency (rad/s) from a frequency in Hz.
pub fn omega_from_hz<S: Scalar>(f_hz: S) -> S {
    S::two_pi() * f_hz
}

/// Frequency in Hz from an angular frequency (rad/s).
pub fn hz_from_omega<S: Scalar>(omega: S) -> S {
    omega / S::two_pi()
}
