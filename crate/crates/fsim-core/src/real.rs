//! Scalar abstraction for the numeric core.
//!
//! Everything numerical in this crate is generic over [`Real`], which is any
//! IEEE float with the conversions we need for constants and sizes. The crate
//! root exposes `f64` aliases for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the numeric core: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant must be representable")
    }

    /// Converts a count into this scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }

    /// Lossy view as `f64`, used at serialization boundaries.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum<Self>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
