//! Floating-point abstraction: every numerical kernel in this crate is
//! generic over [`Scalar`], instantiated at `f32` or `f64`.

use num_traits::{Float, FromPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + core::ops::AddAssign
    + core::ops::SubAssign
    + core::ops::MulAssign
    + core::ops::DivAssign
    + core::iter::Sum
    + core::fmt::Debug
    + core::fmt::Display
    + serde::Serialize
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics only for values a float type
    /// cannot represent at all (never the case for finite f64 -> f32).
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant not representable in this scalar type")
    }

    #[inline]
    fn of_usize(k: usize) -> Self {
        Self::from_usize(k).expect("usize not representable in this scalar type")
    }

    /// Round-trip to `f64`, used only for diagnostics and serialization.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
