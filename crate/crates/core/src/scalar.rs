//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type so the same code runs in `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum<Self>
        + Debug
        + Display
        + Default
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` constant into the working scalar type.
///
/// Panics only if the target type cannot represent any `f64` (never for
/// `f32`/`f64`, which saturate or round).
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("scalar type must convert from f64")
}
