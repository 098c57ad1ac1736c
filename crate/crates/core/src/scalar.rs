//! Scalar abstraction: everything numeric is generic over [`Real`].

use std::fmt::{Debug, Display};

/// Floating-point scalar the engine computes with. Implemented for `f32` and
/// `f64`; all tolerances in this crate are stated for `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + num_traits::ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for converting an `f64` literal into the working scalar type.
#[inline]
pub fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 literal must convert into the scalar type")
}

/// Lossy view of a working scalar as `f64`, used when freezing results.
#[inline]
pub fn to_f64<F: Real>(x: F) -> f64 {
    x.to_f64().expect("scalar must convert to f64")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_f32_f64() {
        let a: f32 = real(0.5);
        let b: f64 = real(0.5);
        assert_eq!(a, 0.5f32);
        assert_eq!(b, 0.5f64);
        assert_eq!(to_f64(a), 0.5);
    }
}
