//! Scalar abstraction: every numerical routine in this crate is generic over
//! the floating point type through [`Scalar`], with `f64` aliases exported at
//! the crate root.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

/// Floating point scalar usable throughout the crate (`f32` or `f64`).
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + std::str::FromStr
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` constant. Panics only for values a
    /// float type cannot represent at all, which never happens for the
    /// literals used here.
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("constant not representable")
    }

    /// `self` as `f64`, for reporting and CSV emission.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from U[0, 1).
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardUniform.sample(rng)
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn uniform_01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardUniform.sample(rng)
    }
}
