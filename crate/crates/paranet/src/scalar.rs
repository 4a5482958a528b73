//! Scalar abstraction: the whole engine is generic over the real float type.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar type underlying all computations: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for the complex type built on a [`Scalar`].
pub type C<T> = Complex<T>;

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal out of range for scalar type")
}

/// Complex value from real/imaginary `f64` literals.
#[inline]
pub(crate) fn clit<T: Scalar>(re: f64, im: f64) -> C<T> {
    Complex::new(lit(re), lit(im))
}

/// The imaginary unit.
#[inline]
pub(crate) fn i<T: Scalar>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// 2π, used to convert between Hz and angular frequency.
#[inline]
pub fn two_pi<T: Scalar>() -> T {
    T::PI() + T::PI()
}

/// Hz → rad/s.
#[inline]
pub fn hz_to_rad<T: Scalar>(f: T) -> T {
    f * two_pi()
}

/// rad/s → Hz.
#[inline]
pub fn rad_to_hz<T: Scalar>(w: T) -> T {
    w / two_pi()
}
