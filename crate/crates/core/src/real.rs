//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};
use rustfft::FftNum;

/// Floating point type the solvers are generic over.
///
/// Implemented for `f32` and `f64`. All tolerances quoted in the docs and
/// tests assume `f64`; `f32` builds work but converge to single precision.
pub trait Real:
    Float
    + FloatConst
    + FftNum
    + NumAssign
    + Default
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn count(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("usize representable")
    }

    /// Absolute value (disambiguates `Float::abs` from `Signed::abs`).
    #[inline]
    fn magnitude(self) -> Self {
        Float::abs(self)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for complex numbers over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub(crate) fn creal<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// Complex scalar from `f64` parts.
#[inline]
pub fn clit<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn is_finite_c<T: Real>(z: &C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
