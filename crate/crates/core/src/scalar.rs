//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Complex amplitude type used for states and operators.
pub type Complex<T> = num_complex::Complex<T>;

/// Real floating point scalar: `f32` or `f64`.
///
/// Tolerances throughout the crate are written for double precision and
/// rescaled by [`Real::tol`] so that single precision builds stay usable.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// A double precision tolerance widened by the ratio of machine epsilons.
    fn tol(base: f64) -> Self {
        let ratio = Self::default_epsilon().to_f64().unwrap_or(f64::EPSILON) / f64::EPSILON;
        Self::lit(base * ratio.max(1.0))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Modulus of a complex scalar.
pub(crate) fn modulus<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
