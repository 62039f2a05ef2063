//! Scalar abstractions shared by the numeric modules.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::ToPrimitive;
use rustfft::FftNum;

/// Complex numbers over a [`Real`] scalar.
pub type Complex<T> = num_complex::Complex<T>;

/// Floating point scalar used by the grid, evolution and resolvent code.
pub trait Real: RealField + FftNum + Copy + ToPrimitive + Display + Debug + Default {
    /// Machine epsilon.
    fn eps() -> Self;

    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    fn count(n: usize) -> Self {
        nalgebra::convert(n as f64)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

/// Scalar for rates and exponents in the theorem calculus.
///
/// Implemented for floats and for exact rationals, so the exponent
/// formulas can be checked symbolically.
pub trait Rate: num_traits::Num + Clone + PartialOrd + Debug + Display + ToPrimitive {
    fn int(n: i64) -> Self;
}

impl Rate for f64 {
    fn int(n: i64) -> Self {
        n as f64
    }
}

impl Rate for f32 {
    fn int(n: i64) -> Self {
        n as f32
    }
}

impl Rate for num_rational::Ratio<i64> {
    fn int(n: i64) -> Self {
        num_rational::Ratio::from_integer(n)
    }
}

impl Rate for num_rational::Ratio<i128> {
    fn int(n: i64) -> Self {
        num_rational::Ratio::from_integer(n as i128)
    }
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

pub(crate) fn norm_sq<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}
