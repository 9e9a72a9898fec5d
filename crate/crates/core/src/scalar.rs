//! Scalar types the error functionals can be evaluated in.
//!
//! Everything that only needs field arithmetic and a floor (`frac`, `B2`, the
//! pair kernel, squared worst-case errors, the half-shift average) is generic
//! over [`Scalar`], which covers `f32`, `f64` and exact rationals. Anything
//! that takes a square root or a real power (κ, the ζ bound, the CBC
//! searches) additionally requires [`Real`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, Num};

/// Exact rational scalar used by the reference checks.
pub type Rational = Ratio<i128>;

pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// `num / den`, rounded once for floating types.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn floor_value(self) -> Self;

    fn is_finite_value(self) -> bool;

    fn approx_f64(self) -> f64;

    /// Nearest representable value; `None` if `x` cannot be represented.
    fn from_f64_value(x: f64) -> Option<Self>;

    fn from_count(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn abs_value(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }
}

/// Floating scalars: everything in [`Scalar`] plus `sqrt`, `powf` and constants.
pub trait Real: Scalar + Float + FloatConst {}

macro_rules! impl_float_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            #[inline]
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $f / den as $f
            }
            #[inline]
            fn floor_value(self) -> Self {
                self.floor()
            }
            #[inline]
            fn is_finite_value(self) -> bool {
                self.is_finite()
            }
            #[inline]
            fn approx_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn from_f64_value(x: f64) -> Option<Self> {
                Some(x as $f)
            }
        }

        impl Real for $f {}
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Rational {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num as i128, den as i128)
    }

    fn floor_value(self) -> Self {
        self.floor()
    }

    fn is_finite_value(self) -> bool {
        true
    }

    fn approx_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn from_f64_value(x: f64) -> Option<Self> {
        Ratio::approximate_float(x)
    }
}
