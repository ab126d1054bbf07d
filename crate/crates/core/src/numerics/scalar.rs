//! Scalar abstractions shared by every kernel.
//!
//! Transfer products, discriminant evaluation and root refinement are written
//! once against these traits and instantiated for `f64` (standard precision),
//! [`DoubleDouble`] (extended precision) and their complex counterparts.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::Num;

use super::dd::DoubleDouble;

/// A ring element the transfer-matrix kernels can run on: real or complex,
/// standard or extended precision.
pub trait Field: Copy + Debug + Send + Sync + Num + Neg<Output = Self> + 'static {
    fn from_f64(x: f64) -> Self;

    /// Squared magnitude rounded to `f64`; only used for rescaling decisions.
    fn magnitude_sq(self) -> f64;

    /// Exact multiplication by `2^k`.
    fn scale_pow2(self, k: i32) -> Self;
}

/// A totally ordered real [`Field`].
pub trait Scalar: Field + PartialOrd {
    /// Relative rounding error of one arithmetic operation.
    const UNIT_ROUNDOFF: f64;

    /// Short tag used in manifests and error messages.
    const NAME: &'static str;

    fn to_f64(self) -> f64;
    fn from_dd(x: DoubleDouble) -> Self;
    fn to_dd(self) -> DoubleDouble;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;

    /// `ln |self|`, `-inf` for zero.
    fn ln_abs(self) -> f64;

    fn signum_i8(self) -> i8 {
        if self > Self::zero() {
            1
        } else if self < Self::zero() {
            -1
        } else {
            0
        }
    }

    fn midpoint(a: Self, b: Self) -> Self {
        (a + b).scale_pow2(-1)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

macro_rules! impl_native_float {
    ($t:ty, $name:literal) => {
        impl Field for $t {
            #[inline]
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn magnitude_sq(self) -> f64 {
                let x = self as f64;
                x * x
            }
            #[inline]
            fn scale_pow2(self, k: i32) -> Self {
                self * (2.0 as $t).powi(k)
            }
        }

        impl Scalar for $t {
            const UNIT_ROUNDOFF: f64 = <$t>::EPSILON as f64 / 2.0;
            const NAME: &'static str = $name;

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn from_dd(x: DoubleDouble) -> Self {
                x.to_f64() as $t
            }
            #[inline]
            fn to_dd(self) -> DoubleDouble {
                DoubleDouble::from(self as f64)
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn ln_abs(self) -> f64 {
                (self as f64).abs().ln()
            }
        }
    };
}

impl_native_float!(f32, "f32");
impl_native_float!(f64, "f64");

impl<T: Scalar> Field for Complex<T> {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Complex::new(T::from_f64(x), T::zero())
    }
    #[inline]
    fn magnitude_sq(self) -> f64 {
        self.re.magnitude_sq() + self.im.magnitude_sq()
    }
    #[inline]
    fn scale_pow2(self, k: i32) -> Self {
        Complex::new(self.re.scale_pow2(k), self.im.scale_pow2(k))
    }
}

/// Lossy conversion of a complex value to `Complex<f64>`.
pub fn complex_to_f64<T: Scalar>(z: Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

/// Embeds a `Complex<f64>` into `Complex<T>`.
pub fn complex_from_f64<T: Scalar>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

pub fn complex_abs<T: Scalar>(z: Complex<T>) -> f64 {
    z.magnitude_sq().sqrt()
}
