//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64`
//! giving roughly 31 significant decimal digits.
//!
//! Every constructor and operation returns a normalized pair with
//! `|lo| <= ulp(hi) / 2`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Num, One, Zero};

use super::scalar::{Field, Scalar};

#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if !s.is_finite() {
        return (s, 0.0);
    }
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if !p.is_finite() {
        return (p, 0.0);
    }
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };
    pub const LN_2: Self = Self {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };
    pub const E: Self = Self {
        hi: std::f64::consts::E,
        lo: 1.445_646_891_729_250_2e-16,
    };
    pub const PI: Self = Self {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };
    /// Relative precision of one operation on normalized inputs.
    pub const EPSILON: f64 = 4.930_380_657_631_324e-32;

    /// Builds a normalized value from an arbitrary pair.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        if !hi.is_finite() {
            return Self { hi, lo: 0.0 };
        }
        Self { hi, lo }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact product of two doubles.
    pub fn from_product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    /// Exact sum of two doubles.
    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Self { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let p2 = p2 + self.lo * b;
        let (hi, lo) = fast_two_sum(p1, p2);
        Self { hi, lo }
    }

    pub fn add_f64(self, b: f64) -> Self {
        let (s1, s2) = two_sum(self.hi, b);
        let s2 = s2 + self.lo;
        let (hi, lo) = fast_two_sum(s1, s2);
        Self { hi, lo }
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn recip(self) -> Self {
        Self::ONE / self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            if self.hi == 0.0 {
                return Self::ZERO;
            }
            return Self { hi: f64::NAN, lo: 0.0 };
        }
        let q = self.hi.sqrt();
        let r = self - Self::from_product(q, q);
        let (hi, lo) = fast_two_sum(q, r.hi / (2.0 * q));
        Self { hi, lo }
    }

    /// `ln |self|` rounded to `f64`.
    pub fn ln_abs_f64(self) -> f64 {
        let a = self.hi.abs();
        if a == 0.0 {
            return f64::NEG_INFINITY;
        }
        a.ln() + (self.lo / self.hi).ln_1p()
    }

    /// Natural exponential.
    pub fn exp(self) -> Self {
        if self.hi > 709.7 {
            return Self {
                hi: f64::INFINITY,
                lo: 0.0,
            };
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        // x = k ln2 + r, |r| <= ln2/2; expm1 of r/2^10 by Taylor series, then
        // undo the shrink with s -> s(s + 2), which keeps expm1's relative accuracy.
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = self - Self::LN_2.mul_f64(k);
        let r = r.scale_pow2(-10);
        let mut term = r;
        let mut sum = r;
        for i in 2..=12 {
            term = (term * r) / Self::from(i as f64);
            sum += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * (sum + Self::from(2.0));
        }
        let sum = sum + Self::ONE;
        sum.scale_pow2(k as i32)
    }

    /// Natural logarithm (NaN for non-positive input).
    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Self { hi: f64::NAN, lo: 0.0 };
        }
        // Two Newton steps on exp(y) = x from the f64 guess.
        let mut y = Self::from(self.hi.ln());
        for _ in 0..2 {
            let e = y.exp();
            y = y + (self - e) / e;
        }
        y
    }

    /// `2 cosh(x)` together with `2 cosh(x) - 2 = 4 sinh^2(x/2)`, both in extended
    /// precision; the second form keeps full relative accuracy for small `x`.
    pub fn two_cosh_and_excess(x: Self) -> (Self, Self) {
        let e = x.exp();
        let two_cosh = e + e.recip();
        let half = x.scale_pow2(-1);
        let eh = half.exp();
        let sinh_half = (eh - eh.recip()).scale_pow2(-1);
        let excess = sinh_half.sqr().scale_pow2(2);
        (two_cosh, excess)
    }
}

impl From<f64> for DoubleDouble {
    #[inline]
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }
}

impl From<i32> for DoubleDouble {
    fn from(x: i32) -> Self {
        Self { hi: x as f64, lo: 0.0 }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = fast_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = fast_two_sum(s1, s2);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = fast_two_sum(p1, p2);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Self { hi: q1, lo: 0.0 };
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = fast_two_sum(q1, q2);
        Self { hi, lo }.add_f64(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, b: Self) -> Self {
        let q = (self / b).to_f64().trunc();
        self - b.mul_f64(q)
    }
}

macro_rules! forward_assign {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for DoubleDouble {
            #[inline]
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    };
}
forward_assign!(AddAssign, add_assign, +);
forward_assign!(SubAssign, sub_assign, -);
forward_assign!(MulAssign, mul_assign, *);
forward_assign!(DivAssign, div_assign, /);

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        Self::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        Self::ONE
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = num_traits::ParseFloatError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Self::from)
    }
}

impl Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl Product for DoubleDouble {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, |a, b| a * b)
    }
}

impl Field for DoubleDouble {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Self::from(x)
    }
    #[inline]
    fn magnitude_sq(self) -> f64 {
        self.hi * self.hi
    }
    #[inline]
    fn scale_pow2(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Self {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }
}

impl Scalar for DoubleDouble {
    const UNIT_ROUNDOFF: f64 = Self::EPSILON;
    const NAME: &'static str = "double-double";

    #[inline]
    fn to_f64(self) -> f64 {
        DoubleDouble::to_f64(self)
    }
    #[inline]
    fn from_dd(x: DoubleDouble) -> Self {
        x
    }
    #[inline]
    fn to_dd(self) -> DoubleDouble {
        self
    }
    #[inline]
    fn abs(self) -> Self {
        DoubleDouble::abs(self)
    }
    fn sqrt(self) -> Self {
        DoubleDouble::sqrt(self)
    }
    #[inline]
    fn ln_abs(self) -> f64 {
        self.ln_abs_f64()
    }
}
