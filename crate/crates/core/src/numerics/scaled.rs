//! Sign plus natural-log-magnitude representation for quantities that grow
//! like `exp(gamma * n)` and would overflow a plain `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::scalar::Scalar;

/// `sign * exp(logmag)`; zero is `(0, -inf)`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledReal {
    sign: i8,
    logmag: f64,
}

impl ScaledReal {
    pub const ZERO: Self = Self {
        sign: 0,
        logmag: f64::NEG_INFINITY,
    };
    pub const ONE: Self = Self { sign: 1, logmag: 0.0 };

    /// Builds a value from its parts. A zero sign forces `logmag = -inf`, and
    /// `logmag = -inf` forces a zero sign.
    pub fn new(sign: i8, logmag: f64) -> Self {
        if sign == 0 || logmag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                sign: sign.signum(),
                logmag,
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(x.signum() as i8 * (x != 0.0) as i8, x.abs().ln())
    }

    /// `x * 2^k` without forming `2^k`.
    pub fn from_scalar_pow2<T: Scalar>(x: T, k: i64) -> Self {
        let sign = x.signum_i8();
        if sign == 0 {
            return Self::ZERO;
        }
        Self::new(sign, x.ln_abs() + k as f64 * std::f64::consts::LN_2)
    }

    pub fn from_scalar<T: Scalar>(x: T) -> Self {
        Self::from_scalar_pow2(x, 0)
    }

    #[inline]
    pub fn sign(self) -> i8 {
        self.sign
    }

    #[inline]
    pub fn logmag(self) -> f64 {
        self.logmag
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Materializes the value; overflows to `±inf` beyond `f64` range.
    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.logmag.exp()
        }
    }

    pub fn abs(self) -> Self {
        Self::new(self.sign.abs(), self.logmag)
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        Self::new(self.sign, -self.logmag)
    }

    /// Signed difference of log-magnitudes, `ln|self| - ln|other|`.
    pub fn log_ratio(self, other: Self) -> f64 {
        self.logmag - other.logmag
    }

    /// `self / other` for nonzero `other`.
    pub fn div(self, other: Self) -> Self {
        self * other.recip()
    }
}

/// Sign-aware product; zero absorbs.
pub fn scaled_mul(a: ScaledReal, b: ScaledReal) -> ScaledReal {
    if a.sign == 0 || b.sign == 0 {
        return ScaledReal::ZERO;
    }
    ScaledReal::new(a.sign * b.sign, a.logmag + b.logmag)
}

/// Log-sum-exp relative to the larger magnitude. Equal magnitudes with
/// opposite signs cancel to exact zero.
pub fn scaled_add(a: ScaledReal, b: ScaledReal) -> ScaledReal {
    if a.sign == 0 {
        return b;
    }
    if b.sign == 0 {
        return a;
    }
    let (big, small) = if a.logmag >= b.logmag { (a, b) } else { (b, a) };
    let d = small.logmag - big.logmag;
    if big.sign == small.sign {
        ScaledReal::new(big.sign, big.logmag + d.exp().ln_1p())
    } else if d == 0.0 {
        ScaledReal::ZERO
    } else {
        ScaledReal::new(big.sign, big.logmag + (-d.exp()).ln_1p())
    }
}

impl Mul for ScaledReal {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        scaled_mul(self, rhs)
    }
}

impl Add for ScaledReal {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        scaled_add(self, rhs)
    }
}

impl Neg for ScaledReal {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            sign: -self.sign,
            logmag: self.logmag,
        }
    }
}

impl Sub for ScaledReal {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        scaled_add(self, -rhs)
    }
}

impl PartialOrd for ScaledReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.logmag.partial_cmp(&other.logmag),
                _ => other.logmag.partial_cmp(&self.logmag),
            },
            o => Some(o),
        }
    }
}

impl fmt::Debug for ScaledReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScaledReal({:+}·e^{})", self.sign, self.logmag)
    }
}
