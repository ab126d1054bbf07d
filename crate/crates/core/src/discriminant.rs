//! The trace `Δ_n(E) = Tr(A_{E,n}···A_{E,1})`: pointwise evaluation through
//! scaled transfer products, and an independent expansion into monomial
//! coefficients.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::poly::{PolyEval, PolyTarget};
use crate::numerics::{DoubleDouble, Field, Precision, Scalar, ScaledReal};
use crate::potential::PotentialSample;
use crate::transfer::{jet, product};

/// Largest ring length for [`disc_coeffs`].
pub const MAX_COEFF_DEGREE: usize = 256;

/// `Δ_n` and optionally `Δ'_n` at one energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantEval {
    pub value: ScaledReal,
    pub derivative: Option<ScaledReal>,
    pub energy: f64,
}

/// `Δ_n(e)` in the precision of `T`.
pub fn eval_disc<T: Scalar>(sample: &PotentialSample, e: T) -> DiscriminantEval {
    DiscriminantEval {
        value: product(&sample.values, e).trace(),
        derivative: None,
        energy: e.to_f64(),
    }
}

/// `Δ_n(e)` and `Δ'_n(e)` from one forward pass over `(M, dM/dE)`.
pub fn eval_disc_deriv<T: Scalar>(sample: &PotentialSample, e: T) -> DiscriminantEval {
    let j = jet::<T, 1>(&sample.values, e);
    DiscriminantEval {
        value: ScaledReal::from_scalar_pow2(j.trace(0), j.exp2),
        derivative: Some(ScaledReal::from_scalar_pow2(j.trace(1), j.exp2)),
        energy: e.to_f64(),
    }
}

/// [`eval_disc`] or [`eval_disc_deriv`] at an `f64` energy with run-time
/// precision choice.
pub fn eval_disc_with(sample: &PotentialSample, e: f64, precision: Precision, derivative: bool) -> DiscriminantEval {
    match (precision, derivative) {
        (Precision::Standard, false) => eval_disc(sample, e),
        (Precision::Standard, true) => eval_disc_deriv(sample, e),
        (Precision::Extended, false) => eval_disc(sample, DoubleDouble::from(e)),
        (Precision::Extended, true) => eval_disc_deriv(sample, DoubleDouble::from(e)),
    }
}

/// Sign and magnitude of `Δ_n(e) - level`, plus `ln` of a bound on its
/// rounding error.
pub fn level_difference<T: Scalar>(values: &[f64], e: T, level: DoubleDouble) -> (ScaledReal, f64) {
    let p = product(values, e);
    let m = p.matrix();
    let k = p.exp2();
    let shift = T::from_dd(scale_level(level, k));
    let diff = ScaledReal::from_scalar_pow2(m[0][0] + m[1][1] - shift, k);
    let err = level_error_scale::<T>(values.len(), p.frobenius_sq().sqrt(), shift.to_f64().abs()).ln() + p.logscale();
    (diff, err)
}

fn level_error_scale<T: Scalar>(n: usize, norm: f64, level: f64) -> f64 {
    16.0 * (n as f64 + 1.0) * T::UNIT_ROUNDOFF * (norm + level)
}

/// `level · 2^-k`, exact unless it underflows.
pub(crate) fn scale_level(level: DoubleDouble, k: i64) -> DoubleDouble {
    let k = k.clamp(-2000, 2000) as i32;
    level.scale_pow2(-k)
}

/// Monic coefficients of `Δ_n`, constant term first.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscCoeffs {
    pub coeffs: Vec<DoubleDouble>,
}

impl DiscCoeffs {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation.
    pub fn eval<T: Scalar>(&self, e: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * e + T::from_dd(*c))
    }

    /// `Σ |c_k| |e|^k`, the scale of rounding errors in [`eval`](Self::eval).
    pub fn eval_scale(&self, e: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * e.abs() + c.to_f64().abs())
    }
}

/// Expands `Δ_n` by multiplying the transfer matrices with polynomial
/// entries in double-double.
pub fn disc_coeffs(sample: &PotentialSample) -> Result<DiscCoeffs> {
    let n = sample.values.len();
    if n > MAX_COEFF_DEGREE {
        return Err(Error::CapabilityExceeded {
            what: format!("coefficient expansion of degree {n}"),
            limit: MAX_COEFF_DEGREE,
        });
    }
    let zero = DoubleDouble::ZERO;
    let mut m = [[vec![DoubleDouble::ONE], vec![zero]], [vec![zero], vec![DoubleDouble::ONE]]];
    for &v in &sample.values {
        let v = DoubleDouble::from(v);
        let [[m00, m01], [m10, m11]] = m;
        // (E - v)·p - q
        let row = |p: &Vec<DoubleDouble>, q: &Vec<DoubleDouble>| {
            let len = (p.len() + 1).max(q.len());
            let mut out = vec![zero; len];
            for (i, c) in p.iter().enumerate() {
                out[i + 1] += *c;
                out[i] -= v * *c;
            }
            for (i, c) in q.iter().enumerate() {
                out[i] -= *c;
            }
            out
        };
        let n00 = row(&m00, &m10);
        let n01 = row(&m01, &m11);
        m = [[n00, n01], [m00, m01]];
    }
    let [[m00, _], [_, m11]] = m;
    let mut coeffs = m00;
    for (i, c) in m11.iter().enumerate() {
        coeffs[i] += *c;
    }
    while coeffs.len() > n + 1 {
        coeffs.pop();
    }
    Ok(DiscCoeffs { coeffs })
}

/// `2·T_n(e/2)` by the three-term recurrence `c_{k+1} = e·c_k - c_{k-1}`.
pub fn chebyshev_disc<T: Scalar>(n: usize, e: T) -> T {
    let two = T::from_f64(2.0);
    if n == 0 {
        return two;
    }
    let (mut prev, mut cur) = (two, e);
    for _ in 1..n {
        let next = e * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `Δ_n(z) - level` as a root-finding target, evaluated pointwise.
#[derive(Clone, Copy, Debug)]
pub struct LevelPoly<'a> {
    pub values: &'a [f64],
    pub level: DoubleDouble,
}

impl PolyTarget for LevelPoly<'_> {
    fn degree(&self) -> usize {
        self.values.len()
    }

    fn eval<T: Scalar>(&self, z: Complex<T>) -> PolyEval<T> {
        let j = jet::<Complex<T>, 1>(self.values, z);
        let shift = T::from_dd(scale_level(self.level, j.exp2));
        PolyEval {
            value: j.trace(0) - Complex::new(shift, T::zero()),
            derivative: j.trace(1),
            scale: j.magnitude_sq(0).sqrt() + shift.to_f64().abs(),
        }
    }
}

/// `Δ'_n(z)` as a root-finding target; its roots are the turning points.
#[derive(Clone, Copy, Debug)]
pub struct DerivativePoly<'a> {
    pub values: &'a [f64],
}

impl PolyTarget for DerivativePoly<'_> {
    fn degree(&self) -> usize {
        self.values.len() - 1
    }

    fn eval<T: Scalar>(&self, z: Complex<T>) -> PolyEval<T> {
        let j = jet::<Complex<T>, 2>(self.values, z);
        PolyEval {
            value: j.trace(1),
            derivative: j.trace(2),
            scale: j.magnitude_sq(1).sqrt(),
        }
    }
}

/// `Δ'_n(e)` in scaled form, for bisection on turning points.
pub fn derivative_at<T: Scalar>(values: &[f64], e: T) -> ScaledReal {
    let j = jet::<T, 1>(values, e);
    ScaledReal::from_scalar_pow2(j.trace(1), j.exp2)
}

/// `(Δ_n(e), Δ'_n(e), Δ''_n(e))` in scaled form.
pub fn second_order_at<T: Scalar>(values: &[f64], e: T) -> [ScaledReal; 3] {
    let j = jet::<T, 2>(values, e);
    [0, 1, 2].map(|k| ScaledReal::from_scalar_pow2(j.trace(k), j.exp2))
}
