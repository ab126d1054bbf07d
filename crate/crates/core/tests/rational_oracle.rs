//! Exact rational arithmetic as an independent reference for the trace and
//! its coefficients. Potentials and energies are dyadic so the `f64` inputs
//! are exact.

use hatano_core::discriminant::{disc_coeffs, eval_disc};
use hatano_core::transfer::product;
use hatano_core::{DoubleDouble, PotentialSample, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

type Q = BigRational;
type Poly = Vec<Q>;

fn q(x: f64) -> Q {
    Q::from_float(x).unwrap()
}

/// `Tr(A_n ··· A_1)` with `A_k = [[e - v_k, -1], [1, 0]]`, exactly.
fn exact_trace(values: &[f64], e: &Q) -> (Q, Q) {
    let (mut a, mut b, mut c, mut d) = (Q::one(), Q::zero(), Q::zero(), Q::one());
    for v in values {
        let t = e - q(*v);
        let (na, nb) = (&t * &a - &c, &t * &b - &d);
        c = a;
        d = b;
        a = na;
        b = nb;
    }
    let scale = a.abs() + b.abs() + c.abs() + d.abs();
    (a + d, scale)
}

fn poly_mul_linear(p: &Poly, shift: &Q) -> Poly {
    // (E - shift) · p
    let mut out = vec![Q::zero(); p.len() + 1];
    for (k, c) in p.iter().enumerate() {
        out[k + 1] += c;
        out[k] -= shift * c;
    }
    out
}

fn poly_sub(a: &Poly, b: &Poly) -> Poly {
    let len = a.len().max(b.len());
    (0..len)
        .map(|k| a.get(k).cloned().unwrap_or_else(Q::zero) - b.get(k).cloned().unwrap_or_else(Q::zero))
        .collect()
}

/// Coefficients of `Δ_n`, constant term first, exactly.
fn exact_coeffs(values: &[f64]) -> Poly {
    let one: Poly = vec![Q::one()];
    let zero: Poly = vec![Q::zero()];
    let (mut a, mut b, mut c, mut d) = (one.clone(), zero.clone(), zero.clone(), one);
    for v in values {
        let s = q(*v);
        let na = poly_sub(&poly_mul_linear(&a, &s), &c);
        let nb = poly_sub(&poly_mul_linear(&b, &s), &d);
        c = a;
        d = b;
        a = na;
        b = nb;
    }
    let mut t = poly_sub(&a, &poly_sub(&zero, &d));
    while t.len() > values.len() + 1 {
        t.pop();
    }
    t
}

fn dyadic_potentials() -> Vec<Vec<f64>> {
    vec![
        vec![0.5, -0.25, 0.75, 0.0],
        vec![1.0, 0.125, -0.5, 0.375, 0.875],
        vec![0.25, 0.5, 0.75, 1.0, 0.0, -1.0, 0.625, 0.5],
        (0..13).map(|k| ((k * 37 % 16) as f64 - 8.0) / 16.0).collect(),
        (0..24).map(|k| ((k * 11 % 32) as f64) / 32.0).collect(),
    ]
}

fn to_q<T: Scalar>(x: T) -> Q {
    let dd = x.to_dd();
    q(dd.hi()) + q(dd.lo())
}

fn check_trace<T: Scalar>(values: &[f64], e: f64) {
    let (exact, scale) = exact_trace(values, &q(e));
    let p = product(values, T::from_dd(DoubleDouble::from(e)));
    let m = p.matrix();
    let pow = Q::from_integer(BigInt::from(2)).pow(p.exp2() as i32);
    let got = (to_q(m[0][0]) + to_q(m[1][1])) * pow;
    let err = (&got - &exact).abs().to_f64().unwrap();
    let bound = 64.0 * values.len() as f64 * T::UNIT_ROUNDOFF * scale.to_f64().unwrap();
    assert!(err <= bound, "{} n={} e={e}: err {err:e} > {bound:e}", T::NAME, values.len());
    let s = PotentialSample::from_values(values.to_vec());
    let logged = eval_disc(&s, T::from_dd(DoubleDouble::from(e))).value.to_f64();
    let x = exact.to_f64().unwrap();
    assert!((logged - x).abs() <= bound + 1e-13 * x.abs());
}

#[test]
fn trace_matches_exact_products() {
    for values in dyadic_potentials() {
        for k in -24..=24 {
            let e = k as f64 / 8.0;
            check_trace::<f64>(&values, e);
            check_trace::<DoubleDouble>(&values, e);
        }
    }
}

#[test]
fn coefficients_match_exact_expansion() {
    for values in dyadic_potentials() {
        let s = PotentialSample::from_values(values.clone());
        let got = disc_coeffs(&s).unwrap();
        let exact = exact_coeffs(&values);
        assert_eq!(got.degree(), values.len());
        assert_eq!(exact.len(), values.len() + 1);
        for (g, x) in got.coeffs.iter().zip(&exact) {
            let err = (to_q(*g) - x).abs().to_f64().unwrap();
            assert!(err <= 1e-28 * x.abs().to_f64().unwrap().max(1.0), "coefficient {g:?} vs {x}");
        }
        assert_eq!(exact.last().unwrap(), &Q::one());
    }
}

#[test]
fn two_site_trace_is_additive() {
    // n = 2: Tr = (e - v1)(e - v2) - 2
    let v = [0.5, -0.75];
    for k in -8..=8 {
        let e = k as f64 / 4.0;
        let (exact, _) = exact_trace(&v, &q(e));
        let closed = (q(e) - q(v[0])) * (q(e) - q(v[1])) - Q::from_integer(BigInt::from(2));
        assert_eq!(exact, closed);
    }
}
