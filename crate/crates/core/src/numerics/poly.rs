//! Simultaneous polynomial root finding (Aberth–Ehrlich) with a double-double
//! Newton polish.
//!
//! The iteration runs on `Complex<f64>` positions and only needs the Newton
//! ratio `p/p'`, so anything implementing [`PolyTarget`] can be solved: a
//! coefficient vector, or a polynomial evaluated pointwise through transfer
//! matrices.

use num_complex::Complex;
use num_traits::Zero;

use super::dd::DoubleDouble;
use super::scalar::{complex_abs, complex_from_f64, complex_to_f64, Scalar};
use crate::error::{Error, Result};

/// Iteration cap for the Aberth sweep.
pub const MAX_ABERTH_ITERATIONS: usize = 200;

/// Value and derivative of a polynomial at one point, both multiplied by a
/// common positive factor, and `scale` in the same frame: a magnitude such that
/// rounding errors in `value` are a small multiple of `scale * unit_roundoff`.
#[derive(Clone, Copy, Debug)]
pub struct PolyEval<T> {
    pub value: Complex<T>,
    pub derivative: Complex<T>,
    pub scale: f64,
}

impl<T: Scalar> PolyEval<T> {
    /// `|p(z)| / scale`, the residual relative to the coefficient-scale bound.
    pub fn relative_residual(&self) -> f64 {
        if self.scale > 0.0 {
            complex_abs(self.value) / self.scale
        } else {
            complex_abs(self.value)
        }
    }

    /// Newton correction `p/p'`, or `None` where `p'` vanishes.
    pub fn newton_ratio(&self) -> Option<Complex<T>> {
        if self.derivative.is_zero() {
            None
        } else {
            Some(self.value / self.derivative)
        }
    }
}

/// Something whose roots the Aberth iteration can find.
pub trait PolyTarget: Sync {
    fn degree(&self) -> usize;
    fn eval<T: Scalar>(&self, z: Complex<T>) -> PolyEval<T>;
}

/// Polynomial given by coefficients ordered constant → leading.
#[derive(Clone, Debug)]
pub struct CoeffPoly {
    coeffs: Vec<DoubleDouble>,
}

impl CoeffPoly {
    pub fn new(coeffs: Vec<DoubleDouble>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(Error::InvalidArgument(
                "polynomial must have degree >= 1 with nonzero leading coefficient".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[DoubleDouble] {
        &self.coeffs
    }

    pub fn derivative(&self) -> Result<Self> {
        let d: Vec<DoubleDouble> = self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c.mul_f64(k as f64)).collect();
        Self::new(d)
    }

    /// Centroid of the roots and the geometric mean of their distances to it.
    fn root_circle(&self) -> (Complex<f64>, f64) {
        let d = self.degree();
        let lead = self.coeffs[d].to_f64();
        let c = -self.coeffs[d - 1].to_f64() / (d as f64 * lead);
        let pc = self.eval(Complex::new(DoubleDouble::from(c), DoubleDouble::ZERO));
        let r = (complex_abs(pc.value) / lead.abs()).powf(1.0 / d as f64);
        let r = if r.is_finite() && r > 0.0 { r } else { 1.0 };
        (Complex::new(c, 0.0), r)
    }
}

impl PolyTarget for CoeffPoly {
    fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn eval<T: Scalar>(&self, z: Complex<T>) -> PolyEval<T> {
        let mut p = Complex::<T>::zero();
        let mut dp = Complex::<T>::zero();
        let az = complex_abs(z);
        let mut scale = 0.0;
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + Complex::new(T::from_dd(*c), T::zero());
            scale = scale * az + c.to_f64().abs();
        }
        PolyEval {
            value: p,
            derivative: dp,
            scale,
        }
    }
}

/// Settings for [`aberth`].
#[derive(Clone, Debug)]
pub struct AberthOptions {
    /// Accept a root once `|p(z)| <= tol * scale`.
    pub tol: f64,
    pub max_iter: usize,
    /// Upper bound on double-double polishing sweeps after the `f64` sweep;
    /// stops early once the corrections stall.
    pub polish_steps: usize,
    /// Conjugate-symmetrize the result (real coefficients).
    pub real_coefficients: bool,
}

impl Default for AberthOptions {
    fn default() -> Self {
        Self {
            tol: 1e-20,
            max_iter: MAX_ABERTH_ITERATIONS,
            polish_steps: 60,
            real_coefficients: true,
        }
    }
}

/// Evenly spaced starting points on an ellipse, rotated off the real axis.
pub fn ellipse_guesses(center: f64, half_width: f64, half_height: f64, count: usize) -> Vec<Complex<f64>> {
    (0..count)
        .map(|k| {
            let t = std::f64::consts::TAU * (k as f64 + 0.25) / count as f64 + 0.4;
            Complex::new(center + half_width * t.cos(), half_height * t.sin())
        })
        .collect()
}

/// Finds `initial.len()` roots of `target` while treating `fixed` as already
/// known roots: the repulsion term includes them, which deflates them
/// implicitly without dividing the polynomial.
pub fn aberth<P: PolyTarget>(
    target: &P,
    initial: Vec<Complex<f64>>,
    fixed_dd: &[Complex<DoubleDouble>],
    opts: &AberthOptions,
) -> Result<Vec<Complex<DoubleDouble>>> {
    let fixed: Vec<Complex<f64>> = fixed_dd.iter().map(|&z| complex_to_f64(z)).collect();
    let m = initial.len();
    let mut z = initial;
    let mut done = vec![false; m];
    let mut iterations = 0;
    while iterations < opts.max_iter && done.iter().any(|d| !d) {
        iterations += 1;
        for i in 0..m {
            if done[i] {
                continue;
            }
            let e = target.eval::<f64>(z[i]);
            let Some(ratio) = e.newton_ratio() else {
                if e.value.is_zero() {
                    done[i] = true;
                } else {
                    // stationary point: nudge off it
                    let nudge = Complex::new(1e-3, 1e-3) * (1.0 + z[i].norm());
                    z[i] += nudge;
                }
                continue;
            };
            if e.relative_residual() <= f64::EPSILON {
                done[i] = true;
                continue;
            }
            let mut repulsion = Complex::<f64>::zero();
            for (k, zk) in z.iter().enumerate() {
                if k != i {
                    repulsion += (z[i] - zk).inv();
                }
            }
            for zk in &fixed {
                if *zk != z[i] {
                    repulsion += (z[i] - zk).inv();
                }
            }
            let denom = Complex::new(1.0, 0.0) - ratio * repulsion;
            let w = if denom.norm() > 0.0 { ratio / denom } else { ratio };
            if !w.re.is_finite() || !w.im.is_finite() {
                let nudge = Complex::new(1e-3, 1e-3) * (1.0 + z[i].norm());
                z[i] += nudge;
                continue;
            }
            z[i] -= w;
            if w.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            }
        }
    }

    let mut roots: Vec<Complex<DoubleDouble>> = z.iter().map(|&zi| complex_from_f64(zi)).collect();
    aberth_polish(target, &mut roots, fixed_dd, opts.polish_steps);
    if opts.real_coefficients {
        enforce_conjugate_pairs(&mut roots);
    }
    let residuals: Vec<f64> = roots.iter().map(|r| target.eval(*r).relative_residual()).collect();
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if !(worst <= opts.tol) {
        return Err(Error::NoConvergence {
            iterations,
            worst_residual: worst,
            residuals,
        });
    }
    Ok(roots)
}

/// Aberth sweeps in double-double: Newton corrections with the same
/// repulsion term, which keeps clustered roots apart where plain Newton would
/// crawl. Stops once every correction is at working precision.
pub fn aberth_polish<P: PolyTarget>(target: &P, roots: &mut [Complex<DoubleDouble>], fixed: &[Complex<DoubleDouble>], sweeps: usize) {
    let one = Complex::new(DoubleDouble::ONE, DoubleDouble::ZERO);
    // coincident estimates never separate under Aberth; split them first
    for i in 0..roots.len() {
        for k in 0..i {
            if roots[k] == roots[i] {
                let r = complex_abs(roots[i]);
                let bump = DoubleDouble::from(1e-7 * (1.0 + r) * (1.0 + i as f64));
                roots[i] = Complex::new(roots[i].re, roots[i].im + bump);
            }
        }
    }
    for _ in 0..sweeps {
        let mut worst = 0.0f64;
        for i in 0..roots.len() {
            let e = target.eval(roots[i]);
            let Some(ratio) = e.newton_ratio() else { continue };
            let mut repulsion = Complex::new(DoubleDouble::ZERO, DoubleDouble::ZERO);
            for (k, zk) in roots.iter().enumerate() {
                if k != i && *zk != roots[i] {
                    repulsion = repulsion + one / (roots[i] - zk);
                }
            }
            for zk in fixed {
                if *zk != roots[i] {
                    repulsion = repulsion + one / (roots[i] - zk);
                }
            }
            let denom = one - ratio * repulsion;
            let w = if denom.is_zero() { ratio } else { ratio / denom };
            let next = roots[i] - w;
            if !complex_abs(next).is_finite() {
                continue;
            }
            roots[i] = next;
            worst = worst.max(complex_abs(w) / complex_abs(next).max(f64::MIN_POSITIVE));
        }
        if worst <= 16.0 * DoubleDouble::EPSILON {
            break;
        }
    }
}

/// Up to `steps` Newton steps in `T`, stopping early once the correction
/// stalls at the precision of `T`.
pub fn newton_polish<P: PolyTarget, T: Scalar>(target: &P, z: Complex<T>, steps: usize) -> Complex<T> {
    let mut z = z;
    for _ in 0..steps {
        let e = target.eval(z);
        let Some(ratio) = e.newton_ratio() else { break };
        let next = z - ratio;
        if !(complex_abs(next).is_finite()) {
            break;
        }
        let step = complex_abs(ratio);
        z = next;
        if step <= 4.0 * T::UNIT_ROUNDOFF * complex_abs(z) {
            break;
        }
    }
    z
}

/// Pairs each root in the upper half-plane with its mirror image in the lower
/// half-plane and replaces both by an exact conjugate pair. Roots left without
/// a partner are projected onto the real axis; callers re-check residuals.
pub fn enforce_conjugate_pairs<T: Scalar>(roots: &mut [Complex<T>]) {
    let n = roots.len();
    let mut paired = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        roots[b]
            .im
            .abs()
            .to_f64()
            .partial_cmp(&roots[a].im.abs().to_f64())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in &order {
        if paired[i] || roots[i].im.to_f64() <= 0.0 {
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..n)
            .filter(|&k| k != i && !paired[k] && roots[k].im.to_f64() < 0.0)
            .min_by(|&a, &b| {
                let da = complex_abs(roots[a] - target);
                let db = complex_abs(roots[b] - target);
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            });
        if let Some(k) = partner {
            let dist = complex_abs(roots[k] - target);
            // only pair genuine partners; a polished pair mirrors to near working precision
            if dist <= 1e-8 * roots[i].im.abs().to_f64() {
                let re = T::midpoint(roots[i].re, roots[k].re);
                let im = T::midpoint(roots[i].im, -roots[k].im);
                roots[i] = Complex::new(re, im);
                roots[k] = Complex::new(re, -im);
                paired[i] = true;
                paired[k] = true;
            }
        }
    }
    for (k, r) in roots.iter_mut().enumerate() {
        if !paired[k] {
            r.im = T::zero();
        }
    }
}

/// All roots of the polynomial with coefficients `coeffs` (constant →
/// leading), with multiplicity, each satisfying `|p(z)| <= tol * sum |c_k||z|^k`.
/// Complex roots come in exact conjugate pairs.
pub fn poly_roots(coeffs: &[DoubleDouble], tol: f64) -> Result<Vec<Complex<f64>>> {
    let poly = CoeffPoly::new(coeffs.to_vec())?;
    let d = poly.degree();
    let (c, r) = poly.root_circle();
    let initial = ellipse_guesses(c.re, r, r, d);
    let opts = AberthOptions {
        tol,
        ..AberthOptions::default()
    };
    let roots = aberth(&poly, initial, &[], &opts)?;
    let mut out: Vec<Complex<f64>> = roots.into_iter().map(complex_to_f64).collect();
    sort_complex(&mut out);
    Ok(out)
}

/// Sorts by real part, then imaginary part.
pub fn sort_complex<T: Scalar>(z: &mut [Complex<T>]) {
    z.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Hausdorff distance between two finite point sets in the complex plane.
pub fn hausdorff(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let directed = |x: &[Complex<f64>], y: &[Complex<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Coefficients of `prod (x - r_i)` in extended precision.
pub fn poly_from_roots(roots: &[f64]) -> Vec<DoubleDouble> {
    let mut c = vec![DoubleDouble::ONE];
    for &r in roots {
        let mut next = vec![DoubleDouble::ZERO; c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] += *ck;
            next[k] -= ck.mul_f64(r);
        }
        c = next;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(v: &[f64]) -> Vec<DoubleDouble> {
        v.iter().map(|&x| DoubleDouble::from(x)).collect()
    }

    #[test]
    fn unit_imaginary_pair() {
        let r = poly_roots(&dd(&[1.0, 0.0, 1.0]), 1e-20).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - Complex::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex::new(0.0, 1.0)).norm() < 1e-14);
        assert_eq!(r[0], r[1].conj());
    }

    #[test]
    fn free_discriminant_degree_three() {
        // x^3 - 3x
        let r = poly_roots(&dd(&[0.0, -3.0, 0.0, 1.0]), 1e-20).unwrap();
        let s3 = 3f64.sqrt();
        let expect = [-s3, 0.0, s3];
        for (z, e) in r.iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-14 && z.im == 0.0, "{z}");
        }
    }

    #[test]
    fn rejects_constant_polynomial() {
        assert!(poly_roots(&dd(&[3.0]), 1e-20).is_err());
        assert!(poly_roots(&dd(&[3.0, 0.0]), 1e-20).is_err());
    }

    #[test]
    fn fixed_roots_are_deflated() {
        // (x-1)(x-2)(x^2+4): give the two real roots as fixed
        let mut c = poly_from_roots(&[1.0, 2.0]);
        // multiply by x^2 + 4
        let mut out = vec![DoubleDouble::ZERO; c.len() + 2];
        for (k, ck) in c.iter().enumerate() {
            out[k] += ck.mul_f64(4.0);
            out[k + 2] += *ck;
        }
        c = out;
        let poly = CoeffPoly::new(c).unwrap();
        let fixed = [Complex::new(1.0, 0.0), Complex::new(2.0, 0.0)].map(complex_from_f64);
        let roots = aberth(
            &poly,
            vec![Complex::new(0.5, 1.0), Complex::new(0.5, -1.0)],
            &fixed,
            &AberthOptions::default(),
        )
        .unwrap();
        let mut r: Vec<_> = roots.into_iter().map(complex_to_f64).collect();
        sort_complex(&mut r);
        assert!((r[0] - Complex::new(0.0, -2.0)).norm() < 1e-14);
        assert!((r[1] - Complex::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn hausdorff_basic() {
        let a = [Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)];
        let b = [Complex::new(0.0, 0.5)];
        assert!((hausdorff(&a, &b) - (1.25f64).sqrt()).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        // Stratified Chebyshev-like points, optionally with one pair pushed to
        // the minimum separation of 1e-6.
        fn separated_roots() -> impl Strategy<Value = Vec<f64>> {
            (1usize..=64, any::<u64>(), any::<bool>()).prop_map(|(d, seed, pair)| {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut roots: Vec<f64> = (0..d)
                    .map(|k| {
                        let u: f64 = rng.gen_range(0.1..0.9);
                        1.5 * (std::f64::consts::PI * (k as f64 + u) / d as f64).cos()
                    })
                    .collect();
                if pair && d >= 2 {
                    let k = rng.gen_range(1..d);
                    roots[k] = roots[k - 1] - 1e-6;
                }
                roots
            })
        }

        /// First-order bound on how far rounding while expanding the product
        /// into double-double coefficients can move each root: each
        /// coefficient carries an error up to `d·u` times the matching
        /// coefficient of `∏(x + |rᵢ|)`.
        fn coefficient_sensitivity(roots: &[f64]) -> f64 {
            let d = roots.len() as f64;
            roots
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    let log_scale: f64 = roots.iter().map(|q| (r.abs() + q.abs()).ln()).sum();
                    let log_deriv: f64 = roots
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != i)
                        .map(|(_, &q)| (r - q).abs().ln())
                        .sum();
                    d * (log_scale - log_deriv).exp() * DoubleDouble::EPSILON
                })
                .fold(0.0, f64::max)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn recovers_known_real_roots(mut roots in separated_roots()) {
                let c = poly_from_roots(&roots);
                // configurations whose roots are not determined to 1e-9 by
                // double-double coefficients are outside what any solver can do
                prop_assume!(coefficient_sensitivity(&roots) <= 1e-10);
                let found = poly_roots(&c, 1e-18).unwrap();
                roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
                prop_assert_eq!(found.len(), roots.len());
                for r in &roots {
                    let best = found.iter().map(|z| (z - Complex::new(*r, 0.0)).norm()).fold(f64::INFINITY, f64::min);
                    prop_assert!(best <= 1e-9, "root {} missed by {}", r, best);
                }
            }
        }
    }
}
