//! Bracketed root refinement: guaranteed bisection with optional secant
//! acceleration.

use super::scalar::Scalar;
use super::scaled::ScaledReal;
use crate::error::{Error, Result};

/// Bisection steps allowed before giving up.
pub const MAX_BISECTIONS: usize = 120;

/// An interval `[lo, hi]` whose endpoint function values have opposite signs.
#[derive(Clone, Copy, Debug)]
pub struct Bracket<T> {
    lo: T,
    hi: T,
    f_lo: ScaledReal,
    f_hi: ScaledReal,
}

impl<T: Scalar> Bracket<T> {
    /// Checks `lo < hi` and that the endpoint values change sign.
    pub fn new(lo: T, hi: T, f_lo: ScaledReal, f_hi: ScaledReal) -> Result<Self> {
        if !(lo < hi) || f_lo.sign() * f_hi.sign() >= 0 || f_lo.is_zero() || f_hi.is_zero() {
            return Err(Error::BracketInvalid {
                lo: lo.to_f64(),
                hi: hi.to_f64(),
            });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }

    /// Evaluates `f` at both ends and builds the bracket.
    pub fn evaluate<F: Fn(T) -> ScaledReal>(f: &F, lo: T, hi: T) -> Result<Self> {
        Self::new(lo, hi, f(lo), f(hi))
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn f_lo_sign(&self) -> i8 {
        self.f_lo.sign()
    }

    pub fn f_hi_sign(&self) -> i8 {
        self.f_hi.sign()
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> T {
        T::midpoint(self.lo, self.hi)
    }

    /// Replaces the endpoint whose sign matches `fx`. Returns `false` when `fx`
    /// is exactly zero (the caller has found a root).
    fn update(&mut self, x: T, fx: ScaledReal) -> bool {
        if fx.is_zero() {
            return false;
        }
        if fx.sign() == self.f_lo.sign() {
            self.lo = x;
            self.f_lo = fx;
        } else {
            self.hi = x;
            self.f_hi = fx;
        }
        true
    }

    /// Regula-falsi point of the bracket, computed from log-magnitudes.
    fn secant_point(&self) -> T {
        let d = self.f_hi.logmag() - self.f_lo.logmag();
        // t = |f_lo| / (|f_lo| + |f_hi|)
        let t = if d > 0.0 {
            let e = (-d).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + d.exp())
        };
        self.lo + self.width() * T::from_f64(t)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    pub tol_abs: f64,
    pub secant: bool,
    pub max_bisections: usize,
}

impl RootOptions {
    pub fn new(tol_abs: f64) -> Self {
        Self {
            tol_abs,
            secant: true,
            max_bisections: MAX_BISECTIONS,
        }
    }

    pub fn bisection_only(mut self) -> Self {
        self.secant = false;
        self
    }
}

/// Smallest absolute tolerance the precision of `T` can honour near `x`.
pub fn tolerance_floor<T: Scalar>(x: f64) -> f64 {
    8.0 * T::UNIT_ROUNDOFF * x.abs().max(1.0)
}

/// Outcome of [`refine_bracket`]: either an exact zero or a final bracket.
#[derive(Clone, Copy, Debug)]
pub enum Refined<T> {
    Exact(T),
    Bracket(Bracket<T>),
}

impl<T: Scalar> Refined<T> {
    pub fn root(&self) -> T {
        match self {
            Refined::Exact(x) => *x,
            Refined::Bracket(b) => b.midpoint(),
        }
    }
}

/// Shrinks `bracket` until its width is at most `opts.tol_abs`.
///
/// Each loop round tries a secant point followed by a probe `tol/2` past it;
/// if the round did not halve the bracket a bisection step is taken, so the
/// width at least halves per round.
pub fn refine_bracket<T, F>(f: F, mut bracket: Bracket<T>, opts: RootOptions) -> Result<Refined<T>>
where
    T: Scalar,
    F: Fn(T) -> ScaledReal,
{
    let scale = bracket.lo.to_f64().abs().max(bracket.hi.to_f64().abs());
    let floor = tolerance_floor::<T>(scale);
    if !(opts.tol_abs >= floor) {
        return Err(Error::ToleranceUnreachable {
            requested: opts.tol_abs,
            capability: floor,
            precision: T::NAME,
        });
    }
    let tol = T::from_f64(opts.tol_abs);
    let half_tol = T::from_f64(opts.tol_abs / 2.0);
    let mut bisections = 0;
    while bracket.width() > tol {
        let start = bracket.width();
        if opts.secant {
            let x = bracket.secant_point();
            if x > bracket.lo && x < bracket.hi {
                let fx = f(x);
                if !bracket.update(x, fx) {
                    return Ok(Refined::Exact(x));
                }
                // probe just past the secant point toward the far endpoint
                let probe = if bracket.lo == x { x + half_tol } else { x - half_tol };
                if probe > bracket.lo && probe < bracket.hi {
                    let fp = f(probe);
                    if !bracket.update(probe, fp) {
                        return Ok(Refined::Exact(probe));
                    }
                }
            }
        }
        if bracket.width() > tol && bracket.width() > start.scale_pow2(-1) {
            if bisections == opts.max_bisections {
                return Err(Error::NoConvergence {
                    iterations: bisections,
                    worst_residual: bracket.width().to_f64(),
                    residuals: vec![bracket.width().to_f64()],
                });
            }
            let mid = bracket.midpoint();
            if !(mid > bracket.lo && mid < bracket.hi) {
                // no representable point left between the endpoints
                break;
            }
            let fm = f(mid);
            if !bracket.update(mid, fm) {
                return Ok(Refined::Exact(mid));
            }
            bisections += 1;
        }
    }
    Ok(Refined::Bracket(bracket))
}

/// Root of `f` inside `bracket` to absolute tolerance `tol_abs`.
///
/// The precision is that of `T`: `f64` for standard, [`DoubleDouble`](super::DoubleDouble)
/// for extended.
pub fn refine_root<T, F>(f: F, bracket: Bracket<T>, tol_abs: f64) -> Result<T>
where
    T: Scalar,
    F: Fn(T) -> ScaledReal,
{
    refine_bracket(f, bracket, RootOptions::new(tol_abs)).map(|r| r.root())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DoubleDouble;
    use std::cell::Cell;

    fn sq2(x: f64) -> ScaledReal {
        ScaledReal::from_f64(x * x - 2.0)
    }

    #[test]
    fn sqrt_two() {
        let b = Bracket::evaluate(&sq2, 1.0, 2.0).unwrap();
        let r = refine_root(sq2, b, 1e-12).unwrap();
        assert!((r - 1.414_213_562_373_095_1).abs() <= 1e-12);
    }

    #[test]
    fn odd_function_hits_zero() {
        let f = |x: f64| ScaledReal::from_f64(x);
        let b = Bracket::evaluate(&f, -1.0, 1.0).unwrap();
        assert_eq!(refine_root(f, b, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn same_signs_rejected() {
        let b = Bracket::evaluate(&sq2, 2.0, 3.0);
        assert!(matches!(b, Err(Error::BracketInvalid { .. })));
    }

    #[test]
    fn tolerance_below_capability() {
        let b = Bracket::evaluate(&sq2, 1.0, 2.0).unwrap();
        assert!(matches!(refine_root(sq2, b, 1e-20), Err(Error::ToleranceUnreachable { .. })));
        let f = |x: DoubleDouble| ScaledReal::from_scalar(x * x - DoubleDouble::from(2.0));
        let b = Bracket::evaluate(&f, DoubleDouble::ONE, DoubleDouble::from(2.0)).unwrap();
        let r = refine_root(f, b, 1e-28).unwrap();
        let exact = DoubleDouble::from(2.0).sqrt();
        assert!((r - exact).abs().to_f64() <= 1e-28);
        assert!(matches!(refine_root(f, b, 1e-33), Err(Error::ToleranceUnreachable { .. })));
    }

    #[test]
    fn bisection_halves_width_each_step() {
        let widths = std::cell::RefCell::new(Vec::new());
        let lo = Cell::new(1.0f64);
        let hi = Cell::new(2.0f64);
        let f = |x: f64| {
            let v = sq2(x);
            if v.sign() < 0 {
                lo.set(x)
            } else {
                hi.set(x)
            }
            widths.borrow_mut().push(hi.get() - lo.get());
            v
        };
        let b = Bracket::new(1.0, 2.0, sq2(1.0), sq2(2.0)).unwrap();
        refine_bracket(f, b, RootOptions::new(1e-10).bisection_only()).unwrap();
        let w = widths.borrow();
        for pair in w.windows(2) {
            assert!(pair[1] <= pair[0] / 2.0 * (1.0 + 1e-12));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn secant_and_bisection_agree(c in -5.0f64..5.0, k in 0.1f64..10.0) {
                // monotone cubic with a single real root near c
                let f = move |x: f64| ScaledReal::from_f64(k * (x - c) + (x - c).powi(3));
                let b = Bracket::evaluate(&f, -10.0, 10.0).unwrap();
                let tol = 1e-11;
                let fast = refine_bracket(f, b, RootOptions::new(tol)).unwrap().root();
                let slow = refine_bracket(f, b, RootOptions::new(tol).bisection_only()).unwrap().root();
                prop_assert!((fast - slow).abs() <= tol);
                prop_assert!((fast - c).abs() <= tol);
            }
        }
    }
}
