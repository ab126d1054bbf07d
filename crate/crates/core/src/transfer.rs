//! Transfer-matrix products `A_{E,n}···A_{E,1}` with `A_{E,k} = [[E - v_k, -1], [1, 0]]`,
//! Lyapunov exponent estimates and large-deviation statistics.
//!
//! Products are rescaled by powers of two after every factor, so the stored
//! matrix stays near unit norm and the rescaling itself is exact.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::fmt_real;
use crate::numerics::{Field, Scalar, ScaledReal};
use crate::potential::{DistributionSpec, PotentialSample};

type Mat<F> = [[F; 2]; 2];

/// `m · 2^exp2`, with the Frobenius norm of `m` in `[0.5, 2]` unless the
/// product is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMatrix2<F> {
    m: Mat<F>,
    exp2: i64,
}

impl<F: Field> ScaledMatrix2<F> {
    pub fn identity() -> Self {
        Self {
            m: [[F::one(), F::zero()], [F::zero(), F::one()]],
            exp2: 0,
        }
    }

    pub fn from_parts(m: Mat<F>, exp2: i64) -> Self {
        let mut s = Self { m, exp2 };
        s.exp2 += rescale(&mut [&mut s.m]);
        s
    }

    /// The normalized matrix `m`.
    pub fn matrix(&self) -> Mat<F> {
        self.m
    }

    /// Power-of-two part of the scale.
    pub fn exp2(&self) -> i64 {
        self.exp2
    }

    /// Natural log of the scale factor: the true product is `m · exp(logscale)`.
    pub fn logscale(&self) -> f64 {
        self.exp2 as f64 * std::f64::consts::LN_2
    }

    /// Unscaled entries; overflows for large products.
    pub fn to_plain(&self) -> Mat<F> {
        let k = self.exp2.clamp(i32::MIN as i64, i32::MAX as i64) as i32;
        self.m.map(|row| row.map(|x| x.scale_pow2(k)))
    }

    /// Left-multiplies by `A_{e - v}`.
    pub fn push(&mut self, e: F, v: f64) {
        step(&mut self.m, e - F::from_f64(v));
        self.exp2 += rescale(&mut [&mut self.m]);
    }

    pub fn frobenius_sq(&self) -> f64 {
        frobenius_sq(&self.m)
    }

    /// `log |trace|` of the product, over any field.
    pub fn trace_logmag(&self) -> f64 {
        0.5 * (self.m[0][0] + self.m[1][1]).magnitude_sq().ln() + self.logscale()
    }
}

impl<T: Scalar> ScaledMatrix2<T> {
    pub fn trace(&self) -> ScaledReal {
        ScaledReal::from_scalar_pow2(self.m[0][0] + self.m[1][1], self.exp2)
    }

    pub fn det(&self) -> ScaledReal {
        let d = self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0];
        ScaledReal::from_scalar_pow2(d, 2 * self.exp2)
    }

    /// `log` of the Frobenius norm of the product.
    pub fn log_frobenius(&self) -> f64 {
        0.5 * self.frobenius_sq().ln() + self.logscale()
    }

    /// `log` of the operator (largest singular value) norm of the product.
    pub fn log_norm(&self) -> f64 {
        let [[a, b], [c, d]] = self.m.map(|r| r.map(|x| x.to_f64()));
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let sigma_sq = 0.5 * (s + (s * s - 4.0 * det * det).max(0.0).sqrt());
        0.5 * sigma_sq.ln() + self.logscale()
    }
}

#[inline]
fn frobenius_sq<F: Field>(m: &Mat<F>) -> f64 {
    m[0][0].magnitude_sq() + m[0][1].magnitude_sq() + m[1][0].magnitude_sq() + m[1][1].magnitude_sq()
}

/// `m ← A m` with `A = [[a, -1], [1, 0]]`.
#[inline(always)]
fn step<F: Field>(m: &mut Mat<F>, a: F) {
    let [[m00, m01], [m10, m11]] = *m;
    *m = [[a * m00 - m10, a * m01 - m11], [m00, m01]];
}

/// Scales every matrix by the power of two that brings the largest one back
/// to unit norm; returns the exponent removed.
#[inline(always)]
fn rescale<F: Field>(ms: &mut [&mut Mat<F>]) -> i64 {
    let mag = ms.iter().map(|m| frobenius_sq(m)).fold(0.0, f64::max);
    if (0.25..=4.0).contains(&mag) || mag == 0.0 || !mag.is_finite() {
        return 0;
    }
    let k = (0.5 * mag.log2()).round() as i32;
    for m in ms.iter_mut() {
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x = x.scale_pow2(-k);
            }
        }
    }
    k as i64
}

/// `A_{e,n}···A_{e,1}` for site values `values`, over any field.
pub fn product<F: Field>(values: &[f64], e: F) -> ScaledMatrix2<F> {
    let mut p = ScaledMatrix2::identity();
    for &v in values {
        p.push(e, v);
    }
    p
}

/// [`product`] for a stored sample.
pub fn transfer_product<T: Scalar>(sample: &PotentialSample, e: T) -> ScaledMatrix2<T> {
    product(&sample.values, e)
}

/// The product together with its first `D` derivatives in the energy, all
/// sharing the scale `2^exp2`.
#[derive(Clone, Copy, Debug)]
pub struct TransferJet<F> {
    /// `d[k]` is the `k`-th derivative of the normalized product.
    pub d: [Mat<F>; 3],
    pub exp2: i64,
}

impl<F: Field> TransferJet<F> {
    /// Trace of the `k`-th derivative, in the scaled frame.
    pub fn trace(&self, k: usize) -> F {
        self.d[k][0][0] + self.d[k][1][1]
    }

    /// Largest squared Frobenius norm among the derivatives computed.
    pub fn magnitude_sq(&self, order: usize) -> f64 {
        self.d[..=order].iter().map(frobenius_sq).fold(0.0, f64::max)
    }
}

/// Forward accumulation of the product and its derivatives up to order `D`
/// (at most 2) in one pass.
pub fn jet<F: Field, const D: usize>(values: &[f64], e: F) -> TransferJet<F> {
    let zero = [[F::zero(); 2]; 2];
    let mut m = [[F::one(), F::zero()], [F::zero(), F::one()]];
    let mut d1 = zero;
    let mut d2 = zero;
    let mut exp2 = 0i64;
    let two = F::from_f64(2.0);
    for &v in values {
        let a = e - F::from_f64(v);
        if D >= 2 {
            let [r0, _] = d1;
            step(&mut d2, a);
            d2[0][0] = d2[0][0] + two * r0[0];
            d2[0][1] = d2[0][1] + two * r0[1];
        }
        if D >= 1 {
            let [r0, _] = m;
            step(&mut d1, a);
            d1[0][0] = d1[0][0] + r0[0];
            d1[0][1] = d1[0][1] + r0[1];
        }
        step(&mut m, a);
        exp2 += match D {
            0 => rescale(&mut [&mut m]),
            1 => rescale(&mut [&mut m, &mut d1]),
            _ => rescale(&mut [&mut m, &mut d1, &mut d2]),
        };
    }
    TransferJet { d: [m, d1, d2], exp2 }
}

/// Monte Carlo estimate of the Lyapunov exponent at one energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub gamma_hat: f64,
    pub stderr: f64,
    pub steps: usize,
    pub replicas: usize,
}

/// Generator for replica `r`: the base seed with ChaCha stream `r`.
pub fn replica_rng(seed: u64, replica: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// `(1/steps)·log‖A_{E,steps}···A_{E,1}‖` for fresh sites from `rng`.
fn growth_rate(sampler: &crate::potential::SiteSampler, rng: &mut ChaCha20Rng, e: f64, steps: usize) -> f64 {
    let mut p = ScaledMatrix2::<f64>::identity();
    for _ in 0..steps {
        p.push(e, sampler.draw(rng));
    }
    p.log_norm() / steps as f64
}

/// Mean over independent replicas of the per-step log growth of the
/// transfer product at energy `e`. Replica `r` draws its sites from
/// [`replica_rng`]`(seed, r)`, so estimates at different energies share
/// their random numbers.
pub fn lyapunov_mc(spec: &DistributionSpec, e: f64, steps: usize, replicas: usize, seed: u64) -> Result<LyapunovEstimate> {
    spec.require_nondegenerate()?;
    if steps < 1000 {
        return Err(Error::InvalidArgument(format!("at least 1000 steps needed, got {steps}")));
    }
    if replicas == 0 {
        return Err(Error::InvalidArgument("at least one replica needed".into()));
    }
    let sampler = spec.sampler()?;
    let rates: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| growth_rate(&sampler, &mut replica_rng(seed, r), e, steps))
        .collect();
    let (gamma_hat, stderr) = mean_and_stderr(&rates);
    Ok(LyapunovEstimate {
        energy: e,
        gamma_hat,
        stderr,
        steps,
        replicas,
    })
}

/// One [`lyapunov_mc`] estimate per grid energy, all with the same seed.
pub fn lyapunov_profile(spec: &DistributionSpec, grid: &[f64], steps: usize, replicas: usize, seed: u64) -> Result<GammaProfile> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("energy grid must be strictly increasing".into()));
    }
    let estimates = grid
        .par_iter()
        .map(|&e| lyapunov_mc(spec, e, steps, replicas, seed))
        .collect::<Result<Vec<_>>>()?;
    GammaProfile::new(estimates)
}

/// Uniform grid over `[lo, hi]` with spacing at most `spacing`.
pub fn energy_grid(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let cells = ((hi - lo) / spacing).ceil().max(1.0) as usize;
    (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect()
}

/// Lyapunov estimates on a sorted energy grid, linearly interpolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaProfile {
    estimates: Vec<LyapunovEstimate>,
}

impl GammaProfile {
    pub fn new(estimates: Vec<LyapunovEstimate>) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::InvalidArgument("empty Lyapunov profile".into()));
        }
        if estimates.windows(2).any(|w| !(w[0].energy < w[1].energy)) {
            return Err(Error::InvalidArgument("profile energies must be strictly increasing".into()));
        }
        Ok(Self { estimates })
    }

    pub fn estimates(&self) -> &[LyapunovEstimate] {
        &self.estimates
    }

    fn interpolate(&self, e: f64, f: impl Fn(&LyapunovEstimate) -> f64) -> f64 {
        let est = &self.estimates;
        let i = est.partition_point(|x| x.energy <= e);
        if i == 0 {
            return f(&est[0]);
        }
        if i == est.len() {
            return f(&est[est.len() - 1]);
        }
        let (a, b) = (&est[i - 1], &est[i]);
        let t = (e - a.energy) / (b.energy - a.energy);
        f(a) + t * (f(b) - f(a))
    }

    /// Interpolated `gamma_hat(e)`; constant beyond the grid ends.
    pub fn gamma(&self, e: f64) -> f64 {
        self.interpolate(e, |x| x.gamma_hat)
    }

    pub fn stderr(&self, e: f64) -> f64 {
        self.interpolate(e, |x| x.stderr)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["E", "gamma_hat", "stderr", "steps", "replicas"])
            .map_err(csv_err)?;
        for x in &self.estimates {
            out.write_record([
                fmt_real(x.energy),
                fmt_real(x.gamma_hat),
                fmt_real(x.stderr),
                x.steps.to_string(),
                x.replicas.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut estimates = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let field = |i: usize| rec.get(i).ok_or_else(|| Error::Schema(format!("missing column {i}")));
            let num = |i: usize| -> Result<f64> { field(i)?.parse().map_err(|_| Error::Schema(format!("bad number in column {i}"))) };
            let int = |i: usize| -> Result<usize> { field(i)?.parse().map_err(|_| Error::Schema(format!("bad integer in column {i}"))) };
            estimates.push(LyapunovEstimate {
                energy: num(0)?,
                gamma_hat: num(1)?,
                stderr: num(2)?,
                steps: int(3)?,
                replicas: int(4)?,
            });
        }
        Self::new(estimates)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Schema(e.to_string())
}

/// Empirical law of `(1/n)·log‖A_{E,n}···A_{E,1}‖ - gamma_hat(E)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub energy: f64,
    pub n: usize,
    pub replicas: usize,
    pub gamma_hat: f64,
    pub gamma_stderr: f64,
    pub mean: f64,
    pub variance: f64,
    /// `(ε, P(deviation > ε))`.
    pub upper_tail: Vec<(f64, f64)>,
    /// `(ε, P(|deviation| > ε))`.
    pub two_sided_tail: Vec<(f64, f64)>,
}

/// Thresholds at which tail frequencies are reported.
pub const DEVIATION_LEVELS: [f64; 3] = [0.1, 0.2, 0.3];

/// Steps and replicas of the reference `gamma_hat` inside [`large_deviation_stats`].
pub const REFERENCE_STEPS: usize = 100_000;
pub const REFERENCE_REPLICAS: usize = 16;

/// Samples `replicas` products of length `n` and summarizes their deviation
/// from a long-run reference estimate of the Lyapunov exponent. The
/// reference uses a seed derived from `seed` so it is independent of the
/// short products.
pub fn large_deviation_stats(spec: &DistributionSpec, e: f64, n: usize, replicas: usize, seed: u64) -> Result<DeviationSummary> {
    spec.require_nondegenerate()?;
    if n == 0 || replicas == 0 {
        return Err(Error::InvalidArgument("n and replicas must be positive".into()));
    }
    let reference = lyapunov_mc(spec, e, REFERENCE_STEPS, REFERENCE_REPLICAS, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let sampler = spec.sampler()?;
    let devs: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| growth_rate(&sampler, &mut replica_rng(seed, r), e, n) - reference.gamma_hat)
        .collect();
    let m = devs.len() as f64;
    let mean = devs.iter().sum::<f64>() / m;
    let variance = if devs.len() > 1 {
        devs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let freq = |pred: &dyn Fn(f64) -> bool| devs.iter().filter(|d| pred(**d)).count() as f64 / m;
    Ok(DeviationSummary {
        energy: e,
        n,
        replicas,
        gamma_hat: reference.gamma_hat,
        gamma_stderr: reference.stderr,
        mean,
        variance,
        upper_tail: DEVIATION_LEVELS.iter().map(|&eps| (eps, freq(&|d| d > eps))).collect(),
        two_sided_tail: DEVIATION_LEVELS.iter().map(|&eps| (eps, freq(&|d| d.abs() > eps))).collect(),
    })
}

/// Thouless formula estimate `mean over samples of (1/n)·Σ_j log|e - λ_j(0)|`
/// from Hermitian eigenvalues. Terms are clipped at `log(1e-300)` when `e` hits
/// an eigenvalue, which biases the estimate upward there.
pub fn thouless_gamma(ensemble: &[PotentialSample], e: f64) -> Result<f64> {
    if ensemble.len() < 50 {
        return Err(Error::InvalidArgument(format!("need at least 50 samples, got {}", ensemble.len())));
    }
    let first = &ensemble[0];
    if ensemble.iter().any(|s| s.spec != first.spec || s.n != first.n) {
        return Err(Error::InvalidArgument("samples differ in distribution or length".into()));
    }
    if first.n < 40 {
        return Err(Error::InvalidArgument(format!("need n >= 40, got {}", first.n)));
    }
    let per_sample: Vec<f64> = ensemble
        .par_iter()
        .map(|s| {
            let bs = crate::bands::band_structure::<f64>(s)?;
            let sum: f64 = bs.hermitian_eigenvalues().iter().map(|l| (e - l).abs().max(1e-300).ln()).sum();
            Ok(sum / s.n as f64)
        })
        .collect::<Result<_>>()?;
    Ok(per_sample.iter().sum::<f64>() / per_sample.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DoubleDouble;
    use num_complex::Complex;

    #[test]
    fn zero_potential_cube() {
        // [[2, -1], [1, 0]]^3; its square [[3, -2], [2, -1]] has the same trace
        let p = product(&[0.0; 3], 2.0f64);
        assert_eq!(p.to_plain(), [[4.0, -3.0], [3.0, -2.0]]);
        assert_eq!(p.trace().to_f64(), 2.0);
    }

    #[test]
    fn single_factor() {
        let p = product(&[0.5], 3.0f64);
        assert_eq!(p.to_plain(), [[2.5, -1.0], [1.0, 0.0]]);
        assert!((p.trace().to_f64() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn stays_normalized() {
        let values: Vec<f64> = (0..1000).map(|k| ((k * 37) % 11) as f64 / 10.0).collect();
        let mut p = ScaledMatrix2::<f64>::identity();
        for &v in &values {
            p.push(3.1, v);
            let f = p.frobenius_sq().sqrt();
            assert!((0.5..=2.0).contains(&f), "norm {f}");
        }
    }

    #[test]
    fn unimodular_inside_the_band() {
        // det of the normalized matrix is exp(-2·log‖P‖); it stays resolvable
        // while the growth is modest, here inside the spectrum
        let values: Vec<f64> = (0..1000).map(|k| ((k * 37) % 11) as f64 / 10.0).collect();
        let p = product(&values, DoubleDouble::from(0.5));
        let det = p.det();
        assert_eq!(det.sign(), 1);
        assert!(det.logmag().abs() < 1e-8, "log det {}", det.logmag());
    }

    #[test]
    fn jet_matches_finite_differences() {
        let values = [0.3, -0.1, 0.7, 0.2, 0.9, -0.4];
        let e = 0.37;
        let j = jet::<f64, 2>(&values, e);
        let s = (j.exp2 as f64).exp2();
        let tr = |x: f64| product(&values, x).trace().to_f64();
        let h = 1e-5;
        let d1 = (tr(e + h) - tr(e - h)) / (2.0 * h);
        let d2 = (tr(e + h) - 2.0 * tr(e) + tr(e - h)) / (h * h);
        assert!((j.trace(0) * s - tr(e)).abs() < 1e-12);
        assert!((j.trace(1) * s - d1).abs() < 1e-6 * d1.abs().max(1.0));
        assert!((j.trace(2) * s - d2).abs() < 1e-3 * d2.abs().max(1.0));
    }

    #[test]
    fn complex_and_extended_agree() {
        let values = [0.3, -0.1, 0.7, 0.2];
        let z = Complex::new(0.4, 0.2);
        let a = product(&values, z);
        let b = product(&values, Complex::new(DoubleDouble::from(0.4), DoubleDouble::from(0.2)));
        let ta = (a.matrix()[0][0] + a.matrix()[1][1]) * (a.exp2() as f64).exp2();
        let tb = b.matrix()[0][0] + b.matrix()[1][1];
        let tb = Complex::new(tb.re.to_f64(), tb.im.to_f64()) * (b.exp2() as f64).exp2();
        assert!((ta - tb).norm() < 1e-14);
    }

    #[test]
    fn degenerate_spec_rejected() {
        let r = lyapunov_mc(&DistributionSpec::bernoulli(1.0, 1.0), 0.0, 1000, 2, 1);
        assert!(matches!(r, Err(Error::DegenerateSpec(_))));
    }

    #[test]
    fn far_energy_growth() {
        let est = lyapunov_mc(&DistributionSpec::uniform(0.0, 1.0), 10.0, 5000, 4, 3).unwrap();
        assert!(est.gamma_hat >= 7f64.ln() - 0.05, "{est:?}");
    }

    #[test]
    fn singleton_profile_and_interpolation() {
        let spec = DistributionSpec::uniform(0.0, 1.0);
        let p = lyapunov_profile(&spec, &[0.5], 2000, 2, 1).unwrap();
        assert_eq!(p.estimates().len(), 1);
        let p = GammaProfile::new(vec![
            LyapunovEstimate {
                energy: 0.0,
                gamma_hat: 1.0,
                stderr: 0.1,
                steps: 1,
                replicas: 1,
            },
            LyapunovEstimate {
                energy: 1.0,
                gamma_hat: 3.0,
                stderr: 0.3,
                steps: 1,
                replicas: 1,
            },
        ])
        .unwrap();
        assert_eq!(p.gamma(0.25), 1.5);
        assert_eq!(p.gamma(-1.0), 1.0);
        assert_eq!(p.gamma(2.0), 3.0);
        assert!((p.stderr(0.5) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn profile_csv_round_trip() {
        let spec = DistributionSpec::uniform(0.0, 1.0);
        let p = lyapunov_profile(&spec, &[-1.0, 0.0, 1.0], 1000, 2, 4).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("E,gamma_hat,stderr,steps,replicas\n"));
        assert_eq!(GammaProfile::read_csv(&buf[..]).unwrap(), p);
    }

    #[test]
    fn single_replica_has_zero_variance() {
        let s = large_deviation_stats(&DistributionSpec::uniform(0.0, 1.0), 0.5, 60, 1, 2).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.upper_tail.len(), 3);
    }

    #[test]
    fn energy_grid_spacing() {
        let g = energy_grid(-4.0, 4.0, 0.02);
        assert_eq!(g.first(), Some(&-4.0));
        assert_eq!(g.last(), Some(&4.0));
        assert!(g.windows(2).all(|w| w[1] - w[0] <= 0.02 + 1e-15));
    }

    #[test]
    fn thouless_free_laplacian() {
        let ensemble = vec![PotentialSample::zero(200); 50];
        let e: f64 = 3.0;
        let want = (e / 2.0 + (e * e / 4.0 - 1.0).sqrt()).ln();
        assert!((thouless_gamma(&ensemble, e).unwrap() - want).abs() < 0.02);
        assert!(thouless_gamma(&ensemble[..10], e).is_err());
    }
}
