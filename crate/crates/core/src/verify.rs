//! Checkers that confront computed spectra with the quantitative statements
//! of the theory and report signed margins (positive = satisfied).
//!
//! Deterministic inequalities use relative margins `(rhs - lhs) / max(rhs, lhs)`;
//! statements involving the Lyapunov exponent use margins in log scale and are
//! marked inconclusive when within `3·stderr·n` of zero.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{energy_tol, BandStructure};
use crate::discriminant::derivative_at;
use crate::error::{Error, Result};
use crate::numerics::fmt_real;
use crate::numerics::poly::poly_roots;
use crate::numerics::scalar::{complex_abs, complex_from_f64};
use crate::numerics::{DoubleDouble, Scalar, ScaledReal};
use crate::potential::PotentialSample;
use crate::spectrum::{charpoly_oracle, eigvals_g, SpectralParams, MAX_ORACLE_SIZE};
use crate::transfer::{csv_err, product, GammaProfile};

/// Statement identifiers used in [`CheckRecord::statement_id`].
pub mod ids {
    /// `|Δ_n(λ)| = 2cosh(ng)` at every eigenvalue.
    pub const EIGEN_IDENTITY: &str = "eigen_identity";
    /// `λ_j(g)` is real below `γ(λ_j(0)) - ε`.
    pub const REALITY: &str = "reality";
    /// `|λ_j(g) - λ_j(0)| < e^{-(γ-g-ε)n}`.
    pub const UPPER: &str = "shift_upper";
    /// `(1 - e^{-ng})²·e^{-(γ-g+ε)n} <= |λ_j(g) - λ_j(0)|`.
    pub const LOWER: &str = "shift_lower";
    /// `|E - E_j| < (e/(1+√5))·|Δ_n(E)|·|B_j|` on the stretch around `E_j`.
    pub const ROOT_DISTANCE: &str = "root_distance";
    /// `|Δ'_n(E_j)|·|B_j| >= 1 + √5`.
    pub const ROOT_SLOPE: &str = "root_slope";
    /// `max|Δ'_n| <= 2n²/(b-a)·max|Δ_n|` on `[a, b]`.
    pub const MARKOV: &str = "markov";
    /// `|Δ_n(E'_j)| > e^{(γ_max - ε)n}`.
    pub const TURNING_POINT_SIZE: &str = "turning_point_size";
    /// `|Δ_n(E'_j)| > (e^{-εn}/2n²)(1+√5)·e^{(γ_max - ε)n}`.
    pub const TURNING_POINT_CHAIN: &str = "turning_point_chain";
    /// `min |E_j - E_j'| > e^{-εn}`.
    pub const ROOT_GAP: &str = "root_gap";
    /// `min |λ_j(0) - λ_j'(0)| > e^{-εn}`.
    pub const EIGEN_GAP: &str = "eigen_gap";
    /// `sup_K (log|Δ'_n| - nγ) <= εn`.
    pub const DERIVATIVE_GROWTH: &str = "derivative_growth";
    /// `|λ_j(g) - λ_j(0)| < 2cosh(ng)·|B_j|`.
    pub const COSH_DISTANCE: &str = "cosh_distance";
}

/// Allowed negative slack before a record counts as failed.
pub fn tolerance(statement_id: &str) -> f64 {
    match statement_id {
        ids::ROOT_DISTANCE | ids::ROOT_SLOPE | ids::MARKOV => 1e-9,
        ids::COSH_DISTANCE => 1e-9,
        _ => 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Within the Monte Carlo uncertainty of the Lyapunov estimate.
    Inconclusive,
    /// The quantity is below what the working precision resolves.
    Skipped,
    /// The statement does not apply (e.g. a constant potential).
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub statement_id: String,
    pub sample_id: u64,
    /// Band index, 0-based; written 1-based to CSV.
    pub j: Option<usize>,
    pub g: Option<f64>,
    pub epsilon: Option<f64>,
    pub margin: f64,
    pub passed: bool,
    pub status: CheckStatus,
}

impl CheckRecord {
    fn new(statement_id: &str, sample_id: u64, j: Option<usize>, g: Option<f64>, epsilon: Option<f64>, margin: f64) -> Self {
        let passed = margin >= -tolerance(statement_id);
        Self {
            statement_id: statement_id.to_string(),
            sample_id,
            j,
            g,
            epsilon,
            margin,
            passed,
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }

    /// Marks the record inconclusive when `|margin| <= band`.
    fn with_uncertainty(mut self, band: f64) -> Self {
        if self.margin.abs() <= band {
            self.status = CheckStatus::Inconclusive;
        }
        self
    }

    fn with_status(mut self, status: CheckStatus) -> Self {
        self.status = status;
        self
    }

    fn not_applicable(statement_id: &str, sample_id: u64, j: Option<usize>, g: Option<f64>, epsilon: Option<f64>) -> Self {
        Self {
            statement_id: statement_id.to_string(),
            sample_id,
            j,
            g,
            epsilon,
            margin: f64::NAN,
            passed: false,
            status: CheckStatus::NotApplicable,
        }
    }

    /// Counts toward pass frequencies.
    pub fn is_decisive(&self) -> bool {
        matches!(self.status, CheckStatus::Pass | CheckStatus::Fail)
    }
}

fn opt_str<X: ToString>(x: Option<X>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Rows `statement_id, sample_id, j, g, epsilon, margin, passed`.
pub fn write_records_csv<W: Write>(records: &[CheckRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["statement_id", "sample_id", "j", "g", "epsilon", "margin", "passed"])
        .map_err(csv_err)?;
    for r in records {
        out.write_record([
            r.statement_id.clone(),
            r.sample_id.to_string(),
            opt_str(r.j.map(|j| j + 1)),
            opt_str(r.g),
            opt_str(r.epsilon),
            fmt_real(r.margin),
            r.passed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Counts per statement.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatementSummary {
    pub statement_id: String,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub skipped: usize,
    pub not_applicable: usize,
    /// `passed / (passed + failed)`, `None` without decisive records.
    pub pass_frequency: Option<f64>,
}

pub fn summarize(records: &[CheckRecord]) -> Vec<StatementSummary> {
    let mut map: BTreeMap<&str, StatementSummary> = BTreeMap::new();
    for r in records {
        let s = map.entry(&r.statement_id).or_insert_with(|| StatementSummary {
            statement_id: r.statement_id.clone(),
            ..Default::default()
        });
        s.total += 1;
        match r.status {
            CheckStatus::Pass => s.passed += 1,
            CheckStatus::Fail => s.failed += 1,
            CheckStatus::Inconclusive => s.inconclusive += 1,
            CheckStatus::Skipped => s.skipped += 1,
            CheckStatus::NotApplicable => s.not_applicable += 1,
        }
    }
    map.into_values()
        .map(|mut s| {
            let decisive = s.passed + s.failed;
            s.pass_frequency = (decisive > 0).then(|| s.passed as f64 / decisive as f64);
            s
        })
        .collect()
}

/// `(R - L) / max(R, L)` from `ln R` and `ln L`; zero when both vanish.
pub fn relative_margin(log_rhs: f64, log_lhs: f64) -> f64 {
    if log_rhs == f64::NEG_INFINITY && log_lhs == f64::NEG_INFINITY {
        0.0
    } else if log_rhs >= log_lhs {
        -(log_lhs - log_rhs).exp_m1()
    } else {
        (log_rhs - log_lhs).exp_m1()
    }
}

fn log_abs_diff<T: Scalar>(a: T, b: T) -> f64 {
    (a - b).abs().to_f64().ln()
}

/// Whether the Lyapunov-based statements make sense for this sample.
fn has_disorder(sample_spec_degenerate: bool) -> bool {
    !sample_spec_degenerate
}

/// `|log|Δ_n(λ)| - log 2cosh(ng)|` against `1e-8` at every eigenvalue: the
/// dense oracle's roots for `n <= 12`, the solver's own otherwise.
pub fn check_disc_identity(sample: &PotentialSample, sample_id: u64, g: f64) -> Result<Vec<CheckRecord>> {
    let n = sample.values.len();
    let params = SpectralParams::new(n, g)?;
    let roots: Vec<Complex<DoubleDouble>> = if n <= MAX_ORACLE_SIZE {
        poly_roots(&charpoly_oracle(sample, g)?.coeffs, 1e-20)?
            .into_iter()
            .map(complex_from_f64)
            .collect()
    } else {
        eigvals_g::<DoubleDouble>(sample, &params)?.eigenvalues
    };
    Ok(roots
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let dev = (product(&sample.values, *z).trace_logmag() - params.target.logmag()).abs();
            CheckRecord::new(ids::EIGEN_IDENTITY, sample_id, Some(i), Some(g), None, 1e-8 - dev)
        })
        .collect())
}

/// `λ_j(g) - λ_j(0)` for every band.
fn shifts<T: Scalar>(bs: &BandStructure<T>, lambda_g: &[Complex<T>]) -> Vec<Complex<T>> {
    bs.hermitian_eigenvalues()
        .iter()
        .zip(lambda_g)
        .map(|(l0, lg)| *lg - Complex::new(*l0, T::zero()))
        .collect()
}

/// Reality and the two-sided bound on `|λ_j(g) - λ_j(0)|` for every band with
/// `g <= γ̂(λ_j(0)) - ε`. `lambda_g[j]` is `λ_j(g)` in band order, as tracked by
/// the flow.
pub fn check_shift_bounds<T: Scalar>(
    bs: &BandStructure<T>,
    degenerate: bool,
    sample_id: u64,
    g: f64,
    lambda_g: &[Complex<T>],
    epsilon: f64,
    profile: &GammaProfile,
) -> Vec<CheckRecord> {
    let n = bs.n() as f64;
    if !has_disorder(degenerate) {
        return [ids::REALITY, ids::UPPER, ids::LOWER]
            .iter()
            .map(|id| CheckRecord::not_applicable(id, sample_id, None, Some(g), Some(epsilon)))
            .collect();
    }
    let lam0 = bs.hermitian_eigenvalues();
    let d = shifts(bs, lambda_g);
    let mut out = Vec::new();
    for j in 0..bs.n() {
        let e0 = lam0[j].to_f64();
        let gamma = profile.gamma(e0);
        if g > gamma - epsilon {
            continue;
        }
        let band = 3.0 * profile.stderr(e0) * n;
        let real = lambda_g[j].im == T::zero();
        let reality = CheckRecord::new(ids::REALITY, sample_id, Some(j), Some(g), Some(epsilon), bs.critical_g(j) - g);
        out.push(if real == reality.passed {
            reality
        } else {
            reality.with_status(CheckStatus::Fail)
        });
        let dist = complex_abs(d[j]);
        if g == 0.0 {
            let up = CheckRecord::new(ids::UPPER, sample_id, Some(j), Some(g), Some(epsilon), f64::INFINITY);
            out.push(up);
            // both sides vanish at g = 0
            out.push(CheckRecord::new(ids::LOWER, sample_id, Some(j), Some(g), Some(epsilon), 0.0));
            continue;
        }
        if dist <= 64.0 * energy_tol::<T>(e0) {
            for id in [ids::UPPER, ids::LOWER] {
                out.push(CheckRecord::new(id, sample_id, Some(j), Some(g), Some(epsilon), f64::NAN).with_status(CheckStatus::Skipped));
            }
            continue;
        }
        let log_d = dist.ln();
        let upper = -(gamma - g - epsilon) * n - log_d;
        out.push(CheckRecord::new(ids::UPPER, sample_id, Some(j), Some(g), Some(epsilon), upper).with_uncertainty(band));
        let prefactor = 2.0 * (-(-n * g).exp()).ln_1p();
        let lower = log_d - (prefactor - (gamma - g + epsilon) * n);
        out.push(CheckRecord::new(ids::LOWER, sample_id, Some(j), Some(g), Some(epsilon), lower).with_uncertainty(band));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub j: usize,
    pub g: f64,
    /// `-(1/n)·log|λ_j(g) - λ_j(0)|`, `+inf` at `g = 0`, `NaN` when unresolved.
    pub rate: f64,
    /// `γ̂(λ_j(0)) - g`.
    pub predicted: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub j: usize,
    pub slope: f64,
    pub intercept: f64,
    pub gamma_hat: f64,
    pub points: usize,
}

/// Rates along the grid points `g <= γ̂(λ_j(0)) - ε`; `traj[i]` is
/// `λ_j(g_grid[i])`.
pub fn rate_profile<T: Scalar>(
    bs: &BandStructure<T>,
    j: usize,
    g_grid: &[f64],
    traj: &[Complex<T>],
    epsilon: f64,
    profile: &GammaProfile,
) -> Vec<RateRecord> {
    let n = bs.n() as f64;
    let l0 = bs.hermitian_eigenvalue(j);
    let e0 = l0.to_f64();
    let gamma = profile.gamma(e0);
    g_grid
        .iter()
        .zip(traj)
        .filter(|(g, _)| **g <= gamma - epsilon)
        .map(|(&g, z)| {
            let dist = complex_abs(*z - Complex::new(l0, T::zero()));
            let rate = if g == 0.0 {
                f64::INFINITY
            } else if dist <= 64.0 * energy_tol::<T>(e0) {
                f64::NAN
            } else {
                -dist.ln() / n
            };
            RateRecord {
                j,
                g,
                rate,
                predicted: gamma - g,
            }
        })
        .collect()
}

/// Least-squares line through the finite rates; `None` with fewer than two.
pub fn fit_rate(records: &[RateRecord]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = records.iter().filter(|r| r.rate.is_finite()).map(|r| (r.g, r.rate)).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let first = &records[0];
    Some(RateFit {
        j: first.j,
        slope,
        intercept: my - slope * mx,
        gamma_hat: first.predicted + first.g,
        points: pts.len(),
    })
}

/// The interval on which the root-distance inequality holds for band `j`:
/// between the neighbouring turning points, or from the root inward for the
/// outer bands.
pub fn root_distance_interval<T: Scalar>(bs: &BandStructure<T>, j: usize) -> (T, T) {
    let n = bs.n();
    let lo = if j == 0 { bs.roots[0] } else { bs.turning_points[j - 1] };
    let hi = if j + 1 == n { bs.roots[n - 1] } else { bs.turning_points[j] };
    (lo, hi)
}

/// Root-distance inequality at `points_per_stretch` interior points of every
/// stretch (worst margin per band), and the root-slope bound per band.
pub fn check_root_distance_bounds<T: Scalar>(bs: &BandStructure<T>, sample_id: u64, points_per_stretch: usize) -> Vec<CheckRecord> {
    let n = bs.n();
    if n < 2 {
        return Vec::new();
    }
    let c = (std::f64::consts::E / (1.0 + 5f64.sqrt())).ln();
    let log_widths: Vec<f64> = bs.widths().iter().map(|w| w.ln()).collect();
    let values = &bs.values;
    (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let (lo, hi) = root_distance_interval(bs, j);
            let span = hi - lo;
            let worst = (0..points_per_stretch)
                .map(|i| {
                    let t = (i as f64 + 1.0) / (points_per_stretch as f64 + 1.0);
                    let e = lo + span * T::from_f64(t);
                    let log_rhs = c + product(values, e).trace().logmag() + log_widths[j];
                    relative_margin(log_rhs, log_abs_diff(e, bs.roots[j]))
                })
                .fold(f64::INFINITY, f64::min);
            let slope = derivative_at(values, bs.roots[j]).logmag() + log_widths[j];
            [
                CheckRecord::new(ids::ROOT_DISTANCE, sample_id, Some(j), None, None, worst),
                CheckRecord::new(
                    ids::ROOT_SLOPE,
                    sample_id,
                    Some(j),
                    None,
                    None,
                    relative_margin(slope, (1.0 + 5f64.sqrt()).ln()),
                ),
            ]
        })
        .collect()
}

const MARKOV_NODES: usize = 512;

/// Golden-section search for the maximum of `f` on `[a, b]`.
fn golden_max<T: Scalar, F: Fn(T) -> f64>(f: &F, a: T, b: T, iterations: usize) -> f64 {
    let r = T::from_f64(0.5 * (5f64.sqrt() - 1.0));
    let (mut a, mut b) = (a, b);
    let mut c = b - (b - a) * r;
    let mut d = a + (b - a) * r;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * r;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * r;
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Markov's inequality for `Δ_n` on `[a, b]`: `max|Δ_n|` exactly (endpoints
/// and interior turning points), `max|Δ'_n|` over Chebyshev–Lobatto nodes
/// refined by local maximization.
pub fn check_markov<T: Scalar>(bs: &BandStructure<T>, sample_id: u64, interval: (T, T)) -> Result<CheckRecord> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("empty interval [{}, {}]", a.to_f64(), b.to_f64())));
    }
    let values = &bs.values;
    let n = bs.n() as f64;
    let log_delta = |e: T| product(values, e).trace().logmag();
    let log_deriv = |e: T| derivative_at(values, e).logmag();
    let max_delta = bs
        .turning_points
        .iter()
        .filter(|x| a < **x && **x < b)
        .copied()
        .chain([a, b])
        .map(log_delta)
        .fold(f64::NEG_INFINITY, f64::max);
    let half = (b - a) * T::from_f64(0.5);
    let mid = a + half;
    let nodes: Vec<T> = (0..MARKOV_NODES)
        .map(|i| {
            let t = (std::f64::consts::PI * i as f64 / (MARKOV_NODES - 1) as f64).cos();
            if i == 0 {
                b
            } else if i == MARKOV_NODES - 1 {
                a
            } else {
                mid + half * T::from_f64(t)
            }
        })
        .collect();
    let vals: Vec<f64> = nodes.par_iter().map(|x| log_deriv(*x)).collect();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&i, &k| vals[k].total_cmp(&vals[i]));
    let mut max_deriv = vals[order[0]];
    for &i in order.iter().take(8) {
        let lo = nodes[(i + 1).min(nodes.len() - 1)];
        let hi = nodes[i.saturating_sub(1)];
        if lo < hi {
            max_deriv = max_deriv.max(golden_max(&log_deriv, lo, hi, 60));
        }
    }
    let log_rhs = (2.0 * n * n).ln() - (b - a).to_f64().ln() + max_delta;
    Ok(CheckRecord::new(
        ids::MARKOV,
        sample_id,
        None,
        None,
        None,
        relative_margin(log_rhs, max_deriv),
    ))
}

/// Markov check on the convex hull of the bands.
pub fn check_markov_hull<T: Scalar>(bs: &BandStructure<T>, sample_id: u64) -> Result<CheckRecord> {
    check_markov(bs, sample_id, (bs.bands[0][0], bs.bands[bs.n() - 1][1]))
}

/// Size of every turning point against `e^{(γ̂_max - ε)n}`, the same with the
/// explicit prefactor `(e^{-εn}/2n²)(1+√5)`, and the root gap against `e^{-εn}`.
pub fn check_turning_point_bound<T: Scalar>(
    bs: &BandStructure<T>,
    degenerate: bool,
    sample_id: u64,
    epsilon: f64,
    profile: &GammaProfile,
) -> Vec<CheckRecord> {
    let n = bs.n();
    let nf = n as f64;
    let e = Some(epsilon);
    let gap = crate::bands::spacing_stats(bs).min_root_gap;
    if !has_disorder(degenerate) {
        let mut out: Vec<CheckRecord> = (0..bs.turning_points.len())
            .flat_map(|k| {
                [ids::TURNING_POINT_SIZE, ids::TURNING_POINT_CHAIN].map(|id| CheckRecord::not_applicable(id, sample_id, Some(k), None, e))
            })
            .collect();
        out.push(CheckRecord::not_applicable(ids::ROOT_GAP, sample_id, None, None, e));
        return out;
    }
    let lam0 = bs.hermitian_eigenvalues();
    let mut out = Vec::new();
    for k in 0..bs.turning_points.len() {
        let (a, b) = (lam0[k].to_f64(), lam0[k + 1].to_f64());
        let (gamma_max, stderr) = if profile.gamma(a) >= profile.gamma(b) {
            (profile.gamma(a), profile.stderr(a))
        } else {
            (profile.gamma(b), profile.stderr(b))
        };
        let band = 3.0 * stderr * nf;
        let log_tp = bs.tp_value[k].logmag();
        let size = log_tp - (gamma_max - epsilon) * nf;
        out.push(CheckRecord::new(ids::TURNING_POINT_SIZE, sample_id, Some(k), None, e, size).with_uncertainty(band));
        let chain_rhs = -epsilon * nf - (2.0 * nf * nf).ln() + (1.0 + 5f64.sqrt()).ln() + (gamma_max - epsilon) * nf;
        out.push(CheckRecord::new(ids::TURNING_POINT_CHAIN, sample_id, Some(k), None, e, log_tp - chain_rhs).with_uncertainty(band));
    }
    out.push(CheckRecord::new(
        ids::ROOT_GAP,
        sample_id,
        None,
        None,
        e,
        gap - (-epsilon * nf).exp(),
    ));
    out
}

/// `εn - max_K (log|Δ'_n(E)| - n·γ̂(E))` over 512 points of `interval`.
pub fn check_derivative_ld<T: Scalar>(
    bs: &BandStructure<T>,
    degenerate: bool,
    sample_id: u64,
    interval: (f64, f64),
    epsilon: f64,
    profile: &GammaProfile,
) -> CheckRecord {
    if !has_disorder(degenerate) {
        return CheckRecord::not_applicable(ids::DERIVATIVE_GROWTH, sample_id, None, None, Some(epsilon));
    }
    let n = bs.n() as f64;
    let (lo, hi) = interval;
    let (worst, at) = (0..MARKOV_NODES)
        .into_par_iter()
        .map(|i| {
            let e = lo + (hi - lo) * i as f64 / (MARKOV_NODES - 1) as f64;
            (derivative_at(&bs.values, T::from_f64(e)).logmag() - n * profile.gamma(e), e)
        })
        .reduce(|| (f64::NEG_INFINITY, lo), |x, y| if y.0 > x.0 { y } else { x });
    CheckRecord::new(ids::DERIVATIVE_GROWTH, sample_id, None, None, Some(epsilon), epsilon * n - worst)
        .with_uncertainty(3.0 * profile.stderr(at) * n)
}

/// Smallest Hermitian eigenvalue gap against `e^{-εn}`, one record per sample.
/// The ensemble must hold at least 100 samples of a non-constant law.
pub fn check_spacings<T: Scalar>(ensemble: &[(u64, &PotentialSample, &BandStructure<T>)], epsilon: f64) -> Result<Vec<CheckRecord>> {
    if let Some((_, s, _)) = ensemble.iter().find(|(_, s, _)| s.spec.is_degenerate()) {
        s.spec.require_nondegenerate()?;
    }
    if ensemble.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "spacing statistics need at least 100 samples, got {}",
            ensemble.len()
        )));
    }
    Ok(ensemble
        .iter()
        .map(|(id, s, bs)| eigen_gap_record(*id, s.n, crate::bands::spacing_stats(*bs).min_eig_gap, epsilon))
        .collect())
}

/// One spacing record from a precomputed smallest eigenvalue gap.
pub fn eigen_gap_record(sample_id: u64, n: usize, min_eig_gap: f64, epsilon: f64) -> CheckRecord {
    CheckRecord::new(
        ids::EIGEN_GAP,
        sample_id,
        None,
        None,
        Some(epsilon),
        min_eig_gap - (-epsilon * n as f64).exp(),
    )
}

/// `log 2cosh(ng) + log|B_j| - log|λ_j(g) - λ_j(0)|` for every real inner
/// eigenvalue (and outer ones moving inward).
pub fn check_intermediate_cosh_bound<T: Scalar>(
    bs: &BandStructure<T>,
    sample_id: u64,
    g: f64,
    lambda_g: &[Complex<T>],
) -> Result<Vec<CheckRecord>> {
    let params = SpectralParams::new(bs.n(), g)?;
    let widths = bs.widths();
    let d = shifts(bs, lambda_g);
    Ok((0..bs.n())
        .filter(|&j| lambda_g[j].im == T::zero() && bs.target_turning_point(j).is_some())
        .map(|j| {
            let log_d = complex_abs(d[j]).ln();
            let log_rhs = params.target.logmag() + widths[j].ln();
            CheckRecord::new(
                ids::COSH_DISTANCE,
                sample_id,
                Some(j),
                Some(g),
                None,
                relative_margin(log_rhs, log_d),
            )
        })
        .collect())
}

/// `|Δ_n|` at a point, used by callers that report raw values.
pub fn trace_at<T: Scalar>(values: &[f64], e: T) -> ScaledReal {
    product(values, e).trace()
}
