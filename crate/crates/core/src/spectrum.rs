//! Eigenvalues of the ring operator `H_n(g)` through `|Δ_n(z)| = 2cosh(ng)`,
//! a brute-force determinant oracle, and eigenvalue flow in `g`.
//!
//! Convention: `det(zI - H_n(g)) = Δ_n(z) - 2cosh(ng)`, so eigenvalues solve
//! `Δ_n(z) = +2cosh(ng)`; the test `oracle_fixes_the_sign` pins this.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{band_structure, energy_tol, solve_level, BandStructure, Direction};
use crate::discriminant::{level_difference, second_order_at, DiscCoeffs, LevelPoly};
use crate::error::{Error, Result};
use crate::numerics::fmt_real;
use crate::numerics::poly::{aberth, AberthOptions};
use crate::numerics::scalar::{complex_abs, complex_to_f64};
use crate::numerics::{DoubleDouble, Scalar, ScaledReal};
use crate::potential::PotentialSample;
use crate::transfer::csv_err;

/// Sign of the level in `det(zI - H) = Δ_n(z) - LEVEL_SIGN·2cosh(ng)`.
pub const LEVEL_SIGN: f64 = 1.0;

/// Largest `n·g` for which `2cosh(ng)` is representable.
pub const MAX_NG: f64 = 700.0;

/// Largest ring for [`charpoly_oracle`].
pub const MAX_ORACLE_SIZE: usize = 12;

#[derive(Clone, Copy, Debug)]
pub struct SpectralParams {
    pub n: usize,
    pub g: f64,
    /// `2cosh(ng)`.
    pub target: ScaledReal,
    target_dd: DoubleDouble,
    excess_dd: DoubleDouble,
}

impl SpectralParams {
    pub fn new(n: usize, g: f64) -> Result<Self> {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidArgument(format!("g must be finite and non-negative, got {g}")));
        }
        let ng = n as f64 * g;
        if ng > MAX_NG {
            return Err(Error::CapabilityExceeded {
                what: format!("2cosh(ng) with ng = {ng}"),
                limit: MAX_NG as usize,
            });
        }
        let (t, excess) = DoubleDouble::two_cosh_and_excess(DoubleDouble::from(n as f64) * DoubleDouble::from(g));
        // ng + ln(1 + e^{-2ng}), exact for large ng
        let logmag = ng + (-2.0 * ng).exp().ln_1p();
        Ok(Self {
            n,
            g,
            target: ScaledReal::new(1, logmag),
            target_dd: t,
            excess_dd: excess,
        })
    }

    /// `2cosh(ng)` in double-double.
    pub fn level(&self) -> DoubleDouble {
        self.target_dd.mul_f64(LEVEL_SIGN)
    }

    /// `2cosh(ng) - 2`, accurate for small `ng`.
    pub fn excess(&self) -> DoubleDouble {
        self.excess_dd
    }
}

/// Eigenvalues at one `g`, sorted by real then imaginary part.
#[derive(Clone, Debug)]
pub struct SpectrumResult<T> {
    pub g: f64,
    pub eigenvalues: Vec<Complex<T>>,
    pub is_real: Vec<bool>,
    /// Band index of each real eigenvalue.
    pub index_map: Vec<Option<usize>>,
    /// `λ_j(g)` per band while it is real.
    pub real_by_band: Vec<Option<T>>,
}

impl<T: Scalar> SpectrumResult<T> {
    pub fn to_f64(&self) -> Vec<Complex<f64>> {
        self.eigenvalues.iter().map(|z| complex_to_f64(*z)).collect()
    }

    pub fn complex_count(&self) -> usize {
        self.is_real.iter().filter(|r| !**r).count()
    }
}

/// `λ_j(0)` for every band, from the edges where `Δ_n = 2`.
pub fn eigvals_hermitian<T: Scalar>(sample: &PotentialSample) -> Result<SpectrumResult<T>> {
    let bs = band_structure::<T>(sample)?;
    Ok(hermitian_from(&bs))
}

pub fn hermitian_from<T: Scalar>(bs: &BandStructure<T>) -> SpectrumResult<T> {
    let lam = bs.hermitian_eigenvalues();
    let mut order: Vec<usize> = (0..lam.len()).collect();
    order.sort_by(|&a, &b| lam[a].partial_cmp(&lam[b]).expect("finite eigenvalues").then(a.cmp(&b)));
    SpectrumResult {
        g: 0.0,
        eigenvalues: order.iter().map(|&j| Complex::new(lam[j], T::zero())).collect(),
        is_real: vec![true; lam.len()],
        index_map: order.iter().map(|&j| Some(j)).collect(),
        real_by_band: lam.into_iter().map(Some).collect(),
    }
}

/// `λ_j(g)` if it is still real: bisection of `Δ_n - 2cosh(ng)` between
/// `from` (a point of the stretch with `Δ_n <= 2cosh(ng)`, e.g. `λ_j(0)`) and
/// the turning point `λ_j` moves toward.
pub fn real_eigenvalue<T: Scalar>(bs: &BandStructure<T>, j: usize, params: &SpectralParams, from: T) -> Result<Option<T>> {
    let values = &bs.values;
    let level = params.level();
    let (d0, err0) = level_difference(values, from, level);
    if d0.sign() >= 0 || d0.logmag() <= err0 {
        return Ok(Some(from));
    }
    let dir = bs.direction(j);
    let far = match bs.target_turning_point(j) {
        Some(k) => {
            let tp = bs.turning_points[k];
            let (d, err) = level_difference(values, tp, level);
            if d.is_zero() || d.logmag() <= err {
                return Ok(Some(tp));
            }
            if d.sign() < 0 {
                return Ok(None);
            }
            tp
        }
        None => {
            // outer eigenvalue moving outward: expand until the trace exceeds the level
            let sgn = if dir == Direction::Right { 1.0 } else { -1.0 };
            let mut step = 1.0;
            loop {
                let x = from + T::from_f64(sgn * step);
                if level_difference(values, x, level).0.sign() > 0 {
                    break x;
                }
                step *= 2.0;
                if step > 1e300 {
                    return Err(Error::StructureViolation(format!("trace never reaches the level beyond band {j}")));
                }
            }
        }
    };
    let (lo, hi) = if dir == Direction::Right { (from, far) } else { (far, from) };
    solve_level(values, lo, hi, level).map(Some)
}

/// All `n` eigenvalues of `H_n(g)`.
pub fn eigvals_g<T: Scalar>(sample: &PotentialSample, params: &SpectralParams) -> Result<SpectrumResult<T>> {
    let bs = band_structure::<T>(sample)?;
    eigvals_from(&bs, params)
}

pub fn eigvals_from<T: Scalar>(bs: &BandStructure<T>, params: &SpectralParams) -> Result<SpectrumResult<T>> {
    let starts = bs.hermitian_eigenvalues();
    eigvals_from_starts(bs, params, &starts)
}

fn eigvals_from_starts<T: Scalar>(bs: &BandStructure<T>, params: &SpectralParams, starts: &[T]) -> Result<SpectrumResult<T>> {
    let n = bs.n();
    if params.n != n {
        return Err(Error::InvalidArgument(format!("parameters for n = {} used with n = {n}", params.n)));
    }
    if params.g == 0.0 {
        return Ok(hermitian_from(bs));
    }
    let real_by_band: Vec<Option<T>> = (0..n)
        .into_par_iter()
        .map(|j| real_eigenvalue(bs, j, params, starts[j]))
        .collect::<Result<_>>()?;
    let complex = complex_eigenvalues(bs, params, &real_by_band)?;
    assemble(bs, params, real_by_band, complex)
}

/// The turning points whose `Δ_n` value falls short of the level; each one
/// releases a conjugate pair.
fn uncovered_turning_points<T: Scalar>(bs: &BandStructure<T>, real_by_band: &[Option<T>]) -> Vec<usize> {
    (0..bs.turning_points.len())
        .filter(|&k| bs.tp_value[k].sign() > 0 && real_by_band[k].is_none() && real_by_band[k + 1].is_none())
        .collect()
}

fn complex_eigenvalues<T: Scalar>(bs: &BandStructure<T>, params: &SpectralParams, real_by_band: &[Option<T>]) -> Result<Vec<Complex<T>>> {
    let uncovered = uncovered_turning_points(bs, real_by_band);
    if uncovered.is_empty() {
        return Ok(Vec::new());
    }
    let values = &bs.values;
    let level = params.level();
    let cap = 2.0 * params.g.sinh() + 1e-3;
    let mut initial = Vec::with_capacity(2 * uncovered.len());
    for &k in &uncovered {
        let x = bs.turning_points[k];
        let [d, _, d2] = second_order_at(values, x);
        // Δ(x + iy) ≈ Δ(x) - Δ''(x) y²/2
        let deficit = (params.target - d).to_f64();
        let curv = d2.abs().to_f64();
        let y = if curv > 0.0 && deficit.is_finite() {
            (2.0 * deficit.max(0.0) / curv).sqrt()
        } else {
            cap
        };
        let y = y.clamp(1e-8 * (1.0 + x.to_f64().abs()), cap);
        initial.push(Complex::new(x.to_f64(), y));
        initial.push(Complex::new(x.to_f64(), -y));
    }
    let fixed: Vec<Complex<DoubleDouble>> = real_by_band
        .iter()
        .flatten()
        .map(|x| Complex::new(x.to_dd(), DoubleDouble::ZERO))
        .collect();
    let target = LevelPoly { values, level };
    let roots = aberth(&target, initial, &fixed, &AberthOptions::default())?;
    Ok(roots
        .into_iter()
        .map(|z| Complex::new(T::from_dd(z.re), T::from_dd(z.im)))
        .collect())
}

fn assemble<T: Scalar>(
    bs: &BandStructure<T>,
    params: &SpectralParams,
    real_by_band: Vec<Option<T>>,
    complex: Vec<Complex<T>>,
) -> Result<SpectrumResult<T>> {
    let n = bs.n();
    let real = real_by_band.iter().flatten().count();
    let genuinely_complex = complex.iter().filter(|z| z.im != T::zero()).count();
    if real + genuinely_complex != n {
        let diagnostics = (0..bs.turning_points.len())
            .map(|k| {
                format!(
                    "turning point {k}: E' = {}, log|Δ| = {}",
                    bs.turning_points[k].to_f64(),
                    bs.tp_value[k].logmag()
                )
            })
            .chain([format!("log 2cosh(ng) = {}", params.target.logmag())])
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::CountMismatch {
            n,
            real,
            complex: genuinely_complex,
            diagnostics,
        });
    }
    let mut entries: Vec<(Complex<T>, Option<usize>)> = real_by_band
        .iter()
        .enumerate()
        .filter_map(|(j, x)| x.map(|x| (Complex::new(x, T::zero()), Some(j))))
        .chain(complex.into_iter().map(|z| (z, None)))
        .collect();
    entries.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.im.partial_cmp(&b.0.im).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.1.cmp(&b.1))
    });
    Ok(SpectrumResult {
        g: params.g,
        is_real: entries.iter().map(|e| e.1.is_some()).collect(),
        index_map: entries.iter().map(|e| e.1).collect(),
        eigenvalues: entries.into_iter().map(|e| e.0).collect(),
        real_by_band,
    })
}

/// Coefficients of `det(zI - H_n(g))` by cofactor expansion over column
/// subsets in double-double. Exponential in `n`; only for cross-checks.
pub fn charpoly_oracle(sample: &PotentialSample, g: f64) -> Result<DiscCoeffs> {
    let n = sample.values.len();
    if n > MAX_ORACLE_SIZE {
        return Err(Error::CapabilityExceeded {
            what: format!("dense determinant of size {n}"),
            limit: MAX_ORACLE_SIZE,
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty potential".into()));
    }
    let zero = DoubleDouble::ZERO;
    let up = DoubleDouble::from(g).exp();
    let down = DoubleDouble::from(-g).exp();
    // H entries; at n = 2 both hoppings land on the same entry and add
    let mut h = vec![vec![zero; n]; n];
    for k in 0..n {
        h[k][(k + 1) % n] += up;
        h[k][(k + n - 1) % n] += down;
    }
    // row k of zI - H as (column, constant, has z)
    let rows: Vec<Vec<(usize, DoubleDouble, bool)>> = (0..n)
        .map(|k| {
            (0..n)
                .filter_map(|c| {
                    if c == k {
                        Some((c, DoubleDouble::from(-sample.values[k]) - h[k][c], true))
                    } else if h[k][c] != zero {
                        Some((c, -h[k][c], false))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let mut dp: Vec<Option<Vec<DoubleDouble>>> = vec![None; 1 << n];
    dp[0] = Some(vec![DoubleDouble::ONE]);
    for mask in 0..(1usize << n) {
        let Some(poly) = dp[mask].take() else { continue };
        let r = mask.count_ones() as usize;
        if r == n {
            dp[mask] = Some(poly);
            continue;
        }
        for &(c, constant, has_z) in &rows[r] {
            if mask & (1 << c) != 0 {
                continue;
            }
            // transpositions needed to move column c past the larger ones already used
            let inversions = (mask >> (c + 1)).count_ones();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            let next = mask | (1 << c);
            let slot = dp[next].get_or_insert_with(|| vec![zero; n + 1]);
            for (i, p) in poly.iter().enumerate() {
                let p = p.mul_f64(sign);
                slot[i] += p * constant;
                if has_z && i < n {
                    slot[i + 1] += p;
                }
            }
        }
    }
    let mut coeffs = dp[(1 << n) - 1].take().unwrap_or_else(|| vec![zero; n + 1]);
    coeffs.resize(n + 1, zero);
    Ok(DiscCoeffs { coeffs })
}

/// Eigenvalue trajectories on a grid of `g` values.
#[derive(Clone, Debug)]
pub struct SpectrumFlow<T> {
    pub g_grid: Vec<f64>,
    /// `trajectories[j][i]` is `λ_j(g_grid[i])`.
    pub trajectories: Vec<Vec<Complex<T>>>,
    pub is_real: Vec<Vec<bool>>,
    pub critical_g: Vec<f64>,
    pub direction: Vec<Direction>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowSummary {
    pub n: usize,
    pub g_grid: Vec<f64>,
    /// `None` where the eigenvalue stays real for every `g`.
    pub critical_g: Vec<Option<f64>>,
    pub direction: Vec<Direction>,
}

impl<T: Scalar> SpectrumFlow<T> {
    /// Values at grid point `i` in band order.
    pub fn at(&self, i: usize) -> Vec<Complex<T>> {
        self.trajectories.iter().map(|t| t[i]).collect()
    }

    pub fn summary(&self) -> FlowSummary {
        FlowSummary {
            n: self.trajectories.len(),
            g_grid: self.g_grid.clone(),
            critical_g: self.critical_g.iter().map(|g| g.is_finite().then_some(*g)).collect(),
            direction: self.direction.clone(),
        }
    }

    /// Rows `g, j, re, im, is_real` ordered by `g`, then `j` (from 1).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["g", "j", "re", "im", "is_real"]).map_err(csv_err)?;
        for (i, g) in self.g_grid.iter().enumerate() {
            for j in 0..self.trajectories.len() {
                let z = self.trajectories[j][i];
                out.write_record([
                    fmt_real(*g),
                    (j + 1).to_string(),
                    fmt_real(z.re.to_f64()),
                    fmt_real(z.im.to_f64()),
                    self.is_real[j][i].to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Tracks every `λ_j(g)` along `g_grid`: real ones by monotone bisection from
/// the previous value, complex ones by matching the solver output to a
/// secant prediction.
pub fn flow<T: Scalar>(sample: &PotentialSample, g_grid: &[f64]) -> Result<SpectrumFlow<T>> {
    let bs = band_structure::<T>(sample)?;
    flow_from(&bs, g_grid)
}

pub fn flow_from<T: Scalar>(bs: &BandStructure<T>, g_grid: &[f64]) -> Result<SpectrumFlow<T>> {
    if g_grid.first() != Some(&0.0) || g_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("g grid must start at 0 and increase strictly".into()));
    }
    let n = bs.n();
    let lam0 = bs.hermitian_eigenvalues();
    let mut traj: Vec<Vec<Complex<T>>> = lam0.iter().map(|x| vec![Complex::new(*x, T::zero())]).collect();
    let mut real: Vec<Vec<bool>> = vec![vec![true]; n];
    for i in 1..g_grid.len() {
        let params = SpectralParams::new(n, g_grid[i])?;
        let starts: Vec<T> = (0..n).map(|j| if real[j][i - 1] { traj[j][i - 1].re } else { lam0[j] }).collect();
        let spec = eigvals_from_starts(bs, &params, &starts)?;
        let mut free: Vec<Complex<T>> = spec
            .eigenvalues
            .iter()
            .zip(&spec.is_real)
            .filter(|(_, r)| !**r)
            .map(|(z, _)| *z)
            .collect();
        let dg = g_grid[i] - g_grid[i - 1];
        for j in 0..n {
            if let Some(x) = spec.real_by_band[j] {
                traj[j].push(Complex::new(x, T::zero()));
                real[j].push(true);
                continue;
            }
            let prev = traj[j][i - 1];
            let prev_abs = complex_abs(prev);
            let (prediction, window) = if real[j][i - 1] {
                // square-root branch point: the pair leaves the axis like sqrt(g - g_c)
                (prev, 10.0 * (dg.sqrt() * (1.0 + prev_abs)))
            } else {
                let before = if i >= 2 { traj[j][i - 2] } else { prev };
                let secant = if i >= 2 && !real[j][i - 2] {
                    (prev - before) * T::from_f64(dg / (g_grid[i - 1] - g_grid[i - 2]))
                } else {
                    Complex::new(T::zero(), T::zero())
                };
                (prev + secant, 10.0 * complex_abs(secant).max(dg * (1.0 + prev_abs)))
            };
            let best = free
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    let (da, db) = (complex_abs(**a - prediction), complex_abs(**b - prediction));
                    // ties between conjugates go to the upper half-plane
                    da.partial_cmp(&db)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
                })
                .map(|(k, z)| (k, *z, complex_abs(*z - prediction)));
            match best {
                Some((k, z, d)) if d <= window => {
                    free.swap_remove(k);
                    traj[j].push(z);
                    real[j].push(false);
                }
                other => {
                    return Err(Error::ContinuityBreak {
                        j,
                        g: g_grid[i],
                        distance: other.map_or(f64::INFINITY, |o| o.2),
                        window,
                    })
                }
            }
        }
    }
    Ok(SpectrumFlow {
        g_grid: g_grid.to_vec(),
        trajectories: traj,
        is_real: real,
        critical_g: (0..n).map(|j| bs.critical_g(j)).collect(),
        direction: (0..n).map(|j| bs.direction(j)).collect(),
    })
}

/// `(1/n)·arccosh(|Δ_n(E'_*)|/2)` for the turning point `λ_j` moves toward.
pub fn critical_g<T: Scalar>(bs: &BandStructure<T>, j: usize) -> f64 {
    bs.critical_g(j)
}

/// Largest `|log|Δ_n(z)| - log 2cosh(ng)|` over the eigenvalues.
pub fn max_log_residual<T: Scalar>(values: &[f64], spec: &SpectrumResult<T>, params: &SpectralParams) -> f64 {
    spec.eigenvalues
        .iter()
        .map(|z| {
            let p = crate::transfer::product(values, *z);
            (p.trace_logmag() - params.target.logmag()).abs()
        })
        .fold(0.0, f64::max)
}

/// Tolerance used for real eigenvalues near `x`.
pub fn eigenvalue_tol<T: Scalar>(x: f64) -> f64 {
    energy_tol::<T>(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::poly::{hausdorff, poly_roots, sort_complex};

    fn fixture() -> PotentialSample {
        PotentialSample::from_values(vec![0.3, -0.1, 0.7, 0.2])
    }

    fn circulant(n: usize, g: f64) -> Vec<Complex<f64>> {
        (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                Complex::new(g, t).cosh() * 2.0
            })
            .collect()
    }

    #[test]
    fn hermitian_four_site() {
        let s = eigvals_hermitian::<DoubleDouble>(&PotentialSample::zero(4)).unwrap();
        let want = [-2.0, 0.0, 0.0, 2.0];
        for (z, w) in s.to_f64().iter().zip(want) {
            assert!((z - w).norm() < 1e-15);
        }
        let s = eigvals_hermitian::<f64>(&PotentialSample::zero(2)).unwrap();
        assert!((s.to_f64()[0].re + 2.0).abs() < 1e-15 && (s.to_f64()[1].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn four_site_circulant() {
        let p = SpectralParams::new(4, 0.5).unwrap();
        let s = eigvals_g::<DoubleDouble>(&PotentialSample::zero(4), &p).unwrap();
        let got = s.to_f64();
        assert!(hausdorff(&got, &circulant(4, 0.5)) < 1e-14, "{got:?}");
        assert_eq!(s.complex_count(), 2);
        assert!((got[3].re - 2.2552).abs() < 1e-4);
    }

    #[test]
    fn oracle_examples() {
        let c = charpoly_oracle(&PotentialSample::zero(2), 0.0).unwrap();
        let want = [-4.0, 0.0, 1.0];
        for (a, b) in c.coeffs.iter().zip(want) {
            assert_eq!(a.to_f64(), b);
        }
        let c = charpoly_oracle(&PotentialSample::zero(3), 0.0).unwrap();
        let want = [-2.0, -3.0, 0.0, 1.0];
        for (a, b) in c.coeffs.iter().zip(want) {
            assert!((a.to_f64() - b).abs() < 1e-30);
        }
        assert!(charpoly_oracle(&PotentialSample::zero(13), 0.0).is_err());
    }

    #[test]
    fn oracle_fixes_the_sign() {
        let s = fixture();
        let g = 0.1;
        let c = charpoly_oracle(&s, g).unwrap();
        let mut d = crate::discriminant::disc_coeffs(&s).unwrap().coeffs;
        let p = SpectralParams::new(4, g).unwrap();
        d[0] -= p.level();
        for (a, b) in c.coeffs.iter().zip(&d) {
            assert!((*a - *b).abs().to_f64() <= 1e-20, "{a} vs {b}");
        }
    }

    #[test]
    fn fixture_matches_oracle() {
        let s = fixture();
        for g in [0.0, 0.1, 0.5, 1.0] {
            let p = SpectralParams::new(4, g).unwrap();
            let oracle = poly_roots(&charpoly_oracle(&s, g).unwrap().coeffs, 1e-20).unwrap();
            let got = eigvals_g::<DoubleDouble>(&s, &p).unwrap();
            assert!(hausdorff(&got.to_f64(), &oracle) <= 1e-8, "g = {g}");
            assert!(max_log_residual(&s.values, &got, &p) <= 1e-9);
        }
    }

    #[test]
    fn zero_potential_becomes_complex_immediately() {
        let bs = band_structure::<DoubleDouble>(&PotentialSample::zero(6)).unwrap();
        let grid: Vec<f64> = (0..11).map(|i| 0.05 * i as f64).collect();
        let f = flow_from(&bs, &grid).unwrap();
        for j in 1..5 {
            assert!(f.is_real[j][1..].iter().all(|r| !r));
        }
        assert!(f.is_real[0].iter().all(|r| *r) && f.is_real[5].iter().all(|r| *r));
        let g: f64 = 0.5;
        assert!((f.trajectories[5][10].re.to_f64() - 2.0 * g.cosh()).abs() < 1e-14);
        assert!((f.trajectories[0][10].re.to_f64() + 2.0 * g.cosh()).abs() < 1e-14);
    }

    #[test]
    fn fixture_flow_matches_pointwise_spectra() {
        let s = fixture();
        let grid: Vec<f64> = (0..21).map(|i| 0.05 * i as f64).collect();
        let f = flow::<DoubleDouble>(&s, &grid).unwrap();
        for (i, g) in grid.iter().enumerate() {
            let mut a: Vec<Complex<f64>> = f.at(i).iter().map(|z| complex_to_f64(*z)).collect();
            let p = SpectralParams::new(4, *g).unwrap();
            let mut b = eigvals_g::<DoubleDouble>(&s, &p).unwrap().to_f64();
            sort_complex(&mut a);
            sort_complex(&mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() <= 1e-8);
            }
            for j in 0..4 {
                let flips = f.is_real[j].windows(2).filter(|w| w[0] != w[1]).count();
                assert!(flips <= 1);
            }
        }
    }

    #[test]
    fn critical_g_matches_reality() {
        let s = fixture();
        let bs = band_structure::<DoubleDouble>(&s).unwrap();
        for j in 0..4 {
            let gc = critical_g(&bs, j);
            if !gc.is_finite() {
                continue;
            }
            let below = SpectralParams::new(4, gc * 0.999).unwrap();
            let above = SpectralParams::new(4, gc * 1.001).unwrap();
            assert!(real_eigenvalue(&bs, j, &below, bs.hermitian_eigenvalue(j)).unwrap().is_some());
            assert!(real_eigenvalue(&bs, j, &above, bs.hermitian_eigenvalue(j)).unwrap().is_none());
        }
    }

    #[test]
    fn target_is_scaled() {
        let p = SpectralParams::new(1000, 0.7).unwrap();
        assert!((p.target.logmag() - 700.0).abs() < 1e-12);
        assert!(SpectralParams::new(1000, 0.71).is_err());
    }
}
