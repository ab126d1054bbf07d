//! Band structure of the trace: roots `E_j`, turning points `E'_j`, and the
//! bands `B^{(j)}`, the connected components of `Δ_n^{-1}([-2, 2])`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminant::{derivative_at, level_difference, DerivativePoly};
use crate::error::{Error, Result};
use crate::numerics::fmt_real;
use crate::numerics::poly::{aberth, ellipse_guesses, AberthOptions};
use crate::numerics::root::{refine_bracket, tolerance_floor, Bracket, Refined, RootOptions};
use crate::numerics::{DoubleDouble, Scalar, ScaledReal};
use crate::potential::PotentialSample;
use crate::transfer::csv_err;

/// Side of a band, or direction of motion along the real axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

/// Roots, turning points and bands of one sample. Indices are 0-based:
/// stretch `j` runs from turning point `j - 1` to turning point `j`, with
/// `±inf` beyond the outermost ones.
#[derive(Clone, Debug)]
pub struct BandStructure<T> {
    pub values: Vec<f64>,
    /// The interval every band lies in, `[-3 - bound, 3 + bound]`.
    pub interval: (f64, f64),
    pub roots: Vec<T>,
    pub turning_points: Vec<T>,
    /// `[left, right]` edges, one band per stretch.
    pub bands: Vec<[T; 2]>,
    /// `Δ_n(E'_j)`.
    pub tp_value: Vec<ScaledReal>,
    /// `|Δ_n(E'_j)| - 2`, zero for touching bands.
    pub tp_excess: Vec<ScaledReal>,
    /// Whether `|Δ_n(E'_j)| = 2` to working precision.
    pub touching: Vec<bool>,
}

fn parity_sign(k: usize) -> i8 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

impl<T: Scalar> BandStructure<T> {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `log |Δ_n(E'_j)|`.
    pub fn tp_logmag(&self) -> Vec<f64> {
        self.tp_value.iter().map(|v| v.logmag()).collect()
    }

    /// Sign of `Δ_n` at the left and right end of stretch `j`.
    pub fn end_signs(&self, j: usize) -> (i8, i8) {
        let n = self.n();
        let left = if j == 0 { parity_sign(n) } else { self.tp_value[j - 1].sign() };
        let right = if j + 1 == n { 1 } else { self.tp_value[j].sign() };
        (left, right)
    }

    /// Side of stretch `j` where `Δ_n` is positive; the eigenvalue `λ_j(g)`
    /// moves that way as `g` grows.
    pub fn direction(&self, j: usize) -> Direction {
        if self.end_signs(j).1 > 0 {
            Direction::Right
        } else {
            Direction::Left
        }
    }

    /// Index of the turning point `λ_j(g)` moves toward, `None` when it moves
    /// outward past the last turning point.
    pub fn target_turning_point(&self, j: usize) -> Option<usize> {
        match self.direction(j) {
            Direction::Right if j + 1 < self.n() => Some(j),
            Direction::Left if j > 0 => Some(j - 1),
            _ => None,
        }
    }

    /// `λ_j(0)`: the edge of band `j` where `Δ_n = +2`.
    pub fn hermitian_eigenvalue(&self, j: usize) -> T {
        match self.direction(j) {
            Direction::Right => self.bands[j][1],
            Direction::Left => self.bands[j][0],
        }
    }

    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        (0..self.n()).map(|j| self.hermitian_eigenvalue(j)).collect()
    }

    /// Largest `g` for which `λ_j(g)` stays real: `(1/n)·arccosh(|Δ_n(E'_*)|/2)`
    /// at the turning point it moves toward, `+inf` without one.
    pub fn critical_g(&self, j: usize) -> f64 {
        match self.target_turning_point(j) {
            None => f64::INFINITY,
            Some(k) => arccosh_half(self.tp_value[k], self.tp_excess[k]) / self.n() as f64,
        }
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bands.iter().map(|[l, r]| (*r - *l).to_f64()).collect()
    }

    /// Fails when some band is narrower than the precision of `T` can
    /// resolve next to its edges.
    pub fn require_resolved(&self) -> Result<()> {
        for (j, [l, r]) in self.bands.iter().enumerate() {
            let w = (*r - *l).to_f64();
            let floor = 64.0 * tolerance_floor::<T>(l.to_f64());
            if w < floor && !(j > 0 && self.touching[j - 1]) && !(j < self.touching.len() && self.touching[j]) {
                return Err(Error::CapabilityExceeded {
                    what: format!("band {j} of width {w:e} in {} precision", T::NAME),
                    limit: self.n(),
                });
            }
        }
        Ok(())
    }

    /// One row per band: `j, E_j, left, right, width, logwidth, tp_logmag`,
    /// with `j` counted from 1 and `tp_logmag` that of the turning point to
    /// the right of the band (empty for the last one).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["j", "E_j", "left", "right", "width", "logwidth", "tp_logmag"])
            .map_err(csv_err)?;
        let widths = self.widths();
        for j in 0..self.n() {
            let tp = if j + 1 < self.n() {
                fmt_real(self.tp_value[j].logmag())
            } else {
                String::new()
            };
            out.write_record([
                (j + 1).to_string(),
                fmt_real(self.roots[j].to_f64()),
                fmt_real(self.bands[j][0].to_f64()),
                fmt_real(self.bands[j][1].to_f64()),
                fmt_real(widths[j]),
                fmt_real(widths[j].ln()),
                tp,
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `arccosh(|v|/2)` given `v` and the excess `|v| - 2`, stable both near
/// `|v| = 2` and for huge `|v|`.
pub fn arccosh_half(v: ScaledReal, excess: ScaledReal) -> f64 {
    let l = v.logmag() - std::f64::consts::LN_2;
    if l > 4.0 {
        // arccosh(y) = ln y + ln(1 + sqrt(1 - y^-2))
        l + (1.0 + (1.0 - (-2.0 * l).exp()).sqrt()).ln()
    } else {
        let d = if excess.sign() > 0 { 0.5 * excess.logmag().exp() } else { 0.0 };
        (d + (d * (2.0 + d)).sqrt()).ln_1p()
    }
}

/// Absolute tolerance for refined energies near `x`.
pub(crate) fn energy_tol<T: Scalar>(x: f64) -> f64 {
    4.0 * tolerance_floor::<T>(x)
}

/// Solves `Δ_n(x) = level` on `(lo, hi)`, where the difference changes sign.
pub(crate) fn solve_level<T: Scalar>(values: &[f64], lo: T, hi: T, level: DoubleDouble) -> Result<T> {
    let f = |x: T| level_difference(values, x, level).0;
    let (flo, fhi) = (f(lo), f(hi));
    if flo.is_zero() {
        return Ok(lo);
    }
    if fhi.is_zero() {
        return Ok(hi);
    }
    let bracket = Bracket::new(lo, hi, flo, fhi)?;
    let tol = energy_tol::<T>(lo.to_f64().abs().max(hi.to_f64().abs()));
    Ok(refine_bracket(f, bracket, RootOptions::new(tol))?.root())
}

/// All `n - 1` turning points: Aberth on `Δ'_n` for locations, then
/// bracketed refinement in `T` between midpoints of neighbouring estimates.
pub fn turning_points<T: Scalar>(values: &[f64], interval: (f64, f64)) -> Result<Vec<T>> {
    let n = values.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    let m = n - 1;
    let (lo, hi) = interval;
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let opts = AberthOptions {
        tol: 1e-6,
        polish_steps: 0,
        ..AberthOptions::default()
    };
    let target = DerivativePoly { values };
    let found = aberth(&target, ellipse_guesses(center, half, 0.3 * half, m), &[], &opts)?;
    let mut est: Vec<f64> = Vec::with_capacity(m);
    for z in &found {
        let (re, im) = (z.re.to_f64(), z.im.to_f64());
        if im.abs() > 1e-6 * (1.0 + re.abs()) {
            return Err(Error::StructureViolation(format!(
                "non-real critical point {re} + {im}i of the trace"
            )));
        }
        est.push(re);
    }
    est.sort_by(|a, b| a.total_cmp(b));
    // bracket ends: interval ends and midpoints between neighbouring estimates
    let mut ends = Vec::with_capacity(m + 1);
    ends.push(T::from_f64(lo.min(est[0] - 1.0)));
    for w in est.windows(2) {
        ends.push(T::from_f64(0.5 * (w[0] + w[1])));
    }
    ends.push(T::from_f64(hi.max(est[m - 1] + 1.0)));
    let f = |x: T| derivative_at(values, x);
    let fvals: Vec<ScaledReal> = ends.par_iter().map(|x| f(*x)).collect();
    for k in 0..m {
        if fvals[k].sign() * fvals[k + 1].sign() >= 0 {
            return Err(Error::StructureViolation(format!(
                "derivative of the trace does not change sign between {} and {} (turning point estimate {})",
                ends[k].to_f64(),
                ends[k + 1].to_f64(),
                est[k]
            )));
        }
    }
    (0..m)
        .into_par_iter()
        .map(|k| {
            let bracket = Bracket::new(ends[k], ends[k + 1], fvals[k], fvals[k + 1])?;
            let tol = energy_tol::<T>(ends[k].to_f64().abs().max(ends[k + 1].to_f64().abs()));
            Ok(match refine_bracket(f, bracket, RootOptions::new(tol))? {
                Refined::Exact(x) => x,
                Refined::Bracket(b) => b.midpoint(),
            })
        })
        .collect()
}

/// Computes and validates the band structure of `sample` in the precision
/// of `T`.
pub fn band_structure<T: Scalar>(sample: &PotentialSample) -> Result<BandStructure<T>> {
    band_structure_of::<T>(&sample.values, sample.spectral_interval())
}

pub fn band_structure_of<T: Scalar>(values: &[f64], interval: (f64, f64)) -> Result<BandStructure<T>> {
    let n = values.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty potential".into()));
    }
    let tps = turning_points::<T>(values, interval)?;
    let two = DoubleDouble::from(2.0);

    // values of the trace at the turning points, with touching detection
    let tp_info: Vec<(ScaledReal, ScaledReal, bool)> = tps
        .par_iter()
        .enumerate()
        .map(|(k, &x)| {
            let (value, _) = level_difference(values, x, DoubleDouble::ZERO);
            let expected = parity_sign(n - 1 - k);
            if value.sign() != expected {
                return Err(Error::StructureViolation(format!(
                    "trace at turning point {k} ({}) has sign {} instead of {expected}",
                    x.to_f64(),
                    value.sign()
                )));
            }
            let level = if expected > 0 { two } else { -two };
            let (diff, log_err) = level_difference(values, x, level);
            let excess = ScaledReal::new(diff.sign() * expected, diff.logmag());
            let within = diff.is_zero() || diff.logmag() <= log_err;
            if !within && excess.sign() < 0 {
                return Err(Error::StructureViolation(format!(
                    "|trace| = {} < 2 at turning point {k} ({})",
                    value.abs().to_f64(),
                    x.to_f64()
                )));
            }
            Ok(if within {
                (value, ScaledReal::ZERO, true)
            } else {
                (value, excess, false)
            })
        })
        .collect::<Result<_>>()?;
    let tp_value: Vec<ScaledReal> = tp_info.iter().map(|t| t.0).collect();
    let tp_excess: Vec<ScaledReal> = tp_info.iter().map(|t| t.1).collect();
    let touching: Vec<bool> = tp_info.iter().map(|t| t.2).collect();

    let (klo, khi) = (T::from_f64(interval.0), T::from_f64(interval.1));
    let stretch = |j: usize| -> (T, T) {
        let l = if j == 0 { klo } else { tps[j - 1] };
        let r = if j + 1 == n { khi } else { tps[j] };
        (l, r)
    };
    let parts: Vec<(T, [T; 2])> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (l, r) = stretch(j);
            let root = solve_level(values, l, r, DoubleDouble::ZERO)?;
            let sign_l = if j == 0 { parity_sign(n) } else { tp_value[j - 1].sign() };
            let sign_r = if j + 1 == n { 1 } else { tp_value[j].sign() };
            let left = if j > 0 && touching[j - 1] {
                l
            } else {
                solve_level(values, l, root, two.mul_f64(sign_l as f64))?
            };
            let right = if j + 1 < n && touching[j] {
                r
            } else {
                solve_level(values, root, r, two.mul_f64(sign_r as f64))?
            };
            Ok((root, [left, right]))
        })
        .collect::<Result<_>>()?;
    let roots: Vec<T> = parts.iter().map(|p| p.0).collect();
    let bands: Vec<[T; 2]> = parts.iter().map(|p| p.1).collect();

    for j in 0..n {
        let [l, r] = bands[j];
        let (sl, sr) = stretch(j);
        if !(sl <= l && l <= roots[j] && roots[j] <= r && r <= sr) {
            return Err(Error::StructureViolation(format!(
                "band {j} [{}, {}] with root {} escapes its stretch [{}, {}]",
                l.to_f64(),
                r.to_f64(),
                roots[j].to_f64(),
                sl.to_f64(),
                sr.to_f64()
            )));
        }
    }
    Ok(BandStructure {
        values: values.to_vec(),
        interval,
        roots,
        turning_points: tps,
        bands,
        tp_value,
        tp_excess,
        touching,
    })
}

/// Widths `right_j - left_j`.
pub fn bandwidths<T: Scalar>(bs: &BandStructure<T>) -> Vec<f64> {
    bs.widths()
}

/// `-(1/n)·log |B^{(j)}|`.
pub fn bandwidth_rates<T: Scalar>(bs: &BandStructure<T>) -> Vec<f64> {
    let n = bs.n() as f64;
    bs.widths().iter().map(|w| -w.ln() / n).collect()
}

/// `|Δ_n(E'_j)|` in scaled form.
pub fn turning_point_magnitudes<T: Scalar>(bs: &BandStructure<T>) -> Vec<ScaledReal> {
    bs.tp_value.iter().map(|v| v.abs()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingStats {
    pub min_eig_gap: f64,
    pub min_root_gap: f64,
}

fn min_gap<T: Scalar>(xs: &[T]) -> f64 {
    let mut v: Vec<T> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
    v.windows(2).map(|w| (w[1] - w[0]).to_f64()).fold(f64::INFINITY, f64::min)
}

/// Smallest gaps between Hermitian eigenvalues and between roots.
pub fn spacing_stats<T: Scalar>(bs: &BandStructure<T>) -> SpacingStats {
    SpacingStats {
        min_eig_gap: min_gap(&bs.hermitian_eigenvalues()),
        min_root_gap: min_gap(&bs.roots),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn three_site_zero_potential() {
        let bs = band_structure::<DoubleDouble>(&PotentialSample::zero(3)).unwrap();
        let r: Vec<f64> = bs.roots.iter().map(|x| x.to_f64()).collect();
        let s3 = 3f64.sqrt();
        assert!(close(r[0], -s3, 1e-15) && close(r[1], 0.0, 1e-15) && close(r[2], s3, 1e-15));
        let t: Vec<f64> = bs.turning_points.iter().map(|x| x.to_f64()).collect();
        assert!(close(t[0], -1.0, 1e-15) && close(t[1], 1.0, 1e-15));
        assert!(bs.touching.iter().all(|t| *t));
        for v in turning_point_magnitudes(&bs) {
            assert!(close(v.to_f64(), 2.0, 1e-14));
        }
        let want = [[-2.0, -1.0], [-1.0, 1.0], [1.0, 2.0]];
        for (b, w) in bs.bands.iter().zip(want) {
            assert!(close(b[0].to_f64(), w[0], 1e-14) && close(b[1].to_f64(), w[1], 1e-14));
        }
    }

    #[test]
    fn four_site_widths() {
        let bs = band_structure::<DoubleDouble>(&PotentialSample::zero(4)).unwrap();
        let s2 = 2f64.sqrt();
        let want = [2.0 - s2, s2, s2, 2.0 - s2];
        for (w, x) in bandwidths(&bs).iter().zip(want) {
            assert!(close(*w, x, 1e-14), "{w} vs {x}");
        }
        for (k, [l, r]) in bs.bands.iter().enumerate() {
            let lo = 2.0 * ((4 - k) as f64 * std::f64::consts::PI / 4.0).cos();
            let hi = 2.0 * ((3 - k) as f64 * std::f64::consts::PI / 4.0).cos();
            assert!(close(l.to_f64(), lo, 1e-14) && close(r.to_f64(), hi, 1e-14));
        }
    }

    #[test]
    fn two_site_turning_point() {
        let bs = band_structure::<f64>(&PotentialSample::from_values(vec![0.0, 1.0])).unwrap();
        assert!(close(bs.turning_points[0], 0.5, 1e-15));
        assert!(close(turning_point_magnitudes(&bs)[0].to_f64(), 2.25, 1e-14));
        let s = spacing_stats(&bs);
        let e = bs.hermitian_eigenvalues();
        assert!(close(s.min_eig_gap, (e[1] - e[0]).abs(), 0.0));
    }

    #[test]
    fn zero_potential_degenerate_gap() {
        let bs = band_structure::<DoubleDouble>(&PotentialSample::zero(4)).unwrap();
        let e: Vec<f64> = bs.hermitian_eigenvalues().iter().map(|x| x.to_f64()).collect();
        for (a, b) in e.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!(close(*a, b, 1e-15));
        }
        assert_eq!(spacing_stats(&bs).min_eig_gap, 0.0);
    }

    #[test]
    fn critical_g_inverts_the_target() {
        let n = 20;
        let (t, excess) = DoubleDouble::two_cosh_and_excess(DoubleDouble::from(0.3 * n as f64));
        let g = arccosh_half(ScaledReal::from_scalar(t), ScaledReal::from_scalar(excess)) / n as f64;
        assert!(close(g, 0.3, 1e-15));
        let (t, excess) = DoubleDouble::two_cosh_and_excess(DoubleDouble::from(1e-6));
        let g = arccosh_half(ScaledReal::from_scalar(t), ScaledReal::from_scalar(excess));
        assert!(close(g, 1e-6, 1e-20));
    }

    #[test]
    fn zero_potential_inner_critical_g_is_zero() {
        let bs = band_structure::<DoubleDouble>(&PotentialSample::zero(8)).unwrap();
        for j in 1..7 {
            assert_eq!(bs.critical_g(j), 0.0);
        }
        assert_eq!(bs.critical_g(7), f64::INFINITY);
        // n even: the leftmost eigenvalue moves left forever
        assert_eq!(bs.direction(0), Direction::Left);
        assert_eq!(bs.critical_g(0), f64::INFINITY);
    }

    #[test]
    fn csv_schema() {
        let bs = band_structure::<f64>(&PotentialSample::from_values(vec![0.3, -0.1, 0.7, 0.2])).unwrap();
        let mut buf = Vec::new();
        bs.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("j,E_j,left,right,width,logwidth,tp_logmag\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
