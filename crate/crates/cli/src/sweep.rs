//! The realization sweep: sample → Lyapunov profile → bands → flow → checks,
//! and the ensemble statistics built from the per-sample results.

use std::collections::HashMap;

use hatano_core::bands::{band_structure, bandwidth_rates, BandStructure};
use hatano_core::numerics::Precision;
use hatano_core::potential::{sample_potential, DistributionSpec, PotentialSample};
use hatano_core::spectrum::flow_from;
use hatano_core::transfer::{energy_grid, large_deviation_stats, lyapunov_profile, DeviationSummary, GammaProfile};
use hatano_core::verify::{self, ids, CheckRecord, CheckStatus, RateFit, RateRecord, StatementSummary};
use hatano_core::{DoubleDouble, Scalar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{CliError, ExperimentConfig};

/// Energies covered by the Lyapunov profile: `[-3 - bound, 3 + bound]`.
pub fn profile_interval(spec: &DistributionSpec) -> (f64, f64) {
    let b = spec.bound();
    (-3.0 - b, 3.0 + b)
}

pub fn gamma_profile(config: &ExperimentConfig) -> Result<GammaProfile, CliError> {
    let (lo, hi) = profile_interval(&config.spec);
    let grid = energy_grid(lo, hi, config.lyapunov.spacing);
    Ok(lyapunov_profile(
        &config.spec,
        &grid,
        config.lyapunov.steps,
        config.lyapunov.replicas,
        config.profile_seed(),
    )?)
}

pub fn sample(config: &ExperimentConfig, n: usize, r: usize) -> Result<PotentialSample, CliError> {
    Ok(sample_potential(&config.spec, n, config.sample_seed(r))?)
}

/// Everything the sweep keeps from one realization.
#[derive(Clone, Debug)]
pub struct SampleResult {
    pub sample_id: u64,
    pub records: Vec<CheckRecord>,
    pub rates: Vec<RateRecord>,
    pub fits: Vec<RateFit>,
    /// `(critical_g, γ̂(λ_j(0)))` for inner bands.
    pub critical: Vec<(f64, f64)>,
    /// `(-(1/n)·log|B_j|, γ̂(λ_j(0)))` per band.
    pub bandwidth: Vec<(f64, f64)>,
    pub min_eig_gap: f64,
    pub bands_csv: Vec<u8>,
    pub flow_csv: Vec<u8>,
}

/// Runs every per-sample check on realization `r` in the precision of `T`.
pub fn run_sample<T: Scalar>(config: &ExperimentConfig, n: usize, r: usize, profile: &GammaProfile) -> Result<SampleResult, CliError> {
    let s = sample(config, n, r)?;
    let id = r as u64;
    let degenerate = s.spec.is_degenerate();
    let bs: BandStructure<T> = band_structure(&s)?;
    if T::UNIT_ROUNDOFF > 1e-20 {
        bs.require_resolved()?;
    }
    let grid = config.flow_grid();
    let flow = flow_from(&bs, &grid)?;
    let eps = config.epsilon;
    let mut records = Vec::new();
    for (i, &g) in grid.iter().enumerate().skip(1) {
        let at = flow.at(i);
        records.extend(verify::check_shift_bounds(&bs, degenerate, id, g, &at, eps, profile));
        records.extend(verify::check_intermediate_cosh_bound(&bs, id, g, &at)?);
    }
    for &g in &config.g_grid {
        records.extend(verify::check_disc_identity(&s, id, g)?);
    }
    records.extend(verify::check_root_distance_bounds(&bs, id, config.points_per_stretch));
    records.push(verify::check_markov_hull(&bs, id)?);
    records.extend(verify::check_turning_point_bound(&bs, degenerate, id, eps, profile));
    records.push(verify::check_derivative_ld(
        &bs,
        degenerate,
        id,
        s.spectral_interval(),
        eps,
        profile,
    ));

    let lam0 = bs.hermitian_eigenvalues();
    let mut rates = Vec::new();
    let mut fits = Vec::new();
    if !degenerate {
        for j in 0..n {
            let rec = verify::rate_profile(&bs, j, &grid, &flow.trajectories[j], eps, profile);
            if let Some(f) = verify::fit_rate(&rec) {
                fits.push(f);
            }
            rates.extend(rec);
        }
    }
    let critical = (1..n.saturating_sub(1))
        .map(|j| (bs.critical_g(j), profile.gamma(lam0[j].to_f64())))
        .collect();
    let bandwidth = bandwidth_rates(&bs)
        .into_iter()
        .zip(&lam0)
        .map(|(b, l)| (b, profile.gamma(l.to_f64())))
        .collect();
    let mut bands_csv = Vec::new();
    bs.write_csv(&mut bands_csv)?;
    let mut flow_csv = Vec::new();
    flow.write_csv(&mut flow_csv)?;
    Ok(SampleResult {
        sample_id: id,
        records,
        rates,
        fits,
        critical,
        bandwidth,
        min_eig_gap: hatano_core::bands::spacing_stats(&bs).min_eig_gap,
        bands_csv,
        flow_csv,
    })
}

pub fn run_sample_with(config: &ExperimentConfig, n: usize, r: usize, profile: &GammaProfile) -> Result<SampleResult, CliError> {
    match config.precision {
        Precision::Standard => run_sample::<f64>(config, n, r, profile),
        Precision::Extended => run_sample::<DoubleDouble>(config, n, r, profile),
    }
}

/// Ensemble statistics for one ring length.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub realizations: usize,
    /// `(sample_id, error)` for realizations the solver could not process.
    pub failed_samples: Vec<(u64, String)>,
    pub statements: Vec<StatementSummary>,
    pub reality_records: usize,
    pub reality_frequency: Option<f64>,
    /// `(j, g, sample)` triples with both bounds decisive.
    pub joint_bound_records: usize,
    pub joint_bound_inconclusive: usize,
    pub joint_bound_frequency: Option<f64>,
    pub rate_fits: usize,
    pub median_slope_error: Option<f64>,
    pub median_intercept_error: Option<f64>,
    pub critical_g_records: usize,
    pub critical_g_frequency: Option<f64>,
    pub bandwidth_records: usize,
    pub median_bandwidth_rate_error: Option<f64>,
    pub bandwidth_upper_frequency: Option<f64>,
    pub eigen_gap_frequency: Option<f64>,
    pub root_gap_frequency: Option<f64>,
    pub large_deviation: Vec<DeviationSummary>,
}

pub fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len();
    Some(if m % 2 == 1 { xs[m / 2] } else { 0.5 * (xs[m / 2 - 1] + xs[m / 2]) })
}

fn frequency(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Aggregates per-sample results; `records` must include the spacing records.
pub fn summarize(
    n: usize,
    config: &ExperimentConfig,
    results: &[SampleResult],
    records: &[CheckRecord],
    failed: Vec<(u64, String)>,
    large_deviation: Vec<DeviationSummary>,
) -> EnsembleSummary {
    let eps = config.epsilon;
    let reality: Vec<&CheckRecord> = records
        .iter()
        .filter(|r| r.statement_id == ids::REALITY && r.is_decisive())
        .collect();
    // joint two-sided bound per (sample, j, g)
    let mut joint = 0;
    let mut joint_pass = 0;
    let mut joint_inconclusive = 0;
    let key = |r: &CheckRecord| (r.sample_id, r.j, r.g.map(f64::to_bits));
    let lowers: HashMap<_, &CheckRecord> = records
        .iter()
        .filter(|r| r.statement_id == ids::LOWER)
        .map(|r| (key(r), r))
        .collect();
    for up in records.iter().filter(|r| r.statement_id == ids::UPPER) {
        let Some(low) = lowers.get(&key(up)) else { continue };
        if up.status == CheckStatus::Inconclusive || low.status == CheckStatus::Inconclusive {
            joint_inconclusive += 1;
            continue;
        }
        if !(up.is_decisive() && low.is_decisive()) {
            continue;
        }
        joint += 1;
        if up.passed && low.passed {
            joint_pass += 1;
        }
    }
    let fits: Vec<&RateFit> = results.iter().flat_map(|r| &r.fits).collect();
    let mut slope_err: Vec<f64> = fits.iter().map(|f| (f.slope + 1.0).abs()).collect();
    let mut icpt_err: Vec<f64> = fits.iter().map(|f| (f.intercept - f.gamma_hat).abs()).collect();
    let critical: Vec<(f64, f64)> = results.iter().flat_map(|r| r.critical.iter().copied()).collect();
    let bw: Vec<(f64, f64)> = results.iter().flat_map(|r| r.bandwidth.iter().copied()).collect();
    let mut bw_err: Vec<f64> = bw.iter().map(|(rate, g)| (rate - g).abs()).collect();
    // width < e^{-(γ - ε)n}  ⟺  rate > γ - ε
    let bw_upper = bw.iter().filter(|(rate, g)| *rate > g - eps).count();
    let gap = |id: &str| {
        let rs: Vec<&CheckRecord> = records.iter().filter(|r| r.statement_id == id && r.is_decisive()).collect();
        frequency(rs.iter().filter(|r| r.passed).count(), rs.len())
    };
    EnsembleSummary {
        n,
        realizations: config.realizations,
        failed_samples: failed,
        statements: verify::summarize(records),
        reality_records: reality.len(),
        reality_frequency: frequency(reality.iter().filter(|r| r.passed).count(), reality.len()),
        joint_bound_records: joint,
        joint_bound_inconclusive: joint_inconclusive,
        joint_bound_frequency: frequency(joint_pass, joint),
        rate_fits: fits.len(),
        median_slope_error: median(&mut slope_err),
        median_intercept_error: median(&mut icpt_err),
        critical_g_records: critical.len(),
        critical_g_frequency: frequency(critical.iter().filter(|(c, g)| *c >= g - eps).count(), critical.len()),
        bandwidth_records: bw.len(),
        median_bandwidth_rate_error: median(&mut bw_err),
        bandwidth_upper_frequency: frequency(bw_upper, bw.len()),
        eigen_gap_frequency: gap(ids::EIGEN_GAP),
        root_gap_frequency: gap(ids::ROOT_GAP),
        large_deviation,
    }
}

/// Per-sample results in realization order plus the failures.
pub fn run_ensemble(config: &ExperimentConfig, n: usize, profile: &GammaProfile) -> (Vec<SampleResult>, Vec<(u64, String)>) {
    let outcomes: Vec<Result<SampleResult, CliError>> = (0..config.realizations)
        .into_par_iter()
        .map(|r| run_sample_with(config, n, r, profile))
        .collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(s) => ok.push(s),
            Err(e) => failed.push((r as u64, e.to_string())),
        }
    }
    (ok, failed)
}

/// Spacing records over the whole ensemble (needs at least 100 samples).
pub fn spacing_records(config: &ExperimentConfig, n: usize, results: &[SampleResult]) -> Vec<CheckRecord> {
    if config.spec.is_degenerate() || results.len() < 100 {
        return Vec::new();
    }
    results
        .iter()
        .map(|r| verify::eigen_gap_record(r.sample_id, n, r.min_eig_gap, config.epsilon))
        .collect()
}

/// Large-deviation summaries at `n` and `2n`.
pub fn deviations(config: &ExperimentConfig, n: usize) -> Result<Vec<DeviationSummary>, CliError> {
    if config.spec.is_degenerate() {
        return Ok(Vec::new());
    }
    let ld = &config.large_deviation;
    [n, 2 * n]
        .iter()
        .map(|&m| Ok(large_deviation_stats(&config.spec, ld.energy, m, ld.replicas, config.seed)?))
        .collect()
}
