//! One function per subcommand. Each writes its artifacts under
//! `config.output_dir` and finishes with a `manifest.json` listing them.

use std::io::Write;
use std::path::Path;

use hatano_core::bands::{band_structure, BandStructure};
use hatano_core::numerics::{fmt_real, Precision};
use hatano_core::spectrum::{eigvals_from, flow_from, SpectralParams};
use hatano_core::transfer::GammaProfile;
use hatano_core::verify::{write_records_csv, CheckRecord, RateFit, RateRecord};
use hatano_core::{DoubleDouble, Scalar};
use rayon::prelude::*;

use crate::output::{Manifest, OutputDir};
use crate::sweep::{self, SampleResult};
use crate::{plot, CliError, ExperimentConfig};

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn sample_name(r: usize) -> String {
    format!("r{r:04}")
}

/// Runs `f` for every realization in parallel and returns the results in
/// realization order.
fn per_sample<R: Send>(config: &ExperimentConfig, f: impl Fn(usize) -> Result<R, CliError> + Sync + Send) -> Result<Vec<R>, CliError> {
    (0..config.realizations).into_par_iter().map(f).collect()
}

pub fn cmd_sample(config: &ExperimentConfig) -> Result<Manifest, CliError> {
    let mut out = OutputDir::create(&config.output_dir)?;
    for n in config.n.to_vec() {
        let texts = per_sample(config, |r| {
            let s = sweep::sample(config, n, r)?;
            let mut text = serde_json::to_string_pretty(&s.to_json()).map_err(|e| CliError::Config(e.to_string()))?;
            text.push('\n');
            Ok(text)
        })?;
        for (r, text) in texts.iter().enumerate() {
            out.write_bytes(&format!("n{n}/samples/{}.json", sample_name(r)), text.as_bytes())?;
        }
    }
    out.finish("sample", config)
}

pub fn cmd_lyapunov(config: &ExperimentConfig) -> Result<Manifest, CliError> {
    let mut out = OutputDir::create(&config.output_dir)?;
    let profile = sweep::gamma_profile(config)?;
    write_profile(&mut out, &profile)?;
    out.finish("lyapunov", config)
}

fn write_profile(out: &mut OutputDir, profile: &GammaProfile) -> Result<(), CliError> {
    let mut buf = Vec::new();
    profile.write_csv(&mut buf)?;
    out.write_bytes("gamma_profile.csv", &buf)
}

fn bands_csv<T: Scalar>(config: &ExperimentConfig, n: usize, r: usize) -> Result<Vec<u8>, CliError> {
    let bs: BandStructure<T> = band_structure(&sweep::sample(config, n, r)?)?;
    let mut buf = Vec::new();
    bs.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn cmd_bands(config: &ExperimentConfig) -> Result<Manifest, CliError> {
    let mut out = OutputDir::create(&config.output_dir)?;
    for n in config.n.to_vec() {
        let csvs = per_sample(config, |r| match config.precision {
            Precision::Standard => bands_csv::<f64>(config, n, r),
            Precision::Extended => bands_csv::<DoubleDouble>(config, n, r),
        })?;
        for (r, buf) in csvs.iter().enumerate() {
            out.write_bytes(&format!("n{n}/bands/{}.csv", sample_name(r)), buf)?;
        }
    }
    out.finish("bands", config)
}

/// Rows `g, j, re, im, is_real` with `j` the position in the sorted spectrum.
fn spectrum_csv<T: Scalar>(config: &ExperimentConfig, n: usize, r: usize) -> Result<Vec<u8>, CliError> {
    let bs: BandStructure<T> = band_structure(&sweep::sample(config, n, r)?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["g", "j", "re", "im", "is_real"]).map_err(csv_err)?;
    for &g in &config.g_grid {
        let spec = eigvals_from(&bs, &SpectralParams::new(n, g)?)?;
        for (j, (z, real)) in spec.eigenvalues.iter().zip(&spec.is_real).enumerate() {
            w.write_record([
                fmt_real(g),
                (j + 1).to_string(),
                fmt_real(z.re.to_f64()),
                fmt_real(z.im.to_f64()),
                real.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn cmd_spectrum(config: &ExperimentConfig) -> Result<Manifest, CliError> {
    let mut out = OutputDir::create(&config.output_dir)?;
    for n in config.n.to_vec() {
        let csvs = per_sample(config, |r| match config.precision {
            Precision::Standard => spectrum_csv::<f64>(config, n, r),
            Precision::Extended => spectrum_csv::<DoubleDouble>(config, n, r),
        })?;
        for (r, buf) in csvs.iter().enumerate() {
            out.write_bytes(&format!("n{n}/spectrum/{}.csv", sample_name(r)), buf)?;
        }
    }
    out.finish("spectrum", config)
}

fn flow_outputs<T: Scalar>(config: &ExperimentConfig, n: usize, r: usize) -> Result<(Vec<u8>, Vec<u8>), CliError> {
    let bs: BandStructure<T> = band_structure(&sweep::sample(config, n, r)?)?;
    let flow = flow_from(&bs, &config.flow_grid())?;
    let mut csv = Vec::new();
    flow.write_csv(&mut csv)?;
    let mut json = serde_json::to_vec_pretty(&flow.summary()).map_err(|e| CliError::Config(e.to_string()))?;
    json.push(b'\n');
    Ok((csv, json))
}

pub fn cmd_flow(config: &ExperimentConfig) -> Result<Manifest, CliError> {
    let mut out = OutputDir::create(&config.output_dir)?;
    for n in config.n.to_vec() {
        let outputs = per_sample(config, |r| match config.precision {
            Precision::Standard => flow_outputs::<f64>(config, n, r),
            Precision::Extended => flow_outputs::<DoubleDouble>(config, n, r),
        })?;
        for (r, (csv, json)) in outputs.iter().enumerate() {
            out.write_bytes(&format!("n{n}/flows/{}.csv", sample_name(r)), csv)?;
            out.write_bytes(&format!("n{n}/flows/{}.json", sample_name(r)), json)?;
        }
    }
    out.finish("flow", config)
}

/// Per-sample results plus the ensemble records and summary for one `n`.
pub struct EnsembleRun {
    pub n: usize,
    pub results: Vec<SampleResult>,
    pub records: Vec<CheckRecord>,
    pub summary: sweep::EnsembleSummary,
}

pub fn run_ensemble(config: &ExperimentConfig, n: usize, profile: &GammaProfile) -> Result<EnsembleRun, CliError> {
    let (results, failed) = sweep::run_ensemble(config, n, profile);
    let mut records: Vec<CheckRecord> = results.iter().flat_map(|r| r.records.iter().cloned()).collect();
    records.extend(sweep::spacing_records(config, n, &results));
    let deviations = sweep::deviations(config, n)?;
    let summary = sweep::summarize(n, config, &results, &records, failed, deviations);
    Ok(EnsembleRun {
        n,
        results,
        records,
        summary,
    })
}

fn write_records(out: &mut OutputDir, rel: &str, records: &[CheckRecord]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_records_csv(records, &mut buf)?;
    out.write_bytes(rel, &buf)
}

pub fn cmd_verify(config: &ExperimentConfig) -> Result<Manifest, CliError> {
    let mut out = OutputDir::create(&config.output_dir)?;
    let profile = sweep::gamma_profile(config)?;
    write_profile(&mut out, &profile)?;
    for n in config.n.to_vec() {
        let run = run_ensemble(config, n, &profile)?;
        write_records(&mut out, &format!("n{n}/verify.csv"), &run.records)?;
        out.write_json(&format!("n{n}/summary.json"), &run.summary)?;
    }
    out.finish("verify", config)
}

pub fn write_rates<W: Write>(results: &[SampleResult], w: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["sample_id", "j", "g", "rate", "predicted"]).map_err(csv_err)?;
    for s in results {
        for RateRecord { j, g, rate, predicted } in &s.rates {
            w.write_record([
                s.sample_id.to_string(),
                (j + 1).to_string(),
                fmt_real(*g),
                fmt_real(*rate),
                fmt_real(*predicted),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_fits<W: Write>(results: &[SampleResult], w: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["sample_id", "j", "slope", "intercept", "gamma_hat", "points"])
        .map_err(csv_err)?;
    for s in results {
        for RateFit {
            j,
            slope,
            intercept,
            gamma_hat,
            points,
        } in &s.fits
        {
            w.write_record([
                s.sample_id.to_string(),
                (j + 1).to_string(),
                fmt_real(*slope),
                fmt_real(*intercept),
                fmt_real(*gamma_hat),
                points.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The full pipeline: profile, then per ring length the bands, flows, check
/// records, rates, fits and ensemble summary.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<Manifest, CliError> {
    let mut out = OutputDir::create(&config.output_dir)?;
    let profile = sweep::gamma_profile(config)?;
    write_profile(&mut out, &profile)?;
    for n in config.n.to_vec() {
        let run = run_ensemble(config, n, &profile)?;
        for s in &run.results {
            let name = sample_name(s.sample_id as usize);
            out.write_bytes(&format!("n{n}/bands/{name}.csv"), &s.bands_csv)?;
            out.write_bytes(&format!("n{n}/flows/{name}.csv"), &s.flow_csv)?;
        }
        write_records(&mut out, &format!("n{n}/verify.csv"), &run.records)?;
        let mut buf = Vec::new();
        write_rates(&run.results, &mut buf)?;
        out.write_bytes(&format!("n{n}/rates.csv"), &buf)?;
        let mut buf = Vec::new();
        write_fits(&run.results, &mut buf)?;
        out.write_bytes(&format!("n{n}/fits.csv"), &buf)?;
        out.write_json(&format!("n{n}/summary.json"), &run.summary)?;
    }
    out.finish("sweep", config)
}

/// Renders SVG figures from the CSV files of a sweep or flow run in `input`.
pub fn cmd_plot(config: &ExperimentConfig, input: &Path) -> Result<Manifest, CliError> {
    let source = Manifest::load(&input.join(crate::output::MANIFEST))?;
    let mut out = OutputDir::create(&config.output_dir)?;
    for (rel, svg) in plot::render_all(input, &source.files)? {
        out.write_bytes(&rel, svg.as_bytes())?;
    }
    out.finish("plot", config)
}
