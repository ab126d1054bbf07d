use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hatano_cli::{commands, configure_threads, CliError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "hatano",
    version,
    about = "Non-Hermitian Anderson model on a ring: spectra, flows and localization checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw potential samples and save them as JSON.
    Sample(Common),
    /// Estimate the Lyapunov exponent profile.
    Lyapunov(Common),
    /// Band structure of the Hermitian operator per sample.
    Bands(Common),
    /// Eigenvalues at each g of the grid.
    Spectrum(Common),
    /// Eigenvalue trajectories over the g grid.
    Flow(Common),
    /// Check records and ensemble summary.
    Verify(Common),
    /// Full pipeline over the realization ensemble.
    Sweep(Common),
    /// SVG figures from a previous run.
    Plot {
        /// Directory holding the run to plot.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config, or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Replace the g grid by this single value.
    #[arg(long)]
    g: Option<f64>,
    #[arg(long = "eps")]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Use the zero potential (one realization).
    #[arg(long)]
    zero_potential: bool,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        config.apply(&Overrides {
            n: self.n,
            g: self.g,
            epsilon: self.epsilon,
            seed: self.seed,
            out: self.out.clone(),
            zero_potential: self.zero_potential,
            realizations: self.realizations,
        });
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let manifest = match &cli.command {
        Command::Sample(c) => commands::cmd_sample(&c.config()?)?,
        Command::Lyapunov(c) => commands::cmd_lyapunov(&c.config()?)?,
        Command::Bands(c) => commands::cmd_bands(&c.config()?)?,
        Command::Spectrum(c) => commands::cmd_spectrum(&c.config()?)?,
        Command::Flow(c) => commands::cmd_flow(&c.config()?)?,
        Command::Verify(c) => commands::cmd_verify(&c.config()?)?,
        Command::Sweep(c) => commands::cmd_sweep(&c.config()?)?,
        Command::Plot { input, common } => {
            let mut config = common.config()?;
            if common.out.is_none() {
                config.output_dir = input.join("plots");
            }
            commands::cmd_plot(&config, input)?
        }
    };
    eprintln!(
        "{}: {} files in {:.1} s",
        manifest.command,
        manifest.files.len(),
        manifest.wall_time_seconds
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
