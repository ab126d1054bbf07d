use std::path::{Path, PathBuf};

use hatano_core::numerics::Precision;
use hatano_core::potential::DistributionSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// One ring length or several.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    One(usize),
    Many(Vec<usize>),
}

impl Sizes {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Sizes::One(n) => vec![*n],
            Sizes::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Energy grid spacing for the interpolated profile.
    pub spacing: f64,
    pub steps: usize,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationConfig {
    pub energy: f64,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: DistributionSpec,
    pub n: Sizes,
    pub g_grid: Vec<f64>,
    pub epsilon: f64,
    pub realizations: usize,
    pub seed: u64,
    pub lyapunov: LyapunovConfig,
    pub large_deviation: DeviationConfig,
    pub precision: Precision,
    pub points_per_stretch: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spec: DistributionSpec::uniform(0.0, 1.0),
            n: Sizes::One(60),
            g_grid: vec![0.0, 0.05, 0.10, 0.15],
            epsilon: 0.15,
            realizations: 200,
            seed: 20240601,
            lyapunov: LyapunovConfig {
                spacing: 0.02,
                steps: 20_000,
                replicas: 8,
            },
            large_deviation: DeviationConfig {
                energy: 0.5,
                replicas: 500,
            },
            precision: Precision::Extended,
            points_per_stretch: 100,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub g: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub zero_potential: bool,
    pub realizations: Option<usize>,
}

impl ExperimentConfig {
    /// Reads a config, or the `config` member of a manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value = match value.get("config") {
            Some(inner) if value.get("command").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.n {
            self.n = Sizes::One(n);
        }
        if let Some(g) = o.g {
            self.g_grid = vec![g];
        }
        if let Some(e) = o.epsilon {
            self.epsilon = e;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if o.zero_potential {
            self.spec = DistributionSpec::zero();
            self.realizations = 1;
        }
        if let Some(r) = o.realizations {
            self.realizations = r;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let sizes = self.n.to_vec();
        if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
            return Err(CliError::Config("every n must be at least 2".into()));
        }
        if self.g_grid.is_empty() || self.g_grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(CliError::Config("g_grid needs finite non-negative values".into()));
        }
        if self.g_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CliError::Config("g_grid must increase strictly".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(CliError::Config("epsilon must be positive".into()));
        }
        if self.realizations == 0 {
            return Err(CliError::Config("realizations must be positive".into()));
        }
        let l = &self.lyapunov;
        if !(l.spacing > 0.0) || l.steps < 1000 || l.replicas == 0 {
            return Err(CliError::Config("lyapunov needs spacing > 0, steps >= 1000, replicas >= 1".into()));
        }
        if self.large_deviation.replicas == 0 {
            return Err(CliError::Config("large_deviation.replicas must be positive".into()));
        }
        if self.points_per_stretch == 0 {
            return Err(CliError::Config("points_per_stretch must be positive".into()));
        }
        Ok(())
    }

    /// `g_grid` with a leading zero, as the flow needs.
    pub fn flow_grid(&self) -> Vec<f64> {
        let mut g = self.g_grid.clone();
        if g.first() != Some(&0.0) {
            g.insert(0, 0.0);
        }
        g
    }

    /// Seed of realization `r`.
    pub fn sample_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }

    /// Seed of the Lyapunov profile, unrelated to the sample seeds.
    pub fn profile_seed(&self) -> u64 {
        self.seed ^ 0x5851_f42d_4c95_7f2d
    }
}
