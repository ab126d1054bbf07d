//! Bounded i.i.d. on-site potentials: distributions, seeded sampling and a
//! lossless JSON file format.

use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numerics::hexfloat;

/// Identifies the generator behind [`sample_potential`]: ChaCha20 keyed by
/// `seed_from_u64(seed)`, one draw per site in order.
pub const GENERATOR_ID: &str = "chacha20/rand_chacha-0.3/seed_from_u64";

/// Law of a single site value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    /// Uniform on `[a, b)`.
    Uniform {
        a: f64,
        b: f64,
    },
    /// `+w` with probability `p`, `-w` otherwise.
    Bernoulli {
        p: f64,
        w: f64,
    },
    Discrete {
        values: Vec<f64>,
        weights: Vec<f64>,
    },
    Constant {
        c: f64,
    },
}

impl DistributionSpec {
    pub fn uniform(a: f64, b: f64) -> Self {
        Self::Uniform { a, b }
    }

    pub fn bernoulli(p: f64, w: f64) -> Self {
        Self::Bernoulli { p, w }
    }

    pub fn constant(c: f64) -> Self {
        Self::Constant { c }
    }

    pub fn zero() -> Self {
        Self::Constant { c: 0.0 }
    }

    /// `sup |v|` over the support.
    pub fn bound(&self) -> f64 {
        match self {
            Self::Uniform { a, b } => a.abs().max(b.abs()),
            Self::Bernoulli { w, .. } => w.abs(),
            Self::Discrete { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            Self::Constant { c } => c.abs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            Self::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad(format!("uniform needs finite a < b, got ({a}, {b})"));
                }
            }
            Self::Bernoulli { p, w } => {
                if !(0.0..=1.0).contains(p) || !w.is_finite() {
                    return bad(format!("bernoulli needs p in [0, 1] and finite w, got ({p}, {w})"));
                }
            }
            Self::Discrete { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return bad("discrete needs equally many values and weights".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("discrete values must be finite".into());
                }
                if weights.iter().any(|w| !(*w >= 0.0)) {
                    return bad("discrete weights must be nonnegative".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("discrete weights sum to {total}, not 1"));
                }
            }
            Self::Constant { c } => {
                if !c.is_finite() {
                    return bad(format!("constant must be finite, got {c}"));
                }
            }
        }
        Ok(())
    }

    /// True when the law is a point mass.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::Uniform { .. } => false,
            Self::Bernoulli { p, w } => *p == 0.0 || *p == 1.0 || *w == 0.0,
            Self::Discrete { values, weights } => {
                let support: Vec<f64> = values.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(v, _)| *v).collect();
                support.windows(2).all(|p| p[0] == p[1])
            }
            Self::Constant { .. } => true,
        }
    }

    /// Fails with `DegenerateSpec` for point masses.
    pub fn require_nondegenerate(&self) -> Result<()> {
        self.validate()?;
        if self.is_degenerate() {
            return Err(Error::DegenerateSpec(format!("{self:?}")));
        }
        Ok(())
    }

    /// A sampler for this law; call [`validate`](Self::validate) first.
    pub fn sampler(&self) -> Result<SiteSampler> {
        self.validate()?;
        Ok(match self {
            Self::Uniform { a, b } => SiteSampler::Uniform(*a, *b),
            Self::Bernoulli { p, w } => SiteSampler::Bernoulli(*p, *w),
            Self::Discrete { values, weights } => SiteSampler::Discrete(
                values.clone(),
                WeightedIndex::new(weights).map_err(|e| Error::InvalidSpec(e.to_string()))?,
            ),
            Self::Constant { c } => SiteSampler::Constant(*c),
        })
    }
}

/// Draws single site values.
#[derive(Clone, Debug)]
pub enum SiteSampler {
    Uniform(f64, f64),
    Bernoulli(f64, f64),
    Discrete(Vec<f64>, WeightedIndex<f64>),
    Constant(f64),
}

impl SiteSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Uniform(a, b) => {
                let u: f64 = rng.gen();
                // a + (b-a)u can round up to b; stay inside [a, b)
                let x = a + (b - a) * u;
                if x < *b {
                    x
                } else {
                    *a
                }
            }
            Self::Bernoulli(p, w) => {
                if rng.gen::<f64>() < *p {
                    *w
                } else {
                    -*w
                }
            }
            Self::Discrete(values, index) => values[index.sample(rng)],
            Self::Constant(c) => *c,
        }
    }
}

/// One disorder realization on a ring of `n` sites.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSample {
    pub n: usize,
    pub spec: DistributionSpec,
    pub seed: u64,
    pub generator_id: String,
    pub values: Vec<f64>,
}

impl PotentialSample {
    /// A sample with explicit values; `spec` is a constant law when all
    /// values agree and the discrete empirical law otherwise.
    pub fn from_values(values: Vec<f64>) -> Self {
        let spec = if values.windows(2).all(|p| p[0] == p[1]) {
            DistributionSpec::constant(values.first().copied().unwrap_or(0.0))
        } else {
            let w = 1.0 / values.len() as f64;
            DistributionSpec::Discrete {
                values: values.clone(),
                weights: vec![w; values.len()],
            }
        };
        Self {
            n: values.len(),
            spec,
            seed: 0,
            generator_id: "explicit".into(),
            values,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            spec: DistributionSpec::zero(),
            seed: 0,
            generator_id: "explicit".into(),
            values: vec![0.0; n],
        }
    }

    /// `sup |v|` of the law, widened to cover the stored values.
    pub fn bound(&self) -> f64 {
        self.values.iter().fold(self.spec.bound(), |m, v| m.max(v.abs()))
    }

    /// The interval `[-3 - bound, 3 + bound]` that holds every spectrum.
    pub fn spectral_interval(&self) -> (f64, f64) {
        let r = 2.0 + self.bound() + 1.0;
        (-r, r)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "n": self.n,
            "spec": self.spec,
            "seed": self.seed,
            "generator_id": self.generator_id,
            "values": self.values.iter().map(|v| hexfloat::format(*v)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let schema = |msg: &str| Error::Schema(msg.to_string());
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| schema("missing integer field n"))? as usize;
        let spec: DistributionSpec = serde_json::from_value(v.get("spec").cloned().ok_or_else(|| schema("missing field spec"))?)
            .map_err(|e| Error::Schema(format!("spec: {e}")))?;
        let seed = v
            .get("seed")
            .and_then(Value::as_u64)
            .ok_or_else(|| schema("missing integer field seed"))?;
        let generator_id = v
            .get("generator_id")
            .and_then(Value::as_str)
            .ok_or_else(|| schema("missing string field generator_id"))?
            .to_string();
        let raw = v
            .get("values")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("missing array field values"))?;
        let values = raw
            .iter()
            .map(|x| {
                x.as_str()
                    .and_then(hexfloat::parse)
                    .ok_or_else(|| Error::Schema(format!("value {x} is not a hex float string")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != n {
            return Err(Error::Schema(format!("n = {n} but {} values", values.len())));
        }
        Ok(Self {
            n,
            spec,
            seed,
            generator_id,
            values,
        })
    }
}

/// Draws `n` i.i.d. values from `spec` with ChaCha20 seeded by `seed`.
pub fn sample_potential(spec: &DistributionSpec, n: usize, seed: u64) -> Result<PotentialSample> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("ring length must be at least 2, got {n}")));
    }
    let sampler = spec.sampler()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| sampler.draw(&mut rng)).collect();
    Ok(PotentialSample {
        n,
        spec: spec.clone(),
        seed,
        generator_id: GENERATOR_ID.into(),
        values,
    })
}

pub fn save_sample(sample: &PotentialSample, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&sample.to_json()).map_err(|e| Error::Schema(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_sample(path: impl AsRef<Path>) -> Result<PotentialSample> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
    PotentialSample::from_json(&v)
}
