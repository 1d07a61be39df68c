//! Experiment configuration files.
//!
//! One TOML file per experiment. Unknown keys are rejected everywhere so a
//! typo in a parameter grid fails loudly instead of silently using a default.
//!
//! ```toml
//! schema_version = 1
//! seed = 2024
//!
//! [space]
//! level_sizes = [2, 2]   # (|X_r|, ..., |X_1|)
//!
//! [cost]
//! kind = "worked_example"
//!
//! [build_measure]
//! zetas = [1.0, 0.5]     # (ζ_r, ..., ζ_1)
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::Result as LibResult;
use crate::measure::CostTensor;
use crate::rng::{self, tag};
use crate::space::ProductSpace;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {0} (this build reads {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("config field `{field}`: {reason}")]
    Field { field: String, reason: String },
}

fn field(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// If present, must name the subcommand the file is run with.
    pub command: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    pub output: Option<PathBuf>,
    pub space: Option<SpaceSpec>,
    pub cost: Option<CostSpec>,
    pub build_measure: Option<BuildMeasureSpec>,
    pub solve: Option<SolveSpec>,
    pub simulate: Option<SimulateSpec>,
    pub cascade: Option<CascadeSpec>,
}

fn default_seed() -> u64 {
    crate::selftest::DEFAULT_SEED
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    /// `(|X_r|, …, |X_1|)`.
    pub level_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// Flat values, `x_1` the slowest digit.
    Explicit { values: Vec<f64> },
    Constant { value: f64 },
    /// I.i.d. uniform entries drawn from the master seed.
    Uniform { low: f64, high: f64 },
    /// The 2×2 example with `H(·, a) = (log 1, log 3)`, `H(·, b) = (log 2, log 2)`.
    WorkedExample,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildMeasureSpec {
    /// `(ζ_r, …, ζ_1)`.
    pub zetas: Vec<f64>,
    /// Inverse temperature for the free-energy tables.
    #[serde(default = "one")]
    pub beta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    #[serde(default)]
    pub variational: Vec<VariationalTarget>,
    #[serde(default)]
    pub constrained: Vec<ConstrainedTarget>,
    /// `(μ, γ)` pairs pushed through the moment map and solved back.
    #[serde(default)]
    pub round_trip: Vec<RoundTripTarget>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationalTarget {
    pub mu: f64,
    /// `(γ_r, …, γ_2)`; `γ_1 = 0`.
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedTarget {
    pub energy: f64,
    pub s2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundTripTarget {
    pub mu: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    /// `(γ_r, …, γ_1)`.
    pub gammas: Vec<f64>,
    /// `p^{<ℓ}` for `ℓ = 1..=r`, each flattened over its parents.
    pub target: Vec<Vec<f64>>,
    /// Same layout as `target`; uniform when absent.
    pub base: Option<Vec<Vec<f64>>>,
    pub n_list: Vec<u64>,
    pub runs: Option<RunsSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunsSpec {
    pub n: u64,
    pub replicates: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSpec {
    pub zetas: Vec<f64>,
    pub crp_n: u64,
    pub replicates: usize,
    /// Also rerun each ζ at `2 crp_n` and report the shift in standard errors.
    #[serde(default)]
    pub doubling: bool,
    #[serde(default)]
    pub averages: Vec<AverageSpec>,
    pub crp_multinomial: Option<CrpMultinomialSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "observable", rename_all = "snake_case", deny_unknown_fields)]
pub enum AverageSpec {
    /// `f = H`.
    Energy,
    /// `f = 1{x_1 = index}`.
    Level1Indicator { index: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrpMultinomialSpec {
    pub zeta: f64,
    pub n: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(cfg.schema_version));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(s) = &self.space {
            if s.level_sizes.is_empty() {
                return Err(field("space.level_sizes", "must be non-empty"));
            }
        }
        if let Some(b) = &self.build_measure {
            if b.zetas.is_empty() {
                return Err(field("build_measure.zetas", "must be non-empty"));
            }
        }
        if let Some(s) = &self.solve {
            if s.variational.is_empty() && s.constrained.is_empty() && s.round_trip.is_empty() {
                return Err(field("solve", "needs at least one of variational, constrained, round_trip"));
            }
        }
        if let Some(s) = &self.simulate {
            if s.n_list.is_empty() {
                return Err(field("simulate.n_list", "must be non-empty"));
            }
            if s.gammas.is_empty() {
                return Err(field("simulate.gammas", "must be non-empty"));
            }
        }
        if let Some(c) = &self.cascade {
            if c.zetas.is_empty() {
                return Err(field("cascade.zetas", "must be non-empty"));
            }
        }
        Ok(())
    }

    pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
        section.as_ref().ok_or_else(|| field(name, "section is required for this command"))
    }

    pub fn product_space(&self) -> Result<ProductSpace, ConfigError> {
        match (&self.space, &self.cost) {
            (Some(s), _) => ProductSpace::new(s.level_sizes.clone()).map_err(|e| field("space.level_sizes", e.to_string())),
            (None, Some(CostSpec::WorkedExample)) => Ok(CostTensor::worked_example().space().clone()),
            (None, _) => Err(field("space", "section is required for this command")),
        }
    }

    /// The cost tensor. `Uniform` draws from `stream(seed', [GENERATOR])` with
    /// `seed' = derive_seed(seed, [GENERATOR])`.
    pub fn cost_tensor(&self) -> Result<CostTensor, ConfigError> {
        let spec = Self::require(&self.cost, "cost")?;
        let built: LibResult<CostTensor> = match spec {
            CostSpec::WorkedExample => {
                let h = CostTensor::worked_example();
                if let Some(s) = &self.space {
                    if s.level_sizes != h.space().level_sizes() {
                        return Err(field("space.level_sizes", "worked_example lives on [2, 2]"));
                    }
                }
                Ok(h)
            }
            CostSpec::Explicit { values } => CostTensor::new(self.product_space()?, values.clone()),
            CostSpec::Constant { value } => CostTensor::constant(self.product_space()?, *value),
            CostSpec::Uniform { low, high } => CostTensor::uniform_random(
                self.product_space()?,
                *low,
                *high,
                rng::derive_seed(self.seed, &[tag::GENERATOR]),
            ),
        };
        built.map_err(|e| field("cost", e.to_string()))
    }
}
