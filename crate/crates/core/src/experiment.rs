//! Config-driven experiments behind the `msgibbs` binary.
//!
//! Every command turns an [`ExperimentConfig`] into a [`ResultRecord`] plus
//! optional CSV tables by calling library operations only. Artifacts contain
//! nothing time dependent, so rerunning a config with the same seed rewrites
//! byte-identical files.
//!
//! Seed derivation from the master seed `s`:
//! - `cost.kind = "uniform"`: `derive_seed(s, [GENERATOR])`
//! - `simulate.runs`, replicate `i`: `derive_seed(s, [REPLICATE, i])`
//! - `cascade` ζ number `j`: `derive_seed(s, [CRP, j])` (shared by the doubled run)
//! - `cascade` average number `k` at ζ number `j`: `derive_seed(s, [ATOMS, j, k])`
//! - `cascade.crp_multinomial`: `derive_seed(s, [MULTINOMIAL])`
//! - `selftest`: `s` itself

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{AverageSpec, ConfigError, ExperimentConfig};
use crate::entropy::{entropy_profile, solve_variational, temperature_ratios, EntropyProfile, Multipliers, TemperatureRatios};
use crate::error::Error;
use crate::ldp::{empirical_rate_estimate, run_reinforced_multiscale, BaseMeasure, RateLadderRow, ReinforcementParams};
use crate::legendre::{solve_constrained_two_scale, two_scale_moments, SolveReport};
use crate::measure::{free_energies, joint_from_conditionals, FreeEnergies, MultiscaleMeasure, Observable, ScaleParams};
use crate::pd::{crp_multinomial_experiment, grand_potential_mc, random_two_scale_average, CrpMultinomialResult};
use crate::rng::{derive_seed, tag};
use crate::selftest::{self, SelftestReport};

pub const TOOL_VERSION: &str = concat!("msgibbs ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BuildMeasure,
    Solve,
    Simulate,
    Cascade,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BuildMeasure => "build-measure",
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Cascade => "cascade",
            Command::Selftest => "selftest",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Command::BuildMeasure => "build_measure",
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Cascade => "cascade",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Library(#[from] Error),
}

impl ExperimentError {
    /// 0 success, 2 config error, 3 numeric failure, 4 infeasible targets.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Library(Error::Infeasible(_)) => 4,
            ExperimentError::Library(Error::Numeric(_) | Error::NonFinite { .. }) => 3,
            ExperimentError::Write { .. } => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord<T: Serialize> {
    pub command: &'static str,
    /// SHA-256 of the config file bytes (of the empty string without a config).
    pub config_hash: String,
    pub tool_version: &'static str,
    pub seed: u64,
    pub rows: T,
}

/// Files written by a command, plus a human-readable summary for stdout.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
    /// `false` when a command ran but reported failed checks (selftest).
    pub ok: bool,
}

impl Artifacts {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|source| ExperimentError::Write {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// A parsed config together with the bytes it was read from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Self {
            config: ExperimentConfig::parse(text)?,
            hash: config_hash(text.as_bytes()),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

/// Runs `command`. `seed` overrides the config's master seed.
pub fn run(command: Command, loaded: Option<&LoadedConfig>, seed: Option<u64>) -> Result<Artifacts> {
    if let Some(name) = loaded.and_then(|l| l.config.command.as_deref()) {
        if name != command.name() {
            return Err(ConfigError::Field {
                field: "command".into(),
                reason: format!("file is for `{name}`, not `{}`", command.name()),
            }
            .into());
        }
    }
    let hash = loaded.map_or_else(|| config_hash(b""), |l| l.hash.clone());
    let seed = seed
        .or(loaded.map(|l| l.config.seed))
        .unwrap_or(selftest::DEFAULT_SEED);
    let need = || {
        loaded.map(|l| &l.config).ok_or_else(|| {
            ExperimentError::from(ConfigError::Field {
                field: "--config".into(),
                reason: format!("`{}` needs a config file", command.name()),
            })
        })
    };
    let ctx = RunContext {
        command,
        config_hash: hash,
        seed,
    };
    match command {
        Command::BuildMeasure => cmd_build_measure(need()?, &ctx),
        Command::Solve => cmd_solve(need()?, &ctx),
        Command::Simulate => cmd_simulate(need()?, &ctx),
        Command::Cascade => cmd_cascade(need()?, &ctx),
        Command::Selftest => cmd_selftest(&ctx),
    }
}

/// What every command needs besides its config section.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub command: Command,
    pub config_hash: String,
    pub seed: u64,
}

impl RunContext {
    fn json<T: Serialize>(&self, rows: T) -> (String, Vec<u8>) {
        let record = ResultRecord {
            command: self.command.name(),
            config_hash: self.config_hash.clone(),
            tool_version: TOOL_VERSION,
            seed: self.seed,
            rows,
        };
        let mut bytes = serde_json::to_vec_pretty(&record).expect("records serialize");
        bytes.push(b'\n');
        (format!("{}.json", self.command.stem()), bytes)
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat rows serialize");
    }
    w.into_inner().expect("in-memory writer")
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureRows {
    pub level_sizes: Vec<usize>,
    pub zetas: Vec<f64>,
    pub p0: f64,
    pub root_log_partition: f64,
    /// `P_ℓ` for `ℓ = 0..=r`.
    pub pressures: Vec<Vec<f64>>,
    /// `p^{<ℓ}` for `ℓ = 1..=r`.
    pub conditionals: Vec<Vec<f64>>,
    pub joint: Vec<f64>,
    pub entropy: EntropyProfile,
    pub free_energies: FreeEnergies,
}

pub fn cmd_build_measure(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Artifacts> {
    let spec = ExperimentConfig::require(&cfg.build_measure, "build_measure")?;
    let h = cfg.cost_tensor()?;
    let zetas = ScaleParams::new(spec.zetas.clone()).map_err(|e| field_err("build_measure.zetas", e))?;
    let m = MultiscaleMeasure::build(&h, &zetas)?;
    let joint = m.joint().into_owned();
    let entropy = entropy_profile(m.space(), &joint)?;
    let rows = MeasureRows {
        level_sizes: m.space().level_sizes().to_vec(),
        zetas: spec.zetas.clone(),
        p0: m.p0(),
        root_log_partition: m.root_log_partition(),
        pressures: (0..=m.depth()).map(|l| m.pressure(l).to_vec()).collect(),
        conditionals: (1..=m.depth()).map(|l| m.conditional(l).to_vec()).collect(),
        joint,
        entropy: entropy.clone(),
        free_energies: free_energies(&m, spec.beta)?,
    };
    let mut summary = format!(
        "P0 = {:.12}\nroot log-partition = {:.12}\n\nlevel  entropy\n",
        rows.p0, rows.root_log_partition
    );
    for (l, s) in entropy.per_level.iter().enumerate() {
        summary.push_str(&format!("S^{}    {:.9}\n", l + 1, s));
    }
    summary.push_str(&format!("total  {:.9}\n", entropy.total));
    Ok(Artifacts {
        files: vec![ctx.json(&rows)],
        summary,
        ok: true,
    })
}

fn field_err(field: &str, e: Error) -> ExperimentError {
    ConfigError::Field {
        field: field.into(),
        reason: e.to_string(),
    }
    .into()
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalRow {
    pub mu: f64,
    pub gammas: Vec<f64>,
    pub zetas: Vec<f64>,
    /// `max φ = ζ_1 P_0`.
    pub phi_max: f64,
    pub entropy: EntropyProfile,
    pub temperatures: Option<TemperatureRatios>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripRow {
    pub mu: f64,
    pub gamma: f64,
    pub energy: f64,
    pub s2: f64,
    pub solved: SolveReport,
    pub mu_error: f64,
    pub gamma_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveRows {
    pub variational: Vec<VariationalRow>,
    pub constrained: Vec<SolveReport>,
    pub round_trip: Vec<RoundTripRow>,
}

/// One line of `solve.csv`.
#[derive(Debug, Clone, Serialize)]
struct SolveCsvRow {
    kind: &'static str,
    energy: f64,
    s2: f64,
    mu: f64,
    gamma: f64,
    energy_residual: f64,
    entropy_residual: f64,
    beta1: f64,
    beta2: f64,
    beta_ratio: f64,
}

impl SolveCsvRow {
    fn of(kind: &'static str, r: &SolveReport) -> Self {
        Self {
            kind,
            energy: r.energy_target,
            s2: r.s2_target,
            mu: r.mu,
            gamma: r.gamma,
            energy_residual: r.energy_residual,
            entropy_residual: r.entropy_residual,
            beta1: r.beta1,
            beta2: r.beta2,
            beta_ratio: r.beta_ratio,
        }
    }
}

pub fn cmd_solve(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Artifacts> {
    let spec = ExperimentConfig::require(&cfg.solve, "solve")?;
    let h = cfg.cost_tensor()?;
    let mut rows = SolveRows {
        variational: Vec::new(),
        constrained: Vec::new(),
        round_trip: Vec::new(),
    };
    for t in &spec.variational {
        let mult = Multipliers::new(t.mu, t.gammas.clone()).map_err(|e| field_err("solve.variational", e))?;
        let m = solve_variational(&h, &mult)?;
        rows.variational.push(VariationalRow {
            mu: t.mu,
            gammas: t.gammas.clone(),
            zetas: m.zetas().as_slice().to_vec(),
            phi_max: m.root_log_partition(),
            entropy: m.entropy_profile(),
            temperatures: (mult.depth() == 2).then(|| temperature_ratios(&mult)).transpose()?,
        });
    }
    for t in &spec.constrained {
        rows.constrained.push(solve_constrained_two_scale(&h, t.energy, t.s2)?.report());
    }
    for t in &spec.round_trip {
        let fwd = two_scale_moments(&h, t.mu, t.gamma)?;
        let solved = solve_constrained_two_scale(&h, fwd.energy, fwd.s2)?.report();
        rows.round_trip.push(RoundTripRow {
            mu: t.mu,
            gamma: t.gamma,
            energy: fwd.energy,
            s2: fwd.s2,
            mu_error: (solved.mu - t.mu).abs(),
            gamma_error: (solved.gamma - t.gamma).abs(),
            solved,
        });
    }

    let mut table: Vec<SolveCsvRow> = rows.constrained.iter().map(|r| SolveCsvRow::of("constrained", r)).collect();
    table.extend(rows.round_trip.iter().map(|r| SolveCsvRow::of("round_trip", &r.solved)));
    let mut summary = String::new();
    for v in &rows.variational {
        summary.push_str(&format!("variational mu={} gammas={:?}: phi* = {:.12}", v.mu, v.gammas, v.phi_max));
        if let Some(t) = &v.temperatures {
            summary.push_str(&format!(", beta1/beta2 = {:.12}", t.ratio));
        }
        summary.push('\n');
    }
    for r in &table {
        summary.push_str(&format!(
            "{} E={} S2={}: mu = {:.9}, gamma = {:.9}, residuals ({:.1e}, {:.1e}), beta1/beta2 = {:.9}\n",
            r.kind, r.energy, r.s2, r.mu, r.gamma, r.energy_residual, r.entropy_residual, r.beta_ratio
        ));
    }
    Ok(Artifacts {
        files: vec![ctx.json(&rows), ("solve.csv".into(), csv_bytes(&table))],
        summary,
        ok: true,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub replicate: usize,
    pub seed: u64,
    pub final_counts: Vec<u64>,
    pub empirical: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateRows {
    pub gammas: Vec<f64>,
    pub target: Vec<f64>,
    pub ladder: Vec<RateLadderRow>,
    pub runs: Vec<RunSummary>,
}

pub fn cmd_simulate(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Artifacts> {
    let spec = ExperimentConfig::require(&cfg.simulate, "simulate")?;
    let space = cfg.product_space()?;
    let nested = |levels: &[Vec<f64>], name: &str| -> Result<Vec<f64>> {
        let mut conds = vec![Vec::new()];
        conds.extend(levels.iter().cloned());
        joint_from_conditionals(&space, &conds).map_err(|e| field_err(name, e))
    };
    let target = nested(&spec.target, "simulate.target")?;
    let base = match &spec.base {
        Some(levels) => BaseMeasure::new(space.clone(), nested(levels, "simulate.base")?)?,
        None => BaseMeasure::uniform(space.clone()),
    };
    let params = ReinforcementParams::new(spec.gammas.clone()).map_err(|e| field_err("simulate.gammas", e))?;
    let ladder = empirical_rate_estimate(&target, &base, &params, &spec.n_list)?;

    let mut runs = Vec::new();
    if let Some(r) = &spec.runs {
        for i in 0..r.replicates {
            let seed = derive_seed(ctx.seed, &[tag::REPLICATE, i as u64]);
            let out = run_reinforced_multiscale(r.n, &params, &base, seed)?;
            let hist = out.histogram();
            runs.push(RunSummary {
                replicate: i,
                seed,
                final_counts: hist.counts().to_vec(),
                empirical: hist.empirical(),
            });
        }
    }

    let mut summary = String::from("n        estimate        rate            gap\n");
    for r in &ladder {
        summary.push_str(&format!("{:<8} {:<15.9} {:<15.9} {:.3e}\n", r.n, r.estimate, r.rate, r.gap));
    }
    let rows = SimulateRows {
        gammas: spec.gammas.clone(),
        target,
        ladder: ladder.clone(),
        runs,
    };
    Ok(Artifacts {
        files: vec![ctx.json(&rows), ("ladder.csv".into(), csv_bytes(&ladder))],
        summary,
        ok: true,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeRow {
    pub zeta: f64,
    pub crp_n: u64,
    pub replicates: usize,
    pub mean: f64,
    pub std_error: f64,
    pub target: f64,
    pub z_score: f64,
    pub doubled_mean: Option<f64>,
    /// `|doubled - mean| / std_error`.
    pub doubling_shift_over_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AverageRow {
    pub zeta: f64,
    pub observable: String,
    pub mean: f64,
    pub std_error: f64,
    pub target: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeRows {
    pub grand_potential: Vec<CascadeRow>,
    pub averages: Vec<AverageRow>,
    pub crp_multinomial: Option<CrpMultinomialResult>,
}

pub fn cmd_cascade(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Artifacts> {
    let spec = ExperimentConfig::require(&cfg.cascade, "cascade")?;
    let h = cfg.cost_tensor()?;
    let space = h.space().clone();
    let mut rows = CascadeRows {
        grand_potential: Vec::new(),
        averages: Vec::new(),
        crp_multinomial: None,
    };
    for (j, &zeta) in spec.zetas.iter().enumerate() {
        let seed = derive_seed(ctx.seed, &[tag::CRP, j as u64]);
        let est = grand_potential_mc(&h, zeta, spec.crp_n, spec.replicates, seed)?;
        let doubled = if spec.doubling {
            Some(grand_potential_mc(&h, zeta, 2 * spec.crp_n, spec.replicates, seed)?.mean)
        } else {
            None
        };
        rows.grand_potential.push(CascadeRow {
            zeta,
            crp_n: spec.crp_n,
            replicates: spec.replicates,
            mean: est.mean,
            std_error: est.std_error,
            target: est.target,
            z_score: est.z_score(),
            doubled_mean: doubled,
            doubling_shift_over_se: doubled.map(|d| shift_over_se(d - est.mean, est.std_error)),
        });
        for (k, avg) in spec.averages.iter().enumerate() {
            let (label, f) = match avg {
                AverageSpec::Energy => ("energy".to_string(), Observable::from_cost(&h)),
                AverageSpec::Level1Indicator { index } => {
                    let n1 = space.level_size(1);
                    if *index >= n1 {
                        return Err(ConfigError::Field {
                            field: "cascade.averages.index".into(),
                            reason: format!("{index} is not below |X_1| = {n1}"),
                        }
                        .into());
                    }
                    let mut v = vec![0.0; n1];
                    v[*index] = 1.0;
                    (format!("level1_indicator_{index}"), Observable::on_level(space.clone(), 1, &v)?)
                }
            };
            let seed = derive_seed(ctx.seed, &[tag::ATOMS, j as u64, k as u64]);
            let est = random_two_scale_average(&h, &f, zeta, spec.crp_n, spec.replicates, seed)?;
            rows.averages.push(AverageRow {
                zeta,
                observable: label,
                mean: est.mean,
                std_error: est.std_error,
                target: est.target,
                z_score: est.z_score(),
            });
        }
    }
    if let Some(c) = &spec.crp_multinomial {
        let seed = derive_seed(ctx.seed, &[tag::MULTINOMIAL]);
        rows.crp_multinomial = Some(crp_multinomial_experiment(&h, c.zeta, c.n, seed)?);
    }

    let mut summary = String::from("zeta   mean            std_error   target          z\n");
    for r in &rows.grand_potential {
        summary.push_str(&format!(
            "{:<6} {:<15.9} {:<11.3e} {:<15.9} {:+.3}\n",
            r.zeta, r.mean, r.std_error, r.target, r.z_score
        ));
    }
    for a in &rows.averages {
        summary.push_str(&format!("<{}> at zeta {}: {:.6} vs {:.6} (z {:+.3})\n", a.observable, a.zeta, a.mean, a.target, a.z_score));
    }
    if let Some(c) = &rows.crp_multinomial {
        summary.push_str(&format!("crp-multinomial: k = {}, gap = {:.3e}\n", c.k, c.gap));
    }
    Ok(Artifacts {
        files: vec![ctx.json(&rows), ("cascade.csv".into(), csv_bytes(&rows.grand_potential))],
        summary,
        ok: true,
    })
}

fn shift_over_se(shift: f64, se: f64) -> f64 {
    if shift.abs() <= 1e-12 {
        0.0
    } else {
        shift.abs() / se
    }
}

pub fn cmd_selftest(ctx: &RunContext) -> Result<Artifacts> {
    let report: SelftestReport = selftest::run_all(ctx.seed)?;
    let mut summary = String::new();
    for c in &report.criteria {
        summary.push_str(&format!("{} criterion {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name));
        if !c.failures.is_empty() {
            summary.push_str(&format!(" ({})", c.failures.join(", ")));
        }
        summary.push('\n');
    }
    Ok(Artifacts {
        ok: report.passed,
        files: vec![ctx.json(&report)],
        summary,
    })
}
