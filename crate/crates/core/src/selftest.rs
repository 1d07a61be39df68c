//! The built-in verification suite behind `msgibbs selftest`.
//!
//! Each criterion runs library operations against an independent oracle
//! (brute-force nested sums, finite differences, closed forms or exact
//! targets) and records its metrics. The report contains no timings, so
//! two runs with the same seed serialize to identical bytes.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::entropy::{
    entropy_profile, full_average_response, latent_entropy_identity, linear_response_check, phi, solve_variational,
    Multipliers,
};
use crate::error::Result;
use crate::ldp::{rate_function, shipped_ldp_scenarios, BaseMeasure, ReinforcementParams};
use crate::legendre::{solve_constrained_two_scale, two_scale_moments};
use crate::measure::{tilted_pressure, CostTensor, MultiscaleMeasure, Observable, ScaleParams};
use crate::pd::{annealed_value, grand_potential_mc, quenched_value, random_two_scale_average, Apriori};
use crate::rng::{self, tag, StreamRng};
use crate::space::ProductSpace;

pub const DEFAULT_SEED: u64 = 2024;
pub const CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Monte Carlo sizes for the cascade criteria.
pub const CASCADE_CRP_N: u64 = 10_000;
pub const CASCADE_REPLICATES: usize = 1_000;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub failures: Vec<String>,
}

impl CriterionReport {
    fn new(id: u8, name: &'static str) -> Self {
        Self {
            id,
            name,
            passed: true,
            metrics: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    /// Records `value` and fails the criterion unless `ok`.
    fn check(&mut self, key: impl Into<String>, value: f64, ok: bool) {
        let key = key.into();
        if !ok {
            self.passed = false;
            self.failures.push(format!("{key} = {value:e}"));
        }
        self.metrics.insert(key, value);
    }

    fn worst(&mut self, key: &str, value: f64) {
        let e = self.metrics.entry(key.to_string()).or_insert(0.0);
        if value.is_nan() || value > *e {
            *e = value;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

pub fn run_all(seed: u64) -> Result<SelftestReport> {
    let criteria = CRITERIA.iter().map(|&id| run_criterion(id, seed)).collect::<Result<Vec<_>>>()?;
    Ok(SelftestReport {
        seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    })
}

pub fn run_criterion(id: u8, seed: u64) -> Result<CriterionReport> {
    match id {
        1 => chain_rules(seed),
        2 => worked_example(),
        3 => variational_principle(seed),
        4 => derivative_identities(seed),
        5 => limiting_cases(seed),
        6 => rate_ladders(),
        7 => entropy_reweighting(seed),
        8 => cascade_identity(seed),
        9 => random_measure_averages(seed),
        _ => Err(crate::error::Error::invalid("criterion", format!("unknown criterion {id}"))),
    }
}

fn gen(seed: u64, criterion: u64) -> StreamRng {
    rng::stream(seed, &[tag::GENERATOR, criterion])
}

fn random_space(rng: &mut StreamRng, depths: std::ops::RangeInclusive<usize>, sizes: std::ops::RangeInclusive<usize>) -> ProductSpace {
    let depth = rng.random_range(depths);
    ProductSpace::new((0..depth).map(|_| rng.random_range(sizes.clone())).collect()).expect("sizes are positive")
}

fn random_h(rng: &mut StreamRng, space: ProductSpace, scale: f64) -> CostTensor {
    CostTensor::uniform_random(space, -scale, scale, rng.random()).expect("finite range")
}

fn random_zetas(rng: &mut StreamRng, depth: usize) -> ScaleParams {
    ScaleParams::new((0..depth).map(|_| rng.random_range(0.2..2.0)).collect()).expect("positive")
}

fn random_observable(rng: &mut StreamRng, space: &ProductSpace) -> Observable {
    let values = (0..space.total_size()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Observable::new(space.clone(), values, space.depth()).expect("full depth")
}

/// A random function of the single coordinate `x_level`.
fn random_level_observable(rng: &mut StreamRng, space: &ProductSpace, level: usize) -> Observable {
    let table: Vec<f64> = (0..space.level_size(level)).map(|_| rng.random_range(-1.0..1.0)).collect();
    Observable::on_level(space.clone(), level, &table).expect("level in range")
}

/// Random point of the simplex (flat Dirichlet).
fn random_simplex(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn moment_jacobian_min_eig(h: &CostTensor, mu: f64, gamma: f64) -> Result<f64> {
    let d = 1e-6;
    let (a, b) = (two_scale_moments(h, mu + d, gamma)?, two_scale_moments(h, mu - d, gamma)?);
    let (c, e) = (two_scale_moments(h, mu, gamma + d)?, two_scale_moments(h, mu, gamma - d)?);
    let jee = (a.energy - b.energy) / (2.0 * d);
    let jss = (c.s2 - e.s2) / (2.0 * d);
    let off = 0.5 * ((a.s2 - b.s2) + (c.energy - e.energy)) / (2.0 * d);
    let (mean, half) = (0.5 * (jee + jss), (0.25 * (jee - jss).powi(2) + off * off).sqrt());
    Ok((mean - half).abs())
}

fn rel_err(approx: f64, exact: f64, floor: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(floor)
}

mod oracle {
    //! Straightforward re-derivations used as references.

    use crate::measure::{CostTensor, ScaleParams};
    use crate::space::ProductSpace;

    /// Joint of the multiscale measure by explicit nested partition sums in
    /// linear arithmetic, walking coordinates through `decode`.
    pub fn nested_joint(h: &CostTensor, zetas: &ScaleParams) -> (f64, Vec<f64>) {
        let space = h.space();
        let r = space.depth();
        // z[ℓ][node] = e^{P_ℓ(node)}
        let mut z: Vec<Vec<f64>> = vec![Vec::new(); r + 1];
        z[r] = h.values().iter().map(|v| v.exp()).collect();
        for level in (1..=r).rev() {
            let zeta = zetas.zeta(level);
            let size = space.level_size(level);
            z[level - 1] = z[level]
                .chunks(size)
                .map(|c| c.iter().map(|v| v.powf(zeta)).sum::<f64>().powf(1.0 / zeta))
                .collect();
        }
        let joint = (0..space.total_size())
            .map(|flat| {
                let coords = space.decode(flat).expect("in range");
                (1..=r)
                    .map(|level| {
                        let node = node_of(space, &coords, level);
                        let zeta = zetas.zeta(level);
                        (z[level][node] / z[level - 1][node / space.level_size(level)]).powf(zeta)
                    })
                    .product()
            })
            .collect();
        (z[0][0].ln(), joint)
    }

    /// Depth-`ℓ` node index from coordinates `(x_r, …, x_1)`.
    pub fn node_of(space: &ProductSpace, coords: &[usize], level: usize) -> usize {
        let r = space.depth();
        (1..=level).fold(0, |acc, l| acc * space.level_size(l) + coords[r - l])
    }

    pub fn entropy(p: &[f64]) -> f64 {
        -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
    }
}

fn chain_rules(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(1, "probability and entropy chain rules");
    let mut rng = gen(seed, 1);
    let mut prob_err: f64 = 0.0;
    let mut ent_err: f64 = 0.0;
    for _ in 0..100 {
        let space = random_space(&mut rng, 2..=4, 2..=5);
        let h = random_h(&mut rng, space.clone(), 2.0);
        let zetas = random_zetas(&mut rng, space.depth());
        let m = MultiscaleMeasure::build(&h, &zetas)?;
        let joint = m.joint();
        // p(x) = Π_ℓ exp(ζ_ℓ (P_ℓ - P_{ℓ-1})) straight from the pressure tables
        for (flat, &p) in joint.iter().enumerate() {
            let prod: f64 = (1..=space.depth())
                .map(|l| {
                    let node = space.ancestor(flat, l);
                    let parent = node / space.level_size(l);
                    (zetas.zeta(l) * (m.pressure(l)[node] - m.pressure(l - 1)[parent])).exp()
                })
                .product();
            prob_err = prob_err.max((prod - p).abs());
        }
        prob_err = prob_err.max((joint.iter().sum::<f64>() - 1.0).abs());
        let prof = entropy_profile(&space, &joint)?;
        let per_level: f64 = prof.per_level.iter().sum();
        ent_err = ent_err.max((oracle::entropy(&joint) - per_level).abs());
    }
    rep.check("max_probability_chain_error", prob_err, prob_err <= 1e-12);
    rep.check("max_entropy_chain_error", ent_err, ent_err <= 1e-12);
    Ok(rep)
}

fn worked_example() -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(2, "two-scale worked example");
    let h = CostTensor::worked_example();
    let zetas = ScaleParams::new(vec![1.0, 0.5])?;
    let m = MultiscaleMeasure::build(&h, &zetas)?;
    let tol = 1e-10;
    let (oracle_p0, oracle_joint) = oracle::nested_joint(&h, &zetas);
    rep.check("p0_minus_log16", m.p0() - 16f64.ln(), (m.p0() - 16f64.ln()).abs() <= tol);
    rep.check("p0_minus_oracle", m.p0() - oracle_p0, (m.p0() - oracle_p0).abs() <= tol);
    let root = m.root_log_partition();
    rep.check("root_log_partition_minus_log4", root - 4f64.ln(), (root - 4f64.ln()).abs() <= tol);
    let expected = [0.125, 0.375, 0.25, 0.25];
    let joint = m.joint();
    let jerr = joint
        .iter()
        .zip(expected.iter().zip(&oracle_joint))
        .map(|(p, (e, o))| (p - e).abs().max((p - o).abs()))
        .fold(0.0, f64::max);
    rep.check("joint_max_error", jerr, jerr <= tol);
    let prof = m.entropy_profile();
    let s1 = 2f64.ln();
    let s2 = 0.5 * oracle::entropy(&[0.25, 0.75]) + 0.5 * 2f64.ln();
    rep.check("s1_error", prof.level(1) - s1, (prof.level(1) - s1).abs() <= tol);
    rep.check("s2_error", prof.level(2) - s2, (prof.level(2) - s2).abs() <= tol);
    rep.check("s2_vs_quoted", prof.level(2) - 0.627741, (prof.level(2) - 0.627741).abs() <= 5e-7);
    let value = phi(&joint, &h, &Multipliers::two_scale(0.5, -0.5)?)?;
    rep.check("phi_minus_log4", value - 4f64.ln(), (value - 4f64.ln()).abs() <= tol);
    Ok(rep)
}

fn variational_principle(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(3, "entropic variational principle");
    let mut rng = gen(seed, 3);
    rep.metric("max_entry_gap", 0.0);
    rep.metric("max_phi_star_error", 0.0);
    rep.metric("max_perturbation_excess", f64::NEG_INFINITY);
    for _ in 0..20 {
        let space = random_space(&mut rng, 2..=3, 2..=4);
        let h = random_h(&mut rng, space.clone(), 1.5);
        let mu = rng.random_range(0.2..2.0);
        let gammas: Vec<f64> = (1..space.depth()).map(|_| rng.random_range(-0.8..2.0)).collect();
        let mult = Multipliers::new(mu, gammas)?;
        let solved = solve_variational(&h, &mult)?;
        let built = MultiscaleMeasure::build(&h, &mult.scale_params()?)?;
        let gap = solved
            .joint()
            .iter()
            .zip(built.joint().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rep.worst("max_entry_gap", gap);
        let joint = solved.joint().into_owned();
        let phi_star = phi(&joint, &h, &mult)?;
        rep.worst("max_phi_star_error", (phi_star - built.root_log_partition()).abs());
        let n = joint.len();
        for i in 0..10_000 {
            let candidate = if i % 2 == 0 {
                let eps = 10f64.powf(rng.random_range(-4.0..0.0));
                let w: Vec<f64> = joint
                    .iter()
                    .map(|p| p * (eps * rng.sample::<f64, _>(StandardNormal)).exp())
                    .collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            } else {
                random_simplex(&mut rng, n)
            };
            let excess = phi(&candidate, &h, &mult)? - phi_star;
            rep.worst("max_perturbation_excess", excess);
        }
    }
    let gap = rep.metrics["max_entry_gap"];
    rep.check("max_entry_gap", gap, gap <= 1e-12);
    let e = rep.metrics["max_phi_star_error"];
    rep.check("max_phi_star_error", e, e <= 1e-10);
    let x = rep.metrics["max_perturbation_excess"];
    rep.check("max_perturbation_excess", x, x <= 1e-8);
    Ok(rep)
}

fn derivative_identities(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(4, "derivative identities");
    let mut rng = gen(seed, 4);
    for key in [
        "pressure_derivative_rel",
        "generator_mu_rel",
        "generator_gamma_rel",
        "legendre_energy_rel",
        "legendre_entropy_rel",
        "linear_response_rel",
        "full_average_response_rel",
    ] {
        rep.metric(key, 0.0);
    }
    for _ in 0..20 {
        // dP_0/dλ = ⟨f⟩
        let space = random_space(&mut rng, 2..=3, 2..=4);
        let h = random_h(&mut rng, space.clone(), 1.0);
        let zetas = random_zetas(&mut rng, space.depth());
        let f = random_observable(&mut rng, &space);
        let m = MultiscaleMeasure::build(&h, &zetas)?;
        let step = 1e-5;
        let fd = (tilted_pressure(&h, &zetas, &f, step)? - tilted_pressure(&h, &zetas, &f, -step)?) / (2.0 * step);
        rep.worst("pressure_derivative_rel", rel_err(fd, m.average(&f)?, 1e-6));

        // linear response at every level, with lower levels frozen, and the full-average form
        let o = random_observable(&mut rng, &space);
        for level in 1..=space.depth() {
            let a = random_level_observable(&mut rng, &space, level);
            let lr = linear_response_check(&h, &zetas, &o, &a, level, 1e-5)?;
            for (l, r) in lr.lhs.iter().zip(&lr.rhs) {
                rep.worst("linear_response_rel", rel_err(*l, *r, 1e-6));
            }
            let tilted = |lam: f64| -> Result<f64> {
                MultiscaleMeasure::build(&h.tilted(&a, lam)?, &zetas)?.average(&o)
            };
            let fd = (tilted(step)? - tilted(-step)?) / (2.0 * step);
            rep.worst("full_average_response_rel", rel_err(fd, full_average_response(&m, &o, &a, level)?, 1e-6));
        }

        // two-scale generator: ∂V_0/∂μ = ⟨H⟩, ∂V_0/∂γ = S²
        let sq = random_space(&mut rng, 2..=2, 2..=4);
        let h2 = random_h(&mut rng, sq, 1.0);
        let mu = rng.random_range(0.3..2.0);
        let gamma = rng.random_range(-0.6..1.5);
        let base = two_scale_moments(&h2, mu, gamma)?;
        let d = 1e-5;
        let dmu = (two_scale_moments(&h2, mu + d, gamma)?.potential - two_scale_moments(&h2, mu - d, gamma)?.potential) / (2.0 * d);
        let dgam = (two_scale_moments(&h2, mu, gamma + d)?.potential - two_scale_moments(&h2, mu, gamma - d)?.potential) / (2.0 * d);
        rep.worst("generator_mu_rel", rel_err(dmu, base.energy, 1e-6));
        rep.worst("generator_gamma_rel", rel_err(dgam, base.s2, 1e-6));

        // Legendre grid: ∂P_0(E, S₂)/∂E = -μ, ∂P_0/∂S₂ = -(1+γ)
        for &(gm, gg) in &[(0.5, -0.4), (1.0, 0.0), (1.5, 0.8), (-0.8, 0.3)] {
            let target = two_scale_moments(&h2, gm, gg)?;
            let legendre = |e: f64, s: f64| -> Result<f64> { Ok(solve_constrained_two_scale(&h2, e, s)?.legendre_value(&h2)) };
            // the image of (μ, γ) in (E, S₂) can be very thin, so the step is
            // scaled by the smallest eigenvalue of the moment Jacobian
            let hstep = (1e-3 * moment_jacobian_min_eig(&h2, gm, gg)?).min(1e-5);
            let de = (legendre(target.energy + hstep, target.s2)? - legendre(target.energy - hstep, target.s2)?) / (2.0 * hstep);
            let ds = (legendre(target.energy, target.s2 + hstep)? - legendre(target.energy, target.s2 - hstep)?) / (2.0 * hstep);
            rep.worst("legendre_energy_rel", rel_err(de, -gm, 1e-2));
            rep.worst("legendre_entropy_rel", rel_err(ds, -(1.0 + gg), 1e-2));
        }
    }
    for key in [
        "pressure_derivative_rel",
        "generator_mu_rel",
        "generator_gamma_rel",
        "linear_response_rel",
        "full_average_response_rel",
    ] {
        let v = rep.metrics[key];
        rep.check(key, v, v <= 1e-6);
    }
    for key in ["legendre_energy_rel", "legendre_entropy_rel"] {
        let v = rep.metrics[key];
        rep.check(key, v, v <= 1e-4);
    }
    Ok(rep)
}

fn limiting_cases(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(5, "two-temperature limiting cases");
    let mut rng = gen(seed, 5);
    let mut min_argmax: f64 = 1.0;
    let mut max_dev: f64 = 0.0;
    let mut pinsker_ratio: f64 = 0.0;
    for _ in 0..5 {
        let space = ProductSpace::new(vec![rng.random_range(2..=4), rng.random_range(2..=4)])?;
        let h = random_h(&mut rng, space.clone(), 1.0);
        let n2 = space.level_size(2);
        let rows: Vec<&[f64]> = h.values().chunks(n2).collect();
        let maxes: Vec<f64> = rows.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / n2 as f64).collect();
        let mean_of = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let max_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let frozen = solve_constrained_two_scale(&h, 0.25 * mean_of(&maxes) + 0.75 * max_of(&maxes), 1e-4)?;
        let cond = frozen.measure.conditional(2);
        for (x1, row) in rows.iter().enumerate() {
            let star = crate::entropy::argmax_lowest(row);
            min_argmax = min_argmax.min(cond[x1 * n2 + star]);
        }

        let flat = solve_constrained_two_scale(&h, 0.5 * mean_of(&means) + 0.5 * max_of(&means), (n2 as f64).ln() - 1e-6)?;
        let dev = flat.measure.conditional(2).iter().map(|c| (c - 1.0 / n2 as f64).abs()).fold(0.0, f64::max);
        max_dev = max_dev.max(dev);
        // Pinsker per slice: dev ≤ sqrt(δ / (2 min p(x₁)))
        let p1_min = flat.measure.conditional(1).iter().copied().fold(1.0, f64::min);
        pinsker_ratio = pinsker_ratio.max(dev / (1e-6 / (2.0 * p1_min)).sqrt());
    }
    rep.check("min_argmax_mass_low_entropy", min_argmax, min_argmax > 0.999);
    rep.check("max_uniform_deviation_high_entropy", max_dev, max_dev < 1e-3);
    rep.metric("pinsker_ratio_high_entropy", pinsker_ratio);
    Ok(rep)
}

fn rate_ladders() -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(6, "reinforced multinomial rate ladders");
    for sc in shipped_ldp_scenarios() {
        let rows = sc.ladder()?;
        let positive = rows.iter().all(|r| r.gap > 0.0);
        let decreasing = rows.windows(2).all(|w| w[1].gap < w[0].gap);
        for r in &rows {
            rep.metric(format!("{}_gap_n{}", sc.name, r.n), r.gap);
        }
        rep.check(format!("{}_positive", sc.name), positive as u8 as f64, positive);
        rep.check(format!("{}_decreasing", sc.name), decreasing as u8 as f64, decreasing);
        let last = rows.last().map_or(f64::INFINITY, |r| r.gap);
        rep.check(format!("{}_final_gap", sc.name), last, last < 0.01);
    }
    Ok(rep)
}

fn entropy_reweighting(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(7, "entropy re-weighting");
    let mut rng = gen(seed, 7);
    let mut rate_err: f64 = 0.0;
    for _ in 0..100 {
        let space = random_space(&mut rng, 2..=2, 2..=5);
        let p = random_simplex(&mut rng, space.total_size());
        let gamma = rng.random_range(-0.9..2.0);
        let q = BaseMeasure::uniform(space.clone());
        let rate = rate_function(&p, &q, &ReinforcementParams::two_scale(gamma)?)?.value;
        let prof = entropy_profile(&space, &p)?;
        let n1 = space.level_size(1) as f64;
        let n2 = space.level_size(2) as f64;
        let expected = n1.ln() + (1.0 + gamma) * n2.ln() - prof.level(1) - (1.0 + gamma) * prof.level(2);
        rate_err = rate_err.max((rate - expected).abs());
    }
    rep.check("max_rate_identity_error", rate_err, rate_err <= 1e-12);
    let mut latent_err: f64 = 0.0;
    for _ in 0..20 {
        let space = random_space(&mut rng, 2..=2, 2..=5);
        let p = random_simplex(&mut rng, space.total_size());
        for zeta in [0.1, 0.5, 0.9] {
            let c = latent_entropy_identity(&space, &p, zeta)?;
            latent_err = latent_err.max((c.lhs - c.rhs).abs());
        }
    }
    rep.check("max_latent_identity_error", latent_err, latent_err <= 1e-12);
    Ok(rep)
}

/// Worked example (as stated) plus a seeded 3×3 Hamiltonian whose slice
/// partition functions differ, so the Monte Carlo has real variance.
fn cascade_hamiltonians(seed: u64) -> Vec<(&'static str, CostTensor)> {
    let mut rng = gen(seed, 8);
    vec![
        ("worked", CostTensor::worked_example()),
        ("random3x3", random_h(&mut rng, ProductSpace::new(vec![3, 3]).expect("valid"), 1.0)),
    ]
}

fn cascade_identity(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(8, "grand-canonical cascade identity");
    let mc_seed = rng::derive_seed(seed, &[8]);
    for (name, h) in cascade_hamiltonians(seed) {
        for zeta in [0.3, 0.5, 0.7] {
            let est = grand_potential_mc(&h, zeta, CASCADE_CRP_N, CASCADE_REPLICATES, mc_seed)?;
            let doubled = grand_potential_mc(&h, zeta, 2 * CASCADE_CRP_N, CASCADE_REPLICATES, mc_seed)?;
            rep.check(format!("{name}_z{zeta}_zscore"), est.z_score(), est.within(3.0));
            let shift = (doubled.mean - est.mean).abs();
            let ok = shift <= 1e-12 * est.mean.abs().max(1.0) || shift < est.std_error;
            rep.check(format!("{name}_z{zeta}_doubling_shift_over_se"), shift / est.std_error.max(f64::MIN_POSITIVE), ok);
            rep.metric(format!("{name}_z{zeta}_mean"), est.mean);
            rep.metric(format!("{name}_z{zeta}_target"), est.target);
            rep.metric(format!("{name}_z{zeta}_std_error"), est.std_error);
        }
        let apriori = Apriori::uniform(&h);
        for (zeta, label, exact) in [
            (0.99, "annealed", annealed_value(&h, &apriori)?),
            (0.05, "quenched", quenched_value(&h, &apriori)?),
        ] {
            let est = grand_potential_mc(&h, zeta, CASCADE_CRP_N, CASCADE_REPLICATES, mc_seed)?;
            let z = crate::pd::GrandPotentialEstimate { target: exact, ..est }.z_score();
            rep.check(format!("{name}_{label}_zscore"), z, z.abs() <= 3.0);
        }
    }
    Ok(rep)
}

fn random_measure_averages(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(9, "random two-scale measure averages");
    let mc_seed = rng::derive_seed(seed, &[9]);
    for (name, h) in cascade_hamiltonians(seed) {
        let space = h.space().clone();
        let indicator = {
            let mut v = vec![0.0; space.level_size(1)];
            v[0] = 1.0;
            Observable::on_level(space.clone(), 1, &v)?
        };
        for (label, f) in [("H", Observable::from_cost(&h)), ("x1_indicator", indicator)] {
            let est = random_two_scale_average(&h, &f, 0.5, CASCADE_CRP_N, CASCADE_REPLICATES, mc_seed)?;
            rep.check(format!("{name}_{label}_zscore"), est.z_score(), est.within(3.0));
            rep.metric(format!("{name}_{label}_mean"), est.mean);
            rep.metric(format!("{name}_{label}_target"), est.target);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_worked_example() {
        let h = CostTensor::worked_example();
        let (p0, joint) = oracle::nested_joint(&h, &ScaleParams::new(vec![1.0, 0.5]).unwrap());
        assert!((p0 - 16f64.ln()).abs() < 1e-12);
        assert!((joint[1] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 2, 6, 7] {
            let rep = run_criterion(id, DEFAULT_SEED).unwrap();
            assert!(rep.passed, "{}: {:?}", rep.name, rep.failures);
        }
    }
}
