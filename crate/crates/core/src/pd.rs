//! Chinese restaurant process, Poisson–Dirichlet weights and Monte Carlo
//! checks of the grand-canonical form of the two-scale pressure
//! `P_0 = E log Σ_α ν_α Z_α` with `(ν_α)` distributed PD(ζ) and i.i.d. atoms.
//!
//! Weights come from finite CRP frequencies. Within a replicate the CRP and
//! the atoms use separate streams, and atoms are drawn in box-creation
//! order, so a run with `2n` balls extends the run with `n` balls.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{CostTensor, MultiscaleMeasure, Observable, ScaleParams};
use crate::numeric::{log_sum_exp, mean_and_std_error};
use crate::rng::{self, tag, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrpState {
    pub zeta: f64,
    pub n: u64,
    /// Box sizes in creation order.
    pub occupancies: Vec<u64>,
    /// Box label of every ball after the first one placed in its box.
    #[serde(skip)]
    repeat_labels: Vec<usize>,
}

impl CrpState {
    fn new(zeta: f64) -> Self {
        Self {
            zeta,
            n: 0,
            occupancies: Vec::new(),
            repeat_labels: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.occupancies.len()
    }

    /// Probabilities of the next ball: new box first, then every box in creation order.
    pub fn transition_probs(&self) -> Vec<f64> {
        if self.n == 0 {
            return vec![1.0];
        }
        let m = self.n as f64;
        std::iter::once(self.zeta * self.k() as f64 / m)
            .chain(self.occupancies.iter().map(|&c| (c as f64 - self.zeta) / m))
            .collect()
    }

    /// Places one ball in O(1): draw `u` uniform on `[0, m)`; the first `ζk`
    /// opens a box, the next `(1-ζ)k` pick a box uniformly, and the remaining
    /// `m - k` pick a previously placed repeat ball, so box `α` gets weight
    /// `(1-ζ) + (n_α - 1) = n_α - ζ`.
    fn step<R: Rng>(&mut self, rng: &mut R) {
        if self.n == 0 {
            self.occupancies.push(1);
            self.n = 1;
            return;
        }
        let k = self.k();
        let kf = k as f64;
        let u = rng.random::<f64>() * self.n as f64;
        let zk = self.zeta * kf;
        if u < zk {
            self.occupancies.push(1);
        } else {
            let alpha = if u < kf {
                (((u - zk) / (1.0 - self.zeta)) as usize).min(k - 1)
            } else {
                let idx = ((u - kf) as usize).min(self.repeat_labels.len() - 1);
                self.repeat_labels[idx]
            };
            self.occupancies[alpha] += 1;
            self.repeat_labels.push(alpha);
        }
        self.n += 1;
    }
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("zeta", format!("CRP needs 0 < ζ < 1, got {zeta}")))
    }
}

fn crp_with<R: Rng>(rng: &mut R, n: u64, zeta: f64) -> CrpState {
    let mut state = CrpState::new(zeta);
    for _ in 0..n {
        state.step(rng);
    }
    state
}

/// Seats `n` balls: the first opens box 1; afterwards a new box opens with
/// probability `ζk/m` and box `α` receives the ball with probability `(n_α - ζ)/m`.
pub fn crp_run(n: u64, zeta: f64, seed: u64) -> Result<CrpState> {
    check_zeta(zeta)?;
    if n == 0 {
        return Err(Error::invalid("n", "need at least one ball"));
    }
    Ok(crp_with(&mut rng::stream(seed, &[tag::CRP]), n, zeta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomWeights {
    /// Frequencies in creation (GEM) order.
    pub rho: Vec<f64>,
    /// Frequencies sorted non-increasing (PD order).
    pub nu: Vec<f64>,
    /// `nu[i] = rho[order[i]]`; ties keep creation order.
    pub order: Vec<usize>,
    pub n: u64,
}

pub fn pd_weights(state: &CrpState) -> RandomWeights {
    let n = state.n;
    let rho: Vec<f64> = state.occupancies.iter().map(|&c| c as f64 / n as f64).collect();
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| state.occupancies[b].cmp(&state.occupancies[a]));
    let nu = order.iter().map(|&i| rho[i]).collect();
    RandomWeights { rho, nu, order, n }
}

/// A-priori laws on `X_2` and `X_1` (uniform unless configured).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Apriori {
    pub level2: Vec<f64>,
    pub level1: Vec<f64>,
}

impl Apriori {
    pub fn uniform(h: &CostTensor) -> Self {
        let s = h.space();
        Self {
            level2: vec![1.0 / s.level_size(2) as f64; s.level_size(2)],
            level1: vec![1.0 / s.level_size(1) as f64; s.level_size(1)],
        }
    }

    pub fn new(level2: Vec<f64>, level1: Vec<f64>) -> Result<Self> {
        crate::entropy::check_distribution(&level2, 1e-12)?;
        crate::entropy::check_distribution(&level1, 1e-12)?;
        Ok(Self { level2, level1 })
    }

    /// The product reference measure on `X_2 × X_1`.
    pub fn joint(&self) -> Vec<f64> {
        self.level1
            .iter()
            .flat_map(|&a| self.level2.iter().map(move |&b| a * b))
            .collect()
    }
}

/// A-priori laws together with `log Z(x_1) = log E_2 e^{H(·, x_1)}` for each `x_1`.
#[derive(Debug, Clone, Serialize)]
pub struct AtomEnvironment {
    pub apriori: Apriori,
    pub log_z: Vec<f64>,
}

impl AtomEnvironment {
    pub fn new(h: &CostTensor, apriori: Apriori) -> Result<Self> {
        let space = h.space();
        if space.depth() != 2 {
            return Err(Error::DepthMismatch {
                expected: 2,
                got: space.depth(),
            });
        }
        if apriori.level2.len() != space.level_size(2) || apriori.level1.len() != space.level_size(1) {
            return Err(Error::SpaceMismatch);
        }
        let n2 = space.level_size(2);
        let log_z = h
            .values()
            .chunks(n2)
            .map(|row| log_sum_exp(row.iter().zip(&apriori.level2).map(|(v, a)| v + a.ln())))
            .collect();
        Ok(Self { apriori, log_z })
    }

    fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.apriori.level1).expect("a-priori law has positive mass")
    }

    /// `y_α` for `k` boxes, in creation order.
    fn atoms(&self, rng: &mut StreamRng, k: usize) -> Vec<usize> {
        let dist = self.sampler();
        (0..k).map(|_| dist.sample(rng)).collect()
    }
}

/// `(1/ζ) log E_1 Z^ζ`, the two-scale pressure with a-priori reference weights.
pub fn exact_cascade_pressure(h: &CostTensor, apriori: &Apriori, zeta: f64) -> Result<f64> {
    Ok(cascade_measure(h, apriori, zeta)?.p0())
}

fn cascade_measure(h: &CostTensor, apriori: &Apriori, zeta: f64) -> Result<MultiscaleMeasure> {
    MultiscaleMeasure::build_with_reference(h, &ScaleParams::new(vec![1.0, zeta])?, &apriori.joint())
}

/// `log E_1 Z`, the `ζ → 1` limit.
pub fn annealed_value(h: &CostTensor, apriori: &Apriori) -> Result<f64> {
    let env = AtomEnvironment::new(h, apriori.clone())?;
    Ok(log_sum_exp(env.log_z.iter().zip(&apriori.level1).map(|(z, a)| z + a.ln())))
}

/// `E_1 log Z`, the `ζ → 0` limit.
pub fn quenched_value(h: &CostTensor, apriori: &Apriori) -> Result<f64> {
    let env = AtomEnvironment::new(h, apriori.clone())?;
    Ok(env.log_z.iter().zip(&apriori.level1).map(|(z, a)| z * a).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrandPotentialEstimate {
    pub zeta: f64,
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub truncation_n: u64,
    pub target: f64,
}

impl GrandPotentialEstimate {
    /// `(mean - target)/std_error`; differences below `1e-12` (relative) count as exact,
    /// which matters when the estimator has no variance beyond rounding.
    pub fn z_score(&self) -> f64 {
        z_score(self.mean, self.std_error, self.target)
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score().abs() <= sigmas
    }
}

fn z_score(mean: f64, se: f64, target: f64) -> f64 {
    let diff = mean - target;
    if diff.abs() <= 1e-12 * target.abs().max(1.0) {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Per-`x_1` ball counts: `Σ_{α: y_α = x_1} n_α`. Integer sums, so the
/// result does not depend on the order in which boxes are listed.
fn counts_by_atom(occupancies: &[u64], atoms: &[usize], n1: usize) -> Vec<u64> {
    let mut acc = vec![0u64; n1];
    for (&c, &y) in occupancies.iter().zip(atoms) {
        acc[y] += c;
    }
    acc
}

/// `log Σ_α w_α Z_{y_α}` with `w_α = n_α/n`, for boxes listed in any order.
pub fn log_grand_partition(occupancies: &[u64], atoms: &[usize], log_z: &[f64]) -> f64 {
    let n: u64 = occupancies.iter().sum();
    let by_atom = counts_by_atom(occupancies, atoms, log_z.len());
    log_sum_exp(
        by_atom
            .iter()
            .zip(log_z)
            .filter(|(c, _)| **c > 0)
            .map(|(&c, &z)| (c as f64).ln() + z),
    ) - (n as f64).ln()
}

fn check_mc(crp_n: u64, replicates: usize, zeta: f64) -> Result<()> {
    check_zeta(zeta)?;
    if crp_n == 0 {
        return Err(Error::invalid("crp_n", "need at least one ball"));
    }
    if replicates == 0 {
        return Err(Error::invalid("replicates", "need at least one replicate"));
    }
    Ok(())
}

fn replicate_draw(env: &AtomEnvironment, zeta: f64, crp_n: u64, seed: u64, i: usize) -> (CrpState, Vec<usize>) {
    let mut crp_rng = rng::stream(seed, &[tag::REPLICATE, i as u64, tag::CRP]);
    let state = crp_with(&mut crp_rng, crp_n, zeta);
    let mut atom_rng = rng::stream(seed, &[tag::REPLICATE, i as u64, tag::ATOMS]);
    let atoms = env.atoms(&mut atom_rng, state.k());
    (state, atoms)
}

/// Monte Carlo estimate of `E log Σ_α ν_α Z_α` against the exact `P_0`.
pub fn grand_potential_mc(h: &CostTensor, zeta: f64, crp_n: u64, replicates: usize, seed: u64) -> Result<GrandPotentialEstimate> {
    grand_potential_mc_with(h, &Apriori::uniform(h), zeta, crp_n, replicates, seed)
}

pub fn grand_potential_mc_with(
    h: &CostTensor,
    apriori: &Apriori,
    zeta: f64,
    crp_n: u64,
    replicates: usize,
    seed: u64,
) -> Result<GrandPotentialEstimate> {
    check_mc(crp_n, replicates, zeta)?;
    let env = AtomEnvironment::new(h, apriori.clone())?;
    let target = exact_cascade_pressure(h, apriori, zeta)?;
    let samples: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let (state, atoms) = replicate_draw(&env, zeta, crp_n, seed, i);
            log_grand_partition(&state.occupancies, &atoms, &env.log_z)
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&samples);
    Ok(GrandPotentialEstimate {
        zeta,
        mean,
        std_error,
        replicates,
        truncation_n: crp_n,
        target,
    })
}

/// Per-replicate values computed with boxes in creation order and in PD order.
pub fn ordering_check(h: &CostTensor, zeta: f64, crp_n: u64, replicates: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    check_mc(crp_n, replicates, zeta)?;
    let env = AtomEnvironment::new(h, Apriori::uniform(h))?;
    Ok((0..replicates)
        .map(|i| {
            let (state, atoms) = replicate_draw(&env, zeta, crp_n, seed, i);
            let w = pd_weights(&state);
            let sorted_occ: Vec<u64> = w.order.iter().map(|&a| state.occupancies[a]).collect();
            let sorted_atoms: Vec<usize> = w.order.iter().map(|&a| atoms[a]).collect();
            (
                log_grand_partition(&state.occupancies, &atoms, &env.log_z),
                log_grand_partition(&sorted_occ, &sorted_atoms, &env.log_z),
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageEstimate {
    pub zeta: f64,
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub truncation_n: u64,
    /// `⟨f⟩` under the exact two-scale measure.
    pub target: f64,
}

impl AverageEstimate {
    pub fn z_score(&self) -> f64 {
        z_score(self.mean, self.std_error, self.target)
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score().abs() <= sigmas
    }
}

/// Monte Carlo `E ⟨f⟩*` over the random measure `∝ ν_α e^{H(x_2, y_α)}`
/// against `⟨f⟩` of the two-scale measure with `ζ = (1, ζ)`.
pub fn random_two_scale_average(
    h: &CostTensor,
    f: &Observable,
    zeta: f64,
    crp_n: u64,
    replicates: usize,
    seed: u64,
) -> Result<AverageEstimate> {
    check_mc(crp_n, replicates, zeta)?;
    if f.space() != h.space() {
        return Err(Error::SpaceMismatch);
    }
    let apriori = Apriori::uniform(h);
    let env = AtomEnvironment::new(h, apriori.clone())?;
    let target = cascade_measure(h, &apriori, zeta)?.average(f)?;
    let n2 = h.space().level_size(2);
    // Gibbs average of f inside each x_1 slice
    let slice_avg: Vec<f64> = h
        .values()
        .chunks(n2)
        .zip(f.values().chunks(n2))
        .zip(&env.log_z)
        .map(|((hs, fs), lz)| {
            hs.iter()
                .zip(fs)
                .zip(&apriori.level2)
                .map(|((v, fv), a)| a * (v - lz).exp() * fv)
                .sum()
        })
        .collect();
    let samples: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let (state, atoms) = replicate_draw(&env, zeta, crp_n, seed, i);
            let by_atom = counts_by_atom(&state.occupancies, &atoms, env.log_z.len());
            let logw: Vec<f64> = by_atom
                .iter()
                .zip(&env.log_z)
                .map(|(&c, &z)| if c > 0 { (c as f64).ln() + z } else { f64::NEG_INFINITY })
                .collect();
            let norm = log_sum_exp(logw.iter().copied());
            logw.iter().zip(&slice_avg).map(|(w, g)| (w - norm).exp() * g).sum()
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&samples);
    Ok(AverageEstimate {
        zeta,
        mean,
        std_error,
        replicates,
        truncation_n: crp_n,
        target,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CrpMultinomialResult {
    pub k: usize,
    /// Atoms in creation order.
    pub atoms: Vec<usize>,
    /// PD-ordered weights.
    pub nu: Vec<f64>,
    /// `p_{x_2, α} ∝ ρ_α e^{H(x_2, y_α)}` reindexed to PD order, flattened `α`-major.
    pub maximizer: Vec<f64>,
    /// The random measure `(ν_α Z_α / Σ ν Z) · e^{H(x_2, y_α)} / Z_α`, same layout.
    pub reference: Vec<f64>,
    pub gap: f64,
}

/// Closed-form maximizer of the CRP plus multinomial Gibbs principle versus
/// the grand-canonical random measure, computed along two separate paths.
pub fn crp_multinomial_experiment(h: &CostTensor, zeta: f64, n: u64, seed: u64) -> Result<CrpMultinomialResult> {
    check_mc(n, 1, zeta)?;
    let apriori = Apriori::uniform(h);
    let env = AtomEnvironment::new(h, apriori.clone())?;
    let (state, atoms) = replicate_draw(&env, zeta, n, seed, 0);
    let w = pd_weights(&state);
    let n2 = h.space().level_size(2);
    let row = |y: usize| &h.values()[y * n2..(y + 1) * n2];

    // log-domain Gibbs form with chemical potential log ρ_α, creation order
    let logits: Vec<f64> = w
        .rho
        .iter()
        .zip(&atoms)
        .flat_map(|(r, &y)| row(y).iter().map(move |v| r.ln() + v))
        .collect();
    let lse = log_sum_exp(logits.iter().copied());
    let mut maximizer = Vec::with_capacity(logits.len());
    for &a in &w.order {
        maximizer.extend(logits[a * n2..(a + 1) * n2].iter().map(|l| (l - lse).exp()));
    }

    // linear-domain product of the box law and the within-box Gibbs law, PD order
    let z: Vec<f64> = w
        .order
        .iter()
        .map(|&a| row(atoms[a]).iter().map(|v| v.exp()).sum::<f64>() / n2 as f64)
        .collect();
    let total: f64 = w.nu.iter().zip(&z).map(|(nu, z)| nu * z).sum();
    let mut reference = Vec::with_capacity(maximizer.len());
    for (i, &a) in w.order.iter().enumerate() {
        let box_mass = w.nu[i] * z[i] / total;
        reference.extend(row(atoms[a]).iter().map(|v| box_mass * (v.exp() / n2 as f64) / z[i]));
    }
    let gap = maximizer
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CrpMultinomialResult {
        k: state.k(),
        atoms,
        nu: w.nu,
        maximizer,
        reference,
        gap,
    })
}
