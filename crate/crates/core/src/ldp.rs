//! Multinomial sampling, exact multinomial probabilities, the reinforced
//! multinomial process and the KL rate functions it realizes.
//!
//! In the reinforced process `n` balls fall through the cluster tree. At every
//! level each node first reinforces its balls (each ball duplicates or dies
//! independently) and then scatters them into its children according to the
//! base measure `q^{<ℓ}`. Counts therefore compound: a level-`ℓ` node holds
//! about `n Γ_ℓ p^{(ℓ)}` balls with `Γ_ℓ = Π_{k≤ℓ}(1+γ_k)`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::entropy::{check_distribution, hierarchical_sweep, marginals_of};
use crate::error::{Error, Result};
use crate::measure::{conditionals_from_joint, joint_from_conditionals, log_reference_conditionals, CostTensor};
use crate::rng::{self, tag, StreamRng};
use crate::space::ProductSpace;

/// Tolerance used when validating a base measure.
pub const BASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    space: ProductSpace,
    counts: Vec<u64>,
    n: u64,
}

impl Histogram {
    pub fn new(space: ProductSpace, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != space.total_size() {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: space.total_size(),
            });
        }
        let n = counts.iter().sum();
        Ok(Self { space, counts, n })
    }

    pub fn zeros(space: ProductSpace) -> Self {
        let counts = vec![0; space.total_size()];
        Self { space, counts, n: 0 }
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `counts / n`; all zeros when `n = 0`.
    pub fn empirical(&self) -> Vec<f64> {
        if self.n == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// Counts aggregated to depth-`ℓ` nodes.
    pub fn level_counts(&self, level: usize) -> Vec<u64> {
        self.counts
            .chunks(self.space.leaves_below(level))
            .map(|c| c.iter().sum())
            .collect()
    }
}

/// A probability `q` on the product space with its conditionals `q^{<ℓ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseMeasure {
    space: ProductSpace,
    q: Vec<f64>,
    #[serde(skip)]
    conditionals: Vec<Vec<f64>>,
}

impl BaseMeasure {
    pub fn new(space: ProductSpace, q: Vec<f64>) -> Result<Self> {
        if q.len() != space.total_size() {
            return Err(Error::LengthMismatch {
                left: q.len(),
                right: space.total_size(),
            });
        }
        check_distribution(&q, BASE_TOL)?;
        let conditionals = conditionals_from_joint(&space, &q);
        Ok(Self { space, q, conditionals })
    }

    pub fn uniform(space: ProductSpace) -> Self {
        let n = space.total_size();
        Self::new(space, vec![1.0 / n as f64; n]).expect("uniform is normalized")
    }

    /// From conditional tables `q^{<ℓ}` (slot 0 ignored).
    pub fn from_conditionals(space: ProductSpace, conditionals: &[Vec<f64>]) -> Result<Self> {
        let q = joint_from_conditionals(&space, conditionals)?;
        Self::new(space, q)
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `q^{<ℓ}` indexed by depth-`ℓ` node.
    pub fn conditional(&self, level: usize) -> &[f64] {
        &self.conditionals[level]
    }

    fn slice(&self, level: usize, parent: usize) -> &[f64] {
        let size = self.space.level_size(level);
        &self.conditionals[level][parent * size..(parent + 1) * size]
    }
}

/// Reinforcement parameters `(γ_r, …, γ_1)`, each `> -1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReinforcementParams {
    gammas: Vec<f64>,
}

impl ReinforcementParams {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::invalid("gammas", "at least one level is required"));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > -1.0)) {
            return Err(Error::invalid("gammas", format!("need γ > -1, got {g}")));
        }
        Ok(Self { gammas })
    }

    /// `(γ, 0)`: reinforcement between the two levels only.
    pub fn two_scale(gamma: f64) -> Result<Self> {
        Self::new(vec![gamma, 0.0])
    }

    pub fn none(depth: usize) -> Self {
        Self { gammas: vec![0.0; depth] }
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn gamma(&self, level: usize) -> f64 {
        self.gammas[self.gammas.len() - level]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gammas
    }

    /// `Γ_ℓ = Π_{k≤ℓ}(1+γ_k)`, with `Γ_0 = 1`.
    pub fn level_weight(&self, level: usize) -> f64 {
        (1..=level).map(|l| 1.0 + self.gamma(l)).product()
    }
}

/// One realization of the reinforced process. Tables are indexed by level;
/// slot 0 of `level_counts` holds the initial `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReinforcedOutcome {
    pub space: ProductSpace,
    pub seed: u64,
    /// `Y^{<ℓ,γ}` per depth-`ℓ` node.
    pub level_counts: Vec<Vec<u64>>,
    /// Balls at each depth-`(ℓ-1)` node before reinforcement at step `ℓ`.
    pub parent_counts: Vec<Vec<u64>>,
    /// Balls at each depth-`(ℓ-1)` node after reinforcement at step `ℓ`.
    pub reinforced_totals: Vec<Vec<u64>>,
}

impl ReinforcedOutcome {
    pub fn final_counts(&self) -> &[u64] {
        &self.level_counts[self.space.depth()]
    }

    pub fn histogram(&self) -> Histogram {
        Histogram::new(self.space.clone(), self.final_counts().to_vec()).expect("shape matches")
    }

    /// Every child slice sums to the reinforced total of its parent.
    pub fn is_consistent(&self) -> bool {
        (1..=self.space.depth()).all(|level| {
            let size = self.space.level_size(level);
            self.level_counts[level]
                .chunks(size)
                .zip(&self.reinforced_totals[level])
                .all(|(slice, &t)| slice.iter().sum::<u64>() == t)
                && self.parent_counts[level] == self.level_counts[level - 1]
        })
    }
}

fn binomial_draw<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// Multinomial counts by sequential conditional binomials. Tail masses are
/// summed from the end so the last charged box gets conditional probability 1.
fn multinomial_with<R: Rng>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut tail = vec![0.0; probs.len() + 1];
    for i in (0..probs.len()).rev() {
        tail[i] = tail[i + 1] + probs[i];
    }
    let mut out = vec![0; probs.len()];
    let mut left = n;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        let k = if p >= tail[i] { left } else { binomial_draw(rng, left, p / tail[i]) };
        out[i] = k;
        left -= k;
    }
    out
}

fn reinforce_with<R: Rng>(rng: &mut R, count: u64, gamma: f64) -> u64 {
    if gamma == 0.0 {
        count
    } else if gamma < 0.0 {
        binomial_draw(rng, count, 1.0 + gamma)
    } else if gamma <= 1.0 {
        count + binomial_draw(rng, count, gamma)
    } else {
        let whole = gamma.floor();
        count * (1 + whole as u64) + binomial_draw(rng, count, gamma - whole)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > -1.0 {
        Ok(())
    } else {
        Err(Error::invalid("gamma", format!("need γ > -1, got {gamma}")))
    }
}

/// `n` balls thrown independently into the boxes with probabilities `q`.
pub fn multinomial_sample(n: u64, q: &BaseMeasure, seed: u64) -> Histogram {
    let mut rng = rng::stream(seed, &[tag::MULTINOMIAL]);
    let counts = multinomial_with(&mut rng, n, q.q());
    Histogram::new(q.space().clone(), counts).expect("shape matches")
}

/// Each ball duplicates (`γ > 0`) or is annihilated (`γ < 0`) independently;
/// the expected output is `count (1+γ)`. For `γ > 1` every ball gets
/// `⌊γ⌋` sure copies plus a Bernoulli(`γ - ⌊γ⌋`) extra one.
pub fn reinforce_balls(count: u64, gamma: f64, seed: u64) -> Result<u64> {
    check_gamma(gamma)?;
    let mut rng = rng::stream(seed, &[tag::REINFORCE]);
    Ok(reinforce_with(&mut rng, count, gamma))
}

fn node_stream(seed: u64, purpose: u64, level: usize, node: usize) -> StreamRng {
    rng::stream(seed, &[purpose, level as u64, node as u64])
}

/// Two-scale process: `n` balls into the level-1 boxes, then per box `j`
/// reinforce with `γ` and scatter into `q^{<2}(·|j)`.
pub fn run_reinforced_two_scale(n: u64, gamma: f64, q: &BaseMeasure, seed: u64) -> Result<ReinforcedOutcome> {
    check_gamma(gamma)?;
    let space = q.space();
    if space.depth() != 2 {
        return Err(Error::DepthMismatch {
            expected: 2,
            got: space.depth(),
        });
    }
    let parents = multinomial_with(&mut node_stream(seed, tag::SCATTER, 1, 0), n, q.slice(1, 0));
    let mut reinforced = Vec::with_capacity(parents.len());
    let mut children = Vec::with_capacity(space.total_size());
    for (j, &c) in parents.iter().enumerate() {
        let total = reinforce_with(&mut node_stream(seed, tag::REINFORCE, 2, j), c, gamma);
        reinforced.push(total);
        children.extend(multinomial_with(&mut node_stream(seed, tag::SCATTER, 2, j), total, q.slice(2, j)));
    }
    Ok(ReinforcedOutcome {
        space: space.clone(),
        seed,
        level_counts: vec![vec![n], parents.clone(), children],
        parent_counts: vec![Vec::new(), vec![n], parents],
        reinforced_totals: vec![Vec::new(), vec![n], reinforced],
    })
}

/// The `r`-level process: at each level every node reinforces its balls with
/// `γ_ℓ` and scatters them into its children by `q^{<ℓ}`.
pub fn run_reinforced_multiscale(
    n: u64,
    gammas: &ReinforcementParams,
    q: &BaseMeasure,
    seed: u64,
) -> Result<ReinforcedOutcome> {
    let space = q.space();
    let r = space.depth();
    if gammas.depth() != r {
        return Err(Error::DepthMismatch {
            expected: r,
            got: gammas.depth(),
        });
    }
    let mut level_counts = vec![vec![n]];
    let mut parent_counts = vec![Vec::new()];
    let mut reinforced_totals = vec![Vec::new()];
    for level in 1..=r {
        let gamma = gammas.gamma(level);
        let parents = level_counts[level - 1].clone();
        let mut reinforced = Vec::with_capacity(parents.len());
        let mut children = Vec::with_capacity(space.nodes_at(level));
        for (j, &c) in parents.iter().enumerate() {
            let total = reinforce_with(&mut node_stream(seed, tag::REINFORCE, level, j), c, gamma);
            reinforced.push(total);
            let slice = q.slice(level, j);
            children.extend(multinomial_with(&mut node_stream(seed, tag::SCATTER, level, j), total, slice));
        }
        parent_counts.push(parents);
        reinforced_totals.push(reinforced);
        level_counts.push(children);
    }
    Ok(ReinforcedOutcome {
        space: space.clone(),
        seed,
        level_counts,
        parent_counts,
        reinforced_totals,
    })
}

/// `Σ p_i log(p_i/q_i)`; `+∞` if `p` charges a box where `q` vanishes.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    check_distribution(p, crate::entropy::NORMALIZATION_TOL)?;
    check_distribution(q, crate::entropy::NORMALIZATION_TOL)?;
    Ok(kl_unchecked(p, q))
}

fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            d += pi * (pi / qi).ln();
        }
    }
    d
}

fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

fn log_multinomial(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut acc = ln_factorial(n);
    for (&y, &p) in counts.iter().zip(probs) {
        if y > 0 {
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += y as f64 * p.ln() - ln_factorial(y);
        }
    }
    acc
}

fn log_binomial(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    log_multinomial(&[k, n - k], &[p, 1.0 - p])
}

/// Exact `log P(Y = counts)` for `Y ~ Multinomial(n, q)`.
pub fn exact_log_multinomial_pmf(h: &Histogram, q: &BaseMeasure) -> Result<f64> {
    if h.space() != q.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(log_multinomial(h.counts(), q.q()))
}

/// Exact `log P(reinforce_balls(count, γ) = target)`.
pub fn log_reinforcement_pmf(count: u64, gamma: f64, target: u64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(if gamma == 0.0 {
        if target == count {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else if gamma < 0.0 {
        log_binomial(count, target, 1.0 + gamma)
    } else {
        let whole = if gamma <= 1.0 { 0 } else { gamma.floor() as u64 };
        let base = count * (1 + whole);
        if target < base {
            f64::NEG_INFINITY
        } else {
            log_binomial(count, target - base, gamma - whole as f64)
        }
    })
}

/// A rate value; `support_violation` marks `+∞` caused by `p` charging a `q`-null box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub value: f64,
    pub support_violation: bool,
}

fn weighted_rate<W>(p: &[f64], q: &BaseMeasure, weight: W) -> Result<Rate>
where
    W: Fn(usize) -> f64,
{
    let space = q.space();
    if p.len() != space.total_size() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: space.total_size(),
        });
    }
    check_distribution(p, crate::entropy::NORMALIZATION_TOL)?;
    let marg = marginals_of(space, p);
    let conds = conditionals_from_joint(space, p);
    let mut value = 0.0;
    for level in 1..=space.depth() {
        let qc = q.conditional(level);
        let mut d = 0.0;
        for (node, &mass) in marg[level].iter().enumerate() {
            if mass > 0.0 {
                if qc[node] <= 0.0 {
                    return Ok(Rate {
                        value: f64::INFINITY,
                        support_violation: true,
                    });
                }
                d += mass * (conds[level][node] / qc[node]).ln();
            }
        }
        value += weight(level) * d;
    }
    Ok(Rate {
        value,
        support_violation: false,
    })
}

/// `Σ_ℓ (1+γ_ℓ) Σ_parents p^{(ℓ-1)} D_KL(p^{<ℓ} ‖ q^{<ℓ})`.
pub fn rate_function(p: &[f64], q: &BaseMeasure, gammas: &ReinforcementParams) -> Result<Rate> {
    if gammas.depth() != q.space().depth() {
        return Err(Error::DepthMismatch {
            expected: q.space().depth(),
            got: gammas.depth(),
        });
    }
    weighted_rate(p, q, |l| 1.0 + gammas.gamma(l))
}

/// Same sum with the compounded weights `Γ_ℓ = Π_{k≤ℓ}(1+γ_k)` that the
/// reinforced process actually realizes. Agrees with [`rate_function`]
/// whenever at most the deepest reinforcing level has `γ ≠ 0` and `γ_1 = 0`.
pub fn compounded_rate_function(p: &[f64], q: &BaseMeasure, gammas: &ReinforcementParams) -> Result<Rate> {
    if gammas.depth() != q.space().depth() {
        return Err(Error::DepthMismatch {
            expected: q.space().depth(),
            got: gammas.depth(),
        });
    }
    weighted_rate(p, q, |l| gammas.level_weight(l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateLadderRow {
    pub n: u64,
    /// Exact log-probability of the nested event.
    pub log_prob: f64,
    /// `-(1/n) log_prob`.
    pub estimate: f64,
    pub rate: f64,
    pub gap: f64,
}

fn integer_target(value: f64, location: impl FnOnce() -> String) -> Result<u64> {
    let rounded = value.round();
    if value < -0.5 || (value - rounded).abs() > 1e-9 * value.abs().max(1.0) {
        return Err(Error::NonIntegerTarget {
            value,
            location: location(),
        });
    }
    Ok(rounded as u64)
}

/// Exact `-(1/n) log P` of the event that every node ends with exactly its
/// target count `n Γ_ℓ p^{(ℓ)}` (and every reinforcement total hits its mean),
/// for each `n` in `n_list`. The estimate decreases to the compounded rate.
pub fn empirical_rate_estimate(
    p: &[f64],
    q: &BaseMeasure,
    gammas: &ReinforcementParams,
    n_list: &[u64],
) -> Result<Vec<RateLadderRow>> {
    let space = q.space();
    let rate = compounded_rate_function(p, q, gammas)?;
    let marg = marginals_of(space, p);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut log_prob = 0.0;
        for level in 1..=space.depth() {
            let size = space.level_size(level);
            let before = n as f64 * gammas.level_weight(level - 1);
            let after = n as f64 * gammas.level_weight(level);
            for (j, &mass) in marg[level - 1].iter().enumerate() {
                let c = integer_target(before * mass, || format!("n={n}, level {}, node {j}", level - 1))?;
                let t = integer_target(after * mass, || format!("n={n}, reinforced level {}, node {j}", level - 1))?;
                log_prob += log_reinforcement_pmf(c, gammas.gamma(level), t)?;
                let children = (0..size)
                    .map(|x| {
                        let node = j * size + x;
                        integer_target(after * marg[level][node], || format!("n={n}, level {level}, node {node}"))
                    })
                    .collect::<Result<Vec<u64>>>()?;
                log_prob += log_multinomial(&children, q.slice(level, j));
            }
        }
        let estimate = -log_prob / n as f64;
        rows.push(RateLadderRow {
            n,
            log_prob,
            estimate,
            rate: rate.value,
            gap: estimate - rate.value,
        });
    }
    Ok(rows)
}

/// Minimizer of `rate_function(p) - μ⟨H⟩_p` over the simplex, by the backward
/// sweep with `q^{<ℓ}` as reference weights.
pub fn tilted_rate_minimizer(h: &CostTensor, q: &BaseMeasure, gammas: &ReinforcementParams, mu: f64) -> Result<Vec<f64>> {
    let space = h.space();
    if space != q.space() {
        return Err(Error::SpaceMismatch);
    }
    if gammas.depth() != space.depth() {
        return Err(Error::DepthMismatch {
            expected: space.depth(),
            got: gammas.depth(),
        });
    }
    if !mu.is_finite() {
        return Err(Error::invalid("mu", format!("must be finite, got {mu}")));
    }
    let log_ref = log_reference_conditionals(space, q.q())?;
    let top = h.values().iter().map(|v| mu * v).collect();
    let sweep = hierarchical_sweep(space, top, |l| 1.0 + gammas.gamma(l), Some(&log_ref));
    if !sweep.values[0][0].is_finite() {
        return Err(Error::Numeric("tilted rate is not finite anywhere".into()));
    }
    joint_from_conditionals(space, &sweep.conditionals)
}

/// A shipped rate-ladder scenario on a two-level space with uniform `q`.
#[derive(Debug, Clone, Serialize)]
pub struct LdpScenario {
    pub name: String,
    pub gamma: f64,
    /// Level-1 marginal `p^{<1}`.
    pub top: Vec<f64>,
    /// `p^{<2}(·|x_1)`, one row per `x_1`.
    pub rows: Vec<Vec<f64>>,
    pub n_list: Vec<u64>,
}

impl LdpScenario {
    pub fn space(&self) -> ProductSpace {
        ProductSpace::new(vec![self.rows[0].len(), self.top.len()]).expect("non-empty scenario")
    }

    pub fn target(&self) -> Result<Vec<f64>> {
        let conds = vec![Vec::new(), self.top.clone(), self.rows.concat()];
        joint_from_conditionals(&self.space(), &conds)
    }

    pub fn base(&self) -> BaseMeasure {
        BaseMeasure::uniform(self.space())
    }

    pub fn params(&self) -> Result<ReinforcementParams> {
        ReinforcementParams::two_scale(self.gamma)
    }

    pub fn ladder(&self) -> Result<Vec<RateLadderRow>> {
        empirical_rate_estimate(&self.target()?, &self.base(), &self.params()?, &self.n_list)
    }
}

pub fn shipped_ldp_scenarios() -> Vec<LdpScenario> {
    let rows = vec![vec![0.5, 0.5], vec![0.2, 0.8]];
    let n_list = vec![100, 1000, 10000];
    let mk = |name: &str, gamma: f64, top: Vec<f64>| LdpScenario {
        name: name.to_string(),
        gamma,
        top,
        rows: rows.clone(),
        n_list: n_list.clone(),
    };
    vec![
        mk("neutral", 0.0, vec![0.3, 0.7]),
        mk("depleting", -0.5, vec![0.4, 0.6]),
        mk("doubling", 1.0, vec![0.3, 0.7]),
    ]
}
