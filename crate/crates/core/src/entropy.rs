//! Entropy decompositions and the entropic-constraint variational principle.
//!
//! `φ[p] = S[p] + μ⟨H⟩ + Σ_{ℓ≥2} γ_ℓ S^ℓ[p]` is maximized level by level,
//! starting from `p^{<r}` with the coarser marginals frozen. With value
//! functions `V_r = μH` and `V_{ℓ-1} = (1+γ_ℓ) log Σ_{x_ℓ} e^{V_ℓ/(1+γ_ℓ)}` the
//! maximizer has `p^{<ℓ} ∝ e^{V_ℓ/(1+γ_ℓ)}` and `φ* = V_0`. It is the multiscale
//! measure with `ζ_ℓ = μ/(1+γ_ℓ)` and pressures `P_ℓ = V_ℓ/μ`, so `φ* = ζ_1 P_0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{conditionals_from_joint, CostTensor, MultiscaleMeasure, Observable, ScaleParams};
use crate::numeric::{log_sum_exp, xlogx};
use crate::space::ProductSpace;

/// Normalization tolerance accepted for probability inputs.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// `β₂` above this is reported as a frozen second level.
pub const FROZEN_BETA: f64 = 1e8;

pub(crate) fn check_distribution(p: &[f64], tol: f64) -> Result<()> {
    if let Some((index, &value)) = p.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeProbability { index, value });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// `-Σ p_i log p_i` in nats.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p, NORMALIZATION_TOL)?;
    Ok(-p.iter().map(|&x| xlogx(x)).sum::<f64>())
}

fn entropy_unchecked(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlogx(x)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyProfile {
    /// `S[p]` of the joint.
    pub total: f64,
    /// `S^ℓ` at index `ℓ - 1`.
    pub per_level: Vec<f64>,
}

impl EntropyProfile {
    /// `S^ℓ` for `1 ≤ ℓ ≤ r`.
    pub fn level(&self, level: usize) -> f64 {
        self.per_level[level - 1]
    }

    pub fn chain_rule_gap(&self) -> f64 {
        (self.total - self.per_level.iter().sum::<f64>()).abs()
    }
}

/// Conditional entropies `S^ℓ = ⟨S[p^{<ℓ}]⟩_{ℓ-1}` of a joint distribution.
pub fn entropy_profile(space: &ProductSpace, joint: &[f64]) -> Result<EntropyProfile> {
    if joint.len() != space.total_size() {
        return Err(Error::LengthMismatch {
            left: joint.len(),
            right: space.total_size(),
        });
    }
    let total = shannon_entropy(joint)?;
    let conds = conditionals_from_joint(space, joint);
    let marginals = marginals_of(space, joint);
    let per_level = (1..=space.depth())
        .map(|level| {
            let size = space.level_size(level);
            conds[level]
                .chunks(size)
                .zip(&marginals[level - 1])
                .filter(|(_, &w)| w > 0.0)
                .map(|(slice, &w)| w * entropy_unchecked(slice))
                .sum()
        })
        .collect();
    Ok(EntropyProfile { total, per_level })
}

impl MultiscaleMeasure {
    pub fn entropy_profile(&self) -> EntropyProfile {
        entropy_profile(self.space(), &self.joint()).expect("a built measure is normalized")
    }
}

/// `p^{(ℓ)}` for `ℓ = 0..=r` by summing out deep coordinates.
pub(crate) fn marginals_of(space: &ProductSpace, joint: &[f64]) -> Vec<Vec<f64>> {
    let r = space.depth();
    let mut marg = vec![Vec::new(); r + 1];
    marg[r] = joint.to_vec();
    for level in (1..=r).rev() {
        let size = space.level_size(level);
        marg[level - 1] = marg[level].chunks(size).map(|c| c.iter().sum()).collect();
    }
    marg
}

/// Lagrange multipliers `μ` and `(γ_r, …, γ_2)`; `γ_1 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Multipliers {
    pub mu: f64,
    gammas: Vec<f64>,
}

impl Multipliers {
    /// `gammas` is `(γ_r, …, γ_2)`, each `> -1`.
    pub fn new(mu: f64, gammas: Vec<f64>) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", format!("must be finite, got {mu}")));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > -1.0)) {
            return Err(Error::invalid("gammas", format!("need 1 + γ > 0, got γ = {g}")));
        }
        Ok(Self { mu, gammas })
    }

    /// Two-scale shorthand.
    pub fn two_scale(mu: f64, gamma: f64) -> Result<Self> {
        Self::new(mu, vec![gamma])
    }

    pub fn depth(&self) -> usize {
        self.gammas.len() + 1
    }

    /// `γ_ℓ`; zero at `ℓ = 1`.
    pub fn gamma(&self, level: usize) -> f64 {
        if level <= 1 {
            0.0
        } else {
            self.gammas[self.gammas.len() + 1 - level]
        }
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `ζ_ℓ = μ/(1+γ_ℓ)`; requires `μ > 0`.
    pub fn scale_params(&self) -> Result<ScaleParams> {
        let r = self.depth();
        if !(self.mu > 0.0) {
            return Err(Error::invalid(
                "mu",
                format!(
                    "μ/(1+γ_r) = {} is not positive; the maximizer is not a multiscale measure with positive ζ",
                    self.mu / (1.0 + self.gamma(r))
                ),
            ));
        }
        ScaleParams::new((1..=r).rev().map(|l| self.mu / (1.0 + self.gamma(l))).collect())
    }
}

/// `φ[p] = S[p] + μ⟨H⟩ + Σ_{ℓ≥2} γ_ℓ S^ℓ[p]`.
pub fn phi(joint: &[f64], h: &CostTensor, mult: &Multipliers) -> Result<f64> {
    let space = h.space();
    if mult.depth() != space.depth() {
        return Err(Error::DepthMismatch {
            expected: space.depth(),
            got: mult.depth(),
        });
    }
    if joint.len() != space.total_size() {
        return Err(Error::SpaceMismatch);
    }
    let profile = entropy_profile(space, joint)?;
    let energy: f64 = joint.iter().zip(h.values()).map(|(p, v)| p * v).sum();
    let reweighted: f64 = (2..=space.depth()).map(|l| mult.gamma(l) * profile.level(l)).sum();
    Ok(profile.total + mult.mu * energy + reweighted)
}

/// Result of the backward value-function sweep.
pub(crate) struct Sweep {
    /// `V_ℓ` for `ℓ = 0..=r`.
    pub values: Vec<Vec<f64>>,
    /// `p^{<ℓ}`, slot 0 empty.
    pub conditionals: Vec<Vec<f64>>,
}

/// `p^{<ℓ} ∝ q^{<ℓ} e^{V_ℓ/d_ℓ}`, `V_{ℓ-1} = d_ℓ log Σ q^{<ℓ} e^{V_ℓ/d_ℓ}`.
pub(crate) fn hierarchical_sweep<D>(
    space: &ProductSpace,
    top: Vec<f64>,
    divisor: D,
    log_ref: Option<&[Vec<f64>]>,
) -> Sweep
where
    D: Fn(usize) -> f64,
{
    let r = space.depth();
    let mut values = vec![Vec::new(); r + 1];
    let mut conditionals = vec![Vec::new(); r + 1];
    values[r] = top;
    for level in (1..=r).rev() {
        let d = divisor(level);
        let size = space.level_size(level);
        let below = &values[level];
        let weight = |node: usize| log_ref.map_or(0.0, |lr| lr[level][node]);
        let mut cond = vec![0.0; below.len()];
        let mut above = Vec::with_capacity(below.len() / size);
        for (parent, chunk) in below.chunks(size).enumerate() {
            let base = parent * size;
            let lse = log_sum_exp((0..size).map(|x| weight(base + x) + chunk[x] / d));
            for x in 0..size {
                cond[base + x] = (weight(base + x) + chunk[x] / d - lse).exp();
            }
            above.push(d * lse);
        }
        values[level - 1] = above;
        conditionals[level] = cond;
    }
    Sweep { values, conditionals }
}

/// The maximizer of `φ` constructed by the hierarchical sweep.
pub fn solve_variational(h: &CostTensor, mult: &Multipliers) -> Result<MultiscaleMeasure> {
    let space = h.space();
    if mult.depth() != space.depth() {
        return Err(Error::DepthMismatch {
            expected: space.depth(),
            got: mult.depth(),
        });
    }
    let zetas = mult.scale_params()?;
    let mu = mult.mu;
    let top = h.values().iter().map(|v| mu * v).collect();
    let sweep = hierarchical_sweep(space, top, |l| 1.0 + mult.gamma(l), None);
    let phi_star = sweep.values[0][0];
    let pressures = sweep
        .values
        .iter()
        .map(|v| v.iter().map(|x| x / mu).collect())
        .collect();
    let m = MultiscaleMeasure::assemble(space.clone(), zetas, pressures, sweep.conditionals, false);
    let achieved = phi(&m.joint(), h, mult)?;
    if (achieved - phi_star).abs() > 1e-10 * phi_star.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "φ at the constructed maximizer is {achieved}, expected V_0 = {phi_star}"
        )));
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemperatureRatios {
    pub beta1: f64,
    pub beta2: f64,
    /// `β₁/β₂ = 1 + γ`.
    pub ratio: f64,
    /// `β₂` diverges as `γ → -1⁺`.
    pub frozen_level2: bool,
}

/// `β₂ = μ/(1+γ)`, `β₁/β₂ = 1+γ` for a two-scale multiplier pair.
pub fn temperature_ratios(mult: &Multipliers) -> Result<TemperatureRatios> {
    if mult.depth() != 2 {
        return Err(Error::DepthMismatch {
            expected: 2,
            got: mult.depth(),
        });
    }
    let ratio = 1.0 + mult.gamma(2);
    let beta2 = mult.mu / ratio;
    Ok(TemperatureRatios {
        beta1: beta2 * ratio,
        beta2,
        ratio,
        frozen_level2: !beta2.is_finite() || beta2.abs() > FROZEN_BETA,
    })
}

/// Finite-difference response of level-`α` averages to `H → H + λA(x_α)`.
#[derive(Debug, Clone, Serialize)]
pub struct LinearResponse {
    pub level: usize,
    /// `d/dλ ⟨O⟩` over levels `≥ α`, one entry per frozen `(x_{α-1}, …, x_1)`.
    pub lhs: Vec<f64>,
    /// `β_α Cov(O, A)` under the same conditional law.
    pub rhs: Vec<f64>,
    pub abs_err: f64,
}

/// Partial-equilibrium linear response at level `α` (`β = 1`, so `β_α = ζ_α`).
///
/// Levels below `α` are held frozen: the averages are taken over
/// `(x_r, …, x_α)` given `(x_{α-1}, …, x_1)`. At `α = 1` this is the full
/// average `⟨·⟩`.
pub fn linear_response_check(
    h: &CostTensor,
    zetas: &ScaleParams,
    o: &Observable,
    a: &Observable,
    level: usize,
    step: f64,
) -> Result<LinearResponse> {
    let space = h.space();
    space.check_level(level)?;
    if o.space() != space || a.space() != space {
        return Err(Error::SpaceMismatch);
    }
    if !a.depends_only_on(level) {
        return Err(Error::invalid(
            "a",
            format!("perturbation must depend on x_{level} only"),
        ));
    }
    if !(step > 0.0) {
        return Err(Error::invalid("step", "finite-difference step must be > 0"));
    }
    let base = MultiscaleMeasure::build(h, zetas)?;
    let plus = MultiscaleMeasure::build(&h.tilted(a, step)?, zetas)?;
    let minus = MultiscaleMeasure::build(&h.tilted(a, -step)?, zetas)?;
    let avg_o_plus = frozen_averages(&plus, o.values(), level);
    let avg_o_minus = frozen_averages(&minus, o.values(), level);
    let lhs: Vec<f64> = avg_o_plus
        .iter()
        .zip(&avg_o_minus)
        .map(|(p, m)| (p - m) / (2.0 * step))
        .collect();
    let oa: Vec<f64> = o.values().iter().zip(a.values()).map(|(x, y)| x * y).collect();
    let e_oa = frozen_averages(&base, &oa, level);
    let e_o = frozen_averages(&base, o.values(), level);
    let e_a = frozen_averages(&base, a.values(), level);
    let beta = zetas.zeta(level);
    let rhs: Vec<f64> = (0..e_o.len())
        .map(|i| beta * (e_oa[i] - e_o[i] * e_a[i]))
        .collect();
    let abs_err = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    Ok(LinearResponse {
        level,
        lhs,
        rhs,
        abs_err,
    })
}

/// Average of `values` over levels `≥ level` for each depth-`(level-1)` node.
fn frozen_averages(m: &MultiscaleMeasure, values: &[f64], level: usize) -> Vec<f64> {
    let space = m.space();
    let block = space.leaves_below(level - 1);
    (0..space.nodes_at(level - 1))
        .map(|node| {
            (node * block..(node + 1) * block)
                .map(|leaf| {
                    let w: f64 = (level..=space.depth())
                        .map(|l| m.conditional(l)[space.ancestor(leaf, l)])
                        .product();
                    w * values[leaf]
                })
                .sum()
        })
        .collect()
}

/// Exact `d⟨O⟩/dλ` of the full average under `H → H + λA(x_α)`.
///
/// With `g_α = A` and `g_{ℓ-1} = ⟨g_ℓ⟩_{<ℓ}` the log-weight moves by
/// `Σ_{ℓ≤α} ζ_ℓ (g_ℓ - g_{ℓ-1})`, so the response is
/// `Σ_{ℓ≤α} ζ_ℓ Cov(O, g_ℓ - g_{ℓ-1})`. For `α = 1` this is `ζ_1 Cov(O, A)`.
pub fn full_average_response(m: &MultiscaleMeasure, o: &Observable, a: &Observable, level: usize) -> Result<f64> {
    let space = m.space();
    space.check_level(level)?;
    if o.space() != space || a.space() != space {
        return Err(Error::SpaceMismatch);
    }
    if !a.depends_only_on(level) {
        return Err(Error::invalid("a", format!("perturbation must depend on x_{level} only")));
    }
    // g[ℓ] indexed by depth-ℓ node.
    let mut g: Vec<Vec<f64>> = vec![Vec::new(); level + 1];
    g[level] = (0..space.nodes_at(level)).map(|n| a.at_node(level, n)).collect();
    for l in (1..=level).rev() {
        let size = space.level_size(l);
        g[l - 1] = m
            .conditional(l)
            .chunks(size)
            .zip(g[l].chunks(size))
            .map(|(c, v)| c.iter().zip(v).map(|(p, x)| p * x).sum())
            .collect();
    }
    let joint = m.joint();
    let e_o: f64 = joint.iter().zip(o.values()).map(|(p, x)| p * x).sum();
    let mut total = 0.0;
    for l in 1..=level {
        let size = space.level_size(l);
        let cov: f64 = (0..joint.len())
            .map(|leaf| {
                let node = space.ancestor(leaf, l);
                let diff = g[l][node] - g[l - 1][node / size];
                joint[leaf] * (o.values()[leaf] - e_o) * diff
            })
            .sum();
        total += m.zetas().zeta(l) * cov;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatentEntropyCheck {
    /// `S[μ_p]` of the augmented measure on `X₂ × X₁ × {0,1}`.
    pub lhs: f64,
    /// `S[Ber(ζ)] + S¹ + ζ S²`.
    pub rhs: f64,
}

/// Builds the latent-bit augmentation of a two-scale joint and compares its
/// entropy to the reweighted decomposition. When the bit is 0, `x₂` is the
/// most likely child of `x₁` (lowest index on ties).
pub fn latent_entropy_identity(space: &ProductSpace, joint: &[f64], zeta: f64) -> Result<LatentEntropyCheck> {
    if space.depth() != 2 {
        return Err(Error::DepthMismatch {
            expected: 2,
            got: space.depth(),
        });
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::invalid("zeta", format!("Bernoulli parameter must lie in (0,1), got {zeta}")));
    }
    let profile = entropy_profile(space, joint)?;
    let conds = conditionals_from_joint(space, joint);
    let p1 = &conds[1];
    let n2 = space.level_size(2);
    let mut augmented = Vec::with_capacity(2 * joint.len());
    for (bit, bit_mass) in [(0usize, 1.0 - zeta), (1, zeta)] {
        for (x1, &m1) in p1.iter().enumerate() {
            let slice = &conds[2][x1 * n2..(x1 + 1) * n2];
            let star = argmax_lowest(slice);
            for (x2, &c) in slice.iter().enumerate() {
                let child = if bit == 0 {
                    if x2 == star {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    c
                };
                augmented.push(bit_mass * m1 * child);
            }
        }
    }
    let lhs = shannon_entropy(&augmented)?;
    let bernoulli = -(xlogx(zeta) + xlogx(1.0 - zeta));
    let rhs = bernoulli + profile.level(1) + zeta * profile.level(2);
    Ok(LatentEntropyCheck { lhs, rhs })
}

/// First index of the maximum.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> (CostTensor, MultiscaleMeasure) {
        let h = CostTensor::worked_example();
        let m = MultiscaleMeasure::build(&h, &ScaleParams::new(vec![1.0, 0.5]).unwrap()).unwrap();
        (h, m)
    }

    #[test]
    fn shannon_examples() {
        assert!((shannon_entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(shannon_entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let v = shannon_entropy(&[0.25, 0.75]).unwrap();
        assert!((v - (4f64.ln() - 0.75 * 3f64.ln())).abs() < 1e-15);
        assert!((v - 0.562_335).abs() < 1e-6);
        assert!(matches!(shannon_entropy(&[-0.1, 1.1]), Err(Error::NegativeProbability { .. })));
        assert!(matches!(shannon_entropy(&[0.3, 0.3]), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn profile_of_worked_example() {
        let (_, m) = worked();
        let prof = m.entropy_profile();
        assert!((prof.level(1) - 2f64.ln()).abs() < 1e-12);
        let s2 = 0.5 * (4f64.ln() - 0.75 * 3f64.ln()) + 0.5 * 2f64.ln();
        assert!((prof.level(2) - s2).abs() < 1e-12);
        assert!((prof.level(2) - 0.627_741).abs() < 1e-6);
        assert!((prof.total - 1.320_888).abs() < 1e-6);
        assert!(prof.chain_rule_gap() < 1e-12);
    }

    #[test]
    fn product_of_uniforms_profile() {
        let space = ProductSpace::new(vec![3, 2, 5]).unwrap();
        let joint = vec![1.0 / 30.0; 30];
        let prof = entropy_profile(&space, &joint).unwrap();
        for l in 1..=3 {
            assert!((prof.level(l) - (space.level_size(l) as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_slices_contribute_nothing() {
        let space = ProductSpace::new(vec![2, 2]).unwrap();
        let prof = entropy_profile(&space, &[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(prof.level(1), 0.0);
        assert!((prof.level(2) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn phi_values() {
        let (h, m) = worked();
        let mult = Multipliers::two_scale(0.5, -0.5).unwrap();
        let v = phi(&m.joint(), &h, &mult).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-12);
        // uniform p with μ = 0, γ = 0 is log|X|
        let zero = Multipliers::two_scale(0.0, 0.0).unwrap();
        assert!((phi(&[0.25; 4], &h, &zero).unwrap() - 4f64.ln()).abs() < 1e-15);
        // γ = 0 reduces to S + μ⟨H⟩
        let gibbs = Multipliers::two_scale(1.3, 0.0).unwrap();
        let joint = m.joint();
        let e: f64 = joint.iter().zip(h.values()).map(|(p, v)| p * v).sum();
        let s = shannon_entropy(&joint).unwrap();
        assert!((phi(&joint, &h, &gibbs).unwrap() - (s + 1.3 * e)).abs() < 1e-14);
    }

    #[test]
    fn solve_matches_build_on_worked_example() {
        let (h, m) = worked();
        let mult = Multipliers::two_scale(0.5, -0.5).unwrap();
        let solved = solve_variational(&h, &mult).unwrap();
        assert_eq!(solved.zetas().as_slice(), &[1.0, 0.5]);
        for (a, b) in solved.joint().iter().zip(m.joint().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((solved.root_log_partition() - 4f64.ln()).abs() < 1e-12);
        assert!((solved.p0() - m.p0()).abs() < 1e-12);
    }

    #[test]
    fn solve_rejects_nonpositive_mu() {
        let h = CostTensor::worked_example();
        let err = solve_variational(&h, &Multipliers::two_scale(-1.0, 0.2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "mu", .. }));
        assert!(Multipliers::two_scale(1.0, -1.0).is_err());
    }

    #[test]
    fn temperature_ratio_examples() {
        let t = temperature_ratios(&Multipliers::two_scale(0.7, 0.0).unwrap()).unwrap();
        assert_eq!((t.beta1, t.beta2, t.ratio), (0.7, 0.7, 1.0));
        let t = temperature_ratios(&Multipliers::two_scale(0.5, -0.5).unwrap()).unwrap();
        assert_eq!((t.beta2, t.ratio), (1.0, 0.5));
        assert!(!t.frozen_level2);
        let t = temperature_ratios(&Multipliers::two_scale(1.0, -1.0 + 1e-12).unwrap()).unwrap();
        assert!(t.frozen_level2);
    }

    #[test]
    fn linear_response_trivial_cases() {
        let (h, m) = worked();
        let space = h.space().clone();
        let zetas = m.zetas().clone();
        let o_const = Observable::constant(space.clone(), 4.0).unwrap();
        let a = Observable::on_level(space.clone(), 1, &[0.3, -1.2]).unwrap();
        let lr = linear_response_check(&h, &zetas, &o_const, &a, 1, 1e-5).unwrap();
        assert!(lr.lhs[0].abs() < 1e-9 && lr.rhs[0].abs() < 1e-12);
        let a_const = Observable::on_level(space.clone(), 2, &[2.0, 2.0]).unwrap();
        let o = Observable::from_cost(&h);
        let lr = linear_response_check(&h, &zetas, &o, &a_const, 2, 1e-5).unwrap();
        assert!(lr.abs_err < 1e-9);
        let both = Observable::from_cost(&h);
        assert!(linear_response_check(&h, &zetas, &o, &both, 2, 1e-5).is_err());
    }

    #[test]
    fn latent_identity_cases() {
        let space = ProductSpace::new(vec![2, 2]).unwrap();
        // product of uniforms
        let c = latent_entropy_identity(&space, &[0.25; 4], 0.3).unwrap();
        let bern = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        assert!((c.lhs - (bern + 2f64.ln() + 0.3 * 2f64.ln())).abs() < 1e-12);
        assert!((c.lhs - c.rhs).abs() < 1e-12);
        // deterministic level 2
        let c = latent_entropy_identity(&space, &[0.0, 0.4, 0.6, 0.0], 0.5).unwrap();
        let s1 = -(0.4f64 * 0.4f64.ln() + 0.6 * 0.6f64.ln());
        assert!((c.rhs - (2f64.ln() + s1)).abs() < 1e-12);
        assert!((c.lhs - c.rhs).abs() < 1e-12);
        assert!(latent_entropy_identity(&space, &[0.25; 4], 1.0).is_err());
        assert!(latent_entropy_identity(&space, &[0.25; 4], 0.0).is_err());
    }
}
