//! Hamiltonians, scale parameters and the multiscale measure itself.
//!
//! The measure is built by the backward pressure recursion
//!
//! ```text
//! P_r = H,    e^{ζ_ℓ P_{ℓ-1}} = Σ_{x_ℓ} e^{ζ_ℓ P_ℓ},    p^{<ℓ} = e^{ζ_ℓ (P_ℓ - P_{ℓ-1})}
//! ```
//!
//! carried out in the log domain. An optional reference measure `q` turns the
//! sums into averages, `e^{ζ_ℓ P_{ℓ-1}} = Σ_{x_ℓ} q^{<ℓ} e^{ζ_ℓ P_ℓ}`, which is
//! how a-priori weights enter the Poisson-Dirichlet representation.

use std::borrow::Cow;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::rng::{self, tag};
use crate::space::ProductSpace;

/// Joint and marginals are materialized only up to this many states.
pub const JOINT_GUARD: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostTensor {
    space: ProductSpace,
    values: Vec<f64>,
}

impl CostTensor {
    pub fn new(space: ProductSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.total_size() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: space.total_size(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "hamiltonian",
                index,
                value,
            });
        }
        Ok(Self { space, values })
    }

    pub fn constant(space: ProductSpace, c: f64) -> Result<Self> {
        let n = space.total_size();
        Self::new(space, vec![c; n])
    }

    /// I.i.d. uniform entries in `[low, high)`.
    pub fn uniform_random(space: ProductSpace, low: f64, high: f64, seed: u64) -> Result<Self> {
        if !(low < high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::invalid("range", format!("need finite low < high, got [{low}, {high})")));
        }
        let mut rng = rng::stream(seed, &[tag::GENERATOR]);
        let values = (0..space.total_size())
            .map(|_| rng.random_range(low..high))
            .collect();
        Self::new(space, values)
    }

    /// The 2×2 two-scale example: `H(·, a) = (log 1, log 3)`, `H(·, b) = (log 2, log 2)`.
    pub fn worked_example() -> Self {
        let space = ProductSpace::new(vec![2, 2]).expect("valid space");
        let values = vec![1f64.ln(), 3f64.ln(), 2f64.ln(), 2f64.ln()];
        Self::new(space, values).expect("finite")
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `H + λ f`.
    pub fn tilted(&self, f: &Observable, lambda: f64) -> Result<CostTensor> {
        if f.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(f.values())
            .map(|(h, v)| h + lambda * v)
            .collect();
        CostTensor::new(self.space.clone(), values)
    }

    /// `c · H`.
    pub fn scaled(&self, c: f64) -> Result<CostTensor> {
        CostTensor::new(self.space.clone(), self.values.iter().map(|h| c * h).collect())
    }
}

/// Scale parameters `(ζ_r, …, ζ_1)`, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleParams {
    zetas: Vec<f64>,
}

impl ScaleParams {
    pub fn new(zetas: Vec<f64>) -> Result<Self> {
        if zetas.is_empty() {
            return Err(Error::invalid("zetas", "at least one scale parameter is required"));
        }
        if let Some(z) = zetas.iter().find(|z| !(z.is_finite() && **z > 0.0)) {
            return Err(Error::invalid("zetas", format!("every ζ must be finite and > 0, got {z}")));
        }
        Ok(Self { zetas })
    }

    pub fn uniform(depth: usize, zeta: f64) -> Result<Self> {
        Self::new(vec![zeta; depth])
    }

    pub fn depth(&self) -> usize {
        self.zetas.len()
    }

    /// `ζ_ℓ` for `1 ≤ ℓ ≤ r`.
    pub fn zeta(&self, level: usize) -> f64 {
        self.zetas[self.zetas.len() - level]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.zetas
    }
}

/// A real function on the product space that reads coordinates up to a
/// declared level only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observable {
    space: ProductSpace,
    values: Vec<f64>,
    depends_up_to: usize,
}

impl Observable {
    /// `depends_up_to = ℓ` promises that the values are constant in
    /// `(x_r, …, x_{ℓ+1})`; `0` declares a constant. The promise is checked.
    pub fn new(space: ProductSpace, values: Vec<f64>, depends_up_to: usize) -> Result<Self> {
        if values.len() != space.total_size() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: space.total_size(),
            });
        }
        if depends_up_to > space.depth() {
            return Err(Error::LevelOutOfRange {
                level: depends_up_to,
                depth: space.depth(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "observable",
                index,
                value,
            });
        }
        let block = space.leaves_below(depends_up_to);
        let consistent = values.chunks(block).all(|chunk| {
            let first = chunk[0];
            chunk.iter().all(|&v| v == first)
        });
        if !consistent {
            return Err(Error::ObservableDeclaration {
                declared: depends_up_to,
            });
        }
        Ok(Self {
            space,
            values,
            depends_up_to,
        })
    }

    /// Evaluate `f(x_r, …, x_1)` over the whole space.
    pub fn from_fn<F>(space: ProductSpace, depends_up_to: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> f64,
    {
        let values = (0..space.total_size())
            .map(|i| f(&space.decode(i).expect("in range")))
            .collect();
        Self::new(space, values, depends_up_to)
    }

    pub fn constant(space: ProductSpace, c: f64) -> Result<Self> {
        let n = space.total_size();
        Self::new(space, vec![c; n], 0)
    }

    /// A function of the single coordinate `x_level`.
    pub fn on_level(space: ProductSpace, level: usize, values: &[f64]) -> Result<Self> {
        space.check_level(level)?;
        if values.len() != space.level_size(level) {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: space.level_size(level),
            });
        }
        let full = (0..space.total_size())
            .map(|i| values[space.coordinate(i, level)])
            .collect();
        Self::new(space, full, level)
    }

    /// The cost itself as an observable (reads every level).
    pub fn from_cost(h: &CostTensor) -> Self {
        Self {
            space: h.space().clone(),
            values: h.values().to_vec(),
            depends_up_to: h.space().depth(),
        }
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn depends_up_to(&self) -> usize {
        self.depends_up_to
    }

    /// Whether the values are a function of `x_level` alone.
    pub fn depends_only_on(&self, level: usize) -> bool {
        let space = &self.space;
        if space.check_level(level).is_err() {
            return false;
        }
        let mut seen: Vec<Option<f64>> = vec![None; space.level_size(level)];
        self.values.iter().enumerate().all(|(i, &v)| {
            let slot = &mut seen[space.coordinate(i, level)];
            match slot {
                Some(prev) => *prev == v,
                None => {
                    *slot = Some(v);
                    true
                }
            }
        })
    }

    /// Value at any leaf below the depth-`level` node `node`.
    pub(crate) fn at_node(&self, level: usize, node: usize) -> f64 {
        self.values[node * self.space.leaves_below(level)]
    }
}

/// The multiscale measure of `(X, ζ, H)`; immutable once built.
#[derive(Debug, Clone)]
pub struct MultiscaleMeasure {
    space: ProductSpace,
    zetas: ScaleParams,
    /// `pressures[ℓ]` for `ℓ = 0..=r`, indexed by depth-`ℓ` node.
    pressures: Vec<Vec<f64>>,
    /// `conditionals[ℓ]` for `ℓ = 1..=r`; slot 0 is empty.
    conditionals: Vec<Vec<f64>>,
    /// `marginals[ℓ]` for `ℓ = 0..=r` when the space is under [`JOINT_GUARD`].
    marginals: Option<Vec<Vec<f64>>>,
    has_reference: bool,
}

impl MultiscaleMeasure {
    /// Backward recursion of the pressures.
    pub fn build(h: &CostTensor, zetas: &ScaleParams) -> Result<Self> {
        Self::build_inner(h, zetas, None)
    }

    /// Same recursion with sums over `x_ℓ` weighted by the conditionals of
    /// the reference joint `reference` (a-priori measure).
    pub fn build_with_reference(h: &CostTensor, zetas: &ScaleParams, reference: &[f64]) -> Result<Self> {
        let log_ref = log_reference_conditionals(h.space(), reference)?;
        Self::build_inner(h, zetas, Some(&log_ref))
    }

    fn build_inner(h: &CostTensor, zetas: &ScaleParams, log_ref: Option<&[Vec<f64>]>) -> Result<Self> {
        let space = h.space().clone();
        let r = space.depth();
        if zetas.depth() != r {
            return Err(Error::DepthMismatch {
                expected: r,
                got: zetas.depth(),
            });
        }
        let mut pressures: Vec<Vec<f64>> = vec![Vec::new(); r + 1];
        let mut conditionals: Vec<Vec<f64>> = vec![Vec::new(); r + 1];
        pressures[r] = h.values().to_vec();
        for level in (1..=r).rev() {
            let zeta = zetas.zeta(level);
            let size = space.level_size(level);
            let below = &pressures[level];
            let weight = |node: usize| log_ref.map_or(0.0, |lr| lr[level][node]);
            let mut parent_p = Vec::with_capacity(space.nodes_at(level - 1));
            let mut cond = vec![0.0; below.len()];
            for (parent, children) in below.chunks(size).enumerate() {
                let base = parent * size;
                let lse = log_sum_exp((0..size).map(|x| weight(base + x) + zeta * children[x]));
                let p_parent = lse / zeta;
                for x in 0..size {
                    cond[base + x] = (weight(base + x) + zeta * children[x] - lse).exp();
                }
                parent_p.push(p_parent);
            }
            if let Some((i, v)) = parent_p.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "pressure at level {} node {i} is {v}",
                    level - 1
                )));
            }
            pressures[level - 1] = parent_p;
            conditionals[level] = cond;
        }
        Ok(Self::assemble(space, zetas.clone(), pressures, conditionals, log_ref.is_some()))
    }

    pub(crate) fn assemble(
        space: ProductSpace,
        zetas: ScaleParams,
        pressures: Vec<Vec<f64>>,
        conditionals: Vec<Vec<f64>>,
        has_reference: bool,
    ) -> Self {
        let marginals = (space.total_size() <= JOINT_GUARD).then(|| chain_marginals(&space, &conditionals));
        Self {
            space,
            zetas,
            pressures,
            conditionals,
            marginals,
            has_reference,
        }
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn zetas(&self) -> &ScaleParams {
        &self.zetas
    }

    pub fn depth(&self) -> usize {
        self.space.depth()
    }

    /// `P_ℓ` indexed by depth-`ℓ` node, `0 ≤ ℓ ≤ r`.
    pub fn pressure(&self, level: usize) -> &[f64] {
        &self.pressures[level]
    }

    /// `P_0`.
    pub fn p0(&self) -> f64 {
        self.pressures[0][0]
    }

    /// `ζ_1 P_0 = log Σ_{x_1} e^{ζ_1 P_1}`, the value of the entropic
    /// variational functional at its maximizer.
    pub fn root_log_partition(&self) -> f64 {
        self.zetas.zeta(1) * self.p0()
    }

    /// `p^{<ℓ}(x_ℓ | x_{ℓ-1}, …, x_1)` indexed by depth-`ℓ` node.
    pub fn conditional(&self, level: usize) -> &[f64] {
        &self.conditionals[level]
    }

    /// `p^{(ℓ)}` indexed by depth-`ℓ` node; `p^{(0)} = [1]`.
    pub fn marginal(&self, level: usize) -> Cow<'_, [f64]> {
        match &self.marginals {
            Some(m) => Cow::Borrowed(&m[level]),
            None => Cow::Owned(chain_marginals(&self.space, &self.conditionals).swap_remove(level)),
        }
    }

    pub fn joint(&self) -> Cow<'_, [f64]> {
        self.marginal(self.depth())
    }

    /// One joint entry, via the chain rule.
    pub fn joint_entry(&self, flat: usize) -> f64 {
        match &self.marginals {
            Some(m) => m[self.depth()][flat],
            None => (1..=self.depth())
                .map(|l| self.conditionals[l][self.space.ancestor(flat, l)])
                .product(),
        }
    }

    pub fn has_reference(&self) -> bool {
        self.has_reference
    }

    /// `⟨f⟩ = Σ_x p(x) f(x)`.
    pub fn average(&self, f: &Observable) -> Result<f64> {
        if f.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        let joint = self.joint();
        Ok(joint.iter().zip(f.values()).map(|(p, v)| p * v).sum())
    }

    /// `⟨f⟩_{<ℓ}` as a table over `(x_{ℓ-1}, …, x_1)`.
    pub fn conditional_average(&self, f: &Observable, level: usize) -> Result<Vec<f64>> {
        if f.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        self.space.check_level(level)?;
        if f.depends_up_to() > level {
            return Err(Error::ObservableTooDeep {
                declared: f.depends_up_to(),
                level,
            });
        }
        let size = self.space.level_size(level);
        let cond = &self.conditionals[level];
        Ok((0..self.space.nodes_at(level - 1))
            .map(|parent| {
                (0..size)
                    .map(|x| {
                        let node = parent * size + x;
                        cond[node] * f.at_node(level, node)
                    })
                    .sum()
            })
            .collect())
    }

    /// Largest relative violation of `e^{ζ_ℓ P_{ℓ-1}} = Σ e^{ζ_ℓ P_ℓ}` over all nodes
    /// (reference weights included when present).
    pub fn recursion_residual(&self, log_ref: Option<&[Vec<f64>]>) -> f64 {
        let mut worst: f64 = 0.0;
        for level in 1..=self.depth() {
            let zeta = self.zetas.zeta(level);
            let size = self.space.level_size(level);
            for (parent, &pp) in self.pressures[level - 1].iter().enumerate() {
                let rhs: f64 = (0..size)
                    .map(|x| {
                        let node = parent * size + x;
                        let w = log_ref.map_or(0.0, |lr| lr[level][node]);
                        (w + zeta * (self.pressures[level][node] - pp)).exp()
                    })
                    .sum();
                worst = worst.max((rhs - 1.0).abs());
            }
        }
        worst
    }

    pub fn free_energies(&self, beta: f64) -> Result<FreeEnergies> {
        free_energies(self, beta)
    }
}

/// Joint built from conditional tables `p^{<ℓ}` (slot 0 ignored) by the chain rule.
/// Every slice must be a probability vector.
pub fn joint_from_conditionals(space: &ProductSpace, conditionals: &[Vec<f64>]) -> Result<Vec<f64>> {
    let r = space.depth();
    if conditionals.len() != r + 1 {
        return Err(Error::DepthMismatch {
            expected: r,
            got: conditionals.len().saturating_sub(1),
        });
    }
    for level in 1..=r {
        if conditionals[level].len() != space.nodes_at(level) {
            return Err(Error::LengthMismatch {
                left: conditionals[level].len(),
                right: space.nodes_at(level),
            });
        }
        for slice in conditionals[level].chunks(space.level_size(level)) {
            crate::entropy::check_distribution(slice, 1e-12)?;
        }
    }
    Ok(chain_marginals(space, conditionals).swap_remove(r))
}

fn chain_marginals(space: &ProductSpace, conditionals: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let r = space.depth();
    let mut marginals = Vec::with_capacity(r + 1);
    marginals.push(vec![1.0]);
    for level in 1..=r {
        let size = space.level_size(level);
        let prev: &Vec<f64> = &marginals[level - 1];
        let next: Vec<f64> = conditionals[level]
            .iter()
            .enumerate()
            .map(|(node, c)| prev[node / size] * c)
            .collect();
        marginals.push(next);
    }
    marginals
}

/// `log q^{<ℓ}` tables (slot 0 empty) of a joint reference measure. Slices
/// whose parent has no mass get uniform conditionals.
pub(crate) fn log_reference_conditionals(space: &ProductSpace, reference: &[f64]) -> Result<Vec<Vec<f64>>> {
    if reference.len() != space.total_size() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: space.total_size(),
        });
    }
    crate::entropy::check_distribution(reference, 1e-9)?;
    let conds = conditionals_from_joint(space, reference);
    Ok(conds
        .into_iter()
        .map(|table| table.into_iter().map(f64::ln).collect())
        .collect())
}

/// Conditional tables `p^{<ℓ}` (slot 0 empty) derived from a joint; slices
/// whose parent has zero mass are filled with the uniform conditional.
pub fn conditionals_from_joint(space: &ProductSpace, joint: &[f64]) -> Vec<Vec<f64>> {
    let r = space.depth();
    let mut marg: Vec<Vec<f64>> = vec![Vec::new(); r + 1];
    marg[r] = joint.to_vec();
    for level in (1..=r).rev() {
        let size = space.level_size(level);
        marg[level - 1] = marg[level].chunks(size).map(|c| c.iter().sum()).collect();
    }
    let mut conds = vec![Vec::new(); r + 1];
    for level in 1..=r {
        let size = space.level_size(level);
        conds[level] = marg[level]
            .iter()
            .enumerate()
            .map(|(node, &m)| {
                let parent = marg[level - 1][node / size];
                if parent > 0.0 {
                    m / parent
                } else {
                    1.0 / size as f64
                }
            })
            .collect();
    }
    conds
}

/// `P_0` of the measure built from `H + λ f`.
pub fn tilted_pressure(h: &CostTensor, zetas: &ScaleParams, f: &Observable, lambda: f64) -> Result<f64> {
    Ok(MultiscaleMeasure::build(&h.tilted(f, lambda)?, zetas)?.p0())
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeEnergies {
    pub beta: f64,
    /// `β_ℓ = ζ_ℓ β`, stored `(β_r, …, β_1)`.
    pub level_betas: Vec<f64>,
    /// `F_ℓ = -P_ℓ / β` for `ℓ = 0..=r`.
    pub tables: Vec<Vec<f64>>,
    /// Largest `|p^{<ℓ} - e^{-β_ℓ (F_ℓ - F_{ℓ-1})}|` over all levels and nodes.
    pub max_identity_error: f64,
}

pub fn free_energies(m: &MultiscaleMeasure, beta: f64) -> Result<FreeEnergies> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("inverse temperature must be > 0, got {beta}")));
    }
    let r = m.depth();
    let tables: Vec<Vec<f64>> = (0..=r)
        .map(|l| m.pressure(l).iter().map(|p| -p / beta).collect())
        .collect();
    let level_betas: Vec<f64> = m.zetas().as_slice().iter().map(|z| z * beta).collect();
    let mut max_identity_error: f64 = 0.0;
    for level in 1..=r {
        let beta_l = m.zetas().zeta(level) * beta;
        let size = m.space().level_size(level);
        for (node, &p) in m.conditional(level).iter().enumerate() {
            let f_here = tables[level][node];
            let f_parent = tables[level - 1][node / size];
            let predicted = (-beta_l * (f_here - f_parent)).exp();
            max_identity_error = max_identity_error.max((predicted - p).abs());
        }
    }
    Ok(FreeEnergies {
        beta,
        level_betas,
        tables,
        max_identity_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> ProductSpace {
        ProductSpace::new(vec![2, 2]).unwrap()
    }

    /// Direct summation of the nested sums, independent of the log-domain code.
    fn nested_sum_p0(h: &[f64], z2: f64, z1: f64) -> f64 {
        let z1_a = h[0].exp().powf(z2) + h[1].exp().powf(z2);
        let z1_b = h[2].exp().powf(z2) + h[3].exp().powf(z2);
        let z1_a = z1_a.powf(1.0 / z2);
        let z1_b = z1_b.powf(1.0 / z2);
        (z1_a.powf(z1) + z1_b.powf(z1)).powf(1.0 / z1).ln()
    }

    #[test]
    fn uniform_single_level() {
        let h = CostTensor::constant(ProductSpace::new(vec![2]).unwrap(), 0.0).unwrap();
        let m = MultiscaleMeasure::build(&h, &ScaleParams::new(vec![1.0]).unwrap()).unwrap();
        assert!((m.p0() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(&*m.joint(), &[0.5, 0.5]);
    }

    #[test]
    fn worked_example_tables() {
        let h = CostTensor::worked_example();
        let zetas = ScaleParams::new(vec![1.0, 0.5]).unwrap();
        let m = MultiscaleMeasure::build(&h, &zetas).unwrap();
        let oracle = nested_sum_p0(h.values(), 1.0, 0.5);
        assert!((m.p0() - oracle).abs() < 1e-12);
        assert!((m.p0() - 16f64.ln()).abs() < 1e-12);
        assert!((m.root_log_partition() - 4f64.ln()).abs() < 1e-12);
        let expect_joint = [0.125, 0.375, 0.25, 0.25];
        for (a, b) in m.joint().iter().zip(expect_joint) {
            assert!((a - b).abs() < 1e-12);
        }
        let c1 = m.conditional(1);
        assert!((c1[0] - 0.5).abs() < 1e-12 && (c1[1] - 0.5).abs() < 1e-12);
        let c2 = m.conditional(2);
        for (a, b) in c2.iter().zip([0.25, 0.75, 0.5, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(m.recursion_residual(None) < 1e-12);
    }

    #[test]
    fn zeta_one_is_plain_gibbs() {
        let space = ProductSpace::new(vec![3, 2, 4]).unwrap();
        let h = CostTensor::uniform_random(space, -3.0, 3.0, 11).unwrap();
        let m = MultiscaleMeasure::build(&h, &ScaleParams::uniform(3, 1.0).unwrap()).unwrap();
        let z: f64 = h.values().iter().map(|v| v.exp()).sum();
        for (p, v) in m.joint().iter().zip(h.values()) {
            assert!((p - v.exp() / z).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_mismatch_and_non_finite_rejected() {
        let h = CostTensor::worked_example();
        assert!(matches!(
            MultiscaleMeasure::build(&h, &ScaleParams::new(vec![1.0]).unwrap()),
            Err(Error::DepthMismatch { .. })
        ));
        assert!(matches!(
            CostTensor::new(two_by_two(), vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { .. })
        ));
        assert!(ScaleParams::new(vec![1.0, 0.0]).is_err());
        assert!(ScaleParams::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn large_costs_do_not_overflow() {
        let h = CostTensor::new(two_by_two(), vec![900.0, 1000.0, -1000.0, 500.0]).unwrap();
        let m = MultiscaleMeasure::build(&h, &ScaleParams::new(vec![3.0, 2.0]).unwrap()).unwrap();
        assert!(m.p0().is_finite());
        let total: f64 = m.joint().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn averages_on_worked_example() {
        let h = CostTensor::worked_example();
        let m = MultiscaleMeasure::build(&h, &ScaleParams::new(vec![1.0, 0.5]).unwrap()).unwrap();
        let space = h.space().clone();
        let c = Observable::constant(space.clone(), 2.5).unwrap();
        assert!((m.average(&c).unwrap() - 2.5).abs() < 1e-12);
        let avg_h = m.average(&Observable::from_cost(&h)).unwrap();
        let oracle: f64 = [0.125, 0.375, 0.25, 0.25].iter().zip(h.values()).map(|(p, v)| p * v).sum();
        assert!((avg_h - oracle).abs() < 1e-12);
        assert!((avg_h - 0.758_554).abs() < 1e-6);
        let ind_a = Observable::on_level(space.clone(), 1, &[1.0, 0.0]).unwrap();
        assert!((m.average(&ind_a).unwrap() - 0.5).abs() < 1e-12);

        let x2 = Observable::on_level(space.clone(), 2, &[0.0, 1.0]).unwrap();
        let table = m.conditional_average(&x2, 2).unwrap();
        assert!((table[0] - 0.75).abs() < 1e-12 && (table[1] - 0.5).abs() < 1e-12);
        let ones = m.conditional_average(&c, 2).unwrap();
        assert!(ones.iter().all(|v| (v - 2.5).abs() < 1e-12));
        let root = m.conditional_average(&ind_a, 1).unwrap();
        assert_eq!(root.len(), 1);
        assert!((root[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn conditional_average_errors() {
        let h = CostTensor::worked_example();
        let m = MultiscaleMeasure::build(&h, &ScaleParams::new(vec![1.0, 0.5]).unwrap()).unwrap();
        let deep = Observable::from_cost(&h);
        assert!(matches!(m.conditional_average(&deep, 1), Err(Error::ObservableTooDeep { .. })));
        assert!(matches!(m.conditional_average(&deep, 3), Err(Error::LevelOutOfRange { .. })));
        let other = Observable::constant(ProductSpace::new(vec![3]).unwrap(), 1.0).unwrap();
        assert!(matches!(m.average(&other), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn observable_declaration_is_checked() {
        let space = two_by_two();
        // varies with x_2 but declared as level-1 only
        assert!(matches!(
            Observable::new(space.clone(), vec![0.0, 1.0, 0.0, 1.0], 1),
            Err(Error::ObservableDeclaration { declared: 1 })
        ));
        let ok = Observable::new(space.clone(), vec![3.0, 3.0, 1.0, 1.0], 1).unwrap();
        assert!(ok.depends_only_on(1));
        assert!(!ok.depends_only_on(2));
    }

    #[test]
    fn tilted_pressure_derivative_matches_average() {
        let h = CostTensor::worked_example();
        let zetas = ScaleParams::new(vec![1.0, 0.5]).unwrap();
        let f = Observable::from_cost(&h);
        let step = 1e-5;
        let p0 = tilted_pressure(&h, &zetas, &f, 0.0).unwrap();
        let m = MultiscaleMeasure::build(&h, &zetas).unwrap();
        assert_eq!(p0, m.p0());
        let fd = (tilted_pressure(&h, &zetas, &f, step).unwrap() - tilted_pressure(&h, &zetas, &f, -step).unwrap())
            / (2.0 * step);
        let avg = m.average(&f).unwrap();
        assert!(((fd - avg) / avg).abs() < 1e-6, "fd {fd} avg {avg}");
    }

    #[test]
    fn free_energy_identities() {
        let h = CostTensor::worked_example();
        let m = MultiscaleMeasure::build(&h, &ScaleParams::new(vec![1.0, 0.5]).unwrap()).unwrap();
        let fe = m.free_energies(1.0).unwrap();
        for l in 0..=2 {
            for (f, p) in fe.tables[l].iter().zip(m.pressure(l)) {
                assert_eq!(*f, -p);
            }
        }
        assert!((fe.tables[0][0] + 16f64.ln()).abs() < 1e-12);
        assert!(fe.max_identity_error < 1e-12);
        let fe2 = m.free_energies(2.5).unwrap();
        assert!(fe2.max_identity_error < 1e-12);
        assert_eq!(fe2.level_betas, vec![2.5, 1.25]);
        assert!(m.free_energies(0.0).is_err());
        assert!(m.free_energies(-1.0).is_err());
    }

    #[test]
    fn reference_weights_turn_sums_into_averages() {
        let h = CostTensor::worked_example();
        let zeta = 0.5;
        let m = MultiscaleMeasure::build_with_reference(&h, &ScaleParams::new(vec![1.0, zeta]).unwrap(), &[0.25; 4]).unwrap();
        // Z(x_1) = E_2 e^H = 2 for both x_1, so P_0 = (1/ζ) log E_1 2^ζ = log 2.
        assert!((m.p0() - 2f64.ln()).abs() < 1e-12);
        let log_ref = log_reference_conditionals(h.space(), &[0.25; 4]).unwrap();
        assert!(m.recursion_residual(Some(&log_ref)) < 1e-12);
    }

    #[test]
    fn joint_entry_matches_joint() {
        let space = ProductSpace::new(vec![2, 3, 2]).unwrap();
        let h = CostTensor::uniform_random(space, -2.0, 2.0, 5).unwrap();
        let m = MultiscaleMeasure::build(&h, &ScaleParams::new(vec![0.7, 1.3, 0.4]).unwrap()).unwrap();
        let joint = m.joint();
        for i in 0..joint.len() {
            let chain: f64 = (1..=3).map(|l| m.conditional(l)[m.space().ancestor(i, l)]).product();
            assert!((joint[i] - chain).abs() < 1e-15);
            assert_eq!(m.joint_entry(i), joint[i]);
        }
    }
}
