//! Brute-force references used by the integration tests. Nothing here calls
//! into the library's measure construction.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Top-down sizes `(|X_1|, …, |X_r|)` from the library's `(|X_r|, …, |X_1|)`.
pub fn top_down(level_sizes: &[usize]) -> Vec<usize> {
    level_sizes.iter().rev().copied().collect()
}

/// Linear-domain nested partition functions.
/// `zetas` is `(ζ_r, …, ζ_1)`; returns `(log Z_0, joint)`.
pub fn nested_measure(level_sizes: &[usize], h: &[f64], zetas: &[f64]) -> (f64, Vec<f64>) {
    let sizes = top_down(level_sizes);
    let r = sizes.len();
    let zeta = |l: usize| zetas[r - l];
    // z[l] holds Z_l over the depth-l nodes
    let mut z: Vec<Vec<f64>> = vec![Vec::new(); r + 1];
    z[r] = h.iter().map(|v| v.exp()).collect();
    for l in (1..=r).rev() {
        let n = sizes[l - 1];
        z[l - 1] = z[l]
            .chunks(n)
            .map(|c| c.iter().map(|x| x.powf(zeta(l))).sum::<f64>().powf(1.0 / zeta(l)))
            .collect();
    }
    let total: usize = sizes.iter().product();
    let joint = (0..total)
        .map(|flat| {
            let mut p = 1.0;
            for l in 1..=r {
                let node = flat / sizes[l..].iter().product::<usize>();
                let parent = node / sizes[l - 1];
                p *= (z[l][node] / z[l - 1][parent]).powf(zeta(l));
            }
            p
        })
        .collect();
    (z[0][0].ln(), joint)
}

pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// Marginal over depth-`l` nodes, `l = 0..=r`.
pub fn marginal(level_sizes: &[usize], joint: &[f64], l: usize) -> Vec<f64> {
    let sizes = top_down(level_sizes);
    let block: usize = sizes[l..].iter().product();
    joint.chunks(block).map(|c| c.iter().sum()).collect()
}

/// `S^ℓ = Σ_parents p(parent) S[p(·|parent)]` for `ℓ = 1..=r`.
pub fn level_entropies(level_sizes: &[usize], joint: &[f64]) -> Vec<f64> {
    let sizes = top_down(level_sizes);
    (1..=sizes.len())
        .map(|l| {
            let below = marginal(level_sizes, joint, l);
            below
                .chunks(sizes[l - 1])
                .map(|c| {
                    let m: f64 = c.iter().sum();
                    if m > 0.0 {
                        let cond: Vec<f64> = c.iter().map(|x| x / m).collect();
                        m * entropy(&cond)
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

pub fn random_sizes(rng: &mut ChaCha8Rng, depth: std::ops::RangeInclusive<usize>, size: std::ops::RangeInclusive<usize>) -> Vec<usize> {
    let r = rng.random_range(depth);
    (0..r).map(|_| rng.random_range(size.clone())).collect()
}

pub fn random_values(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum()
}

/// `ln n!` by summation; exact enough for the sizes used in tests.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}
