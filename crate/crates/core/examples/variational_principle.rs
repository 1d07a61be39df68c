//! The maximizer of φ_{μ,γ}(p) = μ<H> + Σ (1+γ_ℓ) S^ℓ is the multiscale
//! measure with ζ_ℓ = μ/(1+γ_ℓ). Random perturbations never do better.
//!
//! cargo run --example variational_principle

use msgibbs::measure::joint_from_conditionals;
use msgibbs::rng;
use msgibbs::{phi, solve_variational, CostTensor, Multipliers, ProductSpace};
use rand::Rng;

fn main() -> msgibbs::Result<()> {
    let space = ProductSpace::new(vec![3, 2, 4])?;
    let h = CostTensor::uniform_random(space.clone(), -1.0, 1.0, 11)?;
    let mult = Multipliers::new(0.8, vec![0.5, -0.3])?;

    let m = solve_variational(&h, &mult)?;
    let best = m.joint().into_owned();
    let phi_star = phi(&best, &h, &mult)?;
    println!("zetas = {:?}", m.zetas().as_slice());
    println!("phi* = {phi_star:.12}, root log-partition = {:.12}", m.root_log_partition());

    let mut g = rng::stream(5, &[]);
    let mut worst_gap = f64::INFINITY;
    for _ in 0..2000 {
        // perturb every conditional slice and renormalize
        let conds: Vec<Vec<f64>> = (0..=space.depth())
            .map(|level| {
                if level == 0 {
                    return Vec::new();
                }
                let c = m.conditional(level);
                let size = space.level_size(level);
                c.chunks(size)
                    .flat_map(|slice| {
                        let w: Vec<f64> = slice.iter().map(|p| p * (0.2 * g.random::<f64>() - 0.1).exp()).collect();
                        let s: f64 = w.iter().sum();
                        w.into_iter().map(move |x| x / s)
                    })
                    .collect()
            })
            .collect();
        let p = joint_from_conditionals(&space, &conds)?;
        worst_gap = worst_gap.min(phi_star - phi(&p, &h, &mult)?);
    }
    println!("smallest phi* - phi(perturbed) over 2000 draws: {worst_gap:.3e}");
    Ok(())
}
