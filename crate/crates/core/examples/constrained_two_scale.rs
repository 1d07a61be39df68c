//! Recover the multipliers (μ, γ) from energy and level-2 entropy targets,
//! and look at the two-temperature limits S₂ → 0 and S₂ → log|X₂|.
//!
//! cargo run --example constrained_two_scale

use msgibbs::legendre::{solve_constrained_two_scale, two_scale_moments};
use msgibbs::{CostTensor, ProductSpace};

fn main() -> msgibbs::Result<()> {
    let h = CostTensor::uniform_random(ProductSpace::new(vec![3, 3])?, -1.0, 1.0, 3)?;

    let fwd = two_scale_moments(&h, 1.2, 0.5)?;
    let sol = solve_constrained_two_scale(&h, fwd.energy, fwd.s2)?;
    let rep = sol.report();
    println!("targets E = {:.9}, S2 = {:.9}", fwd.energy, fwd.s2);
    println!("solved mu = {:.9}, gamma = {:.9} in {} Newton steps", rep.mu, rep.gamma, rep.iterations);
    println!("beta1 = {:.6}, beta2 = {:.6}, beta1/beta2 = {:.6}", rep.beta1, rep.beta2, rep.beta_ratio);
    println!("P0(E, S2) = {:.9}", sol.legendre_value(&h));

    let n2 = h.space().level_size(2);
    // frozen level 2 puts all mass on the slice maxima, so aim between their mean and max
    let maxes: Vec<f64> = h.values().chunks(n2).map(|r| r.iter().copied().fold(f64::MIN, f64::max)).collect();
    let top = maxes.iter().copied().fold(f64::MIN, f64::max);
    let e_frozen = 0.25 * maxes.iter().sum::<f64>() / maxes.len() as f64 + 0.75 * top;
    let frozen = solve_constrained_two_scale(&h, e_frozen, 1e-4)?;
    println!("S2 = 1e-4: gamma = {:.4}, level-2 conditionals {:.4?}", frozen.gamma(), frozen.measure.conditional(2));

    // uniform level 2 averages each slice, so aim between the slice means
    let means: Vec<f64> = h.values().chunks(n2).map(|r| r.iter().sum::<f64>() / n2 as f64).collect();
    let e_flat = 0.5 * means.iter().sum::<f64>() / means.len() as f64 + 0.5 * means.iter().copied().fold(f64::MIN, f64::max);
    let flat = solve_constrained_two_scale(&h, e_flat, (n2 as f64).ln() - 1e-6)?;
    println!("S2 = log 3 - 1e-6: beta2 = {:.3e}, level-2 conditionals {:.4?}", flat.report().beta2, flat.measure.conditional(2));

    match solve_constrained_two_scale(&h, fwd.energy, 2.0) {
        Err(e) => println!("S2 = 2: {e}"),
        Ok(_) => unreachable!("entropy above log 3"),
    }
    Ok(())
}
