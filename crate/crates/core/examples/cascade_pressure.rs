//! Monte Carlo E log Σ ν_α Z(y_α) over Poisson-Dirichlet weights against the
//! exact two-scale pressure, with the annealed and quenched extremes.
//!
//! cargo run --release --example cascade_pressure

use msgibbs::pd::{annealed_value, grand_potential_mc, quenched_value, Apriori};
use msgibbs::{CostTensor, ProductSpace};

fn main() -> msgibbs::Result<()> {
    let h = CostTensor::uniform_random(ProductSpace::new(vec![3, 3])?, -1.0, 1.0, 8)?;
    for zeta in [0.3, 0.5, 0.7] {
        let est = grand_potential_mc(&h, zeta, 10_000, 1_000, 42)?;
        println!(
            "zeta {zeta}: {:.5} ± {:.5} vs exact {:.5} (z = {:+.2})",
            est.mean, est.std_error, est.target, est.z_score()
        );
    }
    let apriori = Apriori::uniform(&h);
    println!("annealed log E Z = {:.5}, quenched E log Z = {:.5}", annealed_value(&h, &apriori)?, quenched_value(&h, &apriori)?);
    Ok(())
}
