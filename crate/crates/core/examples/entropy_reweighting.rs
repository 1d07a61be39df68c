//! With a uniform base measure the reinforced rate is a constant minus
//! S¹ + (1+γ)S², and a latent Bernoulli bit reweights S² by ζ.
//!
//! cargo run --example entropy_reweighting

use msgibbs::entropy::latent_entropy_identity;
use msgibbs::ldp::{rate_function, BaseMeasure, ReinforcementParams};
use msgibbs::{entropy_profile, CostTensor, MultiscaleMeasure, ProductSpace, ScaleParams};

fn main() -> msgibbs::Result<()> {
    let space = ProductSpace::new(vec![3, 2])?;
    let h = CostTensor::uniform_random(space.clone(), -1.0, 1.0, 4)?;
    let p = MultiscaleMeasure::build(&h, &ScaleParams::new(vec![0.7, 1.0])?)?.joint().into_owned();
    let s = entropy_profile(&space, &p)?;

    let gamma = 0.5;
    let rate = rate_function(&p, &BaseMeasure::uniform(space.clone()), &ReinforcementParams::two_scale(gamma)?)?;
    let constant = 2f64.ln() + (1.0 + gamma) * 3f64.ln();
    println!("rate {:.12} vs const - S1 - (1+g) S2 = {:.12}", rate.value, constant - s.level(1) - (1.0 + gamma) * s.level(2));

    for zeta in [0.1, 0.5, 0.9] {
        let c = latent_entropy_identity(&space, &p, zeta)?;
        println!("zeta {zeta}: S[augmented] = {:.12}, S[Ber] + S1 + zeta S2 = {:.12}", c.lhs, c.rhs);
    }
    Ok(())
}
