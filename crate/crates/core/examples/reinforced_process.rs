//! Sample the multiscale reinforced multinomial process: n balls scattered
//! by q, with every level-ℓ node multiplying its balls by (1+γ_ℓ).
//!
//! cargo run --example reinforced_process

use msgibbs::ldp::{run_reinforced_multiscale, BaseMeasure, ReinforcementParams};
use msgibbs::ProductSpace;

fn main() -> msgibbs::Result<()> {
    let space = ProductSpace::new(vec![2, 2, 2])?;
    let q = BaseMeasure::uniform(space);
    // (γ_3, γ_2, γ_1): level-3 counts end at n(1+γ_1)(1+γ_2)(1+γ_3)
    let params = ReinforcementParams::new(vec![1.0, 1.0, 0.0])?;
    for seed in 0..3 {
        let out = run_reinforced_multiscale(1000, &params, &q, seed)?;
        let total: u64 = out.final_counts().iter().sum();
        println!("seed {seed}: final counts {:?} (total {total}, consistent {})", out.final_counts(), out.is_consistent());
    }
    Ok(())
}
