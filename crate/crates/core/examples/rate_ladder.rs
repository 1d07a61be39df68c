//! Exact -(1/n) log P of hitting a nested target profile, compared with the
//! reinforced rate function, for the shipped two-scale scenarios.
//!
//! cargo run --example rate_ladder

use msgibbs::ldp::{kl_divergence, rate_function, shipped_ldp_scenarios};

fn main() -> msgibbs::Result<()> {
    for sc in shipped_ldp_scenarios() {
        let p = sc.target()?;
        let rate = rate_function(&p, &sc.base(), &sc.params()?)?;
        let plain = kl_divergence(&p, sc.base().q())?;
        println!("{} (gamma = {}): rate {:.6}, plain KL {:.6}", sc.name, sc.gamma, rate.value, plain);
        for row in sc.ladder()? {
            println!("  n = {:>5}: estimate {:.6}, gap {:.3e}", row.n, row.estimate, row.gap);
        }
    }
    Ok(())
}
