//! Chinese restaurant process with parameter ζ: box frequencies in creation
//! order approximate GEM(ζ), and sorted they approximate PD(ζ).
//!
//! cargo run --example crp_weights

use msgibbs::pd::{crp_run, pd_weights};

fn main() -> msgibbs::Result<()> {
    for zeta in [0.2, 0.5, 0.8] {
        let state = crp_run(100_000, zeta, 2)?;
        let w = pd_weights(&state);
        let head: Vec<String> = w.nu.iter().take(5).map(|x| format!("{x:.4}")).collect();
        println!("zeta {zeta}: k = {:>6}, largest weights [{}]", state.k(), head.join(", "));
    }
    Ok(())
}
