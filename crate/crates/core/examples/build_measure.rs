//! Builds the 2×2 two-scale measure at ζ = (1, 1/2) and prints every
//! intermediate table.
//!
//! cargo run --example build_measure

use msgibbs::measure::free_energies;
use msgibbs::{CostTensor, MultiscaleMeasure, Observable, ScaleParams};

fn main() -> msgibbs::Result<()> {
    let h = CostTensor::worked_example();
    // stored (ζ_2, ζ_1)
    let zetas = ScaleParams::new(vec![1.0, 0.5])?;
    let m = MultiscaleMeasure::build(&h, &zetas)?;

    for level in (0..=m.depth()).rev() {
        println!("P_{level} = {:?}", m.pressure(level));
    }
    println!("root log-partition ζ_1·P_0 = {:.12} (log 4 = {:.12})", m.root_log_partition(), 4f64.ln());
    for level in 1..=m.depth() {
        println!("p^<{level} = {:?}", m.conditional(level));
    }
    println!("joint = {:?}", m.joint());

    let s = m.entropy_profile();
    println!("S^1 = {:.6}, S^2 = {:.6}, S = {:.6}", s.level(1), s.level(2), s.total);

    let f = free_energies(&m, 1.0)?;
    println!("F_0 = {:.6}, identity error {:.1e}", f.tables[0][0], f.max_identity_error);

    println!("<H> = {:.9}", m.average(&Observable::from_cost(&h))?);
    Ok(())
}
