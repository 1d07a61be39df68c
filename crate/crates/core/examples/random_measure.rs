//! Averages under the random measure ∝ ν_α e^{H(x₂, y_α)} match the
//! two-scale Gibbs average in expectation, and the CRP plus multinomial
//! Gibbs maximizer coincides with that random measure.
//!
//! cargo run --release --example random_measure

use msgibbs::pd::{crp_multinomial_experiment, random_two_scale_average};
use msgibbs::{CostTensor, Observable};

fn main() -> msgibbs::Result<()> {
    let h = CostTensor::worked_example();
    let est = random_two_scale_average(&h, &Observable::from_cost(&h), 0.5, 10_000, 1_000, 9)?;
    println!("E<H>* = {:.5} ± {:.5}, two-scale <H> = {:.5}", est.mean, est.std_error, est.target);

    let r = crp_multinomial_experiment(&h, 0.5, 2_000, 3)?;
    println!("k = {} boxes, atoms {:?}", r.k, &r.atoms[..r.k.min(8)]);
    println!("max |maximizer - random measure| = {:.2e}", r.gap);
    Ok(())
}
