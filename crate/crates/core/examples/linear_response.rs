//! Derivative identities: dP₀/dλ under H → H + λf equals <f>, and the
//! level-α response of an average equals β_α times a covariance.
//!
//! cargo run --example linear_response

use msgibbs::entropy::linear_response_check;
use msgibbs::measure::tilted_pressure;
use msgibbs::{CostTensor, MultiscaleMeasure, Observable, ProductSpace, ScaleParams};

fn main() -> msgibbs::Result<()> {
    let space = ProductSpace::new(vec![2, 3, 2])?;
    let h = CostTensor::uniform_random(space.clone(), -1.0, 1.0, 21)?;
    let zetas = ScaleParams::new(vec![1.0, 0.6, 0.3])?;
    let m = MultiscaleMeasure::build(&h, &zetas)?;

    let f = Observable::from_fn(space.clone(), 3, |x| (x[0] + 2 * x[1]) as f64 - x[2] as f64)?;
    let step = 1e-5;
    let fd = (tilted_pressure(&h, &zetas, &f, step)? - tilted_pressure(&h, &zetas, &f, -step)?) / (2.0 * step);
    println!("dP0/dlambda = {fd:.10}, <f> = {:.10}", m.average(&f)?);

    let o = Observable::from_cost(&h);
    for level in 1..=space.depth() {
        let vals: Vec<f64> = (0..space.level_size(level)).map(|i| i as f64).collect();
        let a = Observable::on_level(space.clone(), level, &vals)?;
        let lr = linear_response_check(&h, &zetas, &o, &a, level, step)?;
        println!("level {level}: {} frozen contexts, max |lhs - rhs| = {:.2e}", lr.lhs.len(), lr.abs_err);
    }
    Ok(())
}
