//! Runs the built-in checks and prints one line per criterion.
//!
//! cargo run --release --example selftest

use msgibbs::selftest::{run_all, DEFAULT_SEED};

fn main() -> msgibbs::Result<()> {
    let report = run_all(DEFAULT_SEED)?;
    for c in &report.criteria {
        println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name);
        for f in &c.failures {
            println!("    {f}");
        }
    }
    Ok(())
}
