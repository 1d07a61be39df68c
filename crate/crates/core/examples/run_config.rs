//! Drives a shipped scenario file through the experiment layer in-process,
//! the same path the `msgibbs` binary takes.
//!
//! cargo run --example run_config -- scenarios/ladder_doubling.toml

use std::path::PathBuf;

use msgibbs::experiment::{run, Command, LoadedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/ladder_doubling.toml"));
    let loaded = LoadedConfig::from_path(&path)?;
    let command = match loaded.config.command.as_deref() {
        Some("build-measure") => Command::BuildMeasure,
        Some("solve") => Command::Solve,
        Some("cascade") => Command::Cascade,
        _ => Command::Simulate,
    };
    let artifacts = run(command, Some(&loaded), None)?;
    print!("{}", artifacts.summary);
    println!("config hash {}", loaded.hash);
    for (name, bytes) in &artifacts.files {
        println!("{name}: {} bytes", bytes.len());
    }
    Ok(())
}
