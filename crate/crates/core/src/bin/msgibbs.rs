use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use msgibbs::experiment::{self, Command, LoadedConfig};

#[derive(Parser)]
#[command(name = "msgibbs", version, about = "Multiscale Gibbs measure experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a multiscale measure: pressures, conditionals, joint, entropy profile.
    BuildMeasure(Common),
    /// Solve variational or constrained two-scale problems.
    Solve(Common),
    /// Reinforced multinomial rate ladders and sample runs.
    Simulate(Common),
    /// Poisson-Dirichlet cascade Monte Carlo against exact targets.
    Cascade(Common),
    /// Run the built-in acceptance checks.
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replicate fan-out.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::BuildMeasure(a) => (Command::BuildMeasure, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Cascade(a) => (Command::Cascade, a),
        Cmd::Selftest(a) => (Command::Selftest, a),
    };
    if let Some(n) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }

    let start = Instant::now();
    let result = (|| {
        let loaded = args.config.as_deref().map(LoadedConfig::from_path).transpose()?;
        let artifacts = experiment::run(command, loaded.as_ref(), args.seed)?;
        let out = args
            .out
            .clone()
            .or_else(|| loaded.as_ref().and_then(|l| l.config.output.clone()))
            .unwrap_or_else(|| PathBuf::from("out"));
        let written = artifacts.write_to(&out)?;
        Ok::<_, experiment::ExperimentError>((artifacts, written))
    })();

    match result {
        Ok((artifacts, written)) => {
            print!("{}", artifacts.summary);
            for path in written {
                println!("wrote {}", path.display());
            }
            println!("wall time {:.3} s", start.elapsed().as_secs_f64());
            if artifacts.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
