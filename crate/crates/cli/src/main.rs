use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use viscofem_cli::{run, Invocation, Scenario};

/// Viscoelastic elastodynamics solver.
#[derive(Debug, Parser)]
#[command(name = "viscofem", version)]
struct Args {
    scenario: Scenario,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Use the long preset of the scenario.
    #[arg(long)]
    long: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            // usage errors count as configuration errors; help/version are fine
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let inv = Invocation {
        scenario: args.scenario,
        config: args.config,
        out: args.out,
        threads: args.threads,
        long: args.long,
    };
    match run(&inv) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("viscofem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
