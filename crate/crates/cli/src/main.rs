use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oflx_cli::config::{Overrides, RunConfig};
use oflx_cli::{commands, CliError};

/// Energy-flux diagnostics for velocity fields on a half-space slab.
#[derive(Debug, Parser)]
#[command(name = "oflx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic snapshots from the config's field description.
    Gen(Overrides),
    /// Run the reflection and mollifier lemma suite on each input snapshot.
    Verify(Overrides),
    /// Third-order structure functions and the bulk-condition verdict.
    Structure(Overrides),
    /// Mollified energy budget over an epsilon ladder.
    Budget(Overrides),
    /// Near-boundary strip norms over an epsilon ladder.
    Strip(Overrides),
    /// Boundary modulus of continuity.
    Modulus(Overrides),
}

impl Command {
    fn split(&self) -> (&'static str, &Overrides) {
        match self {
            Command::Gen(o) => ("gen", o),
            Command::Verify(o) => ("verify", o),
            Command::Structure(o) => ("structure", o),
            Command::Budget(o) => ("budget", o),
            Command::Strip(o) => ("strip", o),
            Command::Modulus(o) => ("modulus", o),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("OFLX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("OFLX_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, overrides) = cli.command.split();
    let result = init_threads()
        .and_then(|_| RunConfig::load(overrides))
        .and_then(|cfg| commands::run(name, &cfg));
    match result {
        Ok(out) => {
            println!("{name}: wrote {} and {}", out.json.display(), out.csv.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
