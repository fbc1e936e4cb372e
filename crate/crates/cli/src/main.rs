mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::{parse_config, Overrides, Subcommand};
use run::Failure;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Check,
    GroundState,
    Evolve,
    Stability,
    ProbeScaling,
    ProbeSubadd,
    ProbeConcentration,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Check => Subcommand::Check,
            Command::GroundState => Subcommand::GroundState,
            Command::Evolve => Subcommand::Evolve,
            Command::Stability => Subcommand::Stability,
            Command::ProbeScaling => Subcommand::ProbeScaling,
            Command::ProbeSubadd => Subcommand::ProbeSubadd,
            Command::ProbeConcentration => Subcommand::ProbeConcentration,
        }
    }
}

/// Fractional NLS solver: ground states, split-step evolution, orbital
/// stability experiments, variational probes and hypothesis checks.
#[derive(Debug, Parser)]
#[command(name = "fnls", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat `section.key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `io.out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random perturbations (overrides `stability.seed`).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let fail = |f: Failure| {
        eprintln!("error: {}", f.message());
        ExitCode::from(f.exit_code() as u8)
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            return fail(Failure::Io(format!(
                "cannot read {}: {e}",
                cli.config.display()
            )))
        }
    };
    let overrides = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
    };
    let cfg = match parse_config(&text, cli.command.into(), &overrides) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors {
                eprintln!("config error: {e}");
            }
            return ExitCode::from(1);
        }
    };
    if !cli.quiet {
        print!("{}", cfg.echo());
    }
    match run::run(&cfg) {
        Ok(result) => {
            if !cli.quiet {
                print!("{}", result.report);
                println!("manifest: {}", result.manifest.display());
            }
            match result.failure {
                Some(f) => fail(f),
                None => ExitCode::SUCCESS,
            }
        }
        Err(f) => fail(f),
    }
}
