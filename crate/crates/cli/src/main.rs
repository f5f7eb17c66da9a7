use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use etpl_cli::commands::{cmd_evolve, cmd_steady, cmd_sweep, cmd_wigner, load_config, CliError, Overrides};

#[derive(Parser)]
#[command(name = "etpl", version, about = "Two-photon-driven Kerr resonator simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario and write timeseries.csv.
    Evolve(RunArgs),
    /// Integrate and write Wigner grids and photon distributions at snapshot times.
    Wigner(RunArgs),
    /// Run one scenario per sweep value and tabulate threshold windows.
    Sweep(RunArgs),
    /// Analytic steady amplitudes against the numeric steady state.
    Steady(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, replacing output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Basis size, replacing fock_dim.
    #[arg(long)]
    fock_dim: Option<usize>,
    /// Accepted for interface compatibility; every run is deterministic.
    #[arg(long)]
    seedless: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (args, command): (&RunArgs, fn(&_) -> Result<(), CliError>) = match &cli.command {
        Command::Evolve(a) => (a, cmd_evolve),
        Command::Wigner(a) => (a, cmd_wigner),
        Command::Sweep(a) => (a, cmd_sweep),
        Command::Steady(a) => (a, cmd_steady),
    };
    let overrides = Overrides {
        out: args.out.clone(),
        fock_dim: args.fock_dim,
    };
    let cfg = load_config(&args.config, &overrides)?;
    command(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("etpl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
