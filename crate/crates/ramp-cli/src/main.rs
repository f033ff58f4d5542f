//! `ramp` — train, audit, sweep, and export plot data for the
//! run-away-from-the-past exploration lab.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod plotdata;
mod run;
mod sweep;
mod verify;

#[derive(Parser)]
#[command(name = "ramp", version, about = "Entropy-seeking exploration lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration end to end.
    Run(run::RunArgs),
    /// Execute the exact-oracle audit suite.
    Verify(verify::VerifyArgs),
    /// Run a grid of configurations over mixture rates and seeds.
    Sweep(sweep::SweepArgs),
    /// Rebuild an epoch's state scatter with reward values from checkpoints.
    Plotdata(plotdata::PlotdataArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run::main(args),
        Command::Verify(args) => verify::main(args),
        Command::Sweep(args) => sweep::main(args),
        Command::Plotdata(args) => plotdata::main(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
