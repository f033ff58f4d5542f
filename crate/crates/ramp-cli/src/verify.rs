use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use ramp_core::{run_all, run_audit};

#[derive(Args)]
pub struct VerifyArgs {
    /// Run a single audit by name instead of the whole suite.
    #[arg(long)]
    pub only: Option<String>,
    /// Seed for the audits' random instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn main(args: VerifyArgs) -> Result<ExitCode> {
    let outcomes = match &args.only {
        Some(name) => vec![run_audit(name, args.seed)?],
        None => run_all(args.seed)?,
    };
    let mut all_ok = true;
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        // Keep one line per audit; counterexample dumps get indented below.
        let mut lines = o.details.lines();
        println!("{verdict} {}: {}", o.name, lines.next().unwrap_or(""));
        for extra in lines {
            println!("    {extra}");
        }
        all_ok &= o.passed;
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
