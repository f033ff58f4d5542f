use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use ramp_core::buffers::read_states_csv;
use ramp_core::nn::load_mlp;

#[derive(Args)]
pub struct PlotdataArgs {
    /// Run directory holding the checkpoint files.
    #[arg(long)]
    pub run: PathBuf,
    /// Checkpoint epoch to export.
    #[arg(long)]
    pub epoch: u32,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Rebuilds `states_epoch_K.csv` (past pool, then fresh pool, each state
/// scored by the epoch's reward network) from the individual checkpoint
/// artifacts. Useful for replotting without rerunning, and doubles as a
/// self-check that checkpoints capture everything the scatter needs.
pub fn main(args: PlotdataArgs) -> Result<ExitCode> {
    let epoch = args.epoch;
    let load_states = |name: String| -> Result<Vec<(Vec<f64>, u32)>> {
        let path = args.run.join(&name);
        let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        read_states_csv(BufReader::new(file)).with_context(|| format!("parsing {name}"))
    };
    let past = load_states(format!("past_states_{epoch}.csv"))?;
    let present = load_states(format!("present_states_{epoch}.csv"))?;
    let net_path = args.run.join(format!("reward_epoch_{epoch}.mlp"));
    let net = load_mlp(&net_path).with_context(|| format!("loading {}", net_path.display()))?;

    let mut out: BufWriter<Box<dyn Write>> = BufWriter::new(match &args.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    });
    writeln!(out, "x,y,f_phi_value")?;
    for (s, _) in past.iter().chain(&present) {
        if s.len() != 2 {
            bail!("expected planar states, found {} coordinates", s.len());
        }
        writeln!(out, "{},{},{}", s[0], s[1], net.forward(s)[0])?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}
