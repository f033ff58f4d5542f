use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::{bail, Context, Result};
use clap::Args;
use ramp_core::env::Maze;
use ramp_core::{RampConfig, Trainer};

#[derive(Args)]
pub struct SweepArgs {
    /// Base TOML configuration shared by every run.
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated mixture rates; defaults to the config's own value.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Directory receiving one subdirectory per run plus `summary.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Concurrent worker processes. Serial by default; the `RAMP_THREADS`
    /// environment variable caps whatever is requested here.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

struct Job {
    beta: f64,
    seed: u64,
    dir: PathBuf,
}

pub fn main(args: SweepArgs) -> Result<ExitCode> {
    let base = RampConfig::from_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    let betas = args.betas.clone().unwrap_or_else(|| vec![base.beta]);
    if betas.is_empty() || args.seeds.is_empty() {
        bail!("sweep needs at least one beta and one seed");
    }

    let mut jobs = Vec::new();
    for &beta in &betas {
        for &seed in &args.seeds {
            jobs.push(Job {
                beta,
                seed,
                dir: args.out.join(format!("beta{beta}_seed{seed}")),
            });
        }
    }

    let cap = std::env::var("RAMP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(usize::MAX);
    let workers = args.jobs.clamp(1, cap.max(1));
    println!("{} runs, {} worker(s)", jobs.len(), workers);

    if workers == 1 {
        for job in &jobs {
            run_in_process(&base, job)?;
        }
    } else {
        run_with_children(&base, &jobs, workers)?;
    }

    let summary_path = args.out.join("summary.csv");
    let mut summary = String::from("beta,seed,coverage_pct,entropy_est,dir\n");
    for job in &jobs {
        let (coverage, entropy) = final_row(&job.dir.join("epochs.csv"))?;
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            job.beta,
            job.seed,
            coverage,
            entropy,
            job.dir.display()
        ));
    }
    fs::write(&summary_path, summary)?;
    println!("summary in {}", summary_path.display());
    Ok(ExitCode::SUCCESS)
}

fn configured(base: &RampConfig, job: &Job) -> Result<RampConfig> {
    let mut cfg = base.clone();
    cfg.beta = job.beta;
    cfg.seed = job.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn run_in_process(base: &RampConfig, job: &Job) -> Result<()> {
    let cfg = configured(base, job)?;
    let maze = Maze::new(cfg.env.resolve()?);
    let mut trainer = Trainer::new(maze, cfg, Some(&job.dir))?;
    let logs = trainer.run_training()?;
    let last = logs.last().expect("training always runs at least one epoch");
    println!(
        "beta {} seed {}: coverage {:.2}% entropy {:.4}",
        job.beta, job.seed, last.coverage_pct, last.entropy_est
    );
    Ok(())
}

/// Launches runs as child `ramp run` processes, at most `workers` at a time.
fn run_with_children(base: &RampConfig, jobs: &[Job], workers: usize) -> Result<()> {
    let exe = std::env::current_exe()?;
    for chunk in jobs.chunks(workers) {
        let mut children = Vec::new();
        for job in chunk {
            let cfg = configured(base, job)?;
            fs::create_dir_all(&job.dir)?;
            let cfg_path = job.dir.join("job.toml");
            fs::write(&cfg_path, cfg.to_toml_string()?)?;
            let child = Command::new(&exe)
                .arg("run")
                .arg("--config")
                .arg(&cfg_path)
                .arg("--out")
                .arg(&job.dir)
                .spawn()
                .with_context(|| format!("spawning worker for {}", job.dir.display()))?;
            children.push((job, child));
        }
        for (job, mut child) in children {
            let status = child.wait()?;
            if !status.success() {
                bail!("worker for {} exited with {status}", job.dir.display());
            }
        }
    }
    Ok(())
}

/// Final (coverage_pct, entropy_est) pair from a run's epochs.csv.
fn final_row(path: &Path) -> Result<(String, String)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let last = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .last()
        .context("empty epochs.csv")?;
    let fields: Vec<&str> = last.split(',').collect();
    if fields.len() < 4 {
        bail!("malformed epochs.csv row: {last}");
    }
    Ok((fields[2].to_string(), fields[3].to_string()))
}
