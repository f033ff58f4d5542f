//! Epoch loop: collect fresh episodes, retrain the intrinsic reward against
//! the past pool, improve the policy on relabeled replay, then fold the
//! fresh data into the past pool.
//!
//! The loop runs `n_epochs + 1` epochs. Within an epoch the order matters:
//! the reward model is fitted to the *pre-update* past pool (fresh versus
//! past), and only after policy improvement does the pool absorb the fresh
//! transitions. Replay rewards are relabeled at sample time from the current
//! reward model, so critics never see stale intrinsic values.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;

use crate::buffers::{PastBuffer, PresentBuffer};
use crate::config::{RampConfig, Variant};
use crate::env::{rollout_episode, Environment};
use crate::error::{Error, Result};
use crate::metrics::CoverageGrid;
use crate::nn::save_mlp;
use crate::reward::{KlReward, RewardModel, WReward};
use crate::rng;
use crate::sac::{BatchRow, SacAgent};

/// Linear intrinsic-weight decay hitting zero halfway through the step
/// budget: `max(0, 1 - 2t/total)`. Callers keep `0 <= t <= total`.
pub fn intrinsic_weight(t: u64, total: u64) -> f64 {
    (1.0 - 2.0 * t as f64 / total as f64).max(0.0)
}

/// Replay reward heard by the critics: `r_ext + w * alpha * r_int`.
pub fn mix_reward(r_ext: f64, r_int: f64, w: f64, alpha: f64) -> f64 {
    r_ext + w * alpha * r_int
}

/// One row of `epochs.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: u32,
    pub env_steps: u64,
    pub coverage_pct: f64,
    pub entropy_est: f64,
    pub mean_r_int: f64,
    pub rm_loss: f64,
    pub q1_loss: f64,
    pub q2_loss: f64,
    pub actor_loss: f64,
    pub lambda: f64,
    /// Reserved column, always written as 0 so identical (config, seed)
    /// runs emit byte-identical logs; measured timings belong on stdout.
    pub wall_s: f64,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str =
        "epoch,env_steps,coverage_pct,entropy_est,mean_r_int,rm_loss,q1_loss,q2_loss,actor_loss,lambda,wall_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.env_steps,
            self.coverage_pct,
            self.entropy_est,
            self.mean_r_int,
            self.rm_loss,
            self.q1_loss,
            self.q2_loss,
            self.actor_loss,
            self.lambda,
            self.wall_s
        )
    }
}

struct RunDir {
    root: PathBuf,
    epochs: BufWriter<File>,
    eval: BufWriter<File>,
}

impl RunDir {
    fn create(root: &Path, cfg: &RampConfig) -> Result<RunDir> {
        fs::create_dir_all(root)?;
        fs::write(root.join("config.snapshot"), cfg.to_toml_string()?)?;
        let mut epochs = BufWriter::new(File::create(root.join("epochs.csv"))?);
        writeln!(epochs, "{}", EpochLog::CSV_HEADER)?;
        let mut eval = BufWriter::new(File::create(root.join("eval.csv"))?);
        writeln!(eval, "epoch,return_ext")?;
        Ok(RunDir { root: root.to_path_buf(), epochs, eval })
    }
}

/// Relabeling context for one batch of replay rows.
struct Relabel<'m> {
    model: &'m dyn RewardModel,
    w: f64,
    alpha: f64,
    extrinsic: bool,
    r_mean: f64,
    r_std: f64,
}

impl Relabel<'_> {
    fn row<'a>(&self, t: &'a crate::env::Transition) -> BatchRow<'a> {
        let r_int = (self.model.reward(t.s_next.as_slice()) - self.r_mean) / self.r_std;
        let r_ext = if self.extrinsic { t.r_ext } else { 0.0 };
        BatchRow {
            s: t.s.as_slice(),
            a: t.a.as_slice(),
            r: mix_reward(r_ext, r_int, self.w, self.alpha),
            s_next: t.s_next.as_slice(),
            done: t.done,
        }
    }
}

fn union_batch<'a>(
    d_rho: &'a PresentBuffer,
    d_mu: &'a PastBuffer,
    relabel: &Relabel<'_>,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<BatchRow<'a>> {
    use rand::Rng;
    let n_total = d_rho.len() + d_mu.len();
    (0..batch_size)
        .map(|_| {
            let idx = rng.gen_range(0..n_total);
            let t = if idx < d_rho.len() {
                d_rho.get(idx)
            } else {
                d_mu.get(idx - d_rho.len())
            };
            relabel.row(t)
        })
        .collect()
}

pub struct Trainer<E: Environment> {
    env: E,
    cfg: RampConfig,
    agent: SacAgent,
    reward: Box<dyn RewardModel>,
    d_rho: PresentBuffer,
    d_mu: PastBuffer,
    grid: CoverageGrid,
    total_env_steps: u64,
    env_steps: u64,
    /// Index of the next epoch to run, starting at 1; the loop executes
    /// epochs `1..=n_epochs + 1`. Past-buffer slots from initialization
    /// carry tag 0.
    next_epoch: u32,
    standardize: bool,
    r_mean: f64,
    r_std: f64,
    rng_collect: ChaCha8Rng,
    rng_reward: ChaCha8Rng,
    rng_sac: ChaCha8Rng,
    rng_eval: ChaCha8Rng,
    run_dir: Option<RunDir>,
}

impl<E: Environment> Trainer<E> {
    /// Builds agent, reward model, and a randomly-initialized past pool.
    /// `out_dir = None` runs fully in memory (no artifacts).
    pub fn new(env: E, cfg: RampConfig, out_dir: Option<&Path>) -> Result<Trainer<E>> {
        cfg.validate()?;
        if env.state_dim() != 2 {
            return Err(Error::InvalidArgument(
                "the trainer's coverage metrics assume planar states".into(),
            ));
        }
        let mut rng_init = rng::stream(cfg.seed, 0);
        let agent = SacAgent::new(env.state_dim(), env.action_dim(), cfg.sac.clone(), &mut rng_init)?;
        let mut rng_reward = rng::stream(cfg.seed, 2);
        let reward: Box<dyn RewardModel> = match cfg.variant {
            Variant::Kl => Box::new(KlReward::new(
                env.state_dim(),
                &cfg.reward.hidden,
                cfg.reward.lr,
                cfg.reward.batch_size,
                cfg.reward.steps_per_epoch,
                cfg.beta,
                cfg.reward.clamp_low,
                &mut rng_reward,
            )?),
            Variant::W => Box::new(WReward::new(
                env.state_dim(),
                &cfg.reward.hidden,
                cfg.reward.lr,
                cfg.reward.batch_size,
                cfg.reward.steps_per_epoch,
                cfg.beta,
                cfg.reward.eps_relax,
                cfg.reward.lr_lambda,
                cfg.reward.lambda_init,
                &mut rng_reward,
            )?),
        };
        let d_mu = PastBuffer::init(
            &env,
            |_, r| env.random_action(r),
            cfg.buffers.past_size,
            cfg.beta,
            &mut rng_init,
        )?;
        let total_env_steps = cfg.total_env_steps(env.horizon());
        let run_dir = match out_dir {
            Some(root) => Some(RunDir::create(root, &cfg)?),
            None => None,
        };
        Ok(Trainer {
            d_rho: PresentBuffer::new(cfg.trainer.episodes_per_epoch),
            d_mu,
            agent,
            reward,
            grid: CoverageGrid::maze_default(),
            total_env_steps,
            env_steps: 0,
            next_epoch: 1,
            standardize: cfg.standardize_intrinsic(),
            r_mean: 0.0,
            r_std: 1.0,
            rng_collect: rng::stream(cfg.seed, 1),
            rng_reward,
            rng_sac: rng::stream(cfg.seed, 3),
            rng_eval: rng::stream(cfg.seed, 4),
            run_dir,
            env,
            cfg,
        })
    }

    pub fn total_epochs(&self) -> u32 {
        self.cfg.trainer.n_epochs + 1
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn present(&self) -> &PresentBuffer {
        &self.d_rho
    }

    pub fn past(&self) -> &PastBuffer {
        &self.d_mu
    }

    pub fn coverage(&self) -> &CoverageGrid {
        &self.grid
    }

    pub fn reward_model(&self) -> &dyn RewardModel {
        self.reward.as_ref()
    }

    pub fn agent(&self) -> &SacAgent {
        &self.agent
    }

    /// One full epoch: collect, retrain reward, improve policy, absorb the
    /// fresh data into the past pool, then log and persist.
    pub fn run_epoch(&mut self) -> Result<EpochLog> {
        let epoch = self.next_epoch;

        // (1) Fresh episodes under the current stochastic policy.
        self.d_rho.clear();
        for _ in 0..self.cfg.trainer.episodes_per_epoch {
            let agent = &self.agent;
            let env = &self.env;
            let episode = rollout_episode(
                env,
                |s, r| agent.act(s.as_slice(), false, r),
                &mut self.rng_collect,
            );
            for (i, t) in episode.iter().enumerate() {
                if i == 0 {
                    self.grid.update(t.s.as_slice());
                }
                self.grid.update(t.s_next.as_slice());
            }
            self.env_steps += episode.len() as u64;
            self.d_rho.push_episode(episode)?;
        }

        // (2) Fresh-versus-past reward fitting.
        let stats = self
            .reward
            .train_epoch(&self.d_rho, &self.d_mu, &mut self.rng_reward)?;
        let mean_r_int = self
            .d_rho
            .iter()
            .map(|t| self.reward.reward(t.s_next.as_slice()))
            .sum::<f64>()
            / self.d_rho.len() as f64;
        if self.standardize {
            self.refresh_standardization()?;
        }

        // (3) Policy improvement on relabeled union replay.
        let n_updates = (self.d_rho.len() as f64 * self.cfg.sac.updates_per_env_step).round() as usize;
        let w = if self.cfg.trainer.extrinsic {
            intrinsic_weight(self.env_steps.min(self.total_env_steps), self.total_env_steps)
        } else {
            1.0
        };
        let (mut q1_sum, mut q2_sum, mut actor_sum) = (0.0, 0.0, 0.0);
        for _ in 0..n_updates {
            let relabel = Relabel {
                model: self.reward.as_ref(),
                w,
                alpha: self.cfg.trainer.intrinsic_scale,
                extrinsic: self.cfg.trainer.extrinsic,
                r_mean: self.r_mean,
                r_std: self.r_std,
            };
            let rows = union_batch(
                &self.d_rho,
                &self.d_mu,
                &relabel,
                self.cfg.sac.batch_size,
                &mut self.rng_sac,
            );
            let (l1, l2) = self.agent.critic_update(&rows, &mut self.rng_sac)?;
            let states: Vec<&[f64]> = rows.iter().map(|r| r.s).collect();
            let la = self.agent.actor_update(&states, &mut self.rng_sac)?;
            self.agent.target_soft_update();
            q1_sum += l1;
            q2_sum += l2;
            actor_sum += la;
        }
        let denom = n_updates.max(1) as f64;

        // (4) Accept-reject absorption into the past pool.
        for i in 0..self.d_rho.len() {
            let t = self.d_rho.get(i);
            self.d_mu.update_step(t, epoch, &mut self.rng_collect);
        }

        let log = EpochLog {
            epoch,
            env_steps: self.env_steps,
            coverage_pct: self.grid.coverage_percent(),
            entropy_est: self
                .grid
                .histogram_entropy(self.d_mu.iter().map(|t| t.s_next.as_slice())),
            mean_r_int,
            rm_loss: stats.mean_loss,
            q1_loss: q1_sum / denom,
            q2_loss: q2_sum / denom,
            actor_loss: actor_sum / denom,
            lambda: stats.lambda,
            wall_s: 0.0,
        };
        self.persist(&log)?;
        self.next_epoch += 1;
        Ok(log)
    }

    /// Executes all `n_epochs + 1` epochs.
    pub fn run_training(&mut self) -> Result<Vec<EpochLog>> {
        let mut logs = Vec::with_capacity(self.total_epochs() as usize);
        while self.next_epoch <= self.total_epochs() {
            logs.push(self.run_epoch()?);
        }
        Ok(logs)
    }

    /// Deterministic-actor rollout; returns the summed extrinsic return.
    pub fn evaluate(&mut self) -> f64 {
        let agent = &self.agent;
        rollout_episode(
            &self.env,
            |s, r| agent.act(s.as_slice(), true, r),
            &mut self.rng_eval,
        )
        .iter()
        .map(|t| t.r_ext)
        .sum()
    }

    /// Intrinsic z-normalization stats from a fixed-size probe of both
    /// buffers (floored deviation keeps the division safe).
    fn refresh_standardization(&mut self) -> Result<()> {
        const PROBE: usize = 512;
        let mut vals = Vec::with_capacity(2 * PROBE);
        for _ in 0..PROBE {
            let t = self.d_rho.sample(&mut self.rng_reward)?;
            vals.push(self.reward.reward(t.s_next.as_slice()));
        }
        for _ in 0..PROBE {
            let t = self.d_mu.sample(&mut self.rng_reward)?;
            vals.push(self.reward.reward(t.s_next.as_slice()));
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        self.r_mean = mean;
        self.r_std = var.sqrt().max(1e-8);
        Ok(())
    }

    fn persist(&mut self, log: &EpochLog) -> Result<()> {
        let final_epoch = log.epoch == self.total_epochs();
        let eval_due = log.epoch % self.cfg.trainer.eval_interval == 0 || final_epoch;
        let eval_return = if self.run_dir.is_some() && eval_due {
            Some(self.evaluate())
        } else {
            None
        };
        let Some(run) = self.run_dir.as_mut() else {
            return Ok(());
        };
        writeln!(run.epochs, "{}", log.csv_row())?;
        run.epochs.flush()?;
        if let Some(ret) = eval_return {
            writeln!(run.eval, "{},{}", log.epoch, ret)?;
            run.eval.flush()?;
        }
        if log.epoch % self.cfg.trainer.checkpoint_interval == 0 || final_epoch {
            let root = run.root.clone();
            self.write_checkpoint(&root, log.epoch)?;
        }
        Ok(())
    }

    fn write_checkpoint(&self, root: &Path, epoch: u32) -> Result<()> {
        let mut scatter = BufWriter::new(File::create(root.join(format!("states_epoch_{epoch}.csv")))?);
        writeln!(scatter, "x,y,f_phi_value")?;
        for t in self.d_mu.iter().chain(self.d_rho.iter()) {
            let s = t.s_next.as_slice();
            writeln!(scatter, "{},{},{}", s[0], s[1], self.reward.raw_value(s))?;
        }
        scatter.flush()?;

        let mut past = BufWriter::new(File::create(root.join(format!("past_states_{epoch}.csv")))?);
        self.d_mu.write_states_csv(&mut past)?;
        past.flush()?;
        let mut present = BufWriter::new(File::create(root.join(format!("present_states_{epoch}.csv")))?);
        for t in self.d_rho.iter() {
            let s = t.s_next.as_slice();
            writeln!(present, "{},{},{epoch}", s[0], s[1])?;
        }
        present.flush()?;

        save_mlp(self.reward.network(), root.join(format!("reward_epoch_{epoch}.mlp")))?;
        save_mlp(self.agent.actor(), root.join(format!("actor_epoch_{epoch}.mlp")))?;
        let (q1, q2) = self.agent.critics();
        save_mlp(q1, root.join(format!("q1_epoch_{epoch}.mlp")))?;
        save_mlp(q2, root.join(format!("q2_epoch_{epoch}.mlp")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_intrinsic_weight_schedule() {
        assert_eq!(intrinsic_weight(0, 1000), 1.0);
        assert_eq!(intrinsic_weight(500, 1000), 0.0);
        assert_eq!(intrinsic_weight(250, 1000), 0.5);
        assert_eq!(intrinsic_weight(900, 1000), 0.0);
        let mut prev = f64::INFINITY;
        for t in 0..=100 {
            let w = intrinsic_weight(t, 100);
            assert!(w <= prev && (0.0..=1.0).contains(&w));
            if t >= 50 {
                assert_eq!(w, 0.0);
            }
            prev = w;
        }
    }

    #[test]
    fn test_mix_reward_arithmetic() {
        assert_eq!(mix_reward(1.25, 9.0, 0.0, 3.0), 1.25);
        assert_eq!(mix_reward(0.0, 2.0, 1.0, 1.0), 2.0);
        assert!((mix_reward(0.5, 2.0, 0.5, 0.1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn test_epoch_log_csv_shape() {
        let log = EpochLog {
            epoch: 3,
            env_steps: 1500,
            coverage_pct: 12.32,
            entropy_est: 4.5,
            mean_r_int: -0.25,
            rm_loss: 1.375,
            q1_loss: 0.5,
            q2_loss: 0.75,
            actor_loss: -1.5,
            lambda: 30.0,
            wall_s: 0.0,
        };
        assert_eq!(EpochLog::CSV_HEADER.split(',').count(), 11);
        let row = log.csv_row();
        assert_eq!(row.split(',').count(), 11);
        assert!(row.starts_with("3,1500,12.32,"));
        assert!(row.ends_with(",30,0"));
    }
}
