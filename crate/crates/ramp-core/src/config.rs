//! Run configuration: strict TOML with nested sections.
//!
//! Unknown keys are hard errors, every numeric range is validated with the
//! offending field named in the message, and serialization round-trips
//! exactly so a run's `config.snapshot` can be replayed verbatim.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::MazeSpec;
use crate::error::{Error, Result};
use crate::sac::SacConfig;

/// Which intrinsic reward drives the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Kl,
    W,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// Builtin maze name (`easy`, `u`, `hard`) or a path to a maze file.
    pub maze: String,
    /// Optional episode-length override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Optional integration-step override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl EnvConfig {
    pub fn resolve(&self) -> Result<MazeSpec> {
        let mut spec = match MazeSpec::builtin(&self.maze) {
            Some(s) => s,
            None => MazeSpec::from_file(Path::new(&self.maze)).map_err(|e| {
                Error::Config(format!(
                    "env.maze: `{}` is not a builtin ({}) and failed as a path: {e}",
                    self.maze,
                    MazeSpec::builtin_names().join(", ")
                ))
            })?,
        };
        if let Some(h) = self.horizon {
            if h == 0 {
                return Err(Error::Config("env.horizon must be at least 1".into()));
            }
            spec.horizon = h;
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("env.dt = {dt} must be positive and finite")));
            }
            spec.dt = dt;
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuffersConfig {
    /// Slot count `M` of the past buffer.
    pub past_size: usize,
}

impl Default for BuffersConfig {
    fn default() -> BuffersConfig {
        BuffersConfig { past_size: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub batch_size: usize,
    pub steps_per_epoch: usize,
    /// Lower logit clamp for the ratio model; defaults to `-log(1/beta)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamp_low: Option<f64>,
    /// Lipschitz relaxation margin (potential model).
    pub eps_relax: f64,
    pub lr_lambda: f64,
    pub lambda_init: f64,
}

impl Default for RewardConfig {
    fn default() -> RewardConfig {
        RewardConfig {
            hidden: vec![64, 64],
            lr: 3e-4,
            batch_size: 256,
            steps_per_epoch: 500,
            clamp_low: None,
            eps_relax: 0.05,
            lr_lambda: 0.03,
            lambda_init: 30.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    /// Outer-loop parameter `N`; the run executes `N + 1` epochs.
    pub n_epochs: u32,
    pub episodes_per_epoch: usize,
    /// Env-step budget used by the intrinsic decay schedule; 0 derives it
    /// from the epoch and episode counts.
    pub total_env_steps: u64,
    /// Intrinsic reward scale `alpha`; 0 gives the pure extrinsic control.
    pub intrinsic_scale: f64,
    /// Mix extrinsic rewards in (with linear intrinsic decay) instead of
    /// running pure exploration.
    pub extrinsic: bool,
    /// Per-epoch z-normalization of intrinsic rewards; defaults off for the
    /// ratio variant and on for the potential variant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardize_intrinsic: Option<bool>,
    /// Deterministic evaluation rollout every this many epochs.
    pub eval_interval: u32,
    /// Buffer/network snapshot cadence in epochs.
    pub checkpoint_interval: u32,
}

impl Default for TrainerConfig {
    fn default() -> TrainerConfig {
        TrainerConfig {
            n_epochs: 50,
            episodes_per_epoch: 10,
            total_env_steps: 0,
            intrinsic_scale: 1.0,
            extrinsic: false,
            standardize_intrinsic: None,
            eval_interval: 10,
            checkpoint_interval: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampConfig {
    pub variant: Variant,
    /// Mixture rate of fresh occupancy into the past pool.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
    pub env: EnvConfig,
    #[serde(default)]
    pub buffers: BuffersConfig,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub sac: SacConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
}

fn default_beta() -> f64 {
    0.007
}

impl RampConfig {
    pub fn from_toml_str(text: &str) -> Result<RampConfig> {
        let cfg: RampConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<RampConfig> {
        let text = std::fs::read_to_string(&path)?;
        Self::from_toml_str(&text).map_err(|e| {
            Error::Config(format!("{}: {e}", path.as_ref().display()))
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return fail(format!("beta = {} outside the open interval (0, 1)", self.beta));
        }
        if self.buffers.past_size == 0 {
            return fail("buffers.past_size must be at least 1".into());
        }
        if self.reward.hidden.is_empty() || self.reward.hidden.iter().any(|&h| h == 0) {
            return fail("reward.hidden widths must be positive".into());
        }
        if !(self.reward.lr > 0.0) {
            return fail(format!("reward.lr = {} must be positive", self.reward.lr));
        }
        if self.reward.batch_size == 0 {
            return fail("reward.batch_size must be at least 1".into());
        }
        if !(self.reward.eps_relax > 0.0) {
            return fail(format!("reward.eps_relax = {} must be positive", self.reward.eps_relax));
        }
        if self.reward.lr_lambda < 0.0 {
            return fail(format!("reward.lr_lambda = {} must be nonnegative", self.reward.lr_lambda));
        }
        if self.reward.lambda_init < 0.0 {
            return fail(format!("reward.lambda_init = {} must be nonnegative", self.reward.lambda_init));
        }
        if let Some(low) = self.reward.clamp_low {
            if !low.is_finite() {
                return fail(format!("reward.clamp_low = {low} must be finite"));
            }
        }
        if self.trainer.n_epochs == 0 {
            return fail("trainer.n_epochs must be at least 1".into());
        }
        if self.trainer.episodes_per_epoch == 0 {
            return fail("trainer.episodes_per_epoch must be at least 1".into());
        }
        if self.trainer.intrinsic_scale < 0.0 {
            return fail(format!(
                "trainer.intrinsic_scale = {} must be nonnegative",
                self.trainer.intrinsic_scale
            ));
        }
        if self.trainer.eval_interval == 0 || self.trainer.checkpoint_interval == 0 {
            return fail("trainer intervals must be at least 1 epoch".into());
        }
        self.sac
            .validate()
            .map_err(|e| Error::Config(format!("sac section: {e}")))?;
        self.env.resolve().map(|_| ())
    }

    /// Effective z-normalization switch (variant-dependent default).
    pub fn standardize_intrinsic(&self) -> bool {
        self.trainer
            .standardize_intrinsic
            .unwrap_or(self.variant == Variant::W)
    }

    /// Env-step budget for the decay schedule, deriving the implicit value
    /// when the config leaves it at 0.
    pub fn total_env_steps(&self, horizon: usize) -> u64 {
        if self.trainer.total_env_steps > 0 {
            self.trainer.total_env_steps
        } else {
            (self.trainer.n_epochs as u64 + 1)
                * self.trainer.episodes_per_epoch as u64
                * horizon as u64
        }
    }
}
