//! Soft actor-critic on hand-rolled networks.
//!
//! The actor maps a state to per-dimension Gaussian mean and raw log-std
//! (clamped to `[-20, 2]`); actions are the tanh-squashed samples, so every
//! action lands strictly inside the unit box. Twin critics with Polyak
//! targets score `(s, a)` pairs. All gradients are derived by hand and
//! checked against finite differences in the test suite:
//!
//! * `d log pi / d pre_d = 2 tanh(pre_d)` for the squash correction,
//!   using the stable form `log(1 - tanh^2 x) = 2 (ln 2 - x - softplus(-2x))`;
//! * `d log pi / d log_std_d = -1 + 2 tanh(pre_d) * std_d * xi_d`;
//! * clamped log-std entries pass no gradient.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::ActionVec;
use crate::error::{Error, Result};
use crate::nn::{softplus, Activation, Adam, Mlp, MlpGrads};
use crate::rng::standard_normal;

const LOG_STD_MIN: f64 = -20.0;
const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918938533204672741780329736406;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SacConfig {
    /// Bellman discount.
    pub gamma: f64,
    /// Polyak smoothing rate for the target critics.
    pub tau: f64,
    /// Entropy bonus weight (fixed; no automatic temperature).
    pub lambda_a: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    /// Gradient updates per collected environment step (may be fractional).
    pub updates_per_env_step: f64,
    /// Hidden widths shared by actor and critics.
    pub hidden: Vec<usize>,
}

impl Default for SacConfig {
    fn default() -> SacConfig {
        SacConfig {
            gamma: 0.99,
            tau: 0.005,
            lambda_a: 0.1,
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            batch_size: 256,
            updates_per_env_step: 1.0,
            hidden: vec![64, 64],
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("sac config: {what}")))
            }
        };
        check(self.gamma > 0.0 && self.gamma < 1.0, "gamma must lie in (0, 1)")?;
        check(self.tau > 0.0 && self.tau <= 1.0, "tau must lie in (0, 1]")?;
        check(self.lambda_a >= 0.0, "lambda_a must be nonnegative")?;
        check(self.lr_actor > 0.0 && self.lr_critic > 0.0, "learning rates must be positive")?;
        check(self.batch_size > 0, "batch_size must be positive")?;
        check(self.updates_per_env_step >= 0.0, "updates_per_env_step must be nonnegative")?;
        check(!self.hidden.is_empty() && self.hidden.iter().all(|&h| h > 0), "hidden widths must be positive")
    }
}

/// One relabeled replay row as the critics consume it.
#[derive(Clone, Copy, Debug)]
pub struct BatchRow<'a> {
    pub s: &'a [f64],
    pub a: &'a [f64],
    pub r: f64,
    pub s_next: &'a [f64],
    pub done: bool,
}

pub struct SacAgent {
    actor: Mlp,
    q1: Mlp,
    q2: Mlp,
    q1_target: Mlp,
    q2_target: Mlp,
    opt_actor: Adam,
    opt_q1: Adam,
    opt_q2: Adam,
    cfg: SacConfig,
    state_dim: usize,
    action_dim: usize,
}

impl SacAgent {
    pub fn new(state_dim: usize, action_dim: usize, cfg: SacConfig, rng: &mut ChaCha8Rng) -> Result<SacAgent> {
        cfg.validate()?;
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::InvalidArgument("state and action dims must be positive".into()));
        }
        let mut actor_sizes = vec![state_dim];
        actor_sizes.extend_from_slice(&cfg.hidden);
        actor_sizes.push(2 * action_dim);
        let mut q_sizes = vec![state_dim + action_dim];
        q_sizes.extend_from_slice(&cfg.hidden);
        q_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, Activation::Relu, rng);
        let q1 = Mlp::new(&q_sizes, Activation::Relu, rng);
        let q2 = Mlp::new(&q_sizes, Activation::Relu, rng);
        let opt_actor = Adam::new(&actor, cfg.lr_actor);
        let opt_q1 = Adam::new(&q1, cfg.lr_critic);
        let opt_q2 = Adam::new(&q2, cfg.lr_critic);
        Ok(SacAgent {
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            opt_actor,
            opt_q1,
            opt_q2,
            cfg,
            state_dim,
            action_dim,
        })
    }

    pub fn config(&self) -> &SacConfig {
        &self.cfg
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critics(&self) -> (&Mlp, &Mlp) {
        (&self.q1, &self.q2)
    }

    pub fn critic_targets_nets(&self) -> (&Mlp, &Mlp) {
        (&self.q1_target, &self.q2_target)
    }

    /// Per-dimension Gaussian mean and clamped log-std at `s`.
    pub fn policy_stats(&self, s: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let out = self.actor.forward(s);
        let mean = out[..self.action_dim].to_vec();
        let log_std = out[self.action_dim..]
            .iter()
            .map(|&u| u.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        (mean, log_std)
    }

    /// Deterministic mode squashes the mean; stochastic mode squashes a
    /// reparameterized Gaussian sample. Components always land in (-1, 1).
    pub fn act(&self, s: &[f64], deterministic: bool, rng: &mut ChaCha8Rng) -> ActionVec {
        let (mean, log_std) = self.policy_stats(s);
        if deterministic {
            return ActionVec(mean.iter().map(|&m| m.tanh()).collect());
        }
        let a = mean
            .iter()
            .zip(&log_std)
            .map(|(&m, &ls)| (m + ls.exp() * standard_normal(rng)).tanh())
            .collect();
        ActionVec(a)
    }

    /// Samples an action with its log-density, returning the driving noise.
    pub fn sample_action(&self, s: &[f64], rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, f64) {
        let (mean, log_std) = self.policy_stats(s);
        let noise: Vec<f64> = (0..self.action_dim).map(|_| standard_normal(rng)).collect();
        let mut action = Vec::with_capacity(self.action_dim);
        let mut log_prob = 0.0;
        for d in 0..self.action_dim {
            let pre = mean[d] + log_std[d].exp() * noise[d];
            action.push(pre.tanh());
            log_prob += gaussian_tanh_log_density(log_std[d], noise[d], pre);
        }
        (action, noise, log_prob)
    }

    /// Bellman targets `y = r + gamma (1 - done) (min q_t(s', a') - lambda_a
    /// log pi(a'|s'))` with `a'` freshly sampled per row.
    pub fn critic_targets(&self, batch: &[BatchRow<'_>], rng: &mut ChaCha8Rng) -> Vec<f64> {
        batch
            .iter()
            .map(|row| {
                if row.done {
                    return row.r;
                }
                let (a_next, _, log_prob) = self.sample_action(row.s_next, rng);
                let input = concat_sa(row.s_next, &a_next);
                let q_min = self.q1_target.forward_scalar(&input).min(self.q2_target.forward_scalar(&input));
                row.r + self.cfg.gamma * (q_min - self.cfg.lambda_a * log_prob)
            })
            .collect()
    }

    /// One gradient step on each critic toward the Bellman targets. Returns
    /// the two mean-squared errors.
    pub fn critic_update(&mut self, batch: &[BatchRow<'_>], rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("critic batch is empty".into()));
        }
        let ys = self.critic_targets(batch, rng);
        let l1 = Self::critic_step(&mut self.q1, &mut self.opt_q1, batch, &ys);
        let l2 = Self::critic_step(&mut self.q2, &mut self.opt_q2, batch, &ys);
        Ok((l1, l2))
    }

    fn critic_step(q: &mut Mlp, opt: &mut Adam, batch: &[BatchRow<'_>], ys: &[f64]) -> f64 {
        let (loss, grads) = Self::critic_grads_given_targets(q, batch, ys);
        opt.step(q, &grads);
        loss
    }

    /// Squared-error loss against fixed targets together with its exact
    /// parameter gradient; [`Self::critic_update`] steps along this.
    pub fn critic_grads_given_targets(
        q: &Mlp,
        batch: &[BatchRow<'_>],
        ys: &[f64],
    ) -> (f64, MlpGrads) {
        let n = batch.len() as f64;
        let mut grads = MlpGrads::zeros_like(q);
        let mut loss = 0.0;
        for (row, &y) in batch.iter().zip(ys) {
            let input = concat_sa(row.s, row.a);
            let trace = q.forward_trace(&input);
            let err = trace.output()[0] - y;
            loss += err * err / n;
            q.backward(&trace, &[2.0 * err / n], &mut grads);
        }
        (loss, grads)
    }

    /// Squared-error loss of a candidate critic against fixed targets; used
    /// by the finite-difference audits.
    pub fn critic_loss_given_targets(q: &Mlp, batch: &[BatchRow<'_>], ys: &[f64]) -> f64 {
        let n = batch.len() as f64;
        batch
            .iter()
            .zip(ys)
            .map(|(row, &y)| {
                let err = q.forward_scalar(&concat_sa(row.s, row.a)) - y;
                err * err / n
            })
            .sum()
    }

    /// One reparameterized gradient step on the actor; returns the loss
    /// `mean(lambda_a log pi(a|s) - min q(s, a))`.
    pub fn actor_update(&mut self, states: &[&[f64]], rng: &mut ChaCha8Rng) -> Result<f64> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("actor batch is empty".into()));
        }
        let noises: Vec<Vec<f64>> = states
            .iter()
            .map(|_| (0..self.action_dim).map(|_| standard_normal(rng)).collect())
            .collect();
        let (loss, grads) = self.actor_grads_given_noise(&self.actor, states, &noises);
        self.opt_actor.step(&mut self.actor, &grads);
        Ok(loss)
    }

    /// Actor loss under fixed reparameterization noise (pure in the actor
    /// parameters; the finite-difference audit probes this).
    pub fn actor_loss_given_noise(&self, actor: &Mlp, states: &[&[f64]], noises: &[Vec<f64>]) -> f64 {
        let n = states.len() as f64;
        let mut loss = 0.0;
        for (s, xi) in states.iter().zip(noises) {
            let out = actor.forward(s);
            let mut log_prob = 0.0;
            let mut action = Vec::with_capacity(self.action_dim);
            for d in 0..self.action_dim {
                let ls = out[self.action_dim + d].clamp(LOG_STD_MIN, LOG_STD_MAX);
                let pre = out[d] + ls.exp() * xi[d];
                action.push(pre.tanh());
                log_prob += gaussian_tanh_log_density(ls, xi[d], pre);
            }
            let input = concat_sa(s, &action);
            let q_min = self.q1.forward_scalar(&input).min(self.q2.forward_scalar(&input));
            loss += (self.cfg.lambda_a * log_prob - q_min) / n;
        }
        loss
    }

    /// Hand gradient of [`Self::actor_loss_given_noise`] in the actor
    /// parameters.
    pub fn actor_grads_given_noise(
        &self,
        actor: &Mlp,
        states: &[&[f64]],
        noises: &[Vec<f64>],
    ) -> (f64, MlpGrads) {
        let n = states.len() as f64;
        let mut grads = MlpGrads::zeros_like(actor);
        let mut loss = 0.0;
        for (s, xi) in states.iter().zip(noises) {
            let trace = actor.forward_trace(s);
            let out = trace.output().to_vec();
            let mut log_prob = 0.0;
            let mut action = Vec::with_capacity(self.action_dim);
            let mut pre_all = Vec::with_capacity(self.action_dim);
            let mut std_all = Vec::with_capacity(self.action_dim);
            for d in 0..self.action_dim {
                let ls = out[self.action_dim + d].clamp(LOG_STD_MIN, LOG_STD_MAX);
                let std = ls.exp();
                let pre = out[d] + std * xi[d];
                pre_all.push(pre);
                std_all.push(std);
                action.push(pre.tanh());
                log_prob += gaussian_tanh_log_density(ls, xi[d], pre);
            }
            let input = concat_sa(s, &action);
            let t1 = self.q1.forward_trace(&input);
            let t2 = self.q2.forward_trace(&input);
            let (v1, v2) = (t1.output()[0], t2.output()[0]);
            let q_min = v1.min(v2);
            loss += (self.cfg.lambda_a * log_prob - q_min) / n;
            // dQ/d(action) through whichever critic attains the minimum.
            let q_in_grad = if v1 <= v2 {
                self.q1.input_grad(&t1, &[1.0])
            } else {
                self.q2.input_grad(&t2, &[1.0])
            };
            let q_a_grad = &q_in_grad[self.state_dim..];
            let mut out_grad = vec![0.0; 2 * self.action_dim];
            for d in 0..self.action_dim {
                let th = pre_all[d].tanh();
                // d loss_i / d pre_d, combining the squash-corrected entropy
                // term with the critic pullback through a_d = tanh(pre_d).
                let g_pre = self.cfg.lambda_a * 2.0 * th - q_a_grad[d] * (1.0 - th * th);
                out_grad[d] = g_pre / n;
                let raw = out[self.action_dim + d];
                if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                    out_grad[self.action_dim + d] =
                        (-self.cfg.lambda_a + g_pre * std_all[d] * xi[d]) / n;
                }
            }
            actor.backward(&trace, &out_grad, &mut grads);
        }
        (loss, grads)
    }

    /// Polyak update `target <- tau * online + (1 - tau) * target`.
    pub fn target_soft_update(&mut self) {
        self.q1_target.soft_update_from(&self.q1, self.cfg.tau);
        self.q2_target.soft_update_from(&self.q2, self.cfg.tau);
    }
}

/// Log-density of a tanh-squashed Gaussian sample, parameterized by the
/// clamped log-std, the driving noise, and the pre-squash value:
/// `log N(xi) - log_std - log(1 - tanh^2(pre))`, the last term in the
/// numerically stable form `2 (ln 2 - pre - softplus(-2 pre))`.
pub fn gaussian_tanh_log_density(log_std: f64, xi: f64, pre: f64) -> f64 {
    let base = -HALF_LN_2PI - 0.5 * xi * xi - log_std;
    base + 2.0 * (pre + softplus(-2.0 * pre) - std::f64::consts::LN_2)
}

fn concat_sa(s: &[f64], a: &[f64]) -> Vec<f64> {
    let mut input = Vec::with_capacity(s.len() + a.len());
    input.extend_from_slice(s);
    input.extend_from_slice(a);
    input
}
