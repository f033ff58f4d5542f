//! Contrastive density-ratio reward.
//!
//! A scalar-output network is trained to separate fresh states (label 1,
//! drawn from the present buffer) from mixture states (label 0, drawn from
//! `beta * present + (1 - beta) * past`). At the balanced-batch optimum the
//! logit equals `log(rho(s) / (beta * rho(s) + (1 - beta) * mu(s)))`, whose
//! analytic maximum is `log(1/beta)`; the served reward clamps to that bound.

use rand_chacha::ChaCha8Rng;

use crate::buffers::{sample_negative, PastBuffer, PresentBuffer};
use crate::error::{Error, Result};
use crate::nn::{sigmoid, softplus, Activation, Adam, Mlp, MlpGrads};
use crate::reward::{RewardModel, RewardTrainStats};

#[derive(Clone, Debug)]
pub struct KlReward {
    net: Mlp,
    opt: Adam,
    beta: f64,
    clamp_low: f64,
    clamp_high: f64,
    batch_size: usize,
    steps_per_epoch: usize,
}

impl KlReward {
    /// `clamp_low` defaults to the negated analytic bound; `clamp_high` is
    /// always `log(1/beta)`.
    pub fn new(
        state_dim: usize,
        hidden: &[usize],
        lr: f64,
        batch_size: usize,
        steps_per_epoch: usize,
        beta: f64,
        clamp_low: Option<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<KlReward> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidArgument(format!("beta={beta} outside (0, 1)")));
        }
        if batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        let clamp_high = (1.0 / beta).ln();
        let clamp_low = clamp_low.unwrap_or(-clamp_high);
        if !clamp_low.is_finite() || clamp_low > clamp_high {
            return Err(Error::InvalidArgument(format!(
                "clamp_low={clamp_low} must be finite and at most {clamp_high}"
            )));
        }
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let net = Mlp::new(&sizes, Activation::Relu, rng);
        let opt = Adam::new(&net, lr);
        Ok(KlReward {
            net,
            opt,
            beta,
            clamp_low,
            clamp_high,
            batch_size,
            steps_per_epoch,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn clamp_bounds(&self) -> (f64, f64) {
        (self.clamp_low, self.clamp_high)
    }

    /// Copy of the model with a replacement network of identical shape;
    /// lets finite-difference probes evaluate the loss at perturbed
    /// parameters.
    pub fn with_network(&self, net: Mlp) -> KlReward {
        let mut m = self.clone();
        m.net = net;
        m
    }

    /// Unclamped classifier logit.
    pub fn logit(&self, s: &[f64]) -> f64 {
        self.net.forward_scalar(s)
    }

    /// Balanced logistic loss: `mean softplus(-f(pos)) + mean softplus(f(neg))`.
    /// The zero network scores `2 ln 2`.
    pub fn kl_loss(&self, pos: &[&[f64]], neg: &[&[f64]]) -> Result<f64> {
        Self::check_batches(pos, neg)?;
        let n = pos.len() as f64;
        let mut loss = 0.0;
        for s in pos {
            loss += softplus(-self.net.forward_scalar(s)) / n;
        }
        for s in neg {
            loss += softplus(self.net.forward_scalar(s)) / n;
        }
        Ok(loss)
    }

    /// Loss together with its exact parameter gradient.
    pub fn kl_loss_grads(&self, pos: &[&[f64]], neg: &[&[f64]]) -> Result<(f64, MlpGrads)> {
        Self::check_batches(pos, neg)?;
        let n = pos.len() as f64;
        let mut grads = MlpGrads::zeros_like(&self.net);
        let mut loss = 0.0;
        for s in pos {
            let trace = self.net.forward_trace(s);
            let f = trace.output()[0];
            loss += softplus(-f) / n;
            // d softplus(-f)/df = sigmoid(f) - 1
            self.net.backward(&trace, &[(sigmoid(f) - 1.0) / n], &mut grads);
        }
        for s in neg {
            let trace = self.net.forward_trace(s);
            let f = trace.output()[0];
            loss += softplus(f) / n;
            self.net.backward(&trace, &[sigmoid(f) / n], &mut grads);
        }
        Ok((loss, grads))
    }

    fn check_batches(pos: &[&[f64]], neg: &[&[f64]]) -> Result<()> {
        if pos.is_empty() || pos.len() != neg.len() {
            return Err(Error::InvalidArgument(format!(
                "contrastive batches must be non-empty and balanced, got {} vs {}",
                pos.len(),
                neg.len()
            )));
        }
        Ok(())
    }
}

impl RewardModel for KlReward {
    fn raw_value(&self, s: &[f64]) -> f64 {
        self.logit(s)
    }

    fn reward(&self, s: &[f64]) -> f64 {
        self.logit(s).clamp(self.clamp_low, self.clamp_high)
    }

    fn train_epoch(
        &mut self,
        d_rho: &PresentBuffer,
        d_mu: &PastBuffer,
        rng: &mut ChaCha8Rng,
    ) -> Result<RewardTrainStats> {
        let mut total = 0.0;
        for _ in 0..self.steps_per_epoch {
            let mut pos: Vec<&[f64]> = Vec::with_capacity(self.batch_size);
            let mut neg: Vec<&[f64]> = Vec::with_capacity(self.batch_size);
            for _ in 0..self.batch_size {
                pos.push(d_rho.sample(rng)?.s_next.as_slice());
                neg.push(sample_negative(d_rho, d_mu, self.beta, rng)?.s_next.as_slice());
            }
            let (loss, grads) = self.kl_loss_grads(&pos, &neg)?;
            self.opt.step(&mut self.net, &grads);
            total += loss;
        }
        Ok(RewardTrainStats {
            mean_loss: if self.steps_per_epoch == 0 { 0.0 } else { total / self.steps_per_epoch as f64 },
            lambda: 0.0,
        })
    }

    fn network(&self) -> &Mlp {
        &self.net
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionVec, StateVec, Transition};
    use crate::nn::{finite_difference_grads, max_rel_error};
    use crate::rng;

    fn zeroed(model: &mut KlReward) {
        for k in 0..model.net.param_count() {
            model.net.set_param(k, 0.0);
        }
    }

    fn model(beta: f64, seed: u64) -> KlReward {
        let mut r = rng::seeded(seed);
        KlReward::new(1, &[16, 16], 3e-4, 32, 50, beta, None, &mut r).unwrap()
    }

    fn point_transition(x: f64) -> Transition {
        Transition {
            s: StateVec(vec![x]),
            a: ActionVec(vec![0.0]),
            s_next: StateVec(vec![x]),
            r_ext: 0.0,
            done: false,
        }
    }

    #[test]
    fn test_zero_net_loss_is_two_log_two() {
        let mut m = model(0.1, 0);
        zeroed(&mut m);
        let a: Vec<f64> = vec![0.3];
        let b: Vec<f64> = vec![-2.0];
        let loss = m.kl_loss(&[&a, &b], &[&b, &a]).unwrap();
        assert!((loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn test_unbalanced_batches_rejected() {
        let m = model(0.1, 1);
        let a: Vec<f64> = vec![0.0];
        assert!(m.kl_loss(&[&a], &[]).is_err());
        assert!(m.kl_loss(&[&a, &a], &[&a]).is_err());
        assert!(m.kl_loss_grads(&[], &[]).is_err());
    }

    #[test]
    fn test_gradient_matches_finite_differences() {
        let mut r = rng::seeded(7);
        let m = KlReward::new(2, &[8, 8], 1e-3, 8, 1, 0.05, None, &mut r).unwrap();
        let pos_data: Vec<Vec<f64>> = (0..6).map(|i| vec![0.1 * i as f64, -0.2 * i as f64]).collect();
        let neg_data: Vec<Vec<f64>> = (0..6).map(|i| vec![-0.3 * i as f64, 0.15 * i as f64]).collect();
        let pos: Vec<&[f64]> = pos_data.iter().map(|v| v.as_slice()).collect();
        let neg: Vec<&[f64]> = neg_data.iter().map(|v| v.as_slice()).collect();
        let (_, analytic) = m.kl_loss_grads(&pos, &neg).unwrap();
        let numeric = finite_difference_grads(
            &m.net,
            |p| {
                let probe = KlReward { net: p.clone(), ..m.clone() };
                probe.kl_loss(&pos, &neg).unwrap()
            },
            1e-6,
        );
        assert!(max_rel_error(&analytic, &numeric) < 1e-5);
    }

    #[test]
    fn test_reward_clamps_to_analytic_bound() {
        let mut m = model(0.007, 3);
        zeroed(&mut m);
        // Output bias is the last canonical parameter.
        let last = m.net.param_count() - 1;
        m.net.set_param(last, 10.0);
        let s = [0.5];
        assert_eq!(m.raw_value(&s), 10.0);
        assert!((m.reward(&s) - (1.0 / 0.007f64).ln()).abs() < 1e-12);
        m.net.set_param(last, -99.0);
        assert!((m.reward(&s) + (1.0 / 0.007f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn test_zero_steps_leaves_params_unchanged() {
        let mut r = rng::seeded(4);
        let mut m = KlReward::new(1, &[8], 1e-3, 4, 0, 0.1, None, &mut r).unwrap();
        let before = m.net.params_flat();
        let mut rho = PresentBuffer::new(1);
        rho.push_episode(vec![point_transition(1.0); 8]).unwrap();
        let mu = PastBuffer::from_transitions(vec![point_transition(-1.0); 8], 0.1).unwrap();
        let stats = m.train_epoch(&rho, &mu, &mut r).unwrap();
        assert_eq!(stats.mean_loss, 0.0);
        assert_eq!(m.net.params_flat(), before);
    }

    #[test]
    fn test_loss_descends_on_separable_data() {
        // Fresh states at +1, mixture states at -1: mean loss after ten steps
        // drops below the starting loss for every seed.
        let mut improved = 0;
        for seed in 0..20 {
            let mut r = rng::seeded(100 + seed);
            let mut m = KlReward::new(1, &[16], 1e-2, 16, 1, 0.1, None, &mut r).unwrap();
            let mut rho = PresentBuffer::new(1);
            rho.push_episode(vec![point_transition(1.0); 64]).unwrap();
            let mu = PastBuffer::from_transitions(vec![point_transition(-1.0); 64], 1e-9).unwrap();
            let first = m.train_epoch(&rho, &mu, &mut r).unwrap().mean_loss;
            let mut last = first;
            for _ in 0..9 {
                last = m.train_epoch(&rho, &mu, &mut r).unwrap().mean_loss;
            }
            if last < first {
                improved += 1;
            }
        }
        assert!(improved >= 19, "descent failed on {} of 20 seeds", 20 - improved);
    }

    #[test]
    fn test_swapping_batches_flips_logit_sign() {
        let train = |swap: bool, seed: u64| -> f64 {
            let mut r = rng::seeded(seed);
            let mut m = KlReward::new(1, &[16], 1e-2, 32, 1, 1e-6, None, &mut r).unwrap();
            let hi = vec![point_transition(1.0); 64];
            let lo = vec![point_transition(-1.0); 64];
            let mut rho = PresentBuffer::new(1);
            rho.push_episode(if swap { lo.clone() } else { hi.clone() }).unwrap();
            let mu = PastBuffer::from_transitions(if swap { hi } else { lo }, 1e-6).unwrap();
            for _ in 0..40 {
                m.train_epoch(&rho, &mu, &mut r).unwrap();
            }
            m.logit(&[1.0])
        };
        let direct = train(false, 11);
        let swapped = train(true, 11);
        assert!(direct > 0.5, "logit at fresh point {direct}");
        assert!(swapped < -0.5, "swapped logit {swapped}");
    }

    #[test]
    fn test_rejects_bad_hyperparameters() {
        let mut r = rng::seeded(0);
        assert!(KlReward::new(1, &[4], 1e-3, 8, 1, 0.0, None, &mut r).is_err());
        assert!(KlReward::new(1, &[4], 1e-3, 8, 1, 1.0, None, &mut r).is_err());
        assert!(KlReward::new(1, &[4], 1e-3, 0, 1, 0.5, None, &mut r).is_err());
        assert!(KlReward::new(1, &[4], 1e-3, 8, 1, 0.5, Some(f64::NEG_INFINITY), &mut r).is_err());
        assert!(KlReward::new(1, &[4], 1e-3, 8, 1, 0.5, Some(5.0), &mut r).is_err());
    }
}
