//! Wasserstein-1 dual-potential reward.
//!
//! The network plays the Kantorovich potential in
//! `W1(rho, beta * rho + (1 - beta) * mu) = sup_f E_rho[f] - E_mix[f]`
//! with `f` 1-Lipschitz under temporal distance: consecutive states of a
//! transition are one step apart, so the constraint is enforced on sampled
//! transition pairs `(s, s')` through a hinge penalty with relaxation
//! margin `eps_relax` and an adaptive multiplier `lambda`.
//!
//! The reported scalar follows the dual-descent convention
//! `w_loss = -(E+ - E-) - lambda * mean(max(|f(s) - f(s')| - 1, -eps))`;
//! the parameter step instead descends the penalized objective (same first
//! two terms, penalty added, not subtracted), and `lambda` ascends the mean
//! violation, projected onto the nonnegative half-line.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::buffers::{sample_negative, PastBuffer, PresentBuffer};
use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, Mlp, MlpGrads};
use crate::reward::{RewardModel, RewardTrainStats};

/// One Lipschitz constraint site: the two states of a sampled transition.
pub type StatePair<'a> = (&'a [f64], &'a [f64]);

#[derive(Clone, Debug)]
pub struct WReward {
    net: Mlp,
    opt: Adam,
    lambda: f64,
    eps_relax: f64,
    lr_lambda: f64,
    beta: f64,
    batch_size: usize,
    steps_per_epoch: usize,
}

impl WReward {
    pub fn new(
        state_dim: usize,
        hidden: &[usize],
        lr: f64,
        batch_size: usize,
        steps_per_epoch: usize,
        beta: f64,
        eps_relax: f64,
        lr_lambda: f64,
        lambda_init: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<WReward> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidArgument(format!("beta={beta} outside (0, 1)")));
        }
        if eps_relax <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "eps_relax={eps_relax} must be positive"
            )));
        }
        if lambda_init < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lambda_init={lambda_init} must be nonnegative"
            )));
        }
        if batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let net = Mlp::new(&sizes, Activation::Relu, rng);
        let opt = Adam::new(&net, lr);
        Ok(WReward {
            net,
            opt,
            lambda: lambda_init,
            eps_relax,
            lr_lambda,
            beta,
            batch_size,
            steps_per_epoch,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eps_relax(&self) -> f64 {
        self.eps_relax
    }

    /// Copy of the model with a replacement network of identical shape;
    /// lets finite-difference probes evaluate the loss at perturbed
    /// parameters.
    pub fn with_network(&self, net: Mlp) -> WReward {
        let mut m = self.clone();
        m.net = net;
        m
    }

    /// Empirical dual objective `mean f(pos) - mean f(neg)`.
    pub fn dual_value(&self, pos: &[&[f64]], neg: &[&[f64]]) -> f64 {
        let p: f64 = pos.iter().map(|s| self.net.forward_scalar(s)).sum::<f64>() / pos.len() as f64;
        let n: f64 = neg.iter().map(|s| self.net.forward_scalar(s)).sum::<f64>() / neg.len() as f64;
        p - n
    }

    /// Mean hinge `max(|f(s) - f(s')| - 1, -eps_relax)` over constraint pairs.
    pub fn penalty_mean(&self, pairs: &[StatePair<'_>]) -> f64 {
        pairs
            .iter()
            .map(|(s, s2)| {
                let d = (self.net.forward_scalar(s) - self.net.forward_scalar(s2)).abs();
                (d - 1.0).max(-self.eps_relax)
            })
            .sum::<f64>()
            / pairs.len() as f64
    }

    /// Reported dual-descent loss; a constant network scores
    /// `lambda * eps_relax`.
    pub fn w_loss(&self, pos: &[&[f64]], neg: &[&[f64]], pairs: &[StatePair<'_>]) -> Result<f64> {
        Self::check_batches(pos, neg, pairs)?;
        Ok(-self.dual_value(pos, neg) - self.lambda * self.penalty_mean(pairs))
    }

    /// Reported loss together with its exact parameter gradient (hinge
    /// subgradient: active branch when the violation strictly exceeds the
    /// slack, zero otherwise).
    pub fn w_loss_grads(
        &self,
        pos: &[&[f64]],
        neg: &[&[f64]],
        pairs: &[StatePair<'_>],
    ) -> Result<(f64, MlpGrads)> {
        self.objective_grads(pos, neg, pairs, -1.0)
    }

    /// Ascends `lambda` along the mean violation and projects to `>= 0`.
    pub fn lambda_update(&mut self, pairs: &[StatePair<'_>]) -> Result<()> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("constraint batch is empty".into()));
        }
        self.lambda = (self.lambda + self.lr_lambda * self.penalty_mean(pairs)).max(0.0);
        Ok(())
    }

    fn check_batches(pos: &[&[f64]], neg: &[&[f64]], pairs: &[StatePair<'_>]) -> Result<()> {
        if pos.is_empty() || neg.is_empty() || pairs.is_empty() {
            return Err(Error::InvalidArgument("dual batches must be non-empty".into()));
        }
        Ok(())
    }

    /// Shared gradient core: `penalty_sign = -1` reproduces the reported
    /// loss, `+1` the objective the parameters actually descend.
    fn objective_grads(
        &self,
        pos: &[&[f64]],
        neg: &[&[f64]],
        pairs: &[StatePair<'_>],
        penalty_sign: f64,
    ) -> Result<(f64, MlpGrads)> {
        Self::check_batches(pos, neg, pairs)?;
        let mut grads = MlpGrads::zeros_like(&self.net);
        let mut value = 0.0;
        let np = pos.len() as f64;
        for s in pos {
            let trace = self.net.forward_trace(s);
            value -= trace.output()[0] / np;
            self.net.backward(&trace, &[-1.0 / np], &mut grads);
        }
        let nn = neg.len() as f64;
        for s in neg {
            let trace = self.net.forward_trace(s);
            value += trace.output()[0] / nn;
            self.net.backward(&trace, &[1.0 / nn], &mut grads);
        }
        let nc = pairs.len() as f64;
        for (s, s2) in pairs {
            let ta = self.net.forward_trace(s);
            let tb = self.net.forward_trace(s2);
            let diff = ta.output()[0] - tb.output()[0];
            let hinge = (diff.abs() - 1.0).max(-self.eps_relax);
            value += penalty_sign * self.lambda * hinge / nc;
            if diff.abs() - 1.0 > -self.eps_relax {
                let g = penalty_sign * self.lambda * diff.signum() / nc;
                self.net.backward(&ta, &[g], &mut grads);
                self.net.backward(&tb, &[-g], &mut grads);
            }
        }
        Ok((value, grads))
    }

    /// Constraint pairs drawn evenly from the two buffers, uniform within
    /// each: both occupancy supports stay constrained regardless of buffer
    /// size imbalance.
    fn sample_pairs<'a>(
        d_rho: &'a PresentBuffer,
        d_mu: &'a PastBuffer,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<StatePair<'a>>> {
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let t = if rng.gen_bool(0.5) { d_rho.sample(rng)? } else { d_mu.sample(rng)? };
            pairs.push((t.s.as_slice(), t.s_next.as_slice()));
        }
        Ok(pairs)
    }
}

impl RewardModel for WReward {
    fn raw_value(&self, s: &[f64]) -> f64 {
        self.net.forward_scalar(s)
    }

    /// Dual potentials are translation-free and unclamped.
    fn reward(&self, s: &[f64]) -> f64 {
        self.net.forward_scalar(s)
    }

    /// Refits the potential from scratch against the current buffers. A
    /// warm-started dual accumulates an unbounded additive offset epoch over
    /// epoch (only differences of `f` are constrained), and the growing
    /// weight scale eventually freezes the shape under Adam; a fresh network
    /// each call keeps the output near zero and the fit plastic. The
    /// multiplier `lambda` is the dual variable of the constraint schedule
    /// and survives across calls.
    fn train_epoch(
        &mut self,
        d_rho: &PresentBuffer,
        d_mu: &PastBuffer,
        rng: &mut ChaCha8Rng,
    ) -> Result<RewardTrainStats> {
        if self.steps_per_epoch > 0 {
            self.net = Mlp::new(self.net.sizes(), self.net.activation(), rng);
            self.opt = Adam::new(&self.net, self.opt.lr());
        }
        let mut total = 0.0;
        for _ in 0..self.steps_per_epoch {
            let mut pos: Vec<&[f64]> = Vec::with_capacity(self.batch_size);
            let mut neg: Vec<&[f64]> = Vec::with_capacity(self.batch_size);
            for _ in 0..self.batch_size {
                pos.push(d_rho.sample(rng)?.s_next.as_slice());
                neg.push(sample_negative(d_rho, d_mu, self.beta, rng)?.s_next.as_slice());
            }
            let pairs = Self::sample_pairs(d_rho, d_mu, self.batch_size, rng)?;
            self.lambda_update(&pairs)?;
            let (_, grads) = self.objective_grads(&pos, &neg, &pairs, 1.0)?;
            self.opt.step(&mut self.net, &grads);
            total += self.w_loss(&pos, &neg, &pairs)?;
        }
        Ok(RewardTrainStats {
            mean_loss: if self.steps_per_epoch == 0 { 0.0 } else { total / self.steps_per_epoch as f64 },
            lambda: self.lambda,
        })
    }

    fn network(&self) -> &Mlp {
        &self.net
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionVec, StateVec, Transition};
    use crate::nn::{finite_difference_grads, max_rel_error};
    use crate::rng;

    fn model(seed: u64) -> WReward {
        let mut r = rng::seeded(seed);
        WReward::new(1, &[16], 1e-3, 16, 10, 0.05, 0.05, 0.03, 30.0, &mut r).unwrap()
    }

    /// One-layer scalar net computing `w * x + b`.
    fn affine(w: f64, b: f64) -> Mlp {
        let mut r = rng::seeded(0);
        let mut net = Mlp::new(&[1, 1], Activation::Relu, &mut r);
        net.set_param(0, w);
        net.set_param(1, b);
        net
    }

    fn transition(from: f64, to: f64) -> Transition {
        Transition {
            s: StateVec(vec![from]),
            a: ActionVec(vec![0.0]),
            s_next: StateVec(vec![to]),
            r_ext: 0.0,
            done: false,
        }
    }

    #[test]
    fn test_constant_net_loss_is_lambda_eps() {
        let mut m = model(0);
        m.net = affine(0.0, 3.0);
        let a: Vec<f64> = vec![0.0];
        let b: Vec<f64> = vec![4.0];
        let pairs = vec![(a.as_slice(), b.as_slice())];
        let loss = m.w_loss(&[&a], &[&b], &pairs).unwrap();
        assert!((loss - 30.0 * 0.05).abs() < 1e-12);
    }

    #[test]
    fn test_identity_ramp_on_chain_scores_graph_distance() {
        // Dirac(4) vs Dirac(0) on a five-state chain with f(x) = x: the dual
        // value is the chain distance 4 and adjacent pairs sit exactly on the
        // constraint, so the penalty contributes nothing.
        let mut m = model(1);
        m.net = affine(1.0, 0.0);
        let states: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let pairs: Vec<StatePair> = (0..4)
            .map(|i| (states[i].as_slice(), states[i + 1].as_slice()))
            .collect();
        let pos = [states[4].as_slice()];
        let neg = [states[0].as_slice()];
        assert!((m.dual_value(&pos, &neg) - 4.0).abs() < 1e-12);
        let loss = m.w_loss(&pos, &neg, &pairs).unwrap();
        assert!((loss + 4.0).abs() < 1e-12);
    }

    #[test]
    fn test_lambda_update_cases() {
        let a: Vec<f64> = vec![0.0];
        let b: Vec<f64> = vec![1.0];
        let pairs = vec![(a.as_slice(), b.as_slice())];

        // Satisfied constraint: slack branch, lambda falls by lr * eps.
        let mut m = model(2);
        m.net = affine(0.0, 0.0);
        m.lambda = 1.0;
        m.lr_lambda = 0.1;
        m.lambda_update(&pairs).unwrap();
        assert!((m.lambda - (1.0 - 0.1 * 0.05)).abs() < 1e-12);

        // |df| = 2 on every pair: lambda = 1 + 0.1 * (2 - 1) = 1.1.
        m.net = affine(2.0, 0.0);
        m.lambda = 1.0;
        m.lambda_update(&pairs).unwrap();
        assert!((m.lambda - 1.1).abs() < 1e-12);

        // Projection holds lambda at zero under a satisfied constraint.
        m.net = affine(0.0, 0.0);
        m.lambda = 0.0;
        m.lambda_update(&pairs).unwrap();
        assert_eq!(m.lambda, 0.0);
    }

    #[test]
    fn test_lambda_stays_nonnegative_under_random_updates() {
        let mut r = rng::seeded(5);
        let mut m = model(5);
        m.lambda = 0.02;
        m.lr_lambda = 0.5;
        for i in 0..200 {
            let a = vec![(i % 7) as f64 * 0.1];
            let b = vec![-((i % 5) as f64) * 0.1];
            let pairs = vec![(a.as_slice(), b.as_slice())];
            m.lambda_update(&pairs).unwrap();
            assert!(m.lambda >= 0.0);
            let _ = r.gen::<f64>();
        }
    }

    #[test]
    fn test_gradient_matches_finite_differences_off_kink() {
        let mut r = rng::seeded(6);
        let m = {
            let mut m = model(6);
            m.net = Mlp::new(&[2, 8, 1], Activation::Relu, &mut r);
            m.lambda = 2.5;
            m
        };
        let mk = |r: &mut ChaCha8Rng| -> Vec<f64> { vec![r.gen::<f64>() * 2.0 - 1.0, r.gen::<f64>() * 2.0 - 1.0] };
        let pos_data: Vec<Vec<f64>> = (0..5).map(|_| mk(&mut r)).collect();
        let neg_data: Vec<Vec<f64>> = (0..5).map(|_| mk(&mut r)).collect();
        let pair_data: Vec<(Vec<f64>, Vec<f64>)> = (0..5).map(|_| (mk(&mut r), mk(&mut r))).collect();
        let pos: Vec<&[f64]> = pos_data.iter().map(|v| v.as_slice()).collect();
        let neg: Vec<&[f64]> = neg_data.iter().map(|v| v.as_slice()).collect();
        let pairs: Vec<StatePair> = pair_data.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect();
        // The check is only valid away from the hinge kink.
        for (a, b) in &pairs {
            let d = (m.net.forward_scalar(a) - m.net.forward_scalar(b)).abs();
            assert!((d - 1.0 + m.eps_relax).abs() > 1e-3, "sampled pair sits on the kink");
        }
        let (_, analytic) = m.w_loss_grads(&pos, &neg, &pairs).unwrap();
        let numeric = finite_difference_grads(
            &m.net,
            |p| {
                let probe = WReward { net: p.clone(), ..m.clone() };
                probe.w_loss(&pos, &neg, &pairs).unwrap()
            },
            1e-6,
        );
        assert!(max_rel_error(&analytic, &numeric) < 1e-5);
    }

    #[test]
    fn test_zero_rounds_changes_nothing() {
        let mut r = rng::seeded(7);
        let mut m = WReward::new(1, &[8], 1e-3, 4, 0, 0.05, 0.05, 0.03, 30.0, &mut r).unwrap();
        let before = m.net.params_flat();
        let mut rho = PresentBuffer::new(1);
        rho.push_episode(vec![transition(0.0, 1.0); 8]).unwrap();
        let mu = PastBuffer::from_transitions(vec![transition(1.0, 0.0); 8], 0.05).unwrap();
        let stats = m.train_epoch(&rho, &mu, &mut r).unwrap();
        assert_eq!(m.net.params_flat(), before);
        assert_eq!(stats.lambda, 30.0);
    }

    #[test]
    fn test_output_bias_shift_translates_rewards() {
        let mut m = model(8);
        let s1 = [0.3];
        let s2 = [-0.7];
        let r1 = m.reward(&s1);
        let r2 = m.reward(&s2);
        let last = m.net.param_count() - 1;
        m.net.set_param(last, m.net.param(last) + 5.0);
        assert!((m.reward(&s1) - r1 - 5.0).abs() < 1e-12);
        assert!(((m.reward(&s1) - m.reward(&s2)) - (r1 - r2)).abs() < 1e-12);
    }

    #[test]
    fn test_rejects_bad_hyperparameters() {
        let mut r = rng::seeded(9);
        assert!(WReward::new(1, &[4], 1e-3, 8, 1, 0.5, 0.0, 0.03, 30.0, &mut r).is_err());
        assert!(WReward::new(1, &[4], 1e-3, 8, 1, 0.5, 0.05, 0.03, -1.0, &mut r).is_err());
        assert!(WReward::new(1, &[4], 1e-3, 8, 1, 1.5, 0.05, 0.03, 30.0, &mut r).is_err());
        assert!(WReward::new(1, &[4], 1e-3, 0, 1, 0.5, 0.05, 0.03, 30.0, &mut r).is_err());
    }
}
