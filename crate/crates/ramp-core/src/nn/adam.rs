//! Adam optimizer with bias-corrected first and second moments.

use super::{Mlp, MlpGrads};

#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: MlpGrads,
    v: MlpGrads,
}

impl Adam {
    /// Optimizer shaped for `p` with default moment decays
    /// `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
    pub fn new(p: &Mlp, lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: MlpGrads::zeros_like(p),
            v: MlpGrads::zeros_like(p),
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Adam {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update:
    /// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`,
    /// `p <- p - lr * mhat / (sqrt(vhat) + eps)` with bias-corrected moments.
    pub fn step(&mut self, p: &mut Mlp, g: &MlpGrads) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for l in 0..g.w.len() {
            Self::step_slice(
                &mut p.weights[l],
                &mut self.m.w[l],
                &mut self.v.w[l],
                &g.w[l],
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                c1,
                c2,
            );
            Self::step_slice(
                &mut p.biases[l],
                &mut self.m.b[l],
                &mut self.v.b[l],
                &g.b[l],
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                c1,
                c2,
            );
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step_slice(
        p: &mut [f64],
        m: &mut [f64],
        v: &mut [f64],
        g: &[f64],
        lr: f64,
        b1: f64,
        b2: f64,
        eps: f64,
        c1: f64,
        c2: f64,
    ) {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            p[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::rng;

    #[test]
    fn test_first_step_closed_form() {
        // With g = 1 everywhere the bias corrections cancel exactly and the
        // first step moves every parameter by -lr / (1 + eps).
        let mut r = rng::seeded(0);
        let mut p = Mlp::new(&[2, 3, 1], Activation::Relu, &mut r);
        let before: Vec<f64> = (0..p.param_count()).map(|k| p.param(k)).collect();
        let mut g = MlpGrads::zeros_like(&p);
        for layer in g.w.iter_mut().chain(g.b.iter_mut()) {
            for x in layer {
                *x = 1.0;
            }
        }
        let mut opt = Adam::new(&p, 0.1);
        opt.step(&mut p, &g);
        let expect = 0.1 / (1.0 + 1e-8);
        for k in 0..p.param_count() {
            assert!(
                (before[k] - p.param(k) - expect).abs() < 1e-15,
                "param {k} moved by {}",
                before[k] - p.param(k)
            );
        }
        assert_eq!(opt.steps_taken(), 1);
    }

    #[test]
    fn test_descends_quadratic() {
        // Minimize (w - 3)^2 over a single 1x1 linear layer evaluated at x=1
        // with zero bias gradient; Adam should converge near w = 3.
        let mut r = rng::seeded(9);
        let mut p = Mlp::new(&[1, 1], Activation::Relu, &mut r);
        let mut opt = Adam::new(&p, 0.05);
        for _ in 0..2000 {
            let y = p.forward(&[1.0])[0];
            let mut g = MlpGrads::zeros_like(&p);
            let trace = p.forward_trace(&[1.0]);
            p.backward(&trace, &[2.0 * (y - 3.0)], &mut g);
            opt.step(&mut p, &g);
        }
        let y = p.forward(&[1.0])[0];
        assert!((y - 3.0).abs() < 1e-3, "converged to {y}");
    }
}
