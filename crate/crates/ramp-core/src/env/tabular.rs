//! Finite MDPs with exact occupancy computation.
//!
//! These environments exist to let the exact oracles cross-check the
//! learned components on problems where every expectation can be computed
//! in closed form.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ActionVec, Environment, StateVec};
use crate::error::{Error, Result};
use crate::oracle::Dist;
use crate::rng::sample_categorical;

/// Tabular MDP with transition kernel `p[s][a][s']`, initial distribution
/// `delta0`, and a fixed episode horizon.
#[derive(Clone, Debug)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    p: Vec<f64>,
    delta0: Vec<f64>,
    horizon: usize,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        p: Vec<f64>,
        delta0: Vec<f64>,
        horizon: usize,
    ) -> Result<TabularMdp> {
        if n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(Error::InvalidArgument(
                "n_states, n_actions and horizon must be positive".into(),
            ));
        }
        if p.len() != n_states * n_actions * n_states {
            return Err(Error::InvalidArgument(format!(
                "kernel has {} entries, expected {}",
                p.len(),
                n_states * n_actions * n_states
            )));
        }
        if delta0.len() != n_states {
            return Err(Error::InvalidArgument("delta0 length mismatch".into()));
        }
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = &p[(s * n_actions + a) * n_states..][..n_states];
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "kernel row (s={s}, a={a}) is not a distribution (sum {sum})"
                    )));
                }
            }
        }
        let d0sum: f64 = delta0.iter().sum();
        if delta0.iter().any(|&x| x < 0.0) || (d0sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("delta0 is not a distribution".into()));
        }
        Ok(TabularMdp {
            n_states,
            n_actions,
            p,
            delta0,
            horizon,
        })
    }

    /// Random MDP with strictly positive kernel rows, convenient for
    /// brute-force audits where every policy's occupancy has full support.
    pub fn random_full_support<R: Rng>(
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        rng: &mut R,
    ) -> TabularMdp {
        let mut p = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            let mut row: Vec<f64> = (0..n_states).map(|_| 0.05 + rng.gen::<f64>()).collect();
            let sum: f64 = row.iter().sum();
            for x in &mut row {
                *x /= sum;
            }
            p.extend(row);
        }
        let mut delta0 = vec![0.0; n_states];
        delta0[0] = 1.0;
        TabularMdp::new(n_states, n_actions, p, delta0, horizon).unwrap()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn delta0(&self) -> &[f64] {
        &self.delta0
    }

    pub fn prob(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.p[(s * self.n_actions + a) * self.n_states + s_next]
    }

    fn kernel_row(&self, s: usize, a: usize) -> &[f64] {
        &self.p[(s * self.n_actions + a) * self.n_states..][..self.n_states]
    }

    pub fn uniform_policy(&self) -> Vec<Vec<f64>> {
        vec![vec![1.0 / self.n_actions as f64; self.n_actions]; self.n_states]
    }

    /// State-to-state transition matrix under `policy`, row-major.
    pub fn policy_kernel(&self, policy: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_policy(policy)?;
        let n = self.n_states;
        let mut m = vec![0.0; n * n];
        for s in 0..n {
            for (a, &pa) in policy[s].iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for s2 in 0..n {
                    m[s * n + s2] += pa * self.prob(s, a, s2);
                }
            }
        }
        Ok(m)
    }

    fn check_policy(&self, policy: &[Vec<f64>]) -> Result<()> {
        if policy.len() != self.n_states {
            return Err(Error::InvalidArgument(format!(
                "policy has {} rows, expected {}",
                policy.len(),
                self.n_states
            )));
        }
        for (s, row) in policy.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != self.n_actions || row.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-9
            {
                return Err(Error::InvalidArgument(format!(
                    "policy row {s} is not a distribution over {} actions",
                    self.n_actions
                )));
            }
        }
        Ok(())
    }
}

/// Exact state occupancy of `policy`: the average over `t = 1..=T` of the
/// state distribution after `t` transitions from `delta0`, computed by
/// propagating the distribution through the policy-averaged kernel.
pub fn exact_occupancy(mdp: &TabularMdp, policy: &[Vec<f64>]) -> Result<Dist> {
    let n = mdp.n_states;
    let m = mdp.policy_kernel(policy)?;
    let mut d = mdp.delta0.clone();
    let mut acc = vec![0.0; n];
    for _ in 0..mdp.horizon {
        let mut next = vec![0.0; n];
        for s in 0..n {
            if d[s] == 0.0 {
                continue;
            }
            for s2 in 0..n {
                next[s2] += d[s] * m[s * n + s2];
            }
        }
        d = next;
        for s in 0..n {
            acc[s] += d[s];
        }
    }
    let t = mdp.horizon as f64;
    for x in &mut acc {
        *x /= t;
    }
    Dist::new(acc)
}

/// Adapter exposing a [`TabularMdp`] through the [`Environment`] trait with
/// state and action indices embedded as scalar coordinates.
#[derive(Clone, Debug)]
pub struct TabularEnv {
    mdp: TabularMdp,
}

impl TabularEnv {
    pub fn new(mdp: TabularMdp) -> TabularEnv {
        TabularEnv { mdp }
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    fn state_index(s: &StateVec) -> usize {
        s.0[0].round() as usize
    }
}

impl Environment for TabularEnv {
    fn state_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.mdp.horizon
    }

    fn reset(&self, rng: &mut ChaCha8Rng) -> StateVec {
        StateVec(vec![sample_categorical(rng, &self.mdp.delta0) as f64])
    }

    fn step(&self, s: &StateVec, a: &ActionVec, rng: &mut ChaCha8Rng) -> (StateVec, f64) {
        let si = Self::state_index(s);
        let ai = a.0[0].round() as usize;
        let row = self.mdp.kernel_row(si, ai);
        let s2 = sample_categorical(rng, row);
        (StateVec(vec![s2 as f64]), 0.0)
    }

    fn random_action(&self, rng: &mut ChaCha8Rng) -> ActionVec {
        ActionVec(vec![rng.gen_range(0..self.mdp.n_actions) as f64])
    }
}
