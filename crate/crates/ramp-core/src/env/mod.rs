//! Environments: continuous point mazes and small tabular MDPs.

mod maze;
mod tabular;

pub use maze::{Maze, MazeSpec, Wall};
pub use tabular::{exact_occupancy, TabularEnv, TabularMdp};

use rand_chacha::ChaCha8Rng;

/// State as a dense coordinate vector. Mazes use two coordinates in
/// `[-1, 1]^2`; tabular environments embed the state index as a scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec(pub Vec<f64>);

impl StateVec {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateVec {
    fn from(v: Vec<f64>) -> Self {
        StateVec(v)
    }
}

impl From<[f64; 2]> for StateVec {
    fn from(v: [f64; 2]) -> Self {
        StateVec(v.to_vec())
    }
}

/// Action as a dense coordinate vector, one entry per actuated dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionVec(pub Vec<f64>);

impl ActionVec {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ActionVec {
    fn from(v: Vec<f64>) -> Self {
        ActionVec(v)
    }
}

/// One environment step. `done` marks episode truncation at the horizon.
#[derive(Clone, Debug)]
pub struct Transition {
    pub s: StateVec,
    pub a: ActionVec,
    pub s_next: StateVec,
    pub r_ext: f64,
    pub done: bool,
}

/// Common surface over the maze and tabular environments, enough for the
/// buffer machinery and the trainer to roll out episodes.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn horizon(&self) -> usize;
    fn reset(&self, rng: &mut ChaCha8Rng) -> StateVec;
    /// Applies `a` in `s`. Deterministic for mazes; the generator is used by
    /// stochastic tabular dynamics.
    fn step(&self, s: &StateVec, a: &ActionVec, rng: &mut ChaCha8Rng) -> (StateVec, f64);
    /// Uniform draw from the action space, used by untrained-policy rollouts.
    fn random_action(&self, rng: &mut ChaCha8Rng) -> ActionVec;
}

/// Rolls one full episode under `policy`, producing exactly `horizon`
/// transitions with `done` set on the last one.
pub fn rollout_episode<E, P>(env: &E, mut policy: P, rng: &mut ChaCha8Rng) -> Vec<Transition>
where
    E: Environment,
    P: FnMut(&StateVec, &mut ChaCha8Rng) -> ActionVec,
{
    let horizon = env.horizon();
    let mut out = Vec::with_capacity(horizon);
    let mut s = env.reset(rng);
    for t in 1..=horizon {
        let a = policy(&s, rng);
        let (s_next, r_ext) = env.step(&s, &a, rng);
        out.push(Transition {
            s: s.clone(),
            a,
            s_next: s_next.clone(),
            r_ext,
            done: t == horizon,
        });
        s = s_next;
    }
    out
}
