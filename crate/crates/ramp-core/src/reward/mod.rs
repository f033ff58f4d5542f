//! Intrinsic reward models.
//!
//! Both models score a state by how novel it is relative to the discounted
//! pool of past experience: [`KlReward`] trains a contrastive classifier
//! whose logit estimates the log density ratio between fresh and mixed
//! occupancies, [`WReward`] trains a potential for the dual form of the
//! Wasserstein-1 distance under temporal distance. States are compared at
//! transition landing points, matching the occupancy convention used by the
//! buffers.

mod kl;
mod wasserstein;

pub use kl::KlReward;
pub use wasserstein::WReward;

use rand_chacha::ChaCha8Rng;

use crate::buffers::{PastBuffer, PresentBuffer};
use crate::error::Result;
use crate::nn::Mlp;

/// Per-epoch reward-training summary for the run logs.
#[derive(Clone, Copy, Debug)]
pub struct RewardTrainStats {
    /// Mean reported loss across the epoch's gradient rounds.
    pub mean_loss: f64,
    /// Lagrange multiplier after training; zero for models without one.
    pub lambda: f64,
}

/// Common surface the trainer needs from either reward model.
pub trait RewardModel {
    /// Unprocessed network output `f(s)`.
    fn raw_value(&self, s: &[f64]) -> f64;

    /// Shaped intrinsic reward (clamped logit for the ratio model, raw
    /// potential for the Wasserstein model).
    fn reward(&self, s: &[f64]) -> f64;

    /// One epoch of reward training against the current buffers.
    fn train_epoch(
        &mut self,
        d_rho: &PresentBuffer,
        d_mu: &PastBuffer,
        rng: &mut ChaCha8Rng,
    ) -> Result<RewardTrainStats>;

    /// Backing network, for checkpointing.
    fn network(&self) -> &Mlp;

    /// Current constraint multiplier (zero when the model has none).
    fn lambda(&self) -> f64 {
        0.0
    }
}
