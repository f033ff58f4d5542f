//! Exploration by running away from the past.
//!
//! An agent is rewarded for visiting states its own history makes unlikely:
//! each epoch it estimates how far the fresh state distribution sits from a
//! slowly-mixing buffer of past states (by density ratio or by transport
//! distance), turns that estimate into an intrinsic reward, and trains a
//! soft actor-critic against it. Repeating the loop provably increases the
//! entropy of the discounted state history.
//!
//! The crate bundles the full laboratory: point-maze and tabular
//! environments, the two learned reward models, a from-scratch actor-critic,
//! the epoch trainer, and — under [`oracle`] and [`audits`] — exact
//! brute-force counterparts for every quantity the learned parts estimate.

pub mod audits;
pub mod buffers;
pub mod config;
pub mod env;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod oracle;
pub mod reward;
pub mod rng;
pub mod sac;
pub mod trainer;

pub use audits::{run_all, run_audit, AuditOutcome, AUDIT_NAMES};
pub use buffers::{PastBuffer, PresentBuffer};
pub use config::{RampConfig, Variant};
pub use env::{ActionVec, Environment, Maze, MazeSpec, StateVec, TabularEnv, TabularMdp, Transition};
pub use error::{Error, Result};
pub use metrics::CoverageGrid;
pub use nn::Mlp;
pub use oracle::Dist;
pub use reward::{KlReward, RewardModel, WReward};
pub use sac::{SacAgent, SacConfig};
pub use trainer::{EpochLog, Trainer};
