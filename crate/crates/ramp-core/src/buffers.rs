//! Present- and past-experience buffers.
//!
//! `PresentBuffer` holds the episodes collected in the current epoch and is
//! cleared between epochs. `PastBuffer` is a fixed pool of `M` transitions
//! representing the discounted mixture of all earlier epochs: every new
//! transition replaces a uniformly random slot with probability `beta`, so
//! the expected slot composition follows the geometric mixture of epoch
//! occupancies. A transition's state sample is its landing state (the state
//! distribution of a rollout is exactly the distribution of landing states).

use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{ActionVec, Environment, StateVec, Transition};
use crate::error::{Error, Result};

/// Episodes collected under the current policy, bounded by the per-epoch
/// episode budget.
#[derive(Clone, Debug)]
pub struct PresentBuffer {
    episodes: Vec<Vec<Transition>>,
    capacity_episodes: usize,
    transitions: usize,
}

impl PresentBuffer {
    pub fn new(capacity_episodes: usize) -> PresentBuffer {
        PresentBuffer {
            episodes: Vec::with_capacity(capacity_episodes),
            capacity_episodes,
            transitions: 0,
        }
    }

    /// Adds one episode; errors when the epoch budget is already full (the
    /// epoch loop must clear the buffer first).
    pub fn push_episode(&mut self, episode: Vec<Transition>) -> Result<()> {
        if self.episodes.len() == self.capacity_episodes {
            return Err(Error::InvalidArgument(format!(
                "present buffer already holds {} episodes",
                self.capacity_episodes
            )));
        }
        self.transitions += episode.len();
        self.episodes.push(episode);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.episodes.clear();
        self.transitions = 0;
    }

    pub fn n_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Total transitions across episodes.
    pub fn len(&self) -> usize {
        self.transitions
    }

    pub fn is_empty(&self) -> bool {
        self.transitions == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.episodes.iter().flatten()
    }

    /// Flat transition access in collection order.
    pub fn get(&self, mut idx: usize) -> &Transition {
        for ep in &self.episodes {
            if idx < ep.len() {
                return &ep[idx];
            }
            idx -= ep.len();
        }
        panic!("transition index out of range");
    }

    pub fn sample<'a>(&'a self, rng: &mut ChaCha8Rng) -> Result<&'a Transition> {
        if self.transitions == 0 {
            return Err(Error::EmptyBuffer("present buffer"));
        }
        Ok(self.get(rng.gen_range(0..self.transitions)))
    }
}

/// Fixed-size pool of past transitions with per-slot epoch tags.
#[derive(Clone, Debug)]
pub struct PastBuffer {
    slots: Vec<Transition>,
    epoch_tags: Vec<u32>,
    beta: f64,
}

impl PastBuffer {
    /// Fills all `m` slots from rollouts of `policy` (epoch tag 0).
    pub fn init<E, P>(env: &E, mut policy: P, m: usize, beta: f64, rng: &mut ChaCha8Rng) -> Result<PastBuffer>
    where
        E: Environment,
        P: FnMut(&StateVec, &mut ChaCha8Rng) -> ActionVec,
    {
        if m == 0 {
            return Err(Error::InvalidArgument("past buffer needs at least one slot".into()));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!("beta={beta} outside [0, 1]")));
        }
        let mut slots = Vec::with_capacity(m);
        while slots.len() < m {
            let episode = crate::env::rollout_episode(env, |s, r| policy(s, r), rng);
            for t in episode {
                if slots.len() == m {
                    break;
                }
                slots.push(t);
            }
        }
        Ok(PastBuffer {
            epoch_tags: vec![0; m],
            slots,
            beta,
        })
    }

    /// Builds a buffer directly from `m` transitions (tags 0), for synthetic
    /// test corpora.
    pub fn from_transitions(slots: Vec<Transition>, beta: f64) -> Result<PastBuffer> {
        if slots.is_empty() {
            return Err(Error::EmptyBuffer("past buffer"));
        }
        Ok(PastBuffer {
            epoch_tags: vec![0; slots.len()],
            slots,
            beta,
        })
    }

    /// Accept-reject update: with probability `beta` the transition replaces
    /// a uniformly random slot and stamps it with `epoch`. Returns whether it
    /// was accepted. The buffer size never changes.
    pub fn update_step(&mut self, t: &Transition, epoch: u32, rng: &mut ChaCha8Rng) -> bool {
        if rng.gen::<f64>() >= self.beta {
            return false;
        }
        let slot = rng.gen_range(0..self.slots.len());
        self.slots[slot] = t.clone();
        self.epoch_tags[slot] = epoch;
        true
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.slots[idx]
    }

    pub fn epoch_tags(&self) -> &[u32] {
        &self.epoch_tags
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.slots.iter()
    }

    pub fn sample<'a>(&'a self, rng: &mut ChaCha8Rng) -> Result<&'a Transition> {
        if self.slots.is_empty() {
            return Err(Error::EmptyBuffer("past buffer"));
        }
        Ok(&self.slots[rng.gen_range(0..self.slots.len())])
    }

    /// Writes `x0,x1,...,epoch` lines (landing-state coordinates and slot
    /// tag), full float precision, suitable for exact reload.
    pub fn write_states_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (t, &tag) in self.slots.iter().zip(&self.epoch_tags) {
            let coords: Vec<String> = t.s_next.0.iter().map(|c| format!("{c}")).collect();
            writeln!(out, "{},{tag}", coords.join(","))?;
        }
        Ok(())
    }
}

/// Reads back a states CSV written by [`PastBuffer::write_states_csv`] (or
/// the present-buffer variant): coordinate columns followed by an epoch tag.
pub fn read_states_csv<R: BufRead>(input: R) -> Result<Vec<(Vec<f64>, u32)>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "states csv line {}: expected coords and tag",
                idx + 1
            )));
        }
        let tag: u32 = fields[fields.len() - 1].trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("states csv line {}: bad epoch tag", idx + 1))
        })?;
        let coords = fields[..fields.len() - 1]
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("states csv line {}: bad coordinate", idx + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push((coords, tag));
    }
    Ok(out)
}

/// Draws one negative sample from the mixture `beta * present + (1 - beta) *
/// past`: with probability `beta` a uniform present transition, otherwise a
/// uniform past slot.
pub fn sample_negative<'a>(
    d_rho: &'a PresentBuffer,
    d_mu: &'a PastBuffer,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<&'a Transition> {
    if rng.gen::<f64>() < beta {
        d_rho.sample(rng)
    } else {
        d_mu.sample(rng)
    }
}
