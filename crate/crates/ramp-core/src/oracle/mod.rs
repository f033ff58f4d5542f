//! Exact reference computations on finite distributions.
//!
//! Everything here is brute force and implementation-independent: closed-form
//! entropies and divergences, the exact entropy-gain decomposition for
//! occupancy mixtures, an exact Wasserstein-1 solver, and grid/enumeration
//! checkers for the divergence-ordering guarantees. The learned components
//! elsewhere in the crate are validated against this module, never the other
//! way around.

mod flow;
mod theorems;

pub use flow::{w1_exact, w1_exact_with_potential, MetricGraph};
pub use theorems::{
    check_theorem2, check_theorem3, log_ratio_reward, prop1_check, TheoremWitness,
};

use rand::Rng;

use crate::error::{Error, Result};

/// Probability distribution over finitely many states.
#[derive(Clone, Debug, PartialEq)]
pub struct Dist {
    p: Vec<f64>,
}

impl Dist {
    /// Validates nonnegativity and unit mass (tolerance 1e-12).
    pub fn new(p: Vec<f64>) -> Result<Dist> {
        if p.is_empty() {
            return Err(Error::Distribution("empty support".into()));
        }
        if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::Distribution("negative or non-finite mass".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Distribution(format!("mass sums to {sum}, not 1")));
        }
        Ok(Dist { p })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(mut w: Vec<f64>) -> Result<Dist> {
        if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::Distribution("negative or non-finite weight".into()));
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Distribution("zero total weight".into()));
        }
        for x in &mut w {
            *x /= sum;
        }
        // Exact unit sum is not guaranteed by the division; nudge the largest
        // coordinate so downstream validation at 1e-12 always holds.
        let resid: f64 = 1.0 - w.iter().sum::<f64>();
        let argmax = (0..w.len()).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap();
        w[argmax] += resid;
        Dist::new(w)
    }

    pub fn uniform(n: usize) -> Dist {
        Dist {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn dirac(n: usize, at: usize) -> Dist {
        let mut p = vec![0.0; n];
        p[at] = 1.0;
        Dist { p }
    }

    /// Uniform draw from the simplex (normalized exponentials, clipped so a
    /// zero draw cannot produce an infinite weight).
    pub fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> Dist {
        let w: Vec<f64> = (0..n).map(|_| (-rng.gen::<f64>().ln()).min(50.0)).collect();
        Dist::normalized(w).unwrap()
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn exact_entropy(d: &Dist) -> f64 {
    d.p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum()
}

/// KL divergence outcome. A support violation (`p(s) > 0` where
/// `q(s) = 0`) yields `value = +inf` with the flag set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlResult {
    pub value: f64,
    pub support_violation: bool,
}

/// Exact KL divergence `D(p || q)` in nats.
pub fn exact_kl(p: &Dist, q: &Dist) -> Result<KlResult> {
    if p.len() != q.len() {
        return Err(Error::InvalidArgument(format!(
            "KL over mismatched supports ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.p.iter().zip(&q.p) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(KlResult {
                value: f64::INFINITY,
                support_violation: true,
            });
        }
        total += pi * (pi / qi).ln();
    }
    Ok(KlResult {
        value: total,
        support_violation: false,
    })
}

/// Convex mixture `beta * rho + (1 - beta) * mu`.
pub fn mixture(rho: &Dist, mu: &Dist, beta: f64) -> Result<Dist> {
    if rho.len() != mu.len() {
        return Err(Error::InvalidArgument("mixture over mismatched supports".into()));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta={beta} outside [0, 1]")));
    }
    let p = rho
        .p
        .iter()
        .zip(&mu.p)
        .map(|(&r, &m)| beta * r + (1.0 - beta) * m)
        .collect();
    Dist::new(p)
}

/// Exact decomposition of the entropy gain of one mixture update.
#[derive(Clone, Copy, Debug)]
pub struct EntropyGain {
    /// `H(mu_next) - H(mu)` where `mu_next = beta * rho + (1 - beta) * mu`.
    pub delta_h: f64,
    /// `beta * (D(rho || mu_next) + H(rho) - H(mu))`.
    pub lower_bound: f64,
    /// `(1 - beta) * D(mu || mu_next)`, always nonnegative.
    pub residual: f64,
}

/// Splits the entropy change of the mixture update into the divergence-driven
/// lower bound and a nonnegative residual; the two parts sum to `delta_h`
/// exactly. Both divergences are finite because the updated mixture dominates
/// each component for `beta` strictly inside `(0, 1)`.
pub fn theorem1_decomposition(rho: &Dist, mu: &Dist, beta: f64) -> Result<EntropyGain> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "beta={beta} outside (0, 1)"
        )));
    }
    let mu_next = mixture(rho, mu, beta)?;
    let h_next = exact_entropy(&mu_next);
    let h_mu = exact_entropy(mu);
    let h_rho = exact_entropy(rho);
    let kl_rho = exact_kl(rho, &mu_next)?.value;
    let kl_mu = exact_kl(mu, &mu_next)?.value;
    Ok(EntropyGain {
        delta_h: h_next - h_mu,
        lower_bound: beta * (kl_rho + h_rho - h_mu),
        residual: (1.0 - beta) * kl_mu,
    })
}
