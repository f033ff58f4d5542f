//! Brute-force checkers for the divergence-ordering guarantees.
//!
//! Both checkers take a witness `(pi, pi_prime, r_hat)` on a tabular MDP,
//! measure the approximation constants exactly, and verify the implication
//! "improvement condition satisfied => divergence from the mixture does not
//! decrease". Nothing here trusts the learned reward models: the exact
//! occupancies, divergences, and optimal transport potentials all come from
//! this module's own machinery.

use crate::env::{exact_occupancy, TabularMdp};
use crate::error::{Error, Result};
use crate::oracle::{exact_kl, mixture, w1_exact, w1_exact_with_potential, Dist, MetricGraph};

const VALUE_TOL: f64 = 1e-9;
const COND_TOL: f64 = 1e-12;

/// Measured constants for a policy-update step:
/// `eps0` bounds the occupancy ratio deviation `|rho'/rho - 1|`,
/// `eps1` the sup-norm reward approximation error, and
/// `eps2` the measured improvement `<rho' - rho, r_hat>`.
#[derive(Clone, Debug)]
pub struct TheoremWitness {
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub pi: Vec<Vec<f64>>,
    pub pi_prime: Vec<Vec<f64>>,
    pub r_hat: Vec<f64>,
}

impl TheoremWitness {
    /// Witness for the KL-reward guarantee: `eps1` is measured against the
    /// exact log-ratio reward of `pi`.
    pub fn measure_kl(
        mdp: &TabularMdp,
        mu: &Dist,
        beta: f64,
        pi: Vec<Vec<f64>>,
        pi_prime: Vec<Vec<f64>>,
        r_hat: Vec<f64>,
    ) -> Result<TheoremWitness> {
        let rho = exact_occupancy(mdp, &pi)?;
        let rho_p = exact_occupancy(mdp, &pi_prime)?;
        let r_exact = log_ratio_reward(&rho, mu, beta)?;
        Ok(TheoremWitness {
            eps0: ratio_deviation(&rho, &rho_p),
            eps1: sup_error(&r_hat, &r_exact),
            eps2: improvement(&rho, &rho_p, &r_hat),
            pi,
            pi_prime,
            r_hat,
        })
    }

    /// Witness for the Wasserstein-reward guarantee: `eps1` is measured
    /// against the exact optimal dual potential for
    /// `W1(rho, beta * rho + (1 - beta) * mu)`.
    pub fn measure_w(
        mdp: &TabularMdp,
        mu: &Dist,
        beta: f64,
        g: &MetricGraph,
        pi: Vec<Vec<f64>>,
        pi_prime: Vec<Vec<f64>>,
        r_hat: Vec<f64>,
    ) -> Result<TheoremWitness> {
        let rho = exact_occupancy(mdp, &pi)?;
        let rho_p = exact_occupancy(mdp, &pi_prime)?;
        let mix = mixture(&rho, mu, beta)?;
        let (_, f_star) = w1_exact_with_potential(&rho, &mix, g)?;
        Ok(TheoremWitness {
            eps0: ratio_deviation(&rho, &rho_p),
            eps1: sup_error(&r_hat, &f_star),
            eps2: improvement(&rho, &rho_p, &r_hat),
            pi,
            pi_prime,
            r_hat,
        })
    }
}

/// Exact log-ratio reward `ln(rho / (beta * rho + (1 - beta) * mu))` per
/// state. States outside the support of `rho` map to `-inf` (and to `0` when
/// the mixture also vanishes there, in which case the state is unused).
pub fn log_ratio_reward(rho: &Dist, mu: &Dist, beta: f64) -> Result<Vec<f64>> {
    let mix = mixture(rho, mu, beta)?;
    Ok((0..rho.len())
        .map(|s| {
            let r = rho.get(s);
            let m = mix.get(s);
            if r == 0.0 && m == 0.0 {
                0.0
            } else if r == 0.0 {
                f64::NEG_INFINITY
            } else {
                (r / m).ln()
            }
        })
        .collect())
}

fn ratio_deviation(rho: &Dist, rho_p: &Dist) -> f64 {
    let mut eps0: f64 = 0.0;
    for s in 0..rho.len() {
        let (r, rp) = (rho.get(s), rho_p.get(s));
        if r == 0.0 {
            if rp > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        eps0 = eps0.max((rp / r - 1.0).abs());
    }
    eps0
}

fn sup_error(r_hat: &[f64], r_exact: &[f64]) -> f64 {
    r_hat
        .iter()
        .zip(r_exact)
        .map(|(&h, &e)| {
            if e.is_infinite() {
                f64::INFINITY
            } else {
                (h - e).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn improvement(rho: &Dist, rho_p: &Dist, r_hat: &[f64]) -> f64 {
    (0..rho.len())
        .map(|s| (rho_p.get(s) - rho.get(s)) * r_hat[s])
        .sum()
}

/// Checks the KL ordering implication for the witness: if
/// `eps2 >= 2 * eps1 - ln(1 - eps0)` then
/// `D(rho' || beta rho' + (1-beta) mu) >= D(rho || beta rho + (1-beta) mu)`.
/// Returns `true` when the implication holds (vacuously if the condition
/// cannot be met, e.g. `eps0 >= 1`).
pub fn check_theorem2(w: &TheoremWitness, mdp: &TabularMdp, mu: &Dist, beta: f64) -> Result<bool> {
    if w.eps0 >= 1.0 {
        return Ok(true);
    }
    let threshold = 2.0 * w.eps1 - (1.0 - w.eps0).ln();
    if !(w.eps2 >= threshold - COND_TOL) {
        return Ok(true);
    }
    let rho = exact_occupancy(mdp, &w.pi)?;
    let rho_p = exact_occupancy(mdp, &w.pi_prime)?;
    let d = exact_kl(&rho, &mixture(&rho, mu, beta)?)?.value;
    let d_p = exact_kl(&rho_p, &mixture(&rho_p, mu, beta)?)?.value;
    Ok(d_p >= d - VALUE_TOL)
}

/// Checks the Wasserstein ordering implication for the witness: if
/// `eps2 >= 2 * eps1 * (1 + beta)` then
/// `W1(rho', beta rho' + (1-beta) mu) >= W1(rho, beta rho + (1-beta) mu)`.
/// The comparison is non-strict so the boundary case `pi' = pi`
/// (`eps2 = eps1 = 0`) is covered.
pub fn check_theorem3(
    w: &TheoremWitness,
    mdp: &TabularMdp,
    mu: &Dist,
    beta: f64,
    g: &MetricGraph,
) -> Result<bool> {
    let threshold = 2.0 * w.eps1 * (1.0 + beta);
    if !(w.eps2 >= threshold - COND_TOL) {
        return Ok(true);
    }
    let rho = exact_occupancy(mdp, &w.pi)?;
    let rho_p = exact_occupancy(mdp, &w.pi_prime)?;
    let d = w1_exact(&rho, &mixture(&rho, mu, beta)?, g)?;
    let d_p = w1_exact(&rho_p, &mixture(&rho_p, mu, beta)?, g)?;
    Ok(d_p >= d - VALUE_TOL)
}

/// Grid search verifying that maximizers of
/// `rho -> D(rho || beta rho + (1-beta) mu)` put all their mass where
/// `mu` vanishes, that the maximum equals `ln(1/beta)`, and that the
/// pointwise bound `ln(rho / (beta rho + (1-beta) mu)) <= ln(1/beta)` holds
/// with equality exactly on `{s : mu(s) = 0}`.
///
/// `resolution` is the grid denominator (mass in units of `1/resolution`).
/// Supports up to 3 states; rejects `mu` with empty zero-mass region.
pub fn prop1_check(mu: &Dist, beta: f64, resolution: usize) -> Result<bool> {
    let n = mu.len();
    if n > 3 {
        return Err(Error::InvalidArgument(
            "grid enumeration supports at most 3 states".into(),
        ));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("beta={beta} outside (0, 1)")));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    if mu.as_slice().iter().all(|&m| m > 0.0) {
        return Err(Error::InvalidArgument(
            "mu is strictly positive everywhere; the zero-mass region is empty".into(),
        ));
    }

    let bound = (1.0 / beta).ln();
    let r = resolution;
    let value_and_ok = |rho: &[f64]| -> (f64, bool) {
        let mut v = 0.0;
        let mut pointwise_ok = true;
        for s in 0..n {
            if rho[s] == 0.0 {
                continue;
            }
            let ratio = (rho[s] / (beta * rho[s] + (1.0 - beta) * mu.get(s))).ln();
            v += rho[s] * ratio;
            if ratio > bound + 1e-12 {
                pointwise_ok = false;
            }
            if mu.get(s) == 0.0 {
                if (ratio - bound).abs() > 1e-12 {
                    pointwise_ok = false;
                }
            } else if ratio >= bound - 1e-12 {
                pointwise_ok = false;
            }
        }
        (v, pointwise_ok)
    };

    let mut best = f64::NEG_INFINITY;
    let mut maximizers: Vec<Vec<f64>> = Vec::new();
    let mut all_pointwise_ok = true;
    let mut visit = |rho: Vec<f64>| {
        let (v, ok) = value_and_ok(&rho);
        all_pointwise_ok &= ok;
        if v > best + VALUE_TOL {
            best = v;
            maximizers.clear();
            maximizers.push(rho);
        } else if (v - best).abs() <= VALUE_TOL {
            maximizers.push(rho);
        }
    };

    match n {
        1 => visit(vec![1.0]),
        2 => {
            for i in 0..=r {
                visit(vec![i as f64 / r as f64, (r - i) as f64 / r as f64]);
            }
        }
        _ => {
            for i in 0..=r {
                for j in 0..=(r - i) {
                    visit(vec![
                        i as f64 / r as f64,
                        j as f64 / r as f64,
                        (r - i - j) as f64 / r as f64,
                    ]);
                }
            }
        }
    }

    let supported_on_zero_set = maximizers.iter().all(|rho| {
        (0..n).all(|s| rho[s] == 0.0 || mu.get(s) == 0.0)
    });
    let attains_bound = (best - bound).abs() <= VALUE_TOL;
    Ok(supported_on_zero_set && attains_bound && all_pointwise_ok)
}
