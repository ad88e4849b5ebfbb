use rand::Rng;

use super::{Bounds, NsgaConfig};

/// Spread factor of simulated binary crossover for a uniform draw `u` in [0, 1).
fn sbx_beta(u: f64, eta: f64) -> f64 {
    let exponent = 1.0 / (eta + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(exponent)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(exponent)
    }
}

/// Simulated binary crossover. With probability `crossover_prob` every
/// differing variable is recombined with distribution index `eta_c`;
/// otherwise the children are copies of the parents. Children are clamped.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    bounds: &Bounds,
    cfg: &NsgaConfig,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.random::<f64>() < cfg.crossover_prob {
        for i in 0..c1.len() {
            let (a, b) = (p1[i], p2[i]);
            if (a - b).abs() <= 1e-14 {
                continue;
            }
            let beta = sbx_beta(rng.random::<f64>(), cfg.eta_c);
            c1[i] = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
            c2[i] = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
        }
        bounds.clamp(&mut c1);
        bounds.clamp(&mut c2);
    }
    (c1, c2)
}

/// Bounded polynomial mutation of one variable. A value sitting on a bound
/// can only move inwards.
fn mutate_variable<R: Rng + ?Sized>(y: f64, lo: f64, hi: f64, eta: f64, rng: &mut R) -> f64 {
    let span = hi - lo;
    if span <= 0.0 {
        return lo;
    }
    let delta1 = (y - lo) / span;
    let delta2 = (hi - y) / span;
    let power = 1.0 / (eta + 1.0);
    let r = rng.random::<f64>();
    let delta_q = if r < 0.5 {
        let xy = 1.0 - delta1;
        let val = 2.0 * r + (1.0 - 2.0 * r) * xy.powf(eta + 1.0);
        val.powf(power) - 1.0
    } else {
        let xy = 1.0 - delta2;
        let val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * xy.powf(eta + 1.0);
        1.0 - val.powf(power)
    };
    (y + delta_q * span).clamp(lo, hi)
}

/// Polynomial mutation: each variable is perturbed with probability
/// `mutation_prob` (or `1/n` when unset) using distribution index `eta_m`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &[f64],
    bounds: &Bounds,
    cfg: &NsgaConfig,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = x.to_vec();
    mutate_in_place(&mut out, bounds, cfg.effective_mutation_prob(x.len()), cfg.eta_m, rng);
    out
}

pub(crate) fn mutate_in_place<R: Rng + ?Sized>(
    x: &mut [f64],
    bounds: &Bounds,
    prob: f64,
    eta: f64,
    rng: &mut R,
) {
    for i in 0..x.len() {
        if rng.random::<f64>() < prob {
            x[i] = mutate_variable(x[i], bounds.lower[i], bounds.upper[i], eta, rng);
        }
    }
}

/// Mutates one uniformly chosen variable unconditionally, then the rest with
/// the usual probability. Used to refill duplicate offspring.
pub(crate) fn forced_mutation<R: Rng + ?Sized>(
    x: &mut [f64],
    bounds: &Bounds,
    prob: f64,
    eta: f64,
    rng: &mut R,
) {
    let pick = rng.random_range(0..x.len());
    x[pick] = mutate_variable(x[pick], bounds.lower[pick], bounds.upper[pick], eta, rng);
    for i in (0..x.len()).filter(|&i| i != pick) {
        if rng.random::<f64>() < prob {
            x[i] = mutate_variable(x[i], bounds.lower[i], bounds.upper[i], eta, rng);
        }
    }
}
