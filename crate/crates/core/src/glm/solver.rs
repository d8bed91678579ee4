//! First-order solvers over a grouped [`Design`].
//!
//! * [`gradient_descent`]: full-gradient steps with halving backtracking,
//!   for unpenalized fits.
//! * [`coordinate_descent`]: cyclic coordinate minimization with
//!   soft-thresholding for the L1 term and an Armijo line search per
//!   coordinate; exact for squared loss, monotone for both losses. Thresholded
//!   coordinates land exactly on zero.

use super::design::{Design, GroupLoss};
use super::{FitConfig, StepPolicy};
use crate::error::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const MIN_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Coefs {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl Coefs {
    pub fn zeros(dim: usize, intercept: f64) -> Self {
        Coefs { weights: vec![0.0; dim], intercept }
    }

    pub fn l1(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub coefs: Coefs,
    /// Final mean loss plus penalty.
    pub objective: f64,
    /// Objective at the starting point.
    pub initial_objective: f64,
    pub iterations: usize,
}

fn converged(prev: f64, cur: f64, tol: f64) -> bool {
    prev - cur <= tol * prev.abs().max(1e-300)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Minimizes `mean loss + lambda * |w|_1` by cyclic coordinate descent with
/// an active-set strategy. The intercept is never penalized.
pub(crate) fn coordinate_descent(
    design: &Design,
    loss: &GroupLoss,
    lambda: f64,
    init: Coefs,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<Outcome> {
    let mut c = init;
    let mut z = design.predictor(&c.weights, c.intercept);
    let mut f = loss.mean_loss(design, &z) + lambda * c.l1();
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    let initial_objective = f;
    let all: Vec<usize> = (0..design.n_cols).collect();
    let mut sweeps = 0;
    'outer: while sweeps < max_sweeps {
        let before: Vec<bool> = c.weights.iter().map(|w| *w != 0.0).collect();
        let delta = sweep(design, loss, lambda, &mut c, &mut z, &all);
        sweeps += 1;
        let f_new = f + delta;
        let grew = c.weights.iter().zip(&before).any(|(w, b)| *w != 0.0 && !b);
        let done = converged(f, f_new, tolerance) && !grew;
        f = f_new;
        if done {
            break;
        }
        let active: Vec<usize> = all.iter().copied().filter(|&j| c.weights[j] != 0.0).collect();
        while sweeps < max_sweeps {
            let delta = sweep(design, loss, lambda, &mut c, &mut z, &active);
            sweeps += 1;
            let f_new = f + delta;
            let done = converged(f, f_new, tolerance);
            f = f_new;
            if done {
                continue 'outer;
            }
        }
    }
    // Recompute from scratch so the reported value carries no drift.
    let z = design.predictor(&c.weights, c.intercept);
    let objective = loss.mean_loss(design, &z) + lambda * c.l1();
    if !objective.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(Outcome { coefs: c, objective, initial_objective, iterations: sweeps })
}

/// One pass over the intercept and `coords`; returns the objective change.
fn sweep(
    design: &Design,
    loss: &GroupLoss,
    lambda: f64,
    c: &mut Coefs,
    z: &mut [f64],
    coords: &[usize],
) -> f64 {
    let n = design.n_obs;
    let mut total = intercept_step(design, loss, c, z);
    for &j in coords {
        let groups = design.col(j);
        if groups.is_empty() {
            // An all-zero column only contributes its penalty.
            if lambda > 0.0 && c.weights[j] != 0.0 {
                total -= lambda * c.weights[j].abs();
                c.weights[j] = 0.0;
            }
            continue;
        }
        let (mut g, mut h) = (0.0, 0.0);
        for &k in groups {
            let (d1, d2) = loss.derivatives(k as usize, z[k as usize]);
            g += d1;
            h += d2;
        }
        g /= n;
        h = (h / n).max(MIN_CURVATURE);
        let w = c.weights[j];
        let target = soft_threshold(h * w - g, lambda) / h;
        let d = target - w;
        if d == 0.0 {
            continue;
        }
        let predicted = g * d + lambda * (target.abs() - w.abs());
        let mut alpha = 1.0;
        for _ in 0..MAX_HALVINGS {
            let w_new = if alpha == 1.0 { target } else { w + alpha * d };
            let step = w_new - w;
            let mut change = lambda * (w_new.abs() - w.abs());
            for &k in groups {
                let k = k as usize;
                change += (loss.value(k, z[k] + step) - loss.value(k, z[k])) / n;
            }
            if change.is_finite() && change <= ARMIJO * alpha * predicted {
                for &k in groups {
                    z[k as usize] += step;
                }
                c.weights[j] = w_new;
                total += change;
                break;
            }
            alpha *= 0.5;
        }
    }
    total
}

fn intercept_step(design: &Design, loss: &GroupLoss, c: &mut Coefs, z: &mut [f64]) -> f64 {
    let n = design.n_obs;
    let (mut g, mut h) = (0.0, 0.0);
    for (k, &zk) in z.iter().enumerate() {
        let (d1, d2) = loss.derivatives(k, zk);
        g += d1;
        h += d2;
    }
    g /= n;
    h = (h / n).max(MIN_CURVATURE);
    let d = -g / h;
    if d == 0.0 || !d.is_finite() {
        return 0.0;
    }
    let predicted = g * d;
    let mut alpha = 1.0;
    for _ in 0..MAX_HALVINGS {
        let step = alpha * d;
        let change: f64 = z
            .iter()
            .enumerate()
            .map(|(k, &zk)| loss.value(k, zk + step) - loss.value(k, zk))
            .sum::<f64>()
            / n;
        if change.is_finite() && change <= ARMIJO * alpha * predicted {
            z.iter_mut().for_each(|zk| *zk += step);
            c.intercept += step;
            return change;
        }
        alpha *= 0.5;
    }
    0.0
}

/// Gradient of the mean loss at `c` with respect to weights and intercept.
pub(crate) fn gradient(design: &Design, loss: &GroupLoss, z: &[f64]) -> (Vec<f64>, f64) {
    let n = design.n_obs;
    let d1: Vec<f64> = z.iter().enumerate().map(|(k, &zk)| loss.derivatives(k, zk).0).collect();
    let gw = (0..design.n_cols)
        .map(|j| design.col(j).iter().map(|&k| d1[k as usize]).sum::<f64>() / n)
        .collect();
    let gb = d1.iter().sum::<f64>() / n;
    (gw, gb)
}

/// Unpenalized fit by gradient descent.
pub(crate) fn gradient_descent(
    design: &Design,
    loss: &GroupLoss,
    init: Coefs,
    cfg: &FitConfig,
) -> Result<Outcome> {
    let mut c = init;
    let mut z = design.predictor(&c.weights, c.intercept);
    let mut f = loss.mean_loss(design, &z);
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    let initial_objective = f;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let (gw, gb) = gradient(design, loss, &z);
        let norm2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if norm2 == 0.0 {
            break;
        }
        let candidate = |t: f64| {
            let weights: Vec<f64> = c.weights.iter().zip(&gw).map(|(w, g)| w - t * g).collect();
            let cand = Coefs { weights, intercept: c.intercept - t * gb };
            let zc = design.predictor(&cand.weights, cand.intercept);
            let fc = loss.mean_loss(design, &zc);
            (cand, zc, fc)
        };
        let accepted = match cfg.step {
            StepPolicy::Fixed(t) => {
                let next = candidate(t);
                if !next.2.is_finite() {
                    return Err(Error::NonFinite);
                }
                Some(next)
            }
            StepPolicy::Backtracking { initial } => {
                let mut t = initial;
                let mut found = None;
                for _ in 0..MAX_HALVINGS {
                    let next = candidate(t);
                    if next.2.is_finite() && next.2 <= f - 0.5 * t * norm2 {
                        found = Some(next);
                        break;
                    }
                    t *= 0.5;
                }
                found
            }
        };
        let Some((next, zn, fn_)) = accepted else { break };
        let done = converged(f, fn_, cfg.tolerance);
        c = next;
        z = zn;
        f = fn_;
        if done {
            break;
        }
    }
    Ok(Outcome { coefs: c, objective: f, initial_objective, iterations })
}
