//! Kolmogorov–Nagumo (quasi-arithmetic) means `φ⁻¹(E[φ(Z)])` and the
//! strictly monotone function family they are built from.
//!
//! Affine `φ` gives the arithmetic mean, `φ = log` the geometric mean and
//! `φ = ln_q` the Hölder mean of order `1 − q`.

mod monotone;

pub use monotone::{q_exp, q_log, Direction, Interval, MonotoneFn, Q_ONE_EPS};

use crate::error::{Error, Result};
use crate::prob::{Dist, Joint};

/// Realizations of a random variable together with their distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedValues {
    values: Vec<f64>,
    weights: Dist,
}

impl WeightedValues {
    pub fn new(values: Vec<f64>, weights: Dist) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        Ok(WeightedValues { values, weights })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &Dist {
        &self.weights
    }
}

/// `φ⁻¹(Σ_z w(z)·φ(v(z)))` for a distribution on `values`.
pub fn kn_mean(wv: &WeightedValues, phi: &MonotoneFn) -> Result<f64> {
    weighted_kn_mean(&wv.values, wv.weights.probs(), phi)
}

/// [`kn_mean`] over raw slices. `weights` must already be a probability
/// vector. Zero-weight values are skipped and never evaluated, so they may
/// lie outside `φ`'s domain.
///
/// The result is clamped into `[min v, max v]` over the positive-weight
/// values so the mean is exactly internal despite rounding in `φ⁻¹`.
pub fn weighted_kn_mean(values: &[f64], weights: &[f64], phi: &MonotoneFn) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    let mut acc = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&v, &w) in values.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        acc += w * phi.apply(v)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return Err(Error::InvalidSimplex("all weights are zero".into()));
    }
    if lo == hi {
        return Ok(lo);
    }
    Ok(phi.inverse(acc)?.clamp(lo, hi))
}

/// Entry `y` (over the supported outputs, in order) is
/// `φ⁻¹(Σ_x p_{X|Y}(x|y)·φ(table[x][y]))`.
pub fn conditional_kn_mean(table: &[Vec<f64>], joint: &Joint, phi: &MonotoneFn) -> Result<Vec<f64>> {
    if table.len() != joint.n_x() || table.iter().any(|r| r.len() != joint.n_y()) {
        return Err(Error::Dimension(format!(
            "table must be {}x{}",
            joint.n_x(),
            joint.n_y()
        )));
    }
    joint
        .support()
        .iter()
        .zip(joint.posteriors())
        .map(|(&y, post)| {
            let column: Vec<f64> = table.iter().map(|row| row[y]).collect();
            weighted_kn_mean(&column, post.probs(), phi)
        })
        .collect()
}
