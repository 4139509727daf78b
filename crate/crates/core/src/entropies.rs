//! Unconditional entropies in nats: Shannon, Rényi, Havrda–Charvát–Tsallis
//! and Sharma–Mittal, together with the α-norm route
//! `ln_q(‖p‖_α^{α/(1−α)})` that expresses all three parametric families.
//!
//! Conventions: `0·log 0 = 0` and `0^α = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kn_mean::q_log;
use crate::prob::Dist;

/// Orders closer than this to 1 are treated as the limit `→ 1`.
pub const ORDER_ONE_EPS: f64 = 1e-9;

/// An entropy order: a finite value away from 1, or the limit `→ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Order {
    Limit,
    Value(f64),
}

impl Order {
    /// Validates an order `α > 0`.
    pub fn alpha(a: f64) -> Result<Order> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidParameter(format!("alpha must be a positive real, got {a}")));
        }
        Ok(Self::snap(a))
    }

    /// Validates an order `β ∈ ℝ`.
    pub fn beta(b: f64) -> Result<Order> {
        if !b.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite, got {b}")));
        }
        Ok(Self::snap(b))
    }

    fn snap(v: f64) -> Order {
        if (v - 1.0).abs() < ORDER_ONE_EPS {
            Order::Limit
        } else {
            Order::Value(v)
        }
    }

    /// The numeric order, `1.0` for the limit.
    pub fn get(self) -> f64 {
        match self {
            Order::Limit => 1.0,
            Order::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyParams {
    pub alpha: Order,
    pub beta: Order,
}

impl EntropyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Ok(EntropyParams {
            alpha: Order::alpha(alpha)?,
            beta: Order::beta(beta)?,
        })
    }

    pub fn alpha_only(alpha: f64) -> Result<Self> {
        Ok(EntropyParams {
            alpha: Order::alpha(alpha)?,
            beta: Order::Limit,
        })
    }
}

/// `−Σ p log p`.
pub fn shannon(p: &Dist) -> f64 {
    -p.iter().filter(|&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

/// `Σ_x p(x)^α` over the support.
pub fn power_sum(p: &Dist, alpha: f64) -> f64 {
    p.iter().filter(|&v| v > 0.0).map(|v| v.powf(alpha)).sum()
}

/// `‖p‖_α = (Σ p^α)^{1/α}`.
pub fn alpha_norm(p: &Dist, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(power_sum(p, alpha).powf(1.0 / alpha))
}

/// `(1/(1−α))·log Σ p^α`.
pub fn renyi(p: &Dist, alpha: Order) -> f64 {
    match alpha {
        Order::Limit => shannon(p),
        Order::Value(a) => power_sum(p, a).ln() / (1.0 - a),
    }
}

/// `(Σ p^α − 1)/(1−α)`.
pub fn hct(p: &Dist, alpha: Order) -> f64 {
    match alpha {
        Order::Limit => shannon(p),
        Order::Value(a) => (power_sum(p, a) - 1.0) / (1.0 - a),
    }
}

/// `((Σ p^α)^{(1−β)/(1−α)} − 1)/(1−β)`.
pub fn sharma_mittal(p: &Dist, alpha: Order, beta: Order) -> f64 {
    match (alpha, beta) {
        (_, Order::Limit) => renyi(p, alpha),
        (Order::Limit, Order::Value(b)) => ((1.0 - b) * shannon(p)).exp_m1() / (1.0 - b),
        (Order::Value(a), Order::Value(b)) => {
            let e = (1.0 - b) / (1.0 - a);
            (e * power_sum(p, a).ln()).exp_m1() / (1.0 - b)
        }
    }
}

/// Which family [`unified_repr`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Renyi,
    Hct,
    SharmaMittal,
}

/// `‖p‖_α^{α/(1−α)}`; at the α-limit this is `exp H(p)`.
pub fn norm_power(p: &Dist, alpha: Order) -> f64 {
    match alpha {
        Order::Limit => shannon(p).exp(),
        Order::Value(a) => {
            let norm = power_sum(p, a).powf(1.0 / a);
            norm.powf(a / (1.0 - a))
        }
    }
}

/// Evaluates a family through `ln_q(‖p‖_α^{α/(1−α)})` with `q = 1` (Rényi),
/// `q = α` (HCT) or `q = β` (Sharma–Mittal).
pub fn unified_repr(p: &Dist, which: Family, params: EntropyParams) -> Result<f64> {
    let t = norm_power(p, params.alpha);
    let q = match which {
        Family::Renyi => 1.0,
        Family::Hct => params.alpha.get(),
        Family::SharmaMittal => params.beta.get(),
    };
    q_log(t, q)
}

/// Direct evaluation of one family.
pub fn entropy(p: &Dist, which: Family, params: EntropyParams) -> f64 {
    match which {
        Family::Renyi => renyi(p, params.alpha),
        Family::Hct => hct(p, params.alpha),
        Family::SharmaMittal => sharma_mittal(p, params.alpha, params.beta),
    }
}
