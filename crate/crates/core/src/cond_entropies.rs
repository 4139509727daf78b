//! Conditional entropies of a joint `p_X · p_{Y|X}`: Arimoto, Hayashi and
//! Augustin–Csiszár (Rényi type), the HCT conditional entropy given as the
//! expected posterior HCT entropy, and the Sharma–Mittal conditional
//! entropy built from the expected posterior α-norm power.
//!
//! Sums over `y` run over the supported outputs only.

use serde::Serialize;

use crate::entropies::{hct, power_sum, shannon, Order};
use crate::error::{Error, Result};
use crate::kn_mean::q_log;
use crate::prob::{Dist, Joint};
use crate::simplex::{minimize, Objective, SolverConfig};

/// Solver settings for the Augustin–Csiszár minimization.
pub type AcSolverConfig = SolverConfig;

/// `H(X|Y) = Σ_y p_Y(y)·H(p_{X|Y}(·|y))`.
pub fn shannon_conditional(j: &Joint) -> f64 {
    j.supported().map(|(py, post)| py * shannon(post)).sum()
}

/// Arimoto: `(α/(1−α))·log Σ_y (Σ_x p_X(x)^α p_{Y|X}(y|x)^α)^{1/α}`.
pub fn arimoto(j: &Joint, alpha: Order) -> f64 {
    let a = match alpha {
        Order::Limit => return shannon_conditional(j),
        Order::Value(a) => a,
    };
    let mut outer = 0.0;
    for &y in j.support() {
        let inner: f64 = (0..j.n_x())
            .map(|x| j.prob(x, y))
            .filter(|&v| v > 0.0)
            .map(|v| v.powf(a))
            .sum();
        outer += inner.powf(1.0 / a);
    }
    a / (1.0 - a) * outer.ln()
}

/// Hayashi: `(1/(1−α))·log Σ_y p_Y(y) Σ_x p_{X|Y}(x|y)^α`.
pub fn hayashi(j: &Joint, alpha: Order) -> f64 {
    match alpha {
        Order::Limit => shannon_conditional(j),
        Order::Value(a) => {
            let s: f64 = j.supported().map(|(py, post)| py * power_sum(post, a)).sum();
            s.ln() / (1.0 - a)
        }
    }
}

/// `Σ_y p_Y(y)·S_α(p_{X|Y}(·|y))`.
pub fn manije_hct(j: &Joint, alpha: Order) -> f64 {
    j.supported().map(|(py, post)| py * hct(post, alpha)).sum()
}

/// `ln_β((E_Y ‖p_{X|Y}(·|Y)‖_α^α)^{1/(1−α)})`.
pub fn akm_sharma_mittal(j: &Joint, alpha: Order, beta: Order) -> Result<f64> {
    let t = match alpha {
        Order::Limit => shannon_conditional(j).exp(),
        Order::Value(a) => {
            let s: f64 = j.supported().map(|(py, post)| py * power_sum(post, a)).sum();
            s.powf(1.0 / (1.0 - a))
        }
    };
    q_log(t, beta.get())
}

/// Minimizer and value of the Augustin–Csiszár objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcSolution {
    /// Minimized objective, in nats.
    pub value: f64,
    /// `r(·|y)` for each supported output, aligned with `Joint::support`.
    pub argmin: Vec<Dist>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
}

/// `J(r) = (α/(1−α))·Σ_x p_X(x)·log Σ_y p_{Y|X}(y|x)·r(x|y)^{1−1/α}`
/// with `r` laid out as one block of size `|X|` per supported output.
struct AcObjective<'a> {
    joint: &'a Joint,
    alpha: f64,
    sizes: Vec<usize>,
}

impl AcObjective<'_> {
    fn exponent(&self) -> f64 {
        1.0 - 1.0 / self.alpha
    }

    /// `S_x = Σ_y p(y|x) r(x|y)^s` for every `x`.
    fn sums(&self, r: &[f64]) -> Vec<f64> {
        let n_x = self.joint.n_x();
        let s = self.exponent();
        (0..n_x)
            .map(|x| {
                self.joint
                    .support()
                    .iter()
                    .enumerate()
                    .map(|(k, &y)| {
                        let c = self.joint.channel().get(x, y);
                        if c == 0.0 {
                            0.0
                        } else {
                            c * r[k * n_x + x].powf(s)
                        }
                    })
                    .sum()
            })
            .collect()
    }
}

impl Objective for AcObjective<'_> {
    fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn eval(&self, r: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
        let n_x = self.joint.n_x();
        let a = self.alpha;
        let s = self.exponent();
        let sums = self.sums(r);
        let mut acc = 0.0;
        for (x, sx) in sums.iter().enumerate() {
            let px = self.joint.prior().get(x);
            if px > 0.0 {
                acc += px * sx.ln();
            }
        }
        if let Some(g) = grad {
            // dJ/dr(x|y) = −p(x)·p(y|x)·r^{s−1}/S_x since (α/(1−α))·s = −1
            for (k, &y) in self.joint.support().iter().enumerate() {
                for (x, sx) in sums.iter().enumerate() {
                    let px = self.joint.prior().get(x);
                    let c = self.joint.channel().get(x, y);
                    let i = k * n_x + x;
                    g[i] = if px > 0.0 && c > 0.0 {
                        -px * c * r[i].powf(s - 1.0) / sx
                    } else {
                        0.0
                    };
                }
            }
        }
        Ok(a / (1.0 - a) * acc)
    }

    fn fixed_point(&self, r: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        // stationarity gives r(x|y)^(1−s) ∝ p(x)·p(y|x) / S_x with 1 − s = 1/α
        let n_x = self.joint.n_x();
        let sums = self.sums(r);
        for (k, &y) in self.joint.support().iter().enumerate() {
            for (x, sx) in sums.iter().enumerate() {
                let i = k * n_x + x;
                let w = self.joint.prob(x, y);
                out[i] = if w > 0.0 { (w / sx).powf(self.alpha) } else { 0.0 };
            }
        }
        Some(Ok(()))
    }
}

/// Evaluates the Augustin–Csiszár objective at a given `r`, one
/// distribution per supported output.
pub fn ac_objective(j: &Joint, alpha: f64, r: &[Dist]) -> Result<f64> {
    if r.len() != j.support().len() || r.iter().any(|d| d.len() != j.n_x()) {
        return Err(Error::Dimension(format!(
            "need {} distributions over {} symbols",
            j.support().len(),
            j.n_x()
        )));
    }
    let obj = AcObjective {
        joint: j,
        alpha,
        sizes: vec![j.n_x(); j.support().len()],
    };
    let flat: Vec<f64> = r.iter().flat_map(|d| d.iter()).collect();
    obj.eval(&flat, None)
}

/// Augustin–Csiszár conditional entropy: the minimum of the objective over
/// all reverse channels `r_{X|Y}`.
pub fn augustin_csiszar(j: &Joint, alpha: Order, cfg: &AcSolverConfig) -> Result<AcSolution> {
    let a = match alpha {
        Order::Limit => {
            return Ok(AcSolution {
                value: shannon_conditional(j),
                argmin: j.posteriors().to_vec(),
                iterations: 0,
                converged: true,
                restarts: 0,
            })
        }
        Order::Value(a) => a,
    };
    let obj = AcObjective {
        joint: j,
        alpha: a,
        sizes: vec![j.n_x(); j.support().len()],
    };
    let sol = minimize(&obj, cfg)?;
    let argmin = sol
        .point
        .chunks(j.n_x())
        .map(|c| Dist::from_weights(c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(AcSolution {
        value: sol.value,
        argmin,
        iterations: sol.iterations,
        converged: sol.converged,
        restarts: sol.starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropies::{renyi, sharma_mittal};
    use crate::prob::{rng_from_seed, sample_dist, sample_joint, Channel};

    fn a(v: f64) -> Order {
        Order::alpha(v).unwrap()
    }

    fn bsc() -> Joint {
        let ch = Channel::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        Joint::new(Dist::uniform(2), ch).unwrap()
    }

    fn independent(prior: Dist, q: &Dist) -> Joint {
        let n = prior.len();
        Joint::new(prior, Channel::constant(n, q)).unwrap()
    }

    #[test]
    fn independence_collapses_to_unconditional() {
        let mut rng = rng_from_seed(17);
        let prior = sample_dist(&mut rng, 3);
        let q = sample_dist(&mut rng, 4);
        let j = independent(prior.clone(), &q);
        for alpha in [0.5, 2.0, 3.5] {
            assert!((arimoto(&j, a(alpha)) - renyi(&prior, a(alpha))).abs() < 1e-12);
            assert!((hayashi(&j, a(alpha)) - renyi(&prior, a(alpha))).abs() < 1e-12);
            assert!((manije_hct(&j, a(alpha)) - hct(&prior, a(alpha))).abs() < 1e-12);
            let b = Order::beta(-0.5).unwrap();
            let akm = akm_sharma_mittal(&j, a(alpha), b).unwrap();
            assert!((akm - sharma_mittal(&prior, a(alpha), b)).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_channel_gives_zero() {
        let mut rng = rng_from_seed(5);
        let j = Joint::new(sample_dist(&mut rng, 4), Channel::identity(4)).unwrap();
        for alpha in [0.5, 2.0] {
            assert!(arimoto(&j, a(alpha)).abs() < 1e-14);
            assert!(hayashi(&j, a(alpha)).abs() < 1e-14);
            assert!(manije_hct(&j, a(alpha)).abs() < 1e-14);
            assert!(akm_sharma_mittal(&j, a(alpha), Order::beta(3.0).unwrap()).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn limit_sentinel_is_shannon_conditional() {
        let mut rng = rng_from_seed(6);
        let j = sample_joint(&mut rng, 3, 3);
        let h = shannon_conditional(&j);
        assert_eq!(arimoto(&j, Order::Limit), h);
        assert_eq!(hayashi(&j, Order::Limit), h);
        assert_eq!(manije_hct(&j, Order::Limit), h);
        let ac = augustin_csiszar(&j, Order::Limit, &AcSolverConfig::default()).unwrap();
        assert_eq!(ac.value, h);
    }

    #[test]
    fn hayashi_on_symmetric_joint() {
        let v = hayashi(&bsc(), a(2.0));
        assert!((v + 0.82f64.ln()).abs() < 1e-14);
        assert!((v - 0.19845).abs() < 1e-5);
    }

    #[test]
    fn manije_matches_double_sum() {
        let mut rng = rng_from_seed(9);
        let j = sample_joint(&mut rng, 3, 3);
        let mut direct = 0.0;
        for y in 0..3 {
            let py: f64 = (0..3).map(|x| j.prob(x, y)).sum();
            let sq: f64 = (0..3).map(|x| (j.prob(x, y) / py).powi(2)).sum();
            direct += py * (1.0 - sq);
        }
        assert!((manije_hct(&j, a(2.0)) - direct).abs() < 1e-14);
    }

    #[test]
    fn akm_beta_limit_is_hayashi() {
        let mut rng = rng_from_seed(10);
        for _ in 0..20 {
            let j = sample_joint(&mut rng, 3, 2);
            for alpha in [0.4, 2.5] {
                let v = akm_sharma_mittal(&j, a(alpha), Order::Limit).unwrap();
                assert!((v - hayashi(&j, a(alpha))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ac_independent_prior_is_shannon() {
        let prior = Dist::new(vec![0.9, 0.1]).unwrap();
        let j = independent(prior, &Dist::new(vec![0.4, 0.6]).unwrap());
        let sol = augustin_csiszar(&j, a(2.0), &AcSolverConfig::default()).unwrap();
        assert!((sol.value - 0.325083).abs() < 1e-6, "{}", sol.value);
        assert!(sol.converged);
    }

    #[test]
    fn ac_bsc_below_deterministic_bound() {
        let j = bsc();
        let sol = augustin_csiszar(&j, a(2.0), &AcSolverConfig::default()).unwrap();
        assert!(sol.value <= 0.21073);
        // symmetric optimum r(·|0) = (81/82, 1/82) gives −log 0.82
        assert!((sol.value + 0.82f64.ln()).abs() < 1e-9, "{}", sol.value);
        let at = ac_objective(&j, 2.0, &sol.argmin).unwrap();
        assert!((at - sol.value).abs() < 1e-10);
        for d in &sol.argmin {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_method_agrees() {
        let mut rng = rng_from_seed(12);
        let cfg = AcSolverConfig {
            method: crate::simplex::Method::FixedPoint,
            // the multiplicative map is slow near the boundary
            max_iters: 500_000,
            ..Default::default()
        };
        for _ in 0..10 {
            let j = sample_joint(&mut rng, 3, 3);
            for alpha in [0.5, 2.0] {
                let eg = augustin_csiszar(&j, a(alpha), &AcSolverConfig::default()).unwrap();
                let fp = augustin_csiszar(&j, a(alpha), &cfg).unwrap();
                assert!((eg.value - fp.value).abs() < 1e-6, "{} vs {}", eg.value, fp.value);
            }
        }
    }

    #[test]
    fn ac_objective_rejects_wrong_shape() {
        assert!(ac_objective(&bsc(), 2.0, &[Dist::uniform(2)]).is_err());
    }
}
