//! A single handle for every entropy measure in the crate, pairing each
//! conditional measure with the unconditional one it should not exceed.

use std::fmt;

use serde::Serialize;

use crate::cond_entropies::{akm_sharma_mittal, arimoto, augustin_csiszar, hayashi, manije_hct, shannon_conditional};
use crate::entropies::{hct, renyi, shannon, sharma_mittal, Order};
use crate::error::{Error, Result};
use crate::frameworks::{framework_cond_entropy, framework_entropy, CoreFn, EntropyFramework};
use crate::prob::{Dist, Joint};
use crate::simplex::SolverConfig;
use crate::vulnerability::{bayes_vulnerability, posterior_vulnerability, prior_vulnerability, VulnSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Shannon,
    ShannonCond,
    Renyi(Order),
    Hct(Order),
    SharmaMittal(Order, Order),
    Arimoto(Order),
    Hayashi(Order),
    AugustinCsiszar(Order, SolverConfig),
    Manije(Order),
    Akm(Order, Order),
    GEntropy(VulnSpec),
    GPosterior(VulnSpec),
    GBayes(VulnSpec),
    Framework(EntropyFramework),
}

/// A measured value with solver metadata. Closed forms report zero
/// iterations and restarts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    /// False only for heuristic decision-rule searches.
    pub certified: bool,
}

impl Evaluation {
    pub fn exact(value: f64) -> Self {
        Evaluation {
            value,
            iterations: 0,
            converged: true,
            restarts: 0,
            certified: true,
        }
    }
}

fn soft(spec: &VulnSpec) -> bool {
    spec.gain.is_soft()
}

impl Measure {
    /// The name used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Measure::Shannon => "shannon",
            Measure::ShannonCond => "shannon-cond",
            Measure::Renyi(_) => "renyi",
            Measure::Hct(_) => "hct",
            Measure::SharmaMittal(..) => "sm",
            Measure::Arimoto(_) => "arimoto",
            Measure::Hayashi(_) => "hayashi",
            Measure::AugustinCsiszar(..) => "ac",
            Measure::Manije(_) => "manije",
            Measure::Akm(..) => "akm",
            Measure::GEntropy(_) => "g-entropy",
            Measure::GPosterior(_) => "g-posterior",
            Measure::GBayes(_) => "g-bayes",
            Measure::Framework(_) => "framework",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Measure::Renyi(a)
            | Measure::Hct(a)
            | Measure::SharmaMittal(a, _)
            | Measure::Arimoto(a)
            | Measure::Hayashi(a)
            | Measure::AugustinCsiszar(a, _)
            | Measure::Manije(a)
            | Measure::Akm(a, _) => Some(a.get()),
            _ => None,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Measure::SharmaMittal(_, b) | Measure::Akm(_, b) => Some(b.get()),
            _ => None,
        }
    }

    /// Same measure at another order, for sweeps.
    pub fn with_alpha(&self, alpha: Order) -> Result<Measure> {
        Ok(match self {
            Measure::Renyi(_) => Measure::Renyi(alpha),
            Measure::Hct(_) => Measure::Hct(alpha),
            Measure::SharmaMittal(_, b) => Measure::SharmaMittal(alpha, *b),
            Measure::Arimoto(_) => Measure::Arimoto(alpha),
            Measure::Hayashi(_) => Measure::Hayashi(alpha),
            Measure::AugustinCsiszar(_, c) => Measure::AugustinCsiszar(alpha, c.clone()),
            Measure::Manije(_) => Measure::Manije(alpha),
            Measure::Akm(_, b) => Measure::Akm(alpha, *b),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "measure '{}' has no order to sweep",
                    other.name()
                )))
            }
        })
    }

    pub fn is_conditional(&self) -> bool {
        !matches!(
            self,
            Measure::Shannon | Measure::Renyi(_) | Measure::Hct(_) | Measure::SharmaMittal(..) | Measure::GEntropy(_)
        )
    }

    pub fn is_unconditional(&self) -> bool {
        !self.is_conditional() || matches!(self, Measure::Framework(_))
    }

    /// True when a value comes from a numerical optimizer rather than a
    /// closed form.
    pub fn is_optimizer_valued(&self) -> bool {
        match self {
            Measure::AugustinCsiszar(a, _) => *a != Order::Limit,
            Measure::GEntropy(s) | Measure::GPosterior(s) => soft(s),
            // finite Bayes rules above the enumeration cap are heuristic too
            Measure::GBayes(_) => true,
            Measure::Framework(fw) => core_uses_optimizer(fw.core()),
            _ => false,
        }
    }

    /// The unconditional measure this one is compared with under
    /// conditioning: `H(X|Y) ≤ H(X)`.
    pub fn unconditional(&self) -> Option<Measure> {
        Some(match self {
            Measure::ShannonCond | Measure::AugustinCsiszar(..) => Measure::Shannon,
            Measure::Arimoto(a) | Measure::Hayashi(a) => Measure::Renyi(*a),
            Measure::Manije(a) => Measure::Hct(*a),
            Measure::Akm(a, b) => Measure::SharmaMittal(*a, *b),
            Measure::GPosterior(s) | Measure::GBayes(s) => Measure::GEntropy(s.clone()),
            Measure::Framework(fw) => Measure::Framework(fw.clone()),
            _ => return None,
        })
    }

    /// Alphabet size of `X` forced by a finite gain table.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Measure::GEntropy(s) | Measure::GPosterior(s) | Measure::GBayes(s) => {
                CoreFn::neg_prior_vuln(s.clone()).fixed_dim()
            }
            Measure::Framework(fw) => fw.core().fixed_dim(),
            _ => None,
        }
    }

    pub fn eval_dist(&self, p: &Dist) -> Result<Evaluation> {
        Ok(match self {
            Measure::Shannon => Evaluation::exact(shannon(p)),
            Measure::Renyi(a) => Evaluation::exact(renyi(p, *a)),
            Measure::Hct(a) => Evaluation::exact(hct(p, *a)),
            Measure::SharmaMittal(a, b) => Evaluation::exact(sharma_mittal(p, *a, *b)),
            Measure::GEntropy(spec) => {
                let o = prior_vulnerability(p, spec)?;
                Evaluation {
                    value: -o.value,
                    iterations: o.iterations,
                    converged: o.converged,
                    restarts: if soft(spec) { spec.solver.restarts } else { 0 },
                    certified: o.certified,
                }
            }
            Measure::Framework(fw) => Evaluation::exact(framework_entropy(fw, p)?),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "'{}' is a conditional measure and needs a joint distribution",
                    other.name()
                )))
            }
        })
    }

    pub fn eval_joint(&self, j: &Joint) -> Result<Evaluation> {
        Ok(match self {
            Measure::ShannonCond => Evaluation::exact(shannon_conditional(j)),
            Measure::Arimoto(a) => Evaluation::exact(arimoto(j, *a)),
            Measure::Hayashi(a) => Evaluation::exact(hayashi(j, *a)),
            Measure::Manije(a) => Evaluation::exact(manije_hct(j, *a)),
            Measure::Akm(a, b) => Evaluation::exact(akm_sharma_mittal(j, *a, *b)?),
            Measure::AugustinCsiszar(a, cfg) => {
                let s = augustin_csiszar(j, *a, cfg)?;
                Evaluation {
                    value: s.value,
                    iterations: s.iterations,
                    converged: s.converged,
                    restarts: s.restarts,
                    certified: true,
                }
            }
            Measure::GPosterior(spec) => {
                let o = posterior_vulnerability(j, spec)?;
                Evaluation {
                    value: -o.value,
                    iterations: o.iterations,
                    converged: o.converged,
                    restarts: if soft(spec) { spec.solver.restarts } else { 0 },
                    certified: o.certified,
                }
            }
            Measure::GBayes(spec) => {
                let o = bayes_vulnerability(j, spec)?.outcome;
                Evaluation {
                    value: -o.value,
                    iterations: o.iterations,
                    converged: o.converged,
                    restarts: if soft(spec) { spec.solver.restarts } else { 0 },
                    certified: o.certified,
                }
            }
            Measure::Framework(fw) => Evaluation::exact(framework_cond_entropy(fw, j)?),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "'{}' is an unconditional measure and needs a distribution",
                    other.name()
                )))
            }
        })
    }

    /// Value only.
    pub fn value_dist(&self, p: &Dist) -> Result<f64> {
        self.eval_dist(p).map(|e| e.value)
    }

    /// Value only.
    pub fn value_joint(&self, j: &Joint) -> Result<f64> {
        self.eval_joint(j).map(|e| e.value)
    }
}

fn core_uses_optimizer(core: &CoreFn) -> bool {
    match core {
        CoreFn::NegPriorVuln(s) => soft(s),
        CoreFn::Mapped { core, .. } => core_uses_optimizer(core),
        _ => false,
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::GEntropy(s) | Measure::GPosterior(s) | Measure::GBayes(s) => write!(f, "{}({s})", self.name()),
            Measure::Framework(fw) => write!(f, "{fw}"),
            m => {
                write!(f, "{}", m.name())?;
                match (m.alpha(), m.beta()) {
                    (Some(a), Some(b)) => write!(f, "(alpha={a}, beta={b})"),
                    (Some(a), None) => write!(f, "(alpha={a})"),
                    _ => Ok(()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kn_mean::MonotoneFn;
    use crate::prob::{rng_from_seed, sample_joint};
    use crate::vulnerability::GainFn;

    #[test]
    fn pairs_and_dispatch() {
        let mut rng = rng_from_seed(1);
        let j = sample_joint(&mut rng, 3, 2);
        let a2 = Order::alpha(2.0).unwrap();
        for m in [
            Measure::ShannonCond,
            Measure::Arimoto(a2),
            Measure::Hayashi(a2),
            Measure::Manije(a2),
            Measure::Akm(a2, Order::beta(0.5).unwrap()),
            Measure::AugustinCsiszar(a2, SolverConfig::default()),
        ] {
            let u = m.unconditional().unwrap();
            let c = m.value_joint(&j).unwrap();
            let h = u.value_dist(j.prior()).unwrap();
            assert!(c <= h + 1e-9, "{m}: {c} > {h}");
            assert!(m.value_dist(j.prior()).is_err());
        }
        assert!(Measure::Shannon.value_joint(&j).is_err());
        assert!(Measure::Shannon.unconditional().is_none());
    }

    #[test]
    fn optimizer_flags() {
        let a2 = Order::alpha(2.0).unwrap();
        assert!(Measure::AugustinCsiszar(a2, SolverConfig::default()).is_optimizer_valued());
        assert!(!Measure::AugustinCsiszar(Order::Limit, SolverConfig::default()).is_optimizer_valued());
        assert!(!Measure::Arimoto(a2).is_optimizer_valued());
        let spec = VulnSpec::new(MonotoneFn::identity(), MonotoneFn::identity(), GainFn::log_soft());
        assert!(Measure::GPosterior(spec.clone()).is_optimizer_valued());
        let fw = EntropyFramework::new(MonotoneFn::identity(), CoreFn::neg_prior_vuln(spec), crate::frameworks::Aggregator::Eavg).unwrap();
        assert!(Measure::Framework(fw).is_optimizer_valued());
    }

    #[test]
    fn sweep_reorders() {
        let m = Measure::Arimoto(Order::Limit);
        assert_eq!(m.with_alpha(Order::alpha(2.0).unwrap()).unwrap().alpha(), Some(2.0));
        assert!(Measure::Shannon.with_alpha(Order::Limit).is_err());
        assert_eq!(m.to_string(), "arimoto(alpha=1)");
    }
}
