//! `(η, F)`-entropies `η(F(p))` and the conditional constructors built on
//! them: η-averaging (EAVG), η-geometric mean (EGM) and `(η, ψ)`-KN
//! averaging (EPKNAVG), plus the rewrite of an EPKNAVG framework into an
//! equivalent EAVG one and a numerical core-concavity check.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropies::{hct, power_sum, shannon, Order};
use crate::error::{Error, Result};
use crate::kn_mean::{weighted_kn_mean, MonotoneFn};
use crate::prob::{rng_from_seed, sample_dist, sample_small_size, sample_sparse_dist, trial_seed, Dist, Joint, Sparsity};
use crate::syntax::Term;
use crate::vulnerability::{prior_vulnerability, GainFn, VulnSpec};

/// Slack in the concavity inequality.
pub const CCV_TOL: f64 = 1e-10;

/// Trials used by [`to_eavg`] to check its hypothesis.
pub const CONCAVITY_TRIALS: usize = 10_000;

/// What is known in closed form about a core's curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Affine,
    Concave,
    Convex,
    Unknown,
}

impl Shape {
    fn flipped(self) -> Shape {
        match self {
            Shape::Concave => Shape::Convex,
            Shape::Convex => Shape::Concave,
            s => s,
        }
    }
}

/// A core `F: Δ_X → ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreFn {
    Shannon,
    /// `‖p‖_α^α = Σ p(x)^α`.
    PowerSum(f64),
    Hct(Order),
    /// `−V_{φ,g}(X)`.
    NegPriorVuln(Box<VulnSpec>),
    /// `outer ∘ core`.
    Mapped { outer: MonotoneFn, core: Box<CoreFn> },
}

fn concave_increasing(f: &MonotoneFn) -> bool {
    match f {
        MonotoneFn::Affine { a, .. } => *a > 0.0,
        MonotoneFn::Log => true,
        MonotoneFn::QLog(q) => *q >= 0.0,
        MonotoneFn::Power(r) => *r > 0.0 && *r <= 1.0,
        _ => false,
    }
}

impl CoreFn {
    pub fn power_sum(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(CoreFn::PowerSum(alpha))
    }

    pub fn neg_prior_vuln(spec: VulnSpec) -> Self {
        CoreFn::NegPriorVuln(Box::new(spec))
    }

    pub fn mapped(outer: MonotoneFn, core: CoreFn) -> Self {
        CoreFn::Mapped {
            outer,
            core: Box::new(core),
        }
    }

    pub fn eval(&self, p: &Dist) -> Result<f64> {
        match self {
            CoreFn::Shannon => Ok(shannon(p)),
            CoreFn::PowerSum(a) => Ok(power_sum(p, *a)),
            CoreFn::Hct(a) => Ok(hct(p, *a)),
            CoreFn::NegPriorVuln(spec) => prior_vulnerability(p, spec).map(|o| -o.value),
            CoreFn::Mapped { outer, core } => outer.apply(core.eval(p)?),
        }
    }

    /// Alphabet size forced by the core (finite gain tables), if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            CoreFn::NegPriorVuln(spec) => fixed_dim_of_gain(&spec.gain),
            CoreFn::Mapped { core, .. } => core.fixed_dim(),
            _ => None,
        }
    }

    /// Curvature known in closed form.
    pub fn known_shape(&self) -> Shape {
        match self {
            CoreFn::Shannon | CoreFn::Hct(_) => Shape::Concave,
            CoreFn::PowerSum(a) if *a < 1.0 => Shape::Concave,
            CoreFn::PowerSum(a) if *a > 1.0 => Shape::Convex,
            CoreFn::PowerSum(_) => Shape::Affine,
            // V is a max of convex functions of p when φ is concave and increasing
            CoreFn::NegPriorVuln(spec) if concave_increasing(&spec.phi) => Shape::Concave,
            CoreFn::NegPriorVuln(_) => Shape::Unknown,
            CoreFn::Mapped { outer, core } => match outer {
                MonotoneFn::Affine { a, .. } if *a > 0.0 => core.known_shape(),
                MonotoneFn::Affine { .. } | MonotoneFn::Negate => core.known_shape().flipped(),
                _ => Shape::Unknown,
            },
        }
    }

    pub fn from_term(t: &Term) -> Result<Self> {
        match t.name() {
            Some("shannon") => {
                t.expect_arity(0)?;
                Ok(CoreFn::Shannon)
            }
            Some("pnorm-power") => CoreFn::power_sum(t.expect_arity(1)?[0].as_num()?),
            Some("hct") => Ok(CoreFn::Hct(Order::alpha(t.expect_arity(1)?[0].as_num()?)?)),
            Some("negvuln") => {
                let phi = match t.keyed("phi") {
                    Some(f) => MonotoneFn::from_term(f)?,
                    None => MonotoneFn::identity(),
                };
                let gain = t
                    .keyed("gain")
                    .ok_or_else(|| Error::Parse("negvuln needs gain=...".into()))?;
                Ok(CoreFn::neg_prior_vuln(VulnSpec::new(
                    phi,
                    MonotoneFn::identity(),
                    GainFn::from_term(gain)?,
                )))
            }
            Some("map") => {
                let a = t.expect_arity(2)?;
                Ok(CoreFn::mapped(MonotoneFn::from_term(a[0])?, CoreFn::from_term(a[1])?))
            }
            Some(other) => Err(Error::Parse(format!("unknown core '{other}'"))),
            None => Err(Error::Parse("expected a core, found a number".into())),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        CoreFn::from_term(&Term::parse(text)?)
    }
}

fn fixed_dim_of_gain(g: &GainFn) -> Option<usize> {
    match g {
        GainFn::Finite(t) => Some(t.n_secrets()),
        GainFn::SoftZeroOne => None,
        GainFn::Transformed { inner, .. } => fixed_dim_of_gain(inner),
    }
}

impl fmt::Display for CoreFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreFn::Shannon => write!(f, "shannon"),
            CoreFn::PowerSum(a) => write!(f, "pnorm-power({a})"),
            CoreFn::Hct(a) => write!(f, "hct({})", a.get()),
            CoreFn::NegPriorVuln(spec) => write!(f, "negvuln(phi={}, gain={})", spec.phi, spec.gain),
            CoreFn::Mapped { outer, core } => write!(f, "map({outer},{core})"),
        }
    }
}

/// How posterior core values are combined.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregator {
    Eavg,
    Egm,
    Epknavg(MonotoneFn),
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregator::Eavg => write!(f, "eavg"),
            Aggregator::Egm => write!(f, "egm"),
            Aggregator::Epknavg(psi) => write!(f, "epknavg({psi})"),
        }
    }
}

/// `η`, a core `F` and an aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyFramework {
    eta: MonotoneFn,
    core: CoreFn,
    agg: Aggregator,
}

impl EntropyFramework {
    pub fn new(eta: MonotoneFn, core: CoreFn, agg: Aggregator) -> Result<Self> {
        eta.validate()?;
        if !eta.is_increasing() {
            return Err(Error::InvalidParameter(format!("eta = {eta} is not strictly increasing")));
        }
        if let Aggregator::Epknavg(psi) = &agg {
            psi.validate()?;
        }
        Ok(EntropyFramework { eta, core, agg })
    }

    pub fn eta(&self) -> &MonotoneFn {
        &self.eta
    }

    pub fn core(&self) -> &CoreFn {
        &self.core
    }

    pub fn aggregator(&self) -> &Aggregator {
        &self.agg
    }

    pub fn with_aggregator(&self, agg: Aggregator) -> Result<Self> {
        EntropyFramework::new(self.eta.clone(), self.core.clone(), agg)
    }

    /// `η` and core for `(1/(1−α)) log Σ p^α`. For `α > 1` the core is
    /// negated so that `η` stays increasing.
    fn renyi_parts(alpha: f64) -> Result<(MonotoneFn, CoreFn)> {
        let order = Order::alpha(alpha)?;
        if order == Order::Limit {
            return Err(Error::InvalidParameter("use the Shannon framework at alpha = 1".into()));
        }
        let scale = MonotoneFn::affine(1.0 / (1.0 - alpha), 0.0)?;
        let core = CoreFn::power_sum(alpha)?;
        Ok(if alpha < 1.0 {
            (MonotoneFn::compose(scale, MonotoneFn::Log), core)
        } else {
            (
                MonotoneFn::compose(scale, MonotoneFn::compose(MonotoneFn::Log, MonotoneFn::Negate)),
                CoreFn::mapped(MonotoneFn::Negate, core),
            )
        })
    }

    /// Rényi entropy with EAVG, whose conditional form is Hayashi's.
    pub fn hayashi(alpha: f64) -> Result<Self> {
        let (eta, core) = Self::renyi_parts(alpha)?;
        EntropyFramework::new(eta, core, Aggregator::Eavg)
    }

    /// Rényi entropy with KN averaging under `ψ = |t|^{1/α}`, whose
    /// conditional form is Arimoto's. `ψ` is decreasing for `α > 1`.
    pub fn arimoto(alpha: f64) -> Result<Self> {
        let (eta, core) = Self::renyi_parts(alpha)?;
        let root = MonotoneFn::power(1.0 / alpha)?;
        let psi = if alpha < 1.0 {
            root
        } else {
            MonotoneFn::compose(root, MonotoneFn::Negate)
        };
        EntropyFramework::new(eta, core, Aggregator::Epknavg(psi))
    }

    pub fn shannon() -> Self {
        EntropyFramework {
            eta: MonotoneFn::identity(),
            core: CoreFn::Shannon,
            agg: Aggregator::Eavg,
        }
    }

    pub fn from_term(t: &Term) -> Result<Self> {
        if t.name() != Some("framework") {
            return Err(Error::Parse("expected framework(eta=..., core=..., agg=...)".into()));
        }
        for a in t.args() {
            match a.key.as_deref() {
                Some("eta") | Some("core") | Some("agg") => {}
                Some(k) => return Err(Error::Parse(format!("unknown framework field '{k}'"))),
                None => return Err(Error::Parse("framework fields must be named".into())),
            }
        }
        let eta = match t.keyed("eta") {
            Some(e) => MonotoneFn::from_term(e)?,
            None => MonotoneFn::identity(),
        };
        let core = CoreFn::from_term(
            t.keyed("core")
                .ok_or_else(|| Error::Parse("framework needs core=...".into()))?,
        )?;
        let agg = match t.keyed("agg") {
            None => Aggregator::Eavg,
            Some(a) => match a.name() {
                Some("eavg") => Aggregator::Eavg,
                Some("egm") => Aggregator::Egm,
                Some("epknavg") => Aggregator::Epknavg(MonotoneFn::from_term(a.expect_arity(1)?[0])?),
                _ => return Err(Error::Parse("agg must be eavg, egm or epknavg(psi)".into())),
            },
        };
        EntropyFramework::new(eta, core, agg).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        EntropyFramework::from_term(&Term::parse(text)?)
    }
}

impl fmt::Display for EntropyFramework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "framework(eta={}, core={}, agg={})", self.eta, self.core, self.agg)
    }
}

/// `η(F(p))`.
pub fn framework_entropy(fw: &EntropyFramework, p: &Dist) -> Result<f64> {
    fw.eta.apply(fw.core.eval(p)?)
}

/// `η` of the aggregated posterior core values.
pub fn framework_cond_entropy(fw: &EntropyFramework, j: &Joint) -> Result<f64> {
    let mut values = Vec::with_capacity(j.support().len());
    let mut weights = Vec::with_capacity(j.support().len());
    for (py, post) in j.supported() {
        values.push(fw.core.eval(post)?);
        weights.push(py);
    }
    let inner = match &fw.agg {
        Aggregator::Eavg => values.iter().zip(&weights).map(|(v, w)| v * w).sum(),
        Aggregator::Egm => {
            if let Some(&v) = values.iter().find(|&&v| v < 0.0) {
                return Err(Error::domain("egm", v, "[0, inf)"));
            }
            if values.contains(&0.0) {
                0.0
            } else {
                values
                    .iter()
                    .zip(&weights)
                    .map(|(v, w)| w * v.ln())
                    .sum::<f64>()
                    .exp()
            }
        }
        Aggregator::Epknavg(psi) => weighted_kn_mean(&values, &weights, psi)?,
    };
    fw.eta.apply(inner)
}

/// A concavity counterexample `F(λp + (1−λ)q) < λF(p) + (1−λ)F(q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcvWitness {
    pub trial: usize,
    pub seed: u64,
    pub p: Dist,
    pub q: Dist,
    pub lambda: f64,
    /// `F(λp + (1−λ)q)`.
    pub lhs: f64,
    /// `λF(p) + (1−λ)F(q)`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcvReport {
    pub core: String,
    pub trials: usize,
    pub failures: usize,
    /// Largest `rhs − lhs` seen; at most [`CCV_TOL`] on a pass.
    pub worst_violation: f64,
    pub witness: Option<CcvWitness>,
    pub passed: bool,
}

/// One concavity trial, replayable from its seed.
pub fn ccv_trial(core: &CoreFn, trial: usize, seed: u64) -> Result<CcvWitness> {
    let s = trial_seed(seed, trial as u64);
    let mut rng = rng_from_seed(s);
    let n = core.fixed_dim().unwrap_or_else(|| sample_small_size(&mut rng));
    // every fourth trial pairs a vertex with an interior point
    let p = if trial % 4 == 3 {
        sample_sparse_dist(&mut rng, n, Sparsity::Keep(1))
    } else {
        sample_dist(&mut rng, n)
    };
    let q = sample_dist(&mut rng, n);
    let lambda: f64 = rng.random_range(0.05..0.95);
    let m = Dist::mix(&p, &q, lambda)?;
    let lhs = core.eval(&m)?;
    let rhs = lambda * core.eval(&p)? + (1.0 - lambda) * core.eval(&q)?;
    Ok(CcvWitness {
        trial,
        seed: s,
        p,
        q,
        lambda,
        lhs,
        rhs,
    })
}

/// Samples `(p, q, λ)` and tests `F(λp + (1−λ)q) ≥ λF(p) + (1−λ)F(q) − tol`.
pub fn check_ccv(core: &CoreFn, trials: usize, seed: u64) -> Result<CcvReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let results = (0..trials)
        .into_par_iter()
        .map(|i| ccv_trial(core, i, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = f64::NEG_INFINITY;
    let mut witness: Option<CcvWitness> = None;
    let mut failures = 0;
    for w in results {
        let gap = w.rhs - w.lhs;
        if gap > CCV_TOL {
            failures += 1;
        }
        if gap > worst {
            worst = gap;
            if gap > CCV_TOL {
                witness = Some(w);
            }
        }
    }
    Ok(CcvReport {
        core: core.to_string(),
        trials,
        failures,
        worst_violation: worst,
        passed: failures == 0,
        witness,
    })
}

/// An EAVG framework equal to an EPKNAVG one, with the outcome of the
/// concavity check on the new core.
#[derive(Debug, Clone, PartialEq)]
pub struct Concavified {
    pub framework: EntropyFramework,
    pub check: CcvReport,
    pub warning: Option<String>,
}

/// [`to_eavg_with`] using [`CONCAVITY_TRIALS`] and seed 0.
pub fn to_eavg(fw: &EntropyFramework) -> Result<Concavified> {
    to_eavg_with(fw, CONCAVITY_TRIALS, 0)
}

/// Rewrites `η(M_ψ[F])` as `η'(E[F'])`:
/// `η' = η∘ψ⁻¹, F' = ψ∘F` for increasing `ψ`, and
/// `η' = η∘ψ⁻¹∘(−·), F' = −ψ∘F` for decreasing `ψ`.
///
/// The result is correct either way; the hypothesis that `F'` is concave
/// is what makes it a legitimate EAVG framework, and its failure is
/// reported as a warning.
pub fn to_eavg_with(fw: &EntropyFramework, trials: usize, seed: u64) -> Result<Concavified> {
    let Aggregator::Epknavg(psi) = &fw.agg else {
        return Err(Error::InvalidParameter("to_eavg needs an epknavg framework".into()));
    };
    let mapped = CoreFn::mapped(psi.clone(), fw.core.clone());
    let (eta, core) = if psi.is_increasing() {
        (MonotoneFn::compose(fw.eta.clone(), psi.inverse_fn()), mapped)
    } else {
        (
            MonotoneFn::compose(
                fw.eta.clone(),
                MonotoneFn::compose(psi.inverse_fn(), MonotoneFn::Negate),
            ),
            CoreFn::mapped(MonotoneFn::Negate, mapped),
        )
    };
    let framework = EntropyFramework::new(eta, core, Aggregator::Eavg)?;
    let check = check_ccv(&framework.core, trials, seed)?;
    let warning = (!check.passed).then(|| {
        format!(
            "core {} failed the concavity check (worst violation {:.3e})",
            framework.core, check.worst_violation
        )
    });
    Ok(Concavified {
        framework,
        check,
        warning,
    })
}
