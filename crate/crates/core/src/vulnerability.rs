//! Generalized g-vulnerabilities: prior `max_a M_φ[g(X,a)]`, average
//! posterior `M_ψ[max_a M_φ[g(X,a) | Y]]` and Bayes
//! `max_δ M_φ[M_ψ[g(X,δ(Y)) | X]]`, together with the negated g-entropies
//! and the increasing-transform rewrite of a specification.
//!
//! Finite gain tables are optimized exactly: column maxima for the prior
//! and posterior forms, brute force over all decision rules for the Bayes
//! form up to [`ENUMERATION_CAP`] rules. Soft 0-1 gains take actions in the
//! probability simplex and are optimized with the multi-start simplex
//! solver over the `floor`-interior.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kn_mean::{weighted_kn_mean, MonotoneFn};
use crate::prob::{rng_from_seed, Dist, Joint};
use crate::simplex::{minimize, Objective, SolverConfig};
use crate::syntax::Term;

/// Largest number of decision rules enumerated exactly.
pub const ENUMERATION_CAP: f64 = 1e6;

/// A rectangular table `g(x, a)`: rows are secrets, columns actions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainTable {
    rows: Vec<Vec<f64>>,
}

impl GainTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_a = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Dimension("gain table has no rows".into()))?;
        if n_a == 0 || rows.iter().any(|r| r.len() != n_a) {
            return Err(Error::Dimension("gain table must be rectangular and non-empty".into()));
        }
        if rows.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("gain values must be finite".into()));
        }
        Ok(GainTable { rows })
    }

    /// `g(x, a) = 1` iff `a = x`.
    pub fn identity(n: usize) -> Self {
        GainTable {
            rows: (0..n)
                .map(|x| (0..n).map(|a| if a == x { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn n_secrets(&self) -> usize {
        self.rows.len()
    }

    pub fn n_actions(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, x: usize, a: usize) -> f64 {
        self.rows[x][a]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// A gain function `g(x, a)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GainFn {
    Finite(GainTable),
    /// Actions are distributions `r` over secrets and `g(x, r) = r(x)`.
    SoftZeroOne,
    /// `eta(inner(x, a))`, applied pointwise.
    Transformed { eta: MonotoneFn, inner: Box<GainFn> },
}

impl GainFn {
    pub fn transformed(eta: MonotoneFn, inner: GainFn) -> Self {
        GainFn::Transformed {
            eta,
            inner: Box::new(inner),
        }
    }

    /// `log g₀₋₁`.
    pub fn log_soft() -> Self {
        GainFn::transformed(MonotoneFn::Log, GainFn::SoftZeroOne)
    }

    fn base(&self) -> &GainFn {
        match self {
            GainFn::Transformed { inner, .. } => inner.base(),
            g => g,
        }
    }

    /// The composite pointwise transform applied on top of the base gain.
    fn chain(&self) -> Option<MonotoneFn> {
        match self {
            GainFn::Transformed { eta, inner } => Some(match inner.chain() {
                Some(c) => MonotoneFn::compose(eta.clone(), c),
                None => eta.clone(),
            }),
            _ => None,
        }
    }

    pub fn is_soft(&self) -> bool {
        matches!(self.base(), GainFn::SoftZeroOne)
    }

    /// The table with every transform applied.
    fn effective_table(&self) -> Result<Option<GainTable>> {
        let GainFn::Finite(t) = self.base() else {
            return Ok(None);
        };
        let Some(chain) = self.chain() else {
            return Ok(Some(t.clone()));
        };
        let rows = t
            .rows
            .iter()
            .map(|r| r.iter().map(|&g| chain.apply(g)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        GainTable::new(rows).map(Some)
    }

    fn soft_transform(&self) -> MonotoneFn {
        self.chain().unwrap_or_else(MonotoneFn::identity)
    }

    /// `g(x, a)` for a concrete action.
    pub fn eval(&self, x: usize, action: &Action) -> Result<f64> {
        let base = match (self.base(), action) {
            (GainFn::Finite(t), Action::Index(a)) => {
                if x >= t.n_secrets() || *a >= t.n_actions() {
                    return Err(Error::Dimension(format!("no gain entry ({x}, {a})")));
                }
                t.get(x, *a)
            }
            (GainFn::SoftZeroOne, Action::Mixed(r)) => {
                if x >= r.len() {
                    return Err(Error::Dimension(format!("action has no entry {x}")));
                }
                r.get(x)
            }
            _ => return Err(Error::InvalidParameter("action does not match the gain's action set".into())),
        };
        match self.chain() {
            Some(c) => c.apply(base),
            None => Ok(base),
        }
    }

    pub fn from_term(t: &Term) -> Result<Self> {
        match t.name() {
            Some("soft01") => {
                t.expect_arity(0)?;
                Ok(GainFn::SoftZeroOne)
            }
            Some("identity-gain") | Some("bayes") => {
                let n = t.expect_arity(1)?[0].as_num()?;
                if n < 1.0 || n.fract() != 0.0 {
                    return Err(Error::Parse(format!("bad alphabet size {n}")));
                }
                Ok(GainFn::Finite(GainTable::identity(n as usize)))
            }
            Some("transform") => {
                let a = t.expect_arity(2)?;
                Ok(GainFn::transformed(MonotoneFn::from_term(a[0])?, GainFn::from_term(a[1])?))
            }
            Some(other) => Err(Error::Parse(format!("unknown gain '{other}'"))),
            None => Err(Error::Parse("expected a gain, found a number".into())),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        GainFn::from_term(&Term::parse(text)?)
    }
}

impl fmt::Display for GainFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainFn::Finite(t) => write!(f, "table({}x{})", t.n_secrets(), t.n_actions()),
            GainFn::SoftZeroOne => write!(f, "soft01"),
            GainFn::Transformed { eta, inner } => write!(f, "transform({eta},{inner})"),
        }
    }
}

/// An adversary action.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Action {
    Index(usize),
    Mixed(Dist),
}

/// `δ: Y → A` over the supported outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRule {
    pub outputs: Vec<usize>,
    pub actions: Vec<Action>,
}

/// `(φ, ψ, g)` plus optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct VulnSpec {
    pub phi: MonotoneFn,
    pub psi: MonotoneFn,
    pub gain: GainFn,
    pub solver: SolverConfig,
    /// Fall back to coordinate ascent above the enumeration cap.
    pub allow_heuristic: bool,
}

impl VulnSpec {
    pub fn new(phi: MonotoneFn, psi: MonotoneFn, gain: GainFn) -> Self {
        VulnSpec {
            phi,
            psi,
            gain,
            solver: SolverConfig::default(),
            allow_heuristic: true,
        }
    }
}

impl fmt::Display for VulnSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi={}, psi={}, gain={}", self.phi, self.psi, self.gain)
    }
}

/// A vulnerability value with optimizer metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VulnOutcome {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// False when the value comes from a heuristic search.
    pub certified: bool,
    /// Interior floor on simplex actions, when one was used.
    pub floor: Option<f64>,
}

/// Bayes vulnerability with its optimal rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesOutcome {
    #[serde(flatten)]
    pub outcome: VulnOutcome,
    pub rule: DecisionRule,
}

fn check_size(gain: &GainFn, n_x: usize) -> Result<()> {
    if let GainFn::Finite(t) = gain.base() {
        if t.n_secrets() != n_x {
            return Err(Error::Dimension(format!(
                "gain table has {} rows but the alphabet has {} symbols",
                t.n_secrets(),
                n_x
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// prior
// ---------------------------------------------------------------------------

/// `max_r Σ_x w(x)·σ φ(T(r(x)))` as a minimization of the negation, where
/// `σ` orients `φ` upward.
struct SoftPrior<'a> {
    weights: &'a [f64],
    phi: &'a MonotoneFn,
    transform: &'a MonotoneFn,
    sign: f64,
    sizes: [usize; 1],
}

impl Objective for SoftPrior<'_> {
    fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn eval(&self, r: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        let mut acc = 0.0;
        for (x, &w) in self.weights.iter().enumerate() {
            let g = self.transform.apply(r[x])?;
            if let Some(gr) = grad.as_deref_mut() {
                gr[x] = if w > 0.0 {
                    -self.sign * w * self.phi.derivative(g)? * self.transform.derivative(r[x])?
                } else {
                    0.0
                };
            }
            if w > 0.0 {
                acc += w * self.phi.apply(g)?;
            }
        }
        Ok(-self.sign * acc)
    }
}

fn soft_prior(p: &[f64], spec: &VulnSpec) -> Result<(VulnOutcome, Dist)> {
    let transform = spec.gain.soft_transform();
    let obj = SoftPrior {
        weights: p,
        phi: &spec.phi,
        transform: &transform,
        sign: spec.phi.direction().sign(),
        sizes: [p.len()],
    };
    let sol = minimize(&obj, &spec.solver)?;
    let gains = sol
        .point
        .iter()
        .map(|&r| transform.apply(r))
        .collect::<Result<Vec<_>>>()?;
    let value = weighted_kn_mean(&gains, p, &spec.phi)?;
    Ok((
        VulnOutcome {
            value,
            iterations: sol.iterations,
            converged: sol.converged,
            certified: true,
            floor: Some(spec.solver.floor),
        },
        Dist::from_weights(sol.point)?,
    ))
}

/// Column maximum of `M_φ[g(X, a)]`; ties go to the lowest action.
fn finite_prior(p: &[f64], table: &GainTable, phi: &MonotoneFn) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for a in 0..table.n_actions() {
        let column: Vec<f64> = (0..table.n_secrets()).map(|x| table.get(x, a)).collect();
        let m = weighted_kn_mean(&column, p, phi)?;
        if best.is_none_or(|(b, _)| m > b) {
            best = Some((m, a));
        }
    }
    Ok(best.expect("table has at least one action"))
}

fn prior_with_action(p: &Dist, spec: &VulnSpec) -> Result<(VulnOutcome, Action)> {
    check_size(&spec.gain, p.len())?;
    match spec.gain.effective_table()? {
        Some(table) => {
            let (value, a) = finite_prior(p.probs(), &table, &spec.phi)?;
            Ok((
                VulnOutcome {
                    value,
                    iterations: 0,
                    converged: true,
                    certified: true,
                    floor: None,
                },
                Action::Index(a),
            ))
        }
        None => {
            let (out, r) = soft_prior(p.probs(), spec)?;
            Ok((out, Action::Mixed(r)))
        }
    }
}

/// `V_{φ,g}(X) = max_a M_φ[g(X, a)]`.
pub fn prior_vulnerability(p: &Dist, spec: &VulnSpec) -> Result<VulnOutcome> {
    prior_with_action(p, spec).map(|(o, _)| o)
}

// ---------------------------------------------------------------------------
// posterior
// ---------------------------------------------------------------------------

/// `V̂_{ψ,φ,g}(X|Y) = M_ψ[max_a M_φ[g(X,a) | Y]]`. The inner maximum is a
/// prior vulnerability of each posterior.
pub fn posterior_vulnerability(j: &Joint, spec: &VulnSpec) -> Result<VulnOutcome> {
    check_size(&spec.gain, j.n_x())?;
    let mut inner = Vec::with_capacity(j.support().len());
    let mut weights = Vec::with_capacity(j.support().len());
    let mut iterations = 0;
    let mut converged = true;
    let mut floor = None;
    for (py, post) in j.supported() {
        let o = prior_vulnerability(post, spec)?;
        iterations += o.iterations;
        converged &= o.converged;
        floor = floor.or(o.floor);
        inner.push(o.value);
        weights.push(py);
    }
    let value = weighted_kn_mean(&inner, &weights, &spec.psi)?;
    Ok(VulnOutcome {
        value,
        iterations,
        converged,
        certified: true,
        floor,
    })
}

/// Per-output maximizer of `M_φ[g(X, a) | Y = y]`.
pub fn posterior_rule(j: &Joint, spec: &VulnSpec) -> Result<DecisionRule> {
    check_size(&spec.gain, j.n_x())?;
    let actions = j
        .posteriors()
        .iter()
        .map(|post| prior_with_action(post, spec).map(|(_, a)| a))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecisionRule {
        outputs: j.support().to_vec(),
        actions,
    })
}

// ---------------------------------------------------------------------------
// Bayes
// ---------------------------------------------------------------------------

/// `M_φ[M_ψ[g(X, δ(Y)) | X]]` for a fixed rule.
pub fn bayes_objective(j: &Joint, spec: &VulnSpec, rule: &DecisionRule) -> Result<f64> {
    check_size(&spec.gain, j.n_x())?;
    if rule.outputs != j.support() {
        return Err(Error::Dimension("rule must cover exactly the supported outputs".into()));
    }
    let mut inner = Vec::with_capacity(j.n_x());
    for x in 0..j.n_x() {
        if j.prior().get(x) == 0.0 {
            inner.push(0.0);
            continue;
        }
        let mut vals = Vec::with_capacity(rule.outputs.len());
        let mut w = Vec::with_capacity(rule.outputs.len());
        for (&y, a) in rule.outputs.iter().zip(&rule.actions) {
            vals.push(spec.gain.eval(x, a)?);
            w.push(j.channel().get(x, y));
        }
        inner.push(weighted_kn_mean(&vals, &w, &spec.psi)?);
    }
    weighted_kn_mean(&inner, j.prior().probs(), &spec.phi)
}

/// Precomputed pieces for scoring finite decision rules quickly.
struct FiniteBayes<'a> {
    joint: &'a Joint,
    phi: &'a MonotoneFn,
    psi: &'a MonotoneFn,
    psi_gain: Vec<Vec<f64>>,
    n_a: usize,
}

impl FiniteBayes<'_> {
    /// Score increasing in the objective: `σ_φ Σ_x p(x) φ(m_x)`.
    fn score(&self, rule: &[usize]) -> Result<f64> {
        let sign = self.phi.direction().sign();
        let mut acc = 0.0;
        for x in 0..self.joint.n_x() {
            let px = self.joint.prior().get(x);
            if px == 0.0 {
                continue;
            }
            let w: f64 = self
                .joint
                .support()
                .iter()
                .zip(rule)
                .map(|(&y, &a)| self.joint.channel().get(x, y) * self.psi_gain[x][a])
                .sum();
            acc += px * self.phi.apply(self.psi.inverse(w)?)?;
        }
        Ok(sign * acc)
    }
}

fn finite_bayes(j: &Joint, spec: &VulnSpec, table: &GainTable) -> Result<(DecisionRule, bool, usize)> {
    let psi_gain = table
        .rows()
        .iter()
        .map(|r| r.iter().map(|&g| spec.psi.apply(g)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let fb = FiniteBayes {
        joint: j,
        phi: &spec.phi,
        psi: &spec.psi,
        psi_gain,
        n_a: table.n_actions(),
    };
    let k = j.support().len();
    let count = (fb.n_a as f64).powi(k as i32);
    let to_rule = |r: Vec<usize>| DecisionRule {
        outputs: j.support().to_vec(),
        actions: r.into_iter().map(Action::Index).collect(),
    };
    if count <= ENUMERATION_CAP {
        let mut rule = vec![0usize; k];
        let mut best: Option<(f64, Vec<usize>)> = None;
        for _ in 0..count as usize {
            let s = fb.score(&rule)?;
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, rule.clone()));
            }
            for i in (0..k).rev() {
                rule[i] += 1;
                if rule[i] < fb.n_a {
                    break;
                }
                rule[i] = 0;
            }
        }
        let (_, r) = best.expect("at least one rule");
        return Ok((to_rule(r), true, count as usize));
    }
    if !spec.allow_heuristic {
        return Err(Error::EnumerationCap(count));
    }
    // coordinate ascent: start 0 is the per-output posterior rule
    let mut rng = rng_from_seed(spec.solver.seed);
    let greedy = posterior_rule(j, spec)?
        .actions
        .into_iter()
        .map(|a| match a {
            Action::Index(i) => i,
            Action::Mixed(_) => unreachable!("finite gains yield indexed actions"),
        })
        .collect::<Vec<_>>();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut sweeps = 0;
    for restart in 0..spec.solver.restarts.max(1) {
        let mut rule = if restart == 0 {
            greedy.clone()
        } else {
            (0..k).map(|_| rng.random_range(0..fb.n_a)).collect()
        };
        let mut current = fb.score(&rule)?;
        loop {
            sweeps += 1;
            let mut improved = false;
            for i in 0..k {
                let keep = rule[i];
                let mut best_a = keep;
                for a in 0..fb.n_a {
                    if a == keep {
                        continue;
                    }
                    rule[i] = a;
                    let s = fb.score(&rule)?;
                    if s > current || (s == current && a < best_a) {
                        improved |= s > current;
                        current = s;
                        best_a = a;
                    }
                }
                rule[i] = best_a;
            }
            if !improved || sweeps > spec.solver.max_iters {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| current > *b) {
            best = Some((current, rule));
        }
    }
    let (_, r) = best.expect("at least one restart");
    Ok((to_rule(r), false, sweeps))
}

/// Bayes objective over soft actions, one simplex block per supported
/// output, as a minimization of `−σ_φ Σ_x p(x) φ(m_x)` with
/// `m_x = ψ⁻¹(Σ_y p(y|x) ψ(T(r_y(x))))`.
struct SoftBayes<'a> {
    joint: &'a Joint,
    phi: &'a MonotoneFn,
    psi: &'a MonotoneFn,
    transform: MonotoneFn,
    sizes: Vec<usize>,
}

impl Objective for SoftBayes<'_> {
    fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn eval(&self, r: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        let n_x = self.joint.n_x();
        let sign = self.phi.direction().sign();
        let support = self.joint.support();
        let mut acc = 0.0;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for x in 0..n_x {
            let px = self.joint.prior().get(x);
            if px == 0.0 {
                continue;
            }
            let mut w = 0.0;
            for (k, &y) in support.iter().enumerate() {
                let c = self.joint.channel().get(x, y);
                if c > 0.0 {
                    w += c * self.psi.apply(self.transform.apply(r[k * n_x + x])?)?;
                }
            }
            let m = self.psi.inverse(w)?;
            acc += px * self.phi.apply(m)?;
            if let Some(g) = grad.as_deref_mut() {
                let outer = -sign * px * self.phi.derivative(m)? / self.psi.derivative(m)?;
                for (k, &y) in support.iter().enumerate() {
                    let c = self.joint.channel().get(x, y);
                    if c > 0.0 {
                        let i = k * n_x + x;
                        let t = self.transform.apply(r[i])?;
                        g[i] = outer * c * self.psi.derivative(t)? * self.transform.derivative(r[i])?;
                    }
                }
            }
        }
        Ok(-sign * acc)
    }
}

/// `V_{φ,ψ,g}(X|Y) = max_δ M_φ[M_ψ[g(X, δ(Y)) | X]]`.
///
/// The inner mean runs over `Y` given `X`, so the objective couples every
/// output and the maximization is joint over whole rules.
pub fn bayes_vulnerability(j: &Joint, spec: &VulnSpec) -> Result<BayesOutcome> {
    check_size(&spec.gain, j.n_x())?;
    match spec.gain.effective_table()? {
        Some(table) => {
            let (rule, certified, iterations) = finite_bayes(j, spec, &table)?;
            let value = bayes_objective(j, spec, &rule)?;
            Ok(BayesOutcome {
                outcome: VulnOutcome {
                    value,
                    iterations,
                    converged: true,
                    certified,
                    floor: None,
                },
                rule,
            })
        }
        None => {
            let obj = SoftBayes {
                joint: j,
                phi: &spec.phi,
                psi: &spec.psi,
                transform: spec.gain.soft_transform(),
                sizes: vec![j.n_x(); j.support().len()],
            };
            let sol = minimize(&obj, &spec.solver)?;
            let actions = sol
                .point
                .chunks(j.n_x())
                .map(|c| Dist::from_weights(c.to_vec()).map(Action::Mixed))
                .collect::<Result<Vec<_>>>()?;
            let rule = DecisionRule {
                outputs: j.support().to_vec(),
                actions,
            };
            let value = bayes_objective(j, spec, &rule)?;
            Ok(BayesOutcome {
                outcome: VulnOutcome {
                    value,
                    iterations: sol.iterations,
                    converged: sol.converged,
                    certified: true,
                    floor: Some(spec.solver.floor),
                },
                rule,
            })
        }
    }
}

/// Rewrites `(φ, ψ, g)` as `(φ∘η⁻¹, ψ∘η⁻¹, η∘g)` so that both the
/// posterior and the Bayes vulnerability of the result are `η` of the
/// originals.
pub fn transform_spec(eta: &MonotoneFn, spec: &VulnSpec) -> Result<VulnSpec> {
    eta.validate()?;
    if !eta.is_increasing() {
        return Err(Error::InvalidParameter(format!("{eta} is not strictly increasing")));
    }
    let inv = eta.inverse_fn();
    Ok(VulnSpec {
        phi: MonotoneFn::compose(spec.phi.clone(), inv.clone()),
        psi: MonotoneFn::compose(spec.psi.clone(), inv),
        gain: GainFn::transformed(eta.clone(), spec.gain.clone()),
        solver: spec.solver.clone(),
        allow_heuristic: spec.allow_heuristic,
    })
}

/// `H_{φ,g}(X) = −V_{φ,g}(X)`.
pub fn g_entropy(p: &Dist, spec: &VulnSpec) -> Result<f64> {
    prior_vulnerability(p, spec).map(|o| -o.value)
}

/// `Ĥ_{ψ,φ,g}(X|Y) = −V̂_{ψ,φ,g}(X|Y)`.
pub fn g_posterior_entropy(j: &Joint, spec: &VulnSpec) -> Result<f64> {
    posterior_vulnerability(j, spec).map(|o| -o.value)
}

/// `H_{φ,ψ,g}(X|Y) = −V_{φ,ψ,g}(X|Y)`.
pub fn g_bayes_entropy(j: &Joint, spec: &VulnSpec) -> Result<f64> {
    bayes_vulnerability(j, spec).map(|o| -o.outcome.value)
}
