//! Randomized checks of conditioning-reduces-entropy (CRE), the
//! data-processing inequality (DPI), core concavity (CCV) and the
//! KN-averaging representation of posterior g-entropies, plus the
//! mixture counterexample separating Augustin–Csiszár entropy from every
//! η-averaging entropy.
//!
//! Every trial draws its instance from `trial_seed(seed, trial)`, so a
//! recorded failure replays on its own. Trials run in parallel and are
//! collected in trial order.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::cond_entropies::{ac_objective, augustin_csiszar, AcSolverConfig};
use crate::entropies::{shannon, Order};
use crate::error::{Error, Result};
use crate::frameworks::{
    check_ccv, framework_cond_entropy, Aggregator, CcvReport, CcvWitness, CoreFn, EntropyFramework,
};
use crate::kn_mean::MonotoneFn;
use crate::measure::Measure;
use crate::prob::{
    compose_markov, rng_from_seed, sample_channel, sample_dist, sample_small_size, trial_seed, Channel, Dist, Joint,
    MarkovTriple,
};
use crate::vulnerability::{g_posterior_entropy, VulnSpec};

/// Tolerance for comparisons between closed forms.
pub const CLOSED_FORM_TOL: f64 = 1e-10;

/// Extra slack when either side comes from an optimizer.
pub const OPTIMIZER_SLACK: f64 = 1e-4;

/// Tolerance of the KN-averaging representation check.
pub const LEMMA1_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Cre,
    Dpi,
    Ccv,
    Identity,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Property::Cre => "cre",
            Property::Dpi => "dpi",
            Property::Ccv => "ccv",
            Property::Identity => "identity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One trial's comparison. The property holds when `gap ≤ tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub trial: usize,
    pub seed: u64,
    pub digest: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// A violating instance after greedy shrinking toward uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceWitness {
    pub prior: Dist,
    pub channels: Vec<Vec<Dist>>,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// The most violating input of a failed check.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Instance(InstanceWitness),
    Concavity(CcvWitness),
}

impl Witness {
    /// Size of the violation.
    pub fn gap(&self) -> f64 {
        match self {
            Witness::Instance(w) => w.gap,
            Witness::Concavity(w) => w.rhs - w.lhs,
        }
    }
}

/// Whether a sufficient condition of the checked property was itself
/// satisfied on sampled inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub description: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub measure: String,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub failures: Vec<Failure>,
    pub worst_gap: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<Hypothesis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Failures sorted by decreasing gap, ties by trial.
    pub fn ranked_failures(&self) -> Vec<&Failure> {
        let mut v: Vec<&Failure> = self.failures.iter().collect();
        v.sort_by(|a, b| b.gap.total_cmp(&a.gap).then(a.trial.cmp(&b.trial)));
        v
    }

    fn from_outcomes(
        property: Property,
        measure: String,
        seed: u64,
        tol: f64,
        outcomes: Vec<Failure>,
    ) -> PropertyReport {
        let trials = outcomes.len();
        let worst_gap = outcomes.iter().map(|o| o.gap).fold(f64::NEG_INFINITY, f64::max);
        let failures: Vec<Failure> = outcomes.into_iter().filter(|o| !(o.gap <= tol)).collect();
        PropertyReport {
            property,
            measure,
            trials,
            seed,
            tol,
            verdict: if failures.is_empty() { Verdict::Pass } else { Verdict::Fail },
            failures,
            worst_gap,
            hypothesis: None,
            witness: None,
        }
    }

    /// Human-readable summary, one line per field and failure.
    pub fn table(&self) -> String {
        let mut s = format!(
            "property  {}\nmeasure   {}\ntrials    {}\nseed      {}\ntol       {:e}\nworst     {:.6e}\nverdict   {}\n",
            self.property,
            self.measure,
            self.trials,
            self.seed,
            self.tol,
            self.worst_gap,
            if self.passed() { "pass" } else { "fail" }
        );
        if let Some(h) = &self.hypothesis {
            s += &format!("hypothesis {} ({})\n", if h.holds { "holds" } else { "fails" }, h.description);
        }
        if let Some(w) = &self.witness {
            s += &format!("witness   {}\n", serde_json::to_string(w).unwrap_or_default());
        }
        if !self.failures.is_empty() {
            s += "trial\tseed\tdigest\tlhs\trhs\tgap\n";
            for f in self.ranked_failures().iter().take(20) {
                s += &format!(
                    "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6e}\n",
                    f.trial, f.seed, f.digest, f.lhs, f.rhs, f.gap
                );
            }
        }
        s
    }
}

impl From<CcvReport> for PropertyReport {
    fn from(r: CcvReport) -> Self {
        let failures = r
            .witness
            .iter()
            .map(|w| Failure {
                trial: w.trial,
                seed: w.seed,
                digest: format!("p={:?} q={:?} lambda={}", w.p.probs(), w.q.probs(), w.lambda),
                lhs: w.rhs,
                rhs: w.lhs,
                gap: w.rhs - w.lhs,
            })
            .collect();
        PropertyReport {
            property: Property::Ccv,
            measure: r.core,
            trials: r.trials,
            seed: 0,
            tol: crate::frameworks::CCV_TOL,
            failures,
            worst_gap: r.worst_violation,
            verdict: if r.passed { Verdict::Pass } else { Verdict::Fail },
            hypothesis: None,
            witness: r.witness.map(Witness::Concavity),
        }
    }
}

/// [`check_ccv`] as a property report.
pub fn check_ccv_property(core: &CoreFn, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut r = PropertyReport::from(check_ccv(core, trials, seed)?);
    r.seed = seed;
    Ok(r)
}

fn tolerance(measure: &Measure, tol: f64) -> f64 {
    if measure.is_optimizer_valued() {
        tol + OPTIMIZER_SLACK
    } else {
        tol
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

fn cre_instance(measure: &Measure, trial: usize, seed: u64) -> (u64, Joint) {
    let s = trial_seed(seed, trial as u64);
    let mut rng = rng_from_seed(s);
    let n_x = measure.fixed_dim().unwrap_or_else(|| sample_small_size(&mut rng));
    let n_y = sample_small_size(&mut rng);
    let prior = sample_dist(&mut rng, n_x);
    let ch = sample_channel(&mut rng, n_x, n_y);
    (s, Joint::new(prior, ch).expect("sampled sizes agree"))
}

fn cre_compare(measure: &Measure, unconditional: &Measure, j: &Joint) -> Result<(f64, f64)> {
    Ok((measure.value_joint(j)?, unconditional.value_dist(j.prior())?))
}

fn cre_pair(measure: &Measure) -> Result<Measure> {
    measure.unconditional().ok_or_else(|| {
        Error::InvalidParameter(format!("'{}' has no conditional form to test", measure.name()))
    })
}

/// Replays one CRE trial: `(H(X|Y), H(X))`.
pub fn replay_cre(measure: &Measure, trial: usize, seed: u64) -> Result<Failure> {
    let unconditional = cre_pair(measure)?;
    let (s, j) = cre_instance(measure, trial, seed);
    let (lhs, rhs) = cre_compare(measure, &unconditional, &j)?;
    Ok(Failure {
        trial,
        seed: s,
        digest: j.digest(),
        lhs,
        rhs,
        gap: lhs - rhs,
    })
}

/// `H(X|Y) ≤ H(X) + tol` on random joints.
pub fn check_cre(measure: &Measure, trials: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    check_trials(trials)?;
    let unconditional = cre_pair(measure)?;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| replay_cre(measure, i, seed))
        .collect::<Result<Vec<_>>>()?;
    let tol = tolerance(measure, tol);
    let mut report = PropertyReport::from_outcomes(Property::Cre, measure.to_string(), seed, tol, outcomes);
    if let Some(worst) = report.ranked_failures().first() {
        let (_, j) = cre_instance(measure, worst.trial, seed);
        report.witness = shrink(
            &j.prior().clone(),
            &[j.channel().clone()],
            |prior, chs| {
                let j = Joint::new(prior.clone(), chs[0].clone())?;
                cre_compare(measure, &unconditional, &j)
            },
            tol,
        )?;
    }
    Ok(report)
}

fn dpi_instance(measure: &Measure, trial: usize, seed: u64) -> (u64, MarkovTriple) {
    let s = trial_seed(seed, trial as u64);
    let mut rng = rng_from_seed(s);
    let n_x = measure.fixed_dim().unwrap_or_else(|| sample_small_size(&mut rng));
    let n_y = sample_small_size(&mut rng);
    let n_z = sample_small_size(&mut rng);
    let prior = sample_dist(&mut rng, n_x);
    let ch_xy = sample_channel(&mut rng, n_x, n_y);
    let ch_yz = sample_channel(&mut rng, n_y, n_z);
    (s, MarkovTriple::new(prior, ch_xy, ch_yz).expect("sampled sizes agree"))
}

fn dpi_compare(measure: &Measure, t: &MarkovTriple) -> Result<(f64, f64)> {
    let (jy, jz) = compose_markov(t)?;
    Ok((measure.value_joint(&jy)?, measure.value_joint(&jz)?))
}

/// Replays one DPI trial: `(H(X|Y), H(X|Z))`.
pub fn replay_dpi(measure: &Measure, trial: usize, seed: u64) -> Result<Failure> {
    let (s, t) = dpi_instance(measure, trial, seed);
    let (lhs, rhs) = dpi_compare(measure, &t)?;
    Ok(Failure {
        trial,
        seed: s,
        digest: t.digest(),
        lhs,
        rhs,
        gap: lhs - rhs,
    })
}

/// `H(X|Y) ≤ H(X|Z) + tol` on random Markov chains `X − Y − Z`.
pub fn check_dpi(measure: &Measure, trials: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    check_trials(trials)?;
    if !measure.is_conditional() {
        return Err(Error::InvalidParameter(format!("'{}' is not a conditional measure", measure.name())));
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| replay_dpi(measure, i, seed))
        .collect::<Result<Vec<_>>>()?;
    let tol = tolerance(measure, tol);
    let mut report = PropertyReport::from_outcomes(Property::Dpi, measure.to_string(), seed, tol, outcomes);
    if let Some(worst) = report.ranked_failures().first() {
        let (_, t) = dpi_instance(measure, worst.trial, seed);
        report.witness = shrink(
            &t.prior,
            &[t.ch_xy.clone(), t.ch_yz.clone()],
            |prior, chs| {
                let t = MarkovTriple::new(prior.clone(), chs[0].clone(), chs[1].clone())?;
                dpi_compare(measure, &t)
            },
            tol,
        )?;
    }
    Ok(report)
}

fn mix_channel(ch: &Channel, t: f64) -> Result<Channel> {
    let u = Dist::uniform(ch.n_out());
    Channel::from_rows(ch.rows().iter().map(|r| Dist::mix(&u, r, t)).collect::<Result<Vec<_>>>()?)
}

/// Moves the instance toward uniform, halving the step whenever the
/// violation would disappear.
fn shrink<F>(prior: &Dist, channels: &[Channel], eval: F, tol: f64) -> Result<Option<Witness>>
where
    F: Fn(&Dist, &[Channel]) -> Result<(f64, f64)>,
{
    let (lhs, rhs) = eval(prior, channels)?;
    if !(lhs - rhs > tol) {
        return Ok(None);
    }
    let mut best = (prior.clone(), channels.to_vec(), lhs, rhs);
    let mut t = 0.5;
    for _ in 0..40 {
        let p = Dist::mix(&Dist::uniform(best.0.len()), &best.0, t)?;
        let chs = best.1.iter().map(|c| mix_channel(c, t)).collect::<Result<Vec<_>>>()?;
        match eval(&p, &chs) {
            Ok((l, r)) if l - r > tol => best = (p, chs, l, r),
            _ => t *= 0.5,
        }
        if t < 1e-3 {
            break;
        }
    }
    let (prior, chs, lhs, rhs) = best;
    Ok(Some(Witness::Instance(InstanceWitness {
        prior,
        channels: chs.iter().map(|c| c.rows().to_vec()).collect(),
        lhs,
        rhs,
        gap: lhs - rhs,
    })))
}

/// The EPKNAVG framework that represents `Ĥ_{ψ,φ,g}`: identity `η`, core
/// `−V_{φ,g}` and KN averaging under `ψ(−·)`. Averaging the negated core
/// under `ψ(−·)` equals negating the `ψ`-average of `V`.
pub fn lemma1_framework(spec: &VulnSpec) -> Result<EntropyFramework> {
    EntropyFramework::new(
        MonotoneFn::identity(),
        CoreFn::neg_prior_vuln(spec.clone()),
        Aggregator::Epknavg(MonotoneFn::compose(spec.psi.clone(), MonotoneFn::Negate)),
    )
}

/// Replays one representation trial: `(Ĥ_{ψ,φ,g}(X|Y), framework value)`.
pub fn replay_lemma1(spec: &VulnSpec, trial: usize, seed: u64) -> Result<Failure> {
    let fw = lemma1_framework(spec)?;
    let m = Measure::GPosterior(spec.clone());
    let (s, j) = cre_instance(&m, trial, seed);
    let lhs = g_posterior_entropy(&j, spec)?;
    let rhs = framework_cond_entropy(&fw, &j)?;
    Ok(Failure {
        trial,
        seed: s,
        digest: j.digest(),
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Checks `Ĥ_{ψ,φ,g}(X|Y)` against its KN-averaging framework form.
pub fn check_lemma1(spec: &VulnSpec, trials: usize, seed: u64) -> Result<PropertyReport> {
    check_trials(trials)?;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| replay_lemma1(spec, i, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyReport::from_outcomes(
        Property::Identity,
        format!("g-posterior({spec}) vs {}", lemma1_framework(spec)?),
        seed,
        LEMMA1_TOL,
        outcomes,
    ))
}

/// Numerical check of the sufficient condition for DPI of the posterior
/// g-entropy: `ψ(V_{φ,g})` convex for increasing `ψ`, concave for
/// decreasing `ψ`. Both read as concavity of one mapped core.
pub fn posterior_dpi_hypothesis(spec: &VulnSpec, trials: usize, seed: u64) -> Result<Hypothesis> {
    let v = CoreFn::mapped(MonotoneFn::Negate, CoreFn::neg_prior_vuln(spec.clone()));
    let psi_v = CoreFn::mapped(spec.psi.clone(), v);
    let (core, description) = if spec.psi.is_increasing() {
        (CoreFn::mapped(MonotoneFn::Negate, psi_v), "psi increasing and psi(V) convex")
    } else {
        (psi_v, "psi decreasing and psi(V) concave")
    };
    let r = check_ccv(&core, trials, seed)?;
    Ok(Hypothesis {
        description: description.into(),
        holds: r.passed,
    })
}

/// [`check_dpi`] for the posterior g-entropy, reporting whether the
/// sufficient condition held on sampled inputs.
pub fn check_posterior_dpi(spec: &VulnSpec, trials: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    let mut r = check_dpi(&Measure::GPosterior(spec.clone()), trials, seed, tol)?;
    r.hypothesis = Some(posterior_dpi_hypothesis(spec, trials.min(2000), seed)?);
    Ok(r)
}

/// The three numbers of the mixture counterexample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub alpha: f64,
    pub p0: Dist,
    /// `H(p0)`: the value any η-averaging entropy is forced to take.
    pub a: f64,
    /// Objective at the reverse channel that guesses the likelier symbol.
    pub b: f64,
    /// Solver value of the Augustin–Csiszár entropy of the mixture.
    pub c: f64,
    /// `a − c`.
    pub gap: f64,
    pub argmin: Vec<Dist>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    /// `c ≤ b + 1e-6 < a` and `a − c ≥ 0.11`.
    pub passed: bool,
}

/// Required `a − c`.
pub const COUNTEREXAMPLE_MARGIN: f64 = 0.11;

/// The joint `p(x, i) = ½ p⁽ⁱ⁾(x)` with `p⁽¹⁾` the reversal of `p⁽⁰⁾`.
pub fn mixture_joint(p0: &Dist) -> Result<Joint> {
    let p1 = p0.reversed();
    let m: Vec<Vec<f64>> = (0..p0.len()).map(|x| vec![0.5 * p0.get(x), 0.5 * p1.get(x)]).collect();
    Joint::from_matrix(m)
}

/// Each component of the mixture alone has Augustin–Csiszár entropy
/// `H(p0)`, so an η-averaging entropy would give `a` for the mixture too.
/// The true value `c` sits below the rule-based bound `b`, itself below
/// `a`.
pub fn run_counterexample(alpha: f64, p0: &Dist, cfg: &AcSolverConfig) -> Result<CounterexampleReport> {
    let order = Order::alpha(alpha)?;
    let j = mixture_joint(p0)?;
    let a = shannon(p0);
    let map_rule: Vec<Dist> = j
        .posteriors()
        .iter()
        .map(|post| {
            let best = (0..post.len()).fold(0, |b, x| if post.get(x) > post.get(b) { x } else { b });
            Dist::point_mass(post.len(), best)
        })
        .collect();
    let b = ac_objective(&j, order.get(), &map_rule)?;
    let sol = augustin_csiszar(&j, order, cfg)?;
    let c = sol.value;
    let passed = c <= b + 1e-6 && b + 1e-6 < a && a - c >= COUNTEREXAMPLE_MARGIN;
    Ok(CounterexampleReport {
        alpha,
        p0: p0.clone(),
        a,
        b,
        c,
        gap: a - c,
        argmin: sol.argmin,
        iterations: sol.iterations,
        converged: sol.converged,
        restarts: sol.restarts,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vulnerability::GainFn;

    #[test]
    fn shannon_cre_and_dpi_pass() {
        let r = check_cre(&Measure::ShannonCond, 300, 1, CLOSED_FORM_TOL).unwrap();
        assert!(r.passed(), "{}", r.table());
        assert_eq!(r.trials, 300);
        let r = check_dpi(&Measure::ShannonCond, 200, 2, CLOSED_FORM_TOL).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn convex_core_violates_cre_and_replays() {
        let fw = EntropyFramework::new(MonotoneFn::identity(), CoreFn::PowerSum(2.0), Aggregator::Eavg).unwrap();
        let m = Measure::Framework(fw);
        let r = check_cre(&m, 200, 0, CLOSED_FORM_TOL).unwrap();
        assert!(!r.passed());
        for f in r.failures.iter().take(5) {
            assert_eq!(&replay_cre(&m, f.trial, 0).unwrap(), f);
        }
        let w = r.witness.unwrap();
        assert!(w.gap() > CLOSED_FORM_TOL);
    }

    #[test]
    fn reports_are_deterministic() {
        let m = Measure::Arimoto(Order::alpha(2.0).unwrap());
        let a = check_cre(&m, 100, 9, CLOSED_FORM_TOL).unwrap();
        let b = check_cre(&m, 100, 9, CLOSED_FORM_TOL).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn lemma1_identity_psi() {
        let spec = VulnSpec::new(MonotoneFn::Log, MonotoneFn::identity(), GainFn::SoftZeroOne);
        assert!(check_lemma1(&spec, 20, 0).unwrap().passed());
    }

    #[test]
    fn counterexample_numbers() {
        let r = run_counterexample(2.0, &Dist::new(vec![0.9, 0.1]).unwrap(), &AcSolverConfig::default()).unwrap();
        assert!((r.a - 0.325083).abs() < 1e-6);
        assert!((r.b + 2.0 * 0.9f64.ln()).abs() < 1e-12);
        assert!((r.c + 0.82f64.ln()).abs() < 1e-8);
        assert!(r.passed);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(check_cre(&Measure::Shannon, 10, 0, 0.0).is_err());
        assert!(check_cre(&Measure::ShannonCond, 0, 0, 0.0).is_err());
        assert!(check_dpi(&Measure::Shannon, 10, 0, 0.0).is_err());
    }
}
