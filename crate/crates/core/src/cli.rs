//! Command-line front end: `compute`, `sweep`, `verify` and
//! `counterexample`.
//!
//! Exit codes: 0 success, 2 bad input, 3 numeric or solver failure, 4 a
//! property check failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::entropies::Order;
use crate::error::{Error, Result};
use crate::frameworks::{CoreFn, EntropyFramework};
use crate::kn_mean::MonotoneFn;
use crate::measure::{Evaluation, Measure};
use crate::prob::{parse_dist, read_channel_csv_file, read_matrix_csv, Dist, Joint};
use crate::properties::{
    check_ccv_property, check_cre, check_dpi, check_lemma1, check_posterior_dpi, run_counterexample, CLOSED_FORM_TOL,
};
use crate::simplex::{Method, SolverConfig};
use crate::syntax::Term;
use crate::vulnerability::{GainFn, GainTable, VulnSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "kn-entropy", version, about = "Kolmogorov-Nagumo mean entropies and g-vulnerabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one measure on a distribution or joint.
    Compute(Opts),
    /// Evaluate measures over a list of orders; emits long-format CSV.
    Sweep(Opts),
    /// Run a randomized property check.
    Verify(Opts),
    /// Reproduce the mixture counterexample.
    Counterexample(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// Measure name; `sweep` accepts a comma-separated list.
    #[arg(long)]
    pub measure: Option<String>,
    /// A distribution, e.g. "0.9,0.1".
    #[arg(long)]
    pub dist: Option<String>,
    /// Channel CSV, one row per secret; a `prior` header column supplies the prior.
    #[arg(long)]
    pub joint: Option<PathBuf>,
    /// Prior for a channel CSV without a prior column.
    #[arg(long)]
    pub prior: Option<String>,
    /// Treat the first CSV column as the prior even without a header.
    #[arg(long)]
    pub prior_column: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Orders for `sweep`: "0.5,0.9,2" or "start:stop:step".
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub psi: Option<String>,
    /// Gain in text form, e.g. "transform(log, soft01)".
    #[arg(long)]
    pub gain: Option<String>,
    /// Finite gain table CSV (rows = secrets, columns = actions).
    #[arg(long)]
    pub gain_file: Option<PathBuf>,
    /// Core for `verify --property ccv`.
    #[arg(long)]
    pub core: Option<String>,
    /// "framework(eta=..., core=..., agg=...)".
    #[arg(long)]
    pub framework: Option<String>,
    /// cre, dpi, ccv or lemma1.
    #[arg(long)]
    pub property: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Property tolerance before optimizer slack.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Shorthand for `--format json`.
    #[arg(long)]
    pub json: bool,
    /// First mixture component for `counterexample`.
    #[arg(long)]
    pub p0: Option<String>,
    /// key=value file; its entries override command-line flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Solver: eg (exponentiated gradient) or fixed-point.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub solver_tol: Option<f64>,
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub vertex_cap: Option<usize>,
    /// Fail instead of searching heuristically above the enumeration cap.
    #[arg(long)]
    pub no_heuristic: bool,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("config: bad value '{v}' for '{key}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Parse(format!("config: bad boolean '{v}' for '{key}'"))),
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", i + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

impl Opts {
    /// Overwrites fields with config entries. Keys are flag names.
    pub fn apply_config(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            let k = k.as_str();
            match k {
                "measure" => self.measure = Some(v.clone()),
                "dist" => self.dist = Some(v.clone()),
                "joint" => self.joint = Some(PathBuf::from(v)),
                "prior" => self.prior = Some(v.clone()),
                "prior-column" => self.prior_column = parse_bool(k, v)?,
                "alpha" => self.alpha = Some(parse_value(k, v)?),
                "beta" => self.beta = Some(parse_value(k, v)?),
                "alphas" => self.alphas = Some(v.clone()),
                "phi" => self.phi = Some(v.clone()),
                "psi" => self.psi = Some(v.clone()),
                "gain" => self.gain = Some(v.clone()),
                "gain-file" => self.gain_file = Some(PathBuf::from(v)),
                "core" => self.core = Some(v.clone()),
                "framework" => self.framework = Some(v.clone()),
                "property" => self.property = Some(v.clone()),
                "trials" => self.trials = Some(parse_value(k, v)?),
                "seed" => self.seed = Some(parse_value(k, v)?),
                "tol" => self.tol = Some(parse_value(k, v)?),
                "format" => {
                    self.format = Some(
                        Format::from_str(v, true).map_err(|_| Error::Parse(format!("config: bad format '{v}'")))?,
                    )
                }
                "json" => self.json = parse_bool(k, v)?,
                "p0" => self.p0 = Some(v.clone()),
                "method" => self.method = Some(v.clone()),
                "restarts" => self.restarts = Some(parse_value(k, v)?),
                "max-iters" => self.max_iters = Some(parse_value(k, v)?),
                "step-size" => self.step_size = Some(parse_value(k, v)?),
                "solver-tol" => self.solver_tol = Some(parse_value(k, v)?),
                "floor" => self.floor = Some(parse_value(k, v)?),
                "vertex-cap" => self.vertex_cap = Some(parse_value(k, v)?),
                "no-heuristic" => self.no_heuristic = parse_bool(k, v)?,
                other => return Err(Error::Parse(format!("config: unknown key '{other}'"))),
            }
        }
        Ok(())
    }

    fn format_or(&self, default: Format) -> Format {
        if self.json {
            Format::Json
        } else {
            self.format.unwrap_or(default)
        }
    }

    fn solver(&self) -> Result<SolverConfig> {
        let mut c = SolverConfig::default();
        if let Some(m) = &self.method {
            c.method = match m.as_str() {
                "eg" | "exp-gradient" | "exp_gradient" => Method::ExpGradient,
                "fixed-point" | "fixed_point" | "fp" => Method::FixedPoint,
                other => return Err(Error::Parse(format!("unknown solver method '{other}'"))),
            };
        }
        if let Some(v) = self.restarts {
            c.restarts = v;
        }
        if let Some(v) = self.max_iters {
            c.max_iters = v;
        }
        if let Some(v) = self.step_size {
            c.step_size = v;
        }
        if let Some(v) = self.solver_tol {
            c.tol = v;
        }
        if let Some(v) = self.floor {
            c.floor = v;
        }
        if let Some(v) = self.vertex_cap {
            c.vertex_cap = v;
        }
        c.seed = self.seed.unwrap_or(0);
        c.validate()?;
        Ok(c)
    }

    fn alpha_order(&self, name: &str) -> Result<Order> {
        let a = self
            .alpha
            .ok_or_else(|| Error::Parse(format!("measure '{name}' needs --alpha")))?;
        Order::alpha(a)
    }

    fn beta_order(&self, name: &str) -> Result<Order> {
        let b = self
            .beta
            .ok_or_else(|| Error::Parse(format!("measure '{name}' needs --beta")))?;
        Order::beta(b)
    }

    fn monotone(text: &Option<String>) -> Result<MonotoneFn> {
        match text {
            Some(t) => t.parse(),
            None => Ok(MonotoneFn::identity()),
        }
    }

    fn vuln_spec(&self) -> Result<VulnSpec> {
        let gain = match (&self.gain, &self.gain_file) {
            (Some(_), Some(_)) => return Err(Error::Parse("give either --gain or --gain-file".into())),
            (Some(g), None) => GainFn::parse(g)?,
            (None, Some(path)) => {
                let rows = read_matrix_csv(std::fs::File::open(path)?)?;
                GainFn::Finite(GainTable::new(rows).map_err(|e| Error::Parse(e.to_string()))?)
            }
            (None, None) => return Err(Error::Parse("g-measures need --gain or --gain-file".into())),
        };
        let mut spec = VulnSpec::new(Self::monotone(&self.phi)?, Self::monotone(&self.psi)?, gain);
        spec.solver = self.solver()?;
        spec.allow_heuristic = !self.no_heuristic;
        Ok(spec)
    }

    /// Builds a named measure from the flags.
    pub fn build_measure(&self, name: &str) -> Result<Measure> {
        Ok(match name {
            "shannon" => Measure::Shannon,
            "shannon-cond" | "shannon-conditional" => Measure::ShannonCond,
            "renyi" => Measure::Renyi(self.alpha_order(name)?),
            "hct" | "tsallis" => Measure::Hct(self.alpha_order(name)?),
            "sm" | "sharma-mittal" => Measure::SharmaMittal(self.alpha_order(name)?, self.beta_order(name)?),
            "arimoto" => Measure::Arimoto(self.alpha_order(name)?),
            "hayashi" => Measure::Hayashi(self.alpha_order(name)?),
            "ac" | "augustin-csiszar" => Measure::AugustinCsiszar(self.alpha_order(name)?, self.solver()?),
            "manije" | "manije-hct" => Measure::Manije(self.alpha_order(name)?),
            "akm" => Measure::Akm(self.alpha_order(name)?, self.beta_order(name)?),
            "g-entropy" => Measure::GEntropy(self.vuln_spec()?),
            "g-posterior" => Measure::GPosterior(self.vuln_spec()?),
            "g-bayes" => Measure::GBayes(self.vuln_spec()?),
            "framework" => {
                let text = self
                    .framework
                    .as_deref()
                    .ok_or_else(|| Error::Parse("measure 'framework' needs --framework".into()))?;
                Measure::Framework(EntropyFramework::parse(text)?)
            }
            other => return Err(Error::Parse(format!("unknown measure '{other}'"))),
        })
    }

    fn measure_names(&self) -> Result<Vec<String>> {
        let m = self
            .measure
            .as_deref()
            .ok_or_else(|| Error::Parse("--measure is required".into()))?;
        Ok(m.split(',').map(|s| s.trim().to_ascii_lowercase()).collect())
    }

    fn single_measure(&self) -> Result<Measure> {
        let names = self.measure_names()?;
        if names.len() != 1 {
            return Err(Error::Parse("give exactly one --measure".into()));
        }
        self.build_measure(&names[0])
    }

    fn load_joint(&self) -> Result<Option<Joint>> {
        let Some(path) = &self.joint else {
            return Ok(None);
        };
        let csv = read_channel_csv_file(path, self.prior_column)?;
        let prior = match (csv.prior, &self.prior) {
            (Some(_), Some(_)) => {
                return Err(Error::Parse("prior given both in the CSV and by --prior".into()));
            }
            (Some(p), None) => p,
            (None, Some(text)) => parse_dist(text)?,
            (None, None) => return Err(Error::Parse("channel CSV has no prior column; pass --prior".into())),
        };
        Joint::new(prior, csv.channel).map(Some)
    }

    fn load_dist(&self) -> Result<Option<Dist>> {
        self.dist.as_deref().map(parse_dist).transpose()
    }
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..6).contains(&e) {
        format!("{:.*}", (5 - e).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn params(opts: &Opts, m: &Measure) -> Map<String, Value> {
    let mut p = Map::new();
    if let Some(a) = m.alpha() {
        p.insert("alpha".into(), json!(a));
    }
    if let Some(b) = m.beta() {
        p.insert("beta".into(), json!(b));
    }
    if let Measure::GEntropy(s) | Measure::GPosterior(s) | Measure::GBayes(s) = m {
        p.insert("phi".into(), json!(s.phi.to_string()));
        p.insert("psi".into(), json!(s.psi.to_string()));
        p.insert("gain".into(), json!(s.gain.to_string()));
    }
    if let Measure::Framework(fw) = m {
        p.insert("framework".into(), json!(fw.to_string()));
    }
    if let Some(path) = &opts.joint {
        p.insert("joint".into(), json!(path.display().to_string()));
    }
    p
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(format!("json: {e}")))
}

fn compute(opts: &Opts, out: &mut String) -> Result<i32> {
    let m = opts.single_measure()?;
    let (eval, input): (Evaluation, String) = match (opts.load_dist()?, opts.load_joint()?) {
        (Some(_), Some(_)) => return Err(Error::Parse("give either --dist or --joint".into())),
        (Some(p), None) => (m.eval_dist(&p)?, "dist".into()),
        (None, Some(j)) => (m.eval_joint(&j)?, format!("joint:{}", j.digest())),
        (None, None) => return Err(Error::Parse("compute needs --dist or --joint".into())),
    };
    match opts.format_or(Format::Table) {
        Format::Json => {
            let rec = json!({
                "command": "compute",
                "measure": m.name(),
                "params": params(opts, &m),
                "input": input,
                "value": eval.value,
                "iterations": eval.iterations,
                "converged": eval.converged,
                "restarts": eval.restarts,
                "certified": eval.certified,
            });
            writeln!(out, "{}", to_json(&rec)?).ok();
        }
        Format::Csv => {
            writeln!(out, "measure,alpha,beta,value,iterations,converged,restarts,certified").ok();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                m.name(),
                m.alpha().map_or(String::new(), |a| a.to_string()),
                m.beta().map_or(String::new(), |b| b.to_string()),
                eval.value,
                eval.iterations,
                eval.converged,
                eval.restarts,
                eval.certified
            )
            .ok();
        }
        Format::Table => {
            writeln!(out, "measure     {m}").ok();
            writeln!(out, "value       {}", sig6(eval.value)).ok();
            writeln!(out, "iterations  {}", eval.iterations).ok();
            writeln!(out, "converged   {}", eval.converged).ok();
            writeln!(out, "restarts    {}", eval.restarts).ok();
            if !eval.certified {
                writeln!(out, "certified   false (heuristic search)").ok();
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses "a,b,c" or "start:stop:step" (inclusive of `stop` up to rounding).
pub fn parse_alphas(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let mut v: Vec<f64> = if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse("range must be start:stop:step".into()))?;
        let (a, b, s): (f64, f64, f64) = (
            parse_value("alphas", start.trim())?,
            parse_value("alphas", stop.trim())?,
            parse_value("alphas", step.trim())?,
        );
        if !(s > 0.0) || !(b >= a) {
            return Err(Error::Parse("range needs start <= stop and step > 0".into()));
        }
        let n = ((b - a) / s + 1e-9).floor() as usize;
        if n > 100_000 {
            return Err(Error::Parse("range has too many points".into()));
        }
        (0..=n).map(|i| a + i as f64 * s).collect()
    } else {
        text.split(',')
            .map(|f| parse_value("alphas", f.trim()))
            .collect::<Result<_>>()?
    };
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

#[derive(Serialize)]
struct SweepRow {
    alpha: f64,
    measure: String,
    value: f64,
    iterations: usize,
    converged: bool,
    restarts: usize,
}

fn sweep(opts: &Opts, out: &mut String) -> Result<i32> {
    let alphas = match (&opts.alphas, opts.alpha) {
        (Some(t), _) => parse_alphas(t)?,
        (None, Some(a)) => vec![a],
        (None, None) => return Err(Error::Parse("sweep needs --alphas or --alpha".into())),
    };
    let names = opts.measure_names()?;
    let dist = opts.load_dist()?;
    let joint = opts.load_joint()?;
    if dist.is_some() == joint.is_some() {
        return Err(Error::Parse("sweep needs exactly one of --dist and --joint".into()));
    }
    let mut rows = Vec::new();
    for &a in &alphas {
        let order = Order::alpha(a)?;
        for name in &names {
            let template = Opts {
                alpha: Some(a),
                ..opts.clone()
            };
            let m = template.build_measure(name)?.with_alpha(order)?;
            let e = match (&dist, &joint) {
                (Some(p), _) => m.eval_dist(p)?,
                (_, Some(j)) => m.eval_joint(j)?,
                _ => unreachable!("checked above"),
            };
            rows.push(SweepRow {
                alpha: a,
                measure: m.name().into(),
                value: e.value,
                iterations: e.iterations,
                converged: e.converged,
                restarts: e.restarts,
            });
        }
    }
    match opts.format_or(Format::Csv) {
        Format::Json => {
            writeln!(out, "{}", to_json(&rows)?).ok();
        }
        Format::Csv => {
            writeln!(out, "alpha,measure,value").ok();
            for r in &rows {
                writeln!(out, "{},{},{}", r.alpha, r.measure, r.value).ok();
            }
        }
        Format::Table => {
            writeln!(out, "{:<10}{:<14}value", "alpha", "measure").ok();
            for r in &rows {
                writeln!(out, "{:<10}{:<14}{}", r.alpha, r.measure, sig6(r.value)).ok();
            }
        }
    }
    Ok(EXIT_OK)
}

fn ccv_core(opts: &Opts) -> Result<CoreFn> {
    let text = opts
        .core
        .as_deref()
        .ok_or_else(|| Error::Parse("ccv needs --core".into()))?;
    let t = Term::parse(text)?;
    // bare parameterized cores take --alpha
    match (t.name(), t.args().is_empty()) {
        (Some("pnorm-power"), true) => CoreFn::power_sum(opts.alpha_order("pnorm-power")?.get()),
        (Some("hct"), true) => Ok(CoreFn::Hct(opts.alpha_order("hct")?)),
        _ => CoreFn::from_term(&t),
    }
}

fn verify(opts: &Opts, out: &mut String) -> Result<i32> {
    let property = opts
        .property
        .as_deref()
        .ok_or_else(|| Error::Parse("--property is required".into()))?
        .to_ascii_lowercase();
    let trials = opts.trials.unwrap_or(1000);
    let seed = opts.seed.unwrap_or(0);
    let tol = opts.tol.unwrap_or(CLOSED_FORM_TOL);
    if trials == 0 {
        return Err(Error::Parse("--trials must be positive".into()));
    }
    let report = match property.as_str() {
        "cre" => check_cre(&opts.single_measure()?, trials, seed, tol)?,
        "dpi" => match opts.single_measure()? {
            Measure::GPosterior(spec) => check_posterior_dpi(&spec, trials, seed, tol)?,
            m => check_dpi(&m, trials, seed, tol)?,
        },
        "ccv" => check_ccv_property(&ccv_core(opts)?, trials, seed)?,
        "lemma1" | "identity" => check_lemma1(&opts.vuln_spec()?, trials, seed)?,
        other => return Err(Error::Parse(format!("unknown property '{other}'"))),
    };
    match opts.format_or(Format::Json) {
        Format::Table => out.push_str(&report.table()),
        Format::Json | Format::Csv => {
            writeln!(out, "{}", to_json(&report)?).ok();
        }
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_PROPERTY })
}

fn counterexample(opts: &Opts, out: &mut String) -> Result<i32> {
    let alpha = opts.alpha.unwrap_or(2.0);
    let p0 = match &opts.p0 {
        Some(t) => parse_dist(t)?,
        None => Dist::new(vec![0.9, 0.1])?,
    };
    let r = run_counterexample(alpha, &p0, &opts.solver()?)?;
    match opts.format_or(Format::Table) {
        Format::Json => {
            let mut v = serde_json::to_value(&r).map_err(|e| Error::Parse(format!("json: {e}")))?;
            if let Value::Object(m) = &mut v {
                m.insert("command".into(), json!("counterexample"));
            }
            writeln!(out, "{}", to_json(&v)?).ok();
        }
        Format::Csv => {
            writeln!(out, "alpha,a,b,c,gap,iterations,converged,restarts,passed").ok();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.alpha, r.a, r.b, r.c, r.gap, r.iterations, r.converged, r.restarts, r.passed
            )
            .ok();
        }
        Format::Table => {
            writeln!(out, "alpha       {}", r.alpha).ok();
            writeln!(out, "p0          {}", r.p0.iter().map(sig6).collect::<Vec<_>>().join(",")).ok();
            writeln!(out, "a           {}  (H(p0), forced by any averaging form)", sig6(r.a)).ok();
            writeln!(out, "b           {}  (objective at the MAP reverse channel)", sig6(r.b)).ok();
            writeln!(out, "c           {}  (solver value)", sig6(r.c)).ok();
            writeln!(out, "gap         {}", sig6(r.gap)).ok();
            writeln!(out, "iterations  {}", r.iterations).ok();
            writeln!(out, "converged   {}", r.converged).ok();
            writeln!(out, "restarts    {}", r.restarts).ok();
            writeln!(out, "verdict     {}", if r.passed { "pass" } else { "fail" }).ok();
        }
    }
    Ok(if r.passed { EXIT_OK } else { EXIT_PROPERTY })
}

type Handler = fn(&Opts, &mut String) -> Result<i32>;

fn dispatch(cli: Cli, out: &mut String) -> Result<i32> {
    let (mut opts, run): (Opts, Handler) = match cli.command {
        Command::Compute(o) => (o, compute),
        Command::Sweep(o) => (o, sweep),
        Command::Verify(o) => (o, verify),
        Command::Counterexample(o) => (o, counterexample),
    };
    if let Some(path) = opts.config.clone() {
        let map = read_config(&path)?;
        opts.apply_config(&map)?;
    }
    run(&opts, out)
}

/// Runs the CLI on `args` (including the program name), writing results
/// to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let mut buf = String::new();
    match dispatch(cli, &mut buf) {
        Ok(code) => {
            let _ = out.write_all(buf.as_bytes());
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["kn-entropy"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(0.325083007), "0.325083");
        assert_eq!(sig6(2.0), "2.00000");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.21072103), "-0.210721");
    }

    #[test]
    fn compute_shannon() {
        let (code, out, _) = run_str(&["compute", "--measure", "shannon", "--dist", "0.9,0.1"]);
        assert_eq!(code, 0);
        assert!(out.contains("0.325083"), "{out}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_str(&["compute", "--measure", "bogus", "--dist", "1"]).0, EXIT_INPUT);
        assert_eq!(run_str(&["compute", "--measure", "shannon", "--dist", "0.5,0.6"]).0, EXIT_INPUT);
        assert_eq!(run_str(&["compute", "--measure", "renyi", "--dist", "0.5,0.5"]).0, EXIT_INPUT);
        assert_eq!(run_str(&["nonsense"]).0, EXIT_INPUT);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
        let (code, _, err) = run_str(&[
            "compute", "--measure", "g-entropy", "--phi", "log", "--gain", "transform(log, soft01)", "--dist", "0.5,0.5",
        ]);
        assert_eq!(code, EXIT_NUMERIC, "{err}");
    }

    #[test]
    fn alpha_lists_and_ranges() {
        assert_eq!(parse_alphas("2, 0.5,1").unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(parse_alphas("0.5:1.5:0.5").unwrap(), vec![0.5, 1.0, 1.5]);
        assert!(parse_alphas("1:0:0.1").is_err());
        assert!(parse_alphas("a,b").is_err());
    }

    #[test]
    fn ccv_core_with_alpha() {
        let (code, out, _) = run_str(&["verify", "--property", "ccv", "--core", "pnorm-power", "--alpha", "2", "--trials", "50"]);
        assert_eq!(code, EXIT_PROPERTY);
        assert!(out.contains("\"verdict\": \"fail\""));
    }
}
