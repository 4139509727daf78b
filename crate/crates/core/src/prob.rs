//! Finite-alphabet probability objects: distributions, channels, joints
//! and Markov triples, plus seeded random instance generation and CSV
//! ingestion.
//!
//! Every object is immutable once built. Outputs `y` with `p_Y(y) = 0` are
//! recorded as unsupported and carry no posterior; every conditional
//! quantity in the crate sums over the supported outputs only.

use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Absolute tolerance on `|Σ p − 1|` accepted at ingest.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    /// Validates a probability vector and renormalizes it exactly.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, SIMPLEX_TOL)
    }

    /// Like [`Dist::new`] but with a caller-chosen sum tolerance. Used for
    /// file input printed with fewer digits than a double carries.
    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidSimplex("empty vector".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidSimplex(format!("entry {bad} is not a non-negative real")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidSimplex(format!("entries sum to {sum}, expected 1")));
        }
        Ok(Self::renormalized(probs, sum))
    }

    /// Normalizes arbitrary non-negative weights with a positive total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSimplex("empty vector".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSimplex(format!("weight {bad} is not a non-negative real")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidSimplex("weights sum to zero".into()));
        }
        Ok(Self::renormalized(weights, sum))
    }

    fn renormalized(mut probs: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Dist { probs }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "alphabet must be non-empty");
        Dist {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass index out of range");
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Dist { probs }
    }

    /// `λ·p + (1−λ)·q`.
    pub fn mix(p: &Dist, q: &Dist, lambda: f64) -> Result<Dist> {
        if p.len() != q.len() {
            return Err(Error::Dimension(format!("mixing sizes {} and {}", p.len(), q.len())));
        }
        let w = p
            .probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Dist::from_weights(w)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.probs.iter().copied()
    }

    /// Entries reversed; `(0.9, 0.1)` becomes `(0.1, 0.9)`.
    pub fn reversed(&self) -> Dist {
        Dist {
            probs: self.probs.iter().rev().copied().collect(),
        }
    }
}

/// A row-stochastic matrix `p_{Y|X}`: row `x` is the output distribution
/// given input `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    rows: Vec<Dist>,
    n_out: usize,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows.into_iter().map(Dist::new).collect::<Result<Vec<_>>>()?)
    }

    pub fn from_rows(rows: Vec<Dist>) -> Result<Self> {
        let n_out = rows
            .first()
            .map(Dist::len)
            .ok_or_else(|| Error::Dimension("channel has no rows".into()))?;
        if let Some(r) = rows.iter().find(|r| r.len() != n_out) {
            return Err(Error::Dimension(format!(
                "ragged channel: row of length {} where {} expected",
                r.len(),
                n_out
            )));
        }
        Ok(Channel { rows, n_out })
    }

    pub fn identity(n: usize) -> Self {
        Channel {
            rows: (0..n).map(|i| Dist::point_mass(n, i)).collect(),
            n_out: n,
        }
    }

    /// Every input maps to the same output distribution.
    pub fn constant(n_in: usize, row: &Dist) -> Self {
        Channel {
            rows: vec![row.clone(); n_in],
            n_out: row.len(),
        }
    }

    pub fn n_in(&self) -> usize {
        self.rows.len()
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn rows(&self) -> &[Dist] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &Dist {
        &self.rows[x]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x].get(y)
    }

    /// The cascade `self` then `next`: `(z|x) = Σ_y self(y|x)·next(z|y)`.
    pub fn compose(&self, next: &Channel) -> Result<Channel> {
        if self.n_out != next.n_in() {
            return Err(Error::Dimension(format!(
                "cannot compose channel with {} outputs into one with {} inputs",
                self.n_out,
                next.n_in()
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut out = vec![0.0; next.n_out];
                for (y, py) in row.iter().enumerate() {
                    if py == 0.0 {
                        continue;
                    }
                    for (z, o) in out.iter_mut().enumerate() {
                        *o += py * next.get(y, z);
                    }
                }
                Dist::from_weights(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Channel::from_rows(rows)
    }
}

/// `p_{X,Y} = p_X · p_{Y|X}` with the output marginal and the posterior
/// family cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    prior: Dist,
    channel: Channel,
    marginal: Dist,
    support: Vec<usize>,
    posteriors: Vec<Dist>,
}

impl Joint {
    pub fn new(prior: Dist, channel: Channel) -> Result<Self> {
        if prior.len() != channel.n_in() {
            return Err(Error::Dimension(format!(
                "prior has {} symbols but channel has {} rows",
                prior.len(),
                channel.n_in()
            )));
        }
        let n_y = channel.n_out();
        let mut py = vec![0.0; n_y];
        for (x, px) in prior.iter().enumerate() {
            for (y, acc) in py.iter_mut().enumerate() {
                *acc += px * channel.get(x, y);
            }
        }
        let mut support = Vec::new();
        let mut posteriors = Vec::new();
        for (y, &mass) in py.iter().enumerate() {
            if mass <= 0.0 {
                continue;
            }
            let post = prior
                .iter()
                .enumerate()
                .map(|(x, px)| px * channel.get(x, y))
                .collect();
            support.push(y);
            posteriors.push(Dist::from_weights(post)?);
        }
        let marginal = Dist::from_weights(py)?;
        Ok(Joint {
            prior,
            channel,
            marginal,
            support,
            posteriors,
        })
    }

    /// Builds a joint from a matrix of `p(x, y)` entries. Rows with zero
    /// mass get a uniform channel row; they never contribute.
    pub fn from_matrix(pxy: Vec<Vec<f64>>) -> Result<Self> {
        let n_y = pxy
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Dimension("empty joint matrix".into()))?;
        if pxy.iter().any(|r| r.len() != n_y) {
            return Err(Error::Dimension("ragged joint matrix".into()));
        }
        let row_mass: Vec<f64> = pxy.iter().map(|r| r.iter().sum()).collect();
        let prior = Dist::new(row_mass.clone())?;
        let rows = pxy
            .into_iter()
            .zip(row_mass)
            .map(|(r, m)| {
                if m > 0.0 {
                    Dist::from_weights(r)
                } else {
                    Ok(Dist::uniform(n_y))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Joint::new(prior, Channel::from_rows(rows)?)
    }

    pub fn prior(&self) -> &Dist {
        &self.prior
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    /// The output marginal `p_Y`.
    pub fn marginal(&self) -> &Dist {
        &self.marginal
    }

    /// Outputs with positive probability, in increasing order.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Posteriors `p_{X|Y}(·|y)` aligned with [`Joint::support`].
    pub fn posteriors(&self) -> &[Dist] {
        &self.posteriors
    }

    /// `(p_Y(y), p_{X|Y}(·|y))` over the supported outputs.
    pub fn supported(&self) -> impl Iterator<Item = (f64, &Dist)> + '_ {
        self.support
            .iter()
            .zip(&self.posteriors)
            .map(|(&y, post)| (self.marginal.get(y), post))
    }

    pub fn posterior(&self, y: usize) -> Option<&Dist> {
        self.support
            .iter()
            .position(|&s| s == y)
            .map(|i| &self.posteriors[i])
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.prior.get(x) * self.channel.get(x, y)
    }

    pub fn n_x(&self) -> usize {
        self.prior.len()
    }

    pub fn n_y(&self) -> usize {
        self.channel.n_out()
    }

    /// Short stable fingerprint of the instance.
    pub fn digest(&self) -> String {
        let mut bytes = Vec::new();
        push_dist(&mut bytes, &self.prior);
        self.channel.rows().iter().for_each(|r| push_dist(&mut bytes, r));
        short_hash(&bytes)
    }
}

/// A Markov chain `X − Y − Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovTriple {
    pub prior: Dist,
    pub ch_xy: Channel,
    pub ch_yz: Channel,
}

impl MarkovTriple {
    pub fn new(prior: Dist, ch_xy: Channel, ch_yz: Channel) -> Result<Self> {
        if prior.len() != ch_xy.n_in() || ch_xy.n_out() != ch_yz.n_in() {
            return Err(Error::Dimension(format!(
                "Markov triple sizes {} -> {}x{} -> {}x{} do not chain",
                prior.len(),
                ch_xy.n_in(),
                ch_xy.n_out(),
                ch_yz.n_in(),
                ch_yz.n_out()
            )));
        }
        Ok(MarkovTriple { prior, ch_xy, ch_yz })
    }

    pub fn digest(&self) -> String {
        let mut bytes = Vec::new();
        push_dist(&mut bytes, &self.prior);
        self.ch_xy.rows().iter().for_each(|r| push_dist(&mut bytes, r));
        self.ch_yz.rows().iter().for_each(|r| push_dist(&mut bytes, r));
        short_hash(&bytes)
    }
}

/// The joints `(X, Y)` and `(X, Z)` of a Markov triple. `p_{Z|X}` is the
/// cascade of the two channels.
pub fn compose_markov(t: &MarkovTriple) -> Result<(Joint, Joint)> {
    let xy = Joint::new(t.prior.clone(), t.ch_xy.clone())?;
    let xz = Joint::new(t.prior.clone(), t.ch_xy.compose(&t.ch_yz)?)?;
    Ok((xy, xz))
}

pub fn make_joint(prior: Dist, channel: Channel) -> Result<Joint> {
    Joint::new(prior, channel)
}

fn push_dist(bytes: &mut Vec<u8>, d: &Dist) {
    bytes.extend_from_slice(&(d.len() as u64).to_le_bytes());
    for p in d.iter() {
        bytes.extend_from_slice(&p.to_bits().to_le_bytes());
    }
}

fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// How many entries of each sampled simplex survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sparsity {
    #[default]
    Dense,
    /// Keep this many randomly chosen entries (at least one) and zero the
    /// rest before renormalizing.
    Keep(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Dist,
    Channel,
    Joint,
    Markov,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Dist(Dist),
    Channel(Channel),
    Joint(Joint),
    Markov(MarkovTriple),
}

/// Flat Dirichlet sample on the `n`-simplex.
pub fn sample_dist<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Dist {
    sample_sparse_dist(rng, n, Sparsity::Dense)
}

pub fn sample_sparse_dist<R: Rng + ?Sized>(rng: &mut R, n: usize, sparsity: Sparsity) -> Dist {
    assert!(n > 0, "alphabet must be non-empty");
    let mut w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    if let Sparsity::Keep(k) = sparsity {
        let keep = k.clamp(1, n);
        // partial Fisher-Yates: the first `keep` slots of `order` survive
        let mut order: Vec<usize> = (0..n).collect();
        for i in 0..keep {
            let j = rng.random_range(i..n);
            order.swap(i, j);
        }
        for &i in &order[keep..] {
            w[i] = 0.0;
        }
    }
    if w.iter().all(|&v| v == 0.0) {
        // Exp1 returned exact zeros everywhere; not reachable in practice
        return Dist::uniform(n);
    }
    Dist::from_weights(w).expect("exponential samples are finite and non-negative")
}

pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, n_in: usize, n_out: usize) -> Channel {
    sample_sparse_channel(rng, n_in, n_out, Sparsity::Dense)
}

pub fn sample_sparse_channel<R: Rng + ?Sized>(
    rng: &mut R,
    n_in: usize,
    n_out: usize,
    sparsity: Sparsity,
) -> Channel {
    let rows = (0..n_in)
        .map(|_| sample_sparse_dist(rng, n_out, sparsity))
        .collect();
    Channel::from_rows(rows).expect("rows share a length")
}

pub fn sample_joint<R: Rng + ?Sized>(rng: &mut R, n_x: usize, n_y: usize) -> Joint {
    let prior = sample_dist(rng, n_x);
    let ch = sample_channel(rng, n_x, n_y);
    Joint::new(prior, ch).expect("sampled sizes agree")
}

pub fn sample_markov<R: Rng + ?Sized>(rng: &mut R, n_x: usize, n_y: usize, n_z: usize) -> MarkovTriple {
    let prior = sample_dist(rng, n_x);
    let ch_xy = sample_channel(rng, n_x, n_y);
    let ch_yz = sample_channel(rng, n_y, n_z);
    MarkovTriple { prior, ch_xy, ch_yz }
}

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent per-trial seed derived from a run seed (splitmix64 finalizer),
/// so any trial can be replayed alone.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Alphabet size in `{2, 3, 4}` with weights `3 : 2 : 1`.
pub fn sample_small_size<R: Rng + ?Sized>(rng: &mut R) -> usize {
    match rng.random_range(0..6) {
        0..=2 => 2,
        3..=4 => 3,
        _ => 4,
    }
}

/// Seeded random instance. `dims` holds one size for a distribution, two
/// for a channel or joint (`|X|, |Y|`) and three for a Markov triple.
pub fn random_instance(seed: u64, dims: &[usize], kind: InstanceKind, sparsity: Sparsity) -> Result<Instance> {
    let needed = match kind {
        InstanceKind::Dist => 1,
        InstanceKind::Channel | InstanceKind::Joint => 2,
        InstanceKind::Markov => 3,
    };
    if dims.len() != needed || dims.contains(&0) {
        return Err(Error::Dimension(format!(
            "{kind:?} needs {needed} positive sizes, got {dims:?}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let rng = &mut rng;
    Ok(match kind {
        InstanceKind::Dist => Instance::Dist(sample_sparse_dist(rng, dims[0], sparsity)),
        InstanceKind::Channel => Instance::Channel(sample_sparse_channel(rng, dims[0], dims[1], sparsity)),
        InstanceKind::Joint => {
            let prior = sample_sparse_dist(rng, dims[0], sparsity);
            let ch = sample_sparse_channel(rng, dims[0], dims[1], sparsity);
            Instance::Joint(Joint::new(prior, ch)?)
        }
        InstanceKind::Markov => {
            let prior = sample_sparse_dist(rng, dims[0], sparsity);
            let ch_xy = sample_sparse_channel(rng, dims[0], dims[1], sparsity);
            let ch_yz = sample_sparse_channel(rng, dims[1], dims[2], sparsity);
            Instance::Markov(MarkovTriple::new(prior, ch_xy, ch_yz)?)
        }
    })
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// Tolerance used for file and command-line input, where values are
/// printed with a handful of digits.
pub const INGEST_TOL: f64 = 1e-6;

/// Parses one comma-separated row of decimals into a distribution.
pub fn parse_dist(text: &str) -> Result<Dist> {
    let probs = parse_row(text)?;
    Dist::with_tolerance(probs, INGEST_TOL)
}

fn parse_row(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|f| {
            let f = f.trim();
            f.parse::<f64>()
                .map_err(|_| Error::Parse(format!("'{f}' is not a number")))
        })
        .collect()
}

/// A rectangular CSV of channel rows, optionally with the prior as the
/// first column.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCsv {
    pub prior: Option<Dist>,
    pub channel: Channel,
}

/// Reads a channel CSV. A header row is optional; when present and its
/// first field is `prior`, the first column holds the prior. Passing
/// `prior_column = true` forces that layout without a header.
pub fn read_channel_csv<R: Read>(reader: R, prior_column: bool) -> Result<ChannelCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut prior_column = prior_column;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("csv: {e}")))?;
        let first = rec.get(0).unwrap_or("");
        if i == 0 && first.parse::<f64>().is_err() {
            if first.eq_ignore_ascii_case("prior") {
                prior_column = true;
            }
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: '{f}' is not a number", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("csv has no data rows".into()));
    }
    let (prior, rows) = if prior_column {
        let prior = rows.iter().map(|r| r[0]).collect::<Vec<_>>();
        let rest = rows.into_iter().map(|r| r[1..].to_vec()).collect::<Vec<_>>();
        (Some(Dist::with_tolerance(prior, INGEST_TOL)?), rest)
    } else {
        (None, rows)
    };
    let dists = rows
        .into_iter()
        .map(|r| Dist::with_tolerance(r, INGEST_TOL))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelCsv {
        prior,
        channel: Channel::from_rows(dists)?,
    })
}

pub fn read_channel_csv_file(path: &Path, prior_column: bool) -> Result<ChannelCsv> {
    let file = std::fs::File::open(path)?;
    read_channel_csv(file, prior_column)
}

/// Reads a finite gain table: rows are secrets, columns are actions.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("csv: {e}")))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("csv has no data rows".into()));
    }
    Ok(rows)
}
