//! Multi-start minimization over a product of probability simplices.
//!
//! The point is a flat vector split into consecutive blocks, each block a
//! distribution. Local search is exponentiated-gradient descent in the
//! softmax coordinates of every block with backtracking on the step, or a
//! problem-specific multiplicative fixed-point map when the objective
//! provides one. Starts are the uniform point, Dirichlet draws, and the
//! best vertex (one point mass per block) when there are few enough.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{rng_from_seed, sample_dist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FixedPoint,
    ExpGradient,
}

/// Settings shared by every simplex optimization in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub restarts: usize,
    pub max_iters: usize,
    pub step_size: f64,
    /// Convergence threshold on the absolute objective change.
    pub tol: f64,
    /// Minimum simplex entry.
    pub floor: f64,
    pub seed: u64,
    /// Vertices are tried as an extra start when at most this many exist.
    pub vertex_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::ExpGradient,
            restarts: 8,
            max_iters: 10_000,
            step_size: 0.1,
            tol: 1e-12,
            floor: 1e-12,
            seed: 0,
            vertex_cap: 4096,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.floor > 0.0 && self.floor <= 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "floor must lie in (0, 1e-6], got {}",
                self.floor
            )));
        }
        if !(self.step_size > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidParameter("step size and max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// An objective to minimize over a product of simplices.
pub(crate) trait Objective: Sync {
    fn block_sizes(&self) -> &[usize];

    /// Objective value; fills `grad` (same layout as `r`) when given.
    fn eval(&self, r: &[f64], grad: Option<&mut [f64]>) -> Result<f64>;

    /// A multiplicative map whose fixed points are stationary. `None` when
    /// the objective has none; the solver then uses gradient steps.
    fn fixed_point(&self, _r: &[f64], _out: &mut [f64]) -> Option<Result<()>> {
        None
    }
}

/// Result of one multi-start run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub point: Vec<f64>,
    pub value: f64,
    /// Iterations of the winning start.
    pub iterations: usize,
    /// Whether any start met the tolerance.
    pub converged: bool,
    /// Index of the winning start; `restarts` denotes the vertex start.
    pub best_start: usize,
    pub starts: usize,
}

struct LocalRun {
    point: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn project(r: &mut [f64], sizes: &[usize], floor: f64) {
    let mut off = 0;
    for &n in sizes {
        let block = &mut r[off..off + n];
        for v in block.iter_mut() {
            if !(*v >= floor) {
                *v = floor;
            }
        }
        let s: f64 = block.iter().sum();
        block.iter_mut().for_each(|v| *v /= s);
        off += n;
    }
}

fn uniform_point(sizes: &[usize]) -> Vec<f64> {
    sizes
        .iter()
        .flat_map(|&n| std::iter::repeat_n(1.0 / n as f64, n))
        .collect()
}

fn eg_run(obj: &dyn Objective, start: Vec<f64>, cfg: &SolverConfig) -> Result<LocalRun> {
    let sizes = obj.block_sizes();
    let dim = start.len();
    let mut r = start;
    project(&mut r, sizes, cfg.floor);
    let mut grad = vec![0.0; dim];
    let mut f = obj.eval(&r, Some(&mut grad))?;
    if !f.is_finite() {
        return Err(Error::Solver(format!("objective is {f} at the starting point")));
    }
    let mut cand = vec![0.0; dim];
    let mut cand_grad = vec![0.0; dim];
    let mut dir = vec![0.0; dim];
    let mut step = cfg.step_size;
    let max_step = cfg.step_size * 1e6;
    let mut small = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        // centered gradient g_i − <r, g> per block; the projected-gradient
        // size r_i·|g_i − <r, g>| decides stationarity
        let mut off = 0;
        let mut scale: f64 = 0.0;
        let mut kkt: f64 = 0.0;
        for &n in sizes {
            let mean: f64 = (off..off + n).map(|i| r[i] * grad[i]).sum();
            for i in off..off + n {
                dir[i] = grad[i] - mean;
                scale = scale.max(dir[i].abs());
                kkt = kkt.max(r[i] * dir[i].abs());
            }
            off += n;
        }
        if !(kkt > 0.0) {
            converged = true;
            break;
        }
        let norm = scale.max(1.0);
        let accepted = loop {
            for i in 0..dim {
                cand[i] = r[i] * (-step * dir[i] / norm).exp();
            }
            project(&mut cand, sizes, cfg.floor);
            match obj.eval(&cand, Some(&mut cand_grad)) {
                Ok(fc) if fc < f => break Some(fc),
                _ => {
                    step *= 0.5;
                    if step < 1e-18 {
                        break None;
                    }
                }
            }
        };
        let Some(fc) = accepted else {
            // no descent at any step length: stationary to working precision
            converged = true;
            break;
        };
        let improvement = f - fc;
        std::mem::swap(&mut r, &mut cand);
        std::mem::swap(&mut grad, &mut cand_grad);
        f = fc;
        step = (step * 1.5).min(max_step);
        if improvement < cfg.tol {
            small += 1;
            if small >= 3 {
                converged = true;
                break;
            }
        } else {
            small = 0;
        }
    }
    Ok(LocalRun {
        point: r,
        value: f,
        iterations,
        converged,
    })
}

fn fixed_point_run(obj: &dyn Objective, start: Vec<f64>, cfg: &SolverConfig) -> Result<LocalRun> {
    let sizes = obj.block_sizes();
    let mut r = start;
    project(&mut r, sizes, cfg.floor);
    let mut f = obj.eval(&r, None)?;
    let mut best = (r.clone(), f);
    let mut next = vec![0.0; r.len()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        match obj.fixed_point(&r, &mut next) {
            Some(res) => res?,
            None => return eg_run(obj, r, cfg),
        }
        project(&mut next, sizes, cfg.floor);
        let mut fn_ = obj.eval(&next, None)?;
        // damp by geometric interpolation until the step descends
        let mut t = 1.0;
        let proposal = if fn_ > f { next.clone() } else { Vec::new() };
        while fn_ > f && t > 1e-6 {
            t *= 0.5;
            for ((n, &c), &q) in next.iter_mut().zip(&r).zip(&proposal) {
                *n = c.powf(1.0 - t) * q.powf(t);
            }
            project(&mut next, sizes, cfg.floor);
            fn_ = obj.eval(&next, None)?;
        }
        if fn_ > f {
            break;
        }
        std::mem::swap(&mut r, &mut next);
        let change = (f - fn_).abs();
        f = fn_;
        if f < best.1 {
            best = (r.clone(), f);
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(LocalRun {
        point: best.0,
        value: best.1,
        iterations,
        converged,
    })
}

fn local_run(obj: &dyn Objective, start: Vec<f64>, cfg: &SolverConfig) -> Result<LocalRun> {
    match cfg.method {
        Method::ExpGradient => eg_run(obj, start, cfg),
        Method::FixedPoint => fixed_point_run(obj, start, cfg),
    }
}

/// Best vertex (one point mass per block, floored), if there are at most
/// `cap` of them. Ties keep the first in lexicographic order.
fn best_vertex(obj: &dyn Objective, cfg: &SolverConfig) -> Option<Vec<f64>> {
    let sizes = obj.block_sizes();
    let count = sizes
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .filter(|&c| c <= cfg.vertex_cap)?;
    let mut choice = vec![0usize; sizes.len()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut point = vec![0.0; sizes.iter().sum()];
    for _ in 0..count {
        point.iter_mut().for_each(|v| *v = 0.0);
        let mut off = 0;
        for (b, &n) in sizes.iter().enumerate() {
            point[off + choice[b]] = 1.0;
            off += n;
        }
        project(&mut point, sizes, cfg.floor);
        if let Ok(v) = obj.eval(&point, None) {
            if v.is_finite() && best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, point.clone()));
            }
        }
        // odometer, last block fastest
        for b in (0..sizes.len()).rev() {
            choice[b] += 1;
            if choice[b] < sizes[b] {
                break;
            }
            choice[b] = 0;
        }
    }
    best.map(|(_, p)| p)
}

/// Multi-start minimization. Ties between starts go to the lowest index.
pub(crate) fn minimize(obj: &dyn Objective, cfg: &SolverConfig) -> Result<SimplexSolution> {
    cfg.validate()?;
    let sizes = obj.block_sizes().to_vec();
    let mut rng = rng_from_seed(cfg.seed);
    let mut starts = vec![uniform_point(&sizes)];
    for _ in 1..cfg.restarts {
        let mut p = Vec::with_capacity(sizes.iter().sum());
        for &n in &sizes {
            p.extend(sample_dist(&mut rng, n).iter());
        }
        starts.push(p);
    }
    // keep the stream position independent of the vertex count
    let _ = rng.random::<u64>();
    if let Some(v) = best_vertex(obj, cfg) {
        starts.push(v);
    }

    let mut best: Option<(usize, LocalRun)> = None;
    let mut any_converged = false;
    let mut first_err = None;
    let n_starts = starts.len();
    for (k, start) in starts.into_iter().enumerate() {
        match local_run(obj, start, cfg) {
            Ok(run) => {
                any_converged |= run.converged;
                if run.value.is_finite() && best.as_ref().is_none_or(|(_, b)| run.value < b.value) {
                    best = Some((k, run));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((k, run)) => Ok(SimplexSolution {
            point: run.point,
            value: run.value,
            iterations: run.iterations,
            converged: any_converged,
            best_start: k,
            starts: n_starts,
        }),
        None => Err(first_err.unwrap_or_else(|| Error::Solver("all restarts diverged".into()))),
    }
}
