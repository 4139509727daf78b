//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's entropy code; values are computed from the definitions.

#![allow(dead_code)]

use kn_entropy::prob::Joint;

pub fn shannon_direct(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

pub fn power_sum_direct(p: &[f64], alpha: f64) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| v.powf(alpha)).sum()
}

pub fn renyi_direct(p: &[f64], alpha: f64) -> f64 {
    power_sum_direct(p, alpha).ln() / (1.0 - alpha)
}

pub fn hct_direct(p: &[f64], alpha: f64) -> f64 {
    (1.0 - power_sum_direct(p, alpha)) / (alpha - 1.0)
}

pub fn sharma_mittal_direct(p: &[f64], alpha: f64, beta: f64) -> f64 {
    (power_sum_direct(p, alpha).powf((1.0 - beta) / (1.0 - alpha)) - 1.0) / (1.0 - beta)
}

/// `p(x, y)` as a dense matrix.
pub fn joint_matrix(j: &Joint) -> Vec<Vec<f64>> {
    (0..j.n_x())
        .map(|x| (0..j.n_y()).map(|y| j.prob(x, y)).collect())
        .collect()
}

fn column(m: &[Vec<f64>], y: usize) -> Vec<f64> {
    m.iter().map(|r| r[y]).collect()
}

/// `−Σ p(x,y) log p(x|y)`.
pub fn shannon_cond_direct(j: &Joint) -> f64 {
    let m = joint_matrix(j);
    let mut h = 0.0;
    for y in 0..j.n_y() {
        let c = column(&m, y);
        let py: f64 = c.iter().sum();
        for v in c {
            if v > 0.0 {
                h -= v * (v / py).ln();
            }
        }
    }
    h
}

/// `(α/(1−α)) log Σ_y (Σ_x p(x,y)^α)^{1/α}`.
pub fn arimoto_direct(j: &Joint, alpha: f64) -> f64 {
    let m = joint_matrix(j);
    let s: f64 = (0..j.n_y())
        .map(|y| power_sum_direct(&column(&m, y), alpha).powf(1.0 / alpha))
        .sum();
    alpha / (1.0 - alpha) * s.ln()
}

/// `(1/(1−α)) log Σ_y p(y) Σ_x p(x|y)^α`.
pub fn hayashi_direct(j: &Joint, alpha: f64) -> f64 {
    let m = joint_matrix(j);
    let s: f64 = (0..j.n_y())
        .map(|y| {
            let c = column(&m, y);
            let py: f64 = c.iter().sum();
            if py == 0.0 {
                0.0
            } else {
                py * c.iter().map(|v| (v / py).powf(alpha)).sum::<f64>()
            }
        })
        .sum();
    s.ln() / (1.0 - alpha)
}

/// The Augustin–Csiszár objective for a 2×2 joint with reverse channel
/// rows `r(·|0) = (u, 1−u)` and `r(·|1) = (v, 1−v)`.
struct Grid2 {
    prior: [f64; 2],
    ch: [[f64; 2]; 2],
    scale: f64,
}

impl Grid2 {
    fn new(j: &Joint, alpha: f64) -> Grid2 {
        assert!(j.n_x() == 2 && j.n_y() == 2);
        Grid2 {
            prior: [j.prior().get(0), j.prior().get(1)],
            ch: [
                [j.channel().get(0, 0), j.channel().get(0, 1)],
                [j.channel().get(1, 0), j.channel().get(1, 1)],
            ],
            scale: alpha / (1.0 - alpha),
        }
    }

    /// `ru = (u^s, (1−u)^s)`, `rv` likewise.
    fn value(&self, ru: (f64, f64), rv: (f64, f64)) -> f64 {
        let s0 = self.ch[0][0] * ru.0 + self.ch[0][1] * rv.0;
        let s1 = self.ch[1][0] * ru.1 + self.ch[1][1] * rv.1;
        let v = self.scale * (self.prior[0] * s0.ln() + self.prior[1] * s1.ln());
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimum of `f` over `[lo, hi]²` on a grid with `n` steps per side.
fn grid_min(g: &Grid2, s: f64, lo: (f64, f64), hi: (f64, f64), n: usize) -> (f64, f64, f64) {
    let pts = |a: f64, b: f64| -> Vec<(f64, (f64, f64))> {
        (0..=n)
            .map(|k| {
                let t = a + (b - a) * k as f64 / n as f64;
                let t = t.clamp(0.0, 1.0);
                (t, (t.powf(s), (1.0 - t).powf(s)))
            })
            .collect()
    };
    let us = pts(lo.0, hi.0);
    let vs = pts(lo.1, hi.1);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &(u, pu) in &us {
        for &(v, pv) in &vs {
            let f = g.value(pu, pv);
            if f < best.0 {
                best = (f, u, v);
            }
        }
    }
    best
}

/// Exhaustive search over both reverse-channel simplices at step `1e-3`,
/// then one refinement at step `1e-5` around the best cell.
pub fn ac_grid_oracle(j: &Joint, alpha: f64) -> f64 {
    let g = Grid2::new(j, alpha);
    let s = 1.0 - 1.0 / alpha;
    let (_, u, v) = grid_min(&g, s, (0.0, 0.0), (1.0, 1.0), 1000);
    let h = 1e-3;
    let (f, _, _) = grid_min(
        &g,
        s,
        ((u - h).max(0.0), (v - h).max(0.0)),
        ((u + h).min(1.0), (v + h).min(1.0)),
        200,
    );
    f
}

/// `max_r Σ_x p(x) φ(r(x))` for two symbols by grid search over `r(0)` at
/// step `1e-4`, returned through `φ⁻¹`.
pub fn soft_prior_grid(p: [f64; 2], phi: impl Fn(f64) -> f64, phi_inv: impl Fn(f64) -> f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for k in 0..=10_000 {
        let r = k as f64 * 1e-4;
        let v = p[0] * phi(r) + p[1] * phi(1.0 - r);
        if v > best {
            best = v;
        }
    }
    phi_inv(best)
}
