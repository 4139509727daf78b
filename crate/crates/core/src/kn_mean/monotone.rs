use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::syntax::Term;

/// `|q − 1|` below which the q-logarithm takes its natural-log branch.
pub const Q_ONE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Increasing => Direction::Decreasing,
            Direction::Decreasing => Direction::Increasing,
        }
    }

    /// Direction of `outer ∘ inner` where `self` is the outer direction.
    pub fn then(self, other: Direction) -> Direction {
        if self == other {
            Direction::Increasing
        } else {
            Direction::Decreasing
        }
    }
}

/// An open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const POSITIVE: Interval = Interval {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// A strictly monotone continuous function with a closed-form inverse.
///
/// `Compose(outer, inner)` is `t ↦ outer(inner(t))`; nesting is unbounded
/// so symbolic manipulations like `φ ∘ η⁻¹` stay first-class values.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneFn {
    Affine { a: f64, b: f64 },
    Log,
    Exp,
    QLog(f64),
    QExp(f64),
    Power(f64),
    Negate,
    Compose(Box<MonotoneFn>, Box<MonotoneFn>),
}

fn near_one(q: f64) -> bool {
    (q - 1.0).abs() < Q_ONE_EPS
}

/// Range of `ln_q` over `(0, ∞)`.
fn q_log_range(q: f64) -> Interval {
    if near_one(q) {
        Interval::REAL
    } else if q < 1.0 {
        Interval {
            lo: -1.0 / (1.0 - q),
            hi: f64::INFINITY,
        }
    } else {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: 1.0 / (q - 1.0),
        }
    }
}

/// The q-logarithm `(t^{1−q} − 1)/(1 − q)`, `log t` at `q = 1`.
pub fn q_log(t: f64, q: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("ln_{q}"), t, "(0, inf)"));
    }
    if near_one(q) {
        Ok(t.ln())
    } else {
        let e = 1.0 - q;
        // expm1 keeps precision when (1-q)·log t is small
        Ok((e * t.ln()).exp_m1() / e)
    }
}

/// Inverse of [`q_log`]: `(1 + (1 − q)s)^{1/(1−q)}`.
pub fn q_exp(s: f64, q: f64) -> Result<f64> {
    let range = q_log_range(q);
    if !range.contains(s) {
        return Err(Error::domain(format!("exp_{q}"), s, range.to_string()));
    }
    if near_one(q) {
        Ok(s.exp())
    } else {
        let e = 1.0 - q;
        Ok(((e * s).ln_1p() / e).exp())
    }
}

fn finite(func: &str, arg: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(func, arg, "values with finite image"))
    }
}

impl MonotoneFn {
    pub fn identity() -> Self {
        MonotoneFn::Affine { a: 1.0, b: 0.0 }
    }

    pub fn affine(a: f64, b: f64) -> Result<Self> {
        let f = MonotoneFn::Affine { a, b };
        f.validate()?;
        Ok(f)
    }

    pub fn q_log(q: f64) -> Result<Self> {
        let f = MonotoneFn::QLog(q);
        f.validate()?;
        Ok(f)
    }

    pub fn power(r: f64) -> Result<Self> {
        let f = MonotoneFn::Power(r);
        f.validate()?;
        Ok(f)
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: MonotoneFn, inner: MonotoneFn) -> Self {
        MonotoneFn::Compose(Box::new(outer), Box::new(inner))
    }

    /// `self ∘ inner`.
    pub fn after(self, inner: MonotoneFn) -> Self {
        MonotoneFn::compose(self, inner)
    }

    /// Checks parameter constraints through the whole tree.
    pub fn validate(&self) -> Result<()> {
        match self {
            MonotoneFn::Affine { a, b } => {
                if *a == 0.0 || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidParameter(format!("affine({a},{b}) is not strictly monotone")));
                }
            }
            MonotoneFn::QLog(q) | MonotoneFn::QExp(q) => {
                if !q.is_finite() {
                    return Err(Error::InvalidParameter(format!("q = {q}")));
                }
            }
            MonotoneFn::Power(r) => {
                if *r == 0.0 || !r.is_finite() {
                    return Err(Error::InvalidParameter(format!("power({r}) is not strictly monotone")));
                }
            }
            MonotoneFn::Compose(o, i) => {
                o.validate()?;
                i.validate()?;
            }
            MonotoneFn::Log | MonotoneFn::Exp | MonotoneFn::Negate => {}
        }
        Ok(())
    }

    pub fn direction(&self) -> Direction {
        match self {
            MonotoneFn::Affine { a, .. } if *a < 0.0 => Direction::Decreasing,
            MonotoneFn::Power(r) if *r < 0.0 => Direction::Decreasing,
            MonotoneFn::Negate => Direction::Decreasing,
            MonotoneFn::Compose(o, i) => o.direction().then(i.direction()),
            _ => Direction::Increasing,
        }
    }

    pub fn is_increasing(&self) -> bool {
        self.direction() == Direction::Increasing
    }

    /// Domain of the innermost function. For compositions, points in this
    /// interval can still be rejected by an outer stage at evaluation.
    pub fn domain(&self) -> Interval {
        match self {
            MonotoneFn::Log | MonotoneFn::QLog(_) | MonotoneFn::Power(_) => Interval::POSITIVE,
            MonotoneFn::QExp(q) => q_log_range(*q),
            MonotoneFn::Compose(_, i) => i.domain(),
            _ => Interval::REAL,
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        let d = self.domain();
        if d.contains(t) {
            Ok(())
        } else {
            Err(Error::domain(self.to_string(), t, d.to_string()))
        }
    }

    pub fn apply(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::domain(self.to_string(), t, "real numbers"));
        }
        match self {
            MonotoneFn::Compose(o, i) => o.apply(i.apply(t)?),
            _ => {
                self.check(t)?;
                let v = match self {
                    MonotoneFn::Affine { a, b } => a * t + b,
                    MonotoneFn::Log => t.ln(),
                    MonotoneFn::Exp => t.exp(),
                    MonotoneFn::QLog(q) => q_log(t, *q)?,
                    MonotoneFn::QExp(q) => q_exp(t, *q)?,
                    MonotoneFn::Power(r) => t.powf(*r),
                    MonotoneFn::Negate => -t,
                    MonotoneFn::Compose(..) => unreachable!(),
                };
                finite(&self.to_string(), t, v)
            }
        }
    }

    pub fn inverse(&self, s: f64) -> Result<f64> {
        if s.is_nan() {
            return Err(Error::domain(format!("inverse of {self}"), s, "real numbers"));
        }
        let v = match self {
            MonotoneFn::Affine { a, b } => (s - b) / a,
            MonotoneFn::Log => s.exp(),
            MonotoneFn::Exp => {
                if !(s > 0.0) {
                    return Err(Error::domain("inverse of exp", s, "(0, inf)"));
                }
                s.ln()
            }
            MonotoneFn::QLog(q) => q_exp(s, *q)?,
            MonotoneFn::QExp(q) => q_log(s, *q)?,
            MonotoneFn::Power(r) => {
                if !(s > 0.0) {
                    return Err(Error::domain(format!("inverse of {self}"), s, "(0, inf)"));
                }
                s.powf(1.0 / r)
            }
            MonotoneFn::Negate => -s,
            MonotoneFn::Compose(o, i) => return i.inverse(o.inverse(s)?),
        };
        finite(&format!("inverse of {self}"), s, v)
    }

    /// First derivative at `t`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        let v = match self {
            MonotoneFn::Compose(o, i) => {
                let u = i.apply(t)?;
                return Ok(o.derivative(u)? * i.derivative(t)?);
            }
            _ => {
                self.check(t)?;
                match self {
                    MonotoneFn::Affine { a, .. } => *a,
                    MonotoneFn::Log => 1.0 / t,
                    MonotoneFn::Exp => t.exp(),
                    MonotoneFn::QLog(q) => {
                        if near_one(*q) {
                            1.0 / t
                        } else {
                            t.powf(-q)
                        }
                    }
                    MonotoneFn::QExp(q) => q_exp(t, *q)?.powf(*q),
                    MonotoneFn::Power(r) => r * t.powf(r - 1.0),
                    MonotoneFn::Negate => -1.0,
                    MonotoneFn::Compose(..) => unreachable!(),
                }
            }
        };
        finite(&format!("derivative of {self}"), t, v)
    }

    /// The inverse as a function value: `f.inverse_fn().apply(s) == f.inverse(s)`.
    pub fn inverse_fn(&self) -> MonotoneFn {
        match self {
            MonotoneFn::Affine { a, b } => MonotoneFn::Affine { a: 1.0 / a, b: -b / a },
            MonotoneFn::Log => MonotoneFn::Exp,
            MonotoneFn::Exp => MonotoneFn::Log,
            MonotoneFn::QLog(q) => MonotoneFn::QExp(*q),
            MonotoneFn::QExp(q) => MonotoneFn::QLog(*q),
            MonotoneFn::Power(r) => MonotoneFn::Power(1.0 / r),
            MonotoneFn::Negate => MonotoneFn::Negate,
            MonotoneFn::Compose(o, i) => MonotoneFn::compose(i.inverse_fn(), o.inverse_fn()),
        }
    }

    pub fn from_term(t: &Term) -> Result<Self> {
        let name = t
            .name()
            .ok_or_else(|| Error::Parse("expected a function, found a number".into()))?;
        let f = match name {
            "affine" => {
                let a = t.expect_arity(2)?;
                MonotoneFn::Affine {
                    a: a[0].as_num()?,
                    b: a[1].as_num()?,
                }
            }
            "id" | "identity" => {
                t.expect_arity(0)?;
                MonotoneFn::identity()
            }
            "log" => {
                t.expect_arity(0)?;
                MonotoneFn::Log
            }
            "exp" => {
                t.expect_arity(0)?;
                MonotoneFn::Exp
            }
            "neg" | "negate" => {
                t.expect_arity(0)?;
                MonotoneFn::Negate
            }
            "qlog" => MonotoneFn::QLog(t.expect_arity(1)?[0].as_num()?),
            "qexp" => MonotoneFn::QExp(t.expect_arity(1)?[0].as_num()?),
            "power" => MonotoneFn::Power(t.expect_arity(1)?[0].as_num()?),
            "compose" => {
                let a = t.expect_arity(2)?;
                MonotoneFn::compose(Self::from_term(a[0])?, Self::from_term(a[1])?)
            }
            other => return Err(Error::Parse(format!("unknown function '{other}'"))),
        };
        f.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(f)
    }
}

impl fmt::Display for MonotoneFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonotoneFn::Affine { a, b } => write!(f, "affine({a},{b})"),
            MonotoneFn::Log => write!(f, "log"),
            MonotoneFn::Exp => write!(f, "exp"),
            MonotoneFn::QLog(q) => write!(f, "qlog({q})"),
            MonotoneFn::QExp(q) => write!(f, "qexp({q})"),
            MonotoneFn::Power(r) => write!(f, "power({r})"),
            MonotoneFn::Negate => write!(f, "neg"),
            MonotoneFn::Compose(o, i) => write!(f, "compose({o},{i})"),
        }
    }
}

impl FromStr for MonotoneFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MonotoneFn::from_term(&Term::parse(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_points(f: &MonotoneFn) -> Vec<f64> {
        let d = f.domain();
        let lo = if d.lo.is_finite() { d.lo } else { -5.0 };
        let hi = if d.hi.is_finite() { d.hi } else { lo.max(0.0) + 5.0 };
        (1..=100)
            .map(|i| lo + (hi - lo) * i as f64 / 101.0)
            .collect()
    }

    fn family() -> Vec<MonotoneFn> {
        vec![
            MonotoneFn::Affine { a: 2.0, b: -1.0 },
            MonotoneFn::Affine { a: -0.5, b: 3.0 },
            MonotoneFn::Log,
            MonotoneFn::Exp,
            MonotoneFn::QLog(0.5),
            MonotoneFn::QLog(2.0),
            MonotoneFn::QLog(1.0),
            MonotoneFn::QExp(0.5),
            MonotoneFn::QExp(3.0),
            MonotoneFn::Power(2.0),
            MonotoneFn::Power(-1.5),
            MonotoneFn::Negate,
            MonotoneFn::compose(MonotoneFn::QLog(0.5), MonotoneFn::Exp),
            MonotoneFn::compose(MonotoneFn::Negate, MonotoneFn::Log),
            MonotoneFn::compose(
                MonotoneFn::Affine { a: 3.0, b: 1.0 },
                MonotoneFn::compose(MonotoneFn::Power(0.5), MonotoneFn::Exp),
            ),
        ]
    }

    #[test]
    fn round_trip_inverse() {
        for f in family() {
            for t in sample_points(&f) {
                let Ok(s) = f.apply(t) else { continue };
                let back = f.inverse(s).unwrap();
                assert!(
                    (back - t).abs() <= 1e-10 * t.abs().max(1.0),
                    "{f}: {t} -> {s} -> {back}"
                );
            }
        }
    }

    #[test]
    fn direction_matches_finite_difference() {
        for f in family() {
            let pts = sample_points(&f);
            let (t0, t1) = (pts[40], pts[41]);
            let diff = f.apply(t1).unwrap() - f.apply(t0).unwrap();
            assert_eq!(diff.signum(), f.direction().sign(), "{f}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        for f in family() {
            for &t in sample_points(&f).iter().step_by(17) {
                let h = 1e-6 * t.abs().max(1.0);
                let (Ok(a), Ok(b)) = (f.apply(t + h), f.apply(t - h)) else { continue };
                let fd = (a - b) / (2.0 * h);
                let d = f.derivative(t).unwrap();
                assert!((fd - d).abs() <= 1e-5 * d.abs().max(1.0), "{f} at {t}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn symbolic_inverse_agrees() {
        for f in family() {
            let inv = f.inverse_fn();
            for t in sample_points(&f) {
                let Ok(s) = f.apply(t) else { continue };
                let a = inv.apply(s).unwrap();
                assert!((a - t).abs() <= 1e-10 * t.abs().max(1.0), "{f}");
            }
        }
    }

    #[test]
    fn q_log_values() {
        assert_eq!(q_log(1.0, 0.3).unwrap(), 0.0);
        assert_eq!(q_log(1.0, 1.0).unwrap(), 0.0);
        assert!((q_log(std::f64::consts::E, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((q_log(2.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(q_log(0.0, 2.0).is_err());
        assert!(q_log(-1.0, 1.0).is_err());
    }

    #[test]
    fn out_of_domain_is_an_error() {
        assert!(MonotoneFn::Log.apply(0.0).is_err());
        assert!(MonotoneFn::Log.apply(-1.0).is_err());
        assert!(MonotoneFn::Exp.inverse(0.0).is_err());
        // ln_2 maps (0, inf) into (-inf, 1)
        assert!(MonotoneFn::QLog(2.0).inverse(1.0).is_err());
        assert!(MonotoneFn::compose(MonotoneFn::Log, MonotoneFn::Negate).apply(1.0).is_err());
        assert!(MonotoneFn::affine(0.0, 1.0).is_err());
        assert!(MonotoneFn::power(0.0).is_err());
    }

    #[test]
    fn text_round_trip() {
        for f in family() {
            let text = f.to_string();
            let back: MonotoneFn = text.parse().unwrap();
            assert_eq!(back, f, "{text}");
        }
        assert_eq!(
            "compose(qlog(0.5),exp)".parse::<MonotoneFn>().unwrap(),
            MonotoneFn::compose(MonotoneFn::QLog(0.5), MonotoneFn::Exp)
        );
        assert!("affine(0,1)".parse::<MonotoneFn>().is_err());
        assert!("sin".parse::<MonotoneFn>().is_err());
        assert!("log(2)".parse::<MonotoneFn>().is_err());
    }
}
