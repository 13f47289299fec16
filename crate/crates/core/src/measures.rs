//! Lift-based and lift-inverse measures.
//!
//! Lift-based measures average a function of `l(s, y)` over the prior and
//! only control the max-lift. Their lift-inverse counterparts apply the same
//! formulas to `1 / l(s, y)` and control the min-lift. [`MeasureKind`]
//! selects which pair of per-output statistics governs partitioning, the
//! greedy risk score and budget checks.

use std::fmt;
use std::str::FromStr;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::lift::{column_extremes, max_lift_ok, min_lift_ok, ratio, ratio_ok, LiftTable, LOG_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    /// Asymmetric bounds on min- and max-lift.
    Alip,
    /// Bound on `Γ(y) = Λ(y) / Ψ(y)` with `eps = eps_l + eps_u`.
    Ldp,
    /// Same constraints as [`MeasureKind::Alip`], scored by the symmetric
    /// worst log-lift.
    Lip,
    Ell1,
    Chi2,
    AlphaLift { alpha: f64 },
}

impl MeasureKind {
    pub fn alpha_lift(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha <= 1.0 {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(Self::AlphaLift { alpha })
    }

    pub fn is_extended(&self) -> bool {
        matches!(self, Self::Ell1 | Self::Chi2 | Self::AlphaLift { .. })
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Self::AlphaLift { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Parses a kind name; `alpha` is required for `alpha-lift` only.
    pub fn parse(name: &str, alpha: Option<f64>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "alip" => Ok(Self::Alip),
            "ldp" => Ok(Self::Ldp),
            "lip" => Ok(Self::Lip),
            "ell1" | "l1" => Ok(Self::Ell1),
            "chi2" => Ok(Self::Chi2),
            "alpha-lift" | "alpha" => Self::alpha_lift(alpha.ok_or_else(|| {
                Error::InvalidConfig("alpha-lift requires an alpha value".into())
            })?),
            other => Err(Error::InvalidConfig(format!("unknown measure kind `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Alip => "alip",
            Self::Ldp => "ldp",
            Self::Lip => "lip",
            Self::Ell1 => "ell1",
            Self::Chi2 => "chi2",
            Self::AlphaLift { .. } => "alpha-lift",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AlphaLift { alpha } => write!(f, "alpha-lift({alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, None)
    }
}

/// Which end of the lift range a bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    MaxLift,
    MinLift,
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.filter(|t| *t > f64::NEG_INFINITY).collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `Σ_s P(s) |l - 1|` for one lift column.
pub fn ell1_lift(col: &[f64], prior: &[f64]) -> f64 {
    col.iter().zip(prior).map(|(l, p)| p * (l - 1.0).abs()).sum()
}

pub fn chi2_lift(col: &[f64], prior: &[f64]) -> f64 {
    col.iter().zip(prior).map(|(l, p)| p * (l - 1.0) * (l - 1.0)).sum()
}

/// Power mean `(Σ_s P(s) l^α)^{1/α}`, evaluated in log space.
pub fn alpha_lift(col: &[f64], prior: &[f64], alpha: f64) -> f64 {
    let terms = col.iter().zip(prior).map(|(&l, &p)| {
        if l > 0.0 && p > 0.0 {
            p.ln() + alpha * l.ln()
        } else if l.is_infinite() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    });
    (log_sum_exp(terms) / alpha).exp()
}

fn inverted(col: &[f64]) -> Vec<f64> {
    col.iter()
        .map(|&l| if l > 0.0 { 1.0 / l } else { f64::INFINITY })
        .collect()
}

fn column_value(col: &[f64], prior: &[f64], kind: MeasureKind) -> Result<f64> {
    match kind {
        MeasureKind::Ell1 => Ok(ell1_lift(col, prior)),
        MeasureKind::Chi2 => Ok(chi2_lift(col, prior)),
        MeasureKind::AlphaLift { alpha } => Ok(alpha_lift(col, prior, alpha)),
        other => Err(Error::UnsupportedKind(format!(
            "{other} is not a lift-based measure"
        ))),
    }
}

/// Lift-based measure `Λ_•(y)` of one column.
pub fn lift_based_column(col: &[f64], prior: &[f64], kind: MeasureKind) -> Result<f64> {
    column_value(col, prior, kind)
}

/// Lift-inverse measure `Ψ_•(y)` of one column; infinite when a lift is zero.
pub fn lift_inverse_column(col: &[f64], prior: &[f64], kind: MeasureKind) -> Result<f64> {
    column_value(&inverted(col), prior, kind)
}

/// `Λ_•(y)` for every output.
pub fn lift_based(lt: &LiftTable, kind: MeasureKind) -> Result<Vec<f64>> {
    (0..lt.n_outputs())
        .map(|y| lift_based_column(&lt.column(y), lt.prior(), kind))
        .collect()
}

/// `Ψ_•(y)` for every output. Fails with [`Error::ZeroLift`] when a lift is
/// zero, since the inverse is then unbounded.
pub fn lift_inverse(lt: &LiftTable, kind: MeasureKind) -> Result<Vec<f64>> {
    for y in 0..lt.n_outputs() {
        for s in 0..lt.n_sensitive() {
            if lt.lift(s, y) <= 0.0 {
                return Err(Error::ZeroLift { s, y });
            }
        }
    }
    (0..lt.n_outputs())
        .map(|y| lift_inverse_column(&lt.column(y), lt.prior(), kind))
        .collect()
}

/// Bounds on `(Ψ_•, Λ_•)` implied by an `(eps_l, eps_u)` pair:
/// `e^eps - 1` for ℓ1, its square for χ², `e^eps` for the α-lift.
pub fn extended_bounds(kind: MeasureKind, b: &Budget) -> Result<(f64, f64)> {
    let f = |eps: f64| match kind {
        MeasureKind::Ell1 => Ok(eps.exp_m1()),
        MeasureKind::Chi2 => Ok(eps.exp_m1().powi(2)),
        MeasureKind::AlphaLift { .. } => Ok(eps.exp()),
        other => Err(Error::UnsupportedKind(format!(
            "{other} is not a lift-based measure"
        ))),
    };
    Ok((f(b.eps_l())?, f(b.eps_u())?))
}

#[inline]
fn within(value: f64, bound: f64) -> bool {
    bound.is_infinite() || value <= bound + LOG_TOL * bound.max(1.0)
}

/// Whether a single lift column meets the budget under `kind`.
pub fn column_satisfies(col: &[f64], prior: &[f64], kind: MeasureKind, b: &Budget) -> bool {
    let (psi, lambda) = column_extremes(col);
    match kind {
        MeasureKind::Alip | MeasureKind::Lip => min_lift_ok(psi, b) && max_lift_ok(lambda, b),
        MeasureKind::Ldp => ratio_ok(ratio(psi, lambda), b.ldp_eps()),
        _ => {
            let (lower, upper) = extended_bounds(kind, b).expect("extended kind");
            let up = column_value(col, prior, kind).expect("extended kind");
            let inv = column_value(&inverted(col), prior, kind).expect("extended kind");
            within(up, upper) && within(inv, lower)
        }
    }
}

/// Greedy risk score `ω` of a lift column.
pub fn risk_score(col: &[f64], prior: &[f64], kind: MeasureKind) -> f64 {
    let (psi, lambda) = column_extremes(col);
    match kind {
        MeasureKind::Alip => lambda + psi,
        MeasureKind::Ldp => ratio(psi, lambda),
        MeasureKind::Lip => {
            let lo = if psi > 0.0 { psi.ln().abs() } else { f64::INFINITY };
            lambda.ln().max(lo)
        }
        _ => {
            column_value(col, prior, kind).expect("extended kind")
                + column_value(&inverted(col), prior, kind).expect("extended kind")
        }
    }
}

/// Bound on the max- or min-lift implied by a budget `eps` on a lift-based
/// or lift-inverse measure, evaluated at the extremal output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedBound {
    pub direction: Direction,
    /// `max_y` of the measure that the premise constrains.
    pub measure_max: f64,
    /// Whether `measure_max <= eps` up to the log tolerance.
    pub premise_holds: bool,
    /// Extremal output (`argmax Λ` or `argmin Ψ`).
    pub output: usize,
    /// Extremal sensitive symbol at that output.
    pub sensitive: usize,
    /// Upper bound on `max Λ`, or lower bound on `min Ψ`.
    pub bound: f64,
    /// Actual `max Λ` or `min Ψ`.
    pub actual: f64,
}

impl ImpliedBound {
    /// False only if the premise holds and the actual extreme breaks the
    /// bound.
    pub fn holds(&self) -> bool {
        if !self.premise_holds || self.bound.is_infinite() {
            return true;
        }
        let slack = LOG_TOL * self.bound.abs().max(1.0);
        match self.direction {
            Direction::MaxLift => self.actual <= self.bound + slack,
            Direction::MinLift => self.actual >= self.bound - slack,
        }
    }
}

pub fn bound_implications(
    lt: &LiftTable,
    eps: f64,
    kind: MeasureKind,
    direction: Direction,
) -> Result<ImpliedBound> {
    let prior = lt.prior();
    let ny = lt.n_outputs();
    let ns = lt.n_sensitive();
    let first_max = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    let first_min = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b });
    match direction {
        Direction::MaxLift => {
            let measure = lift_based(lt, kind)?;
            let measure_max = measure.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let y = first_max(lt.lambda());
            let s = first_max(&lt.column(y));
            let p = prior[s];
            let bound = match kind {
                MeasureKind::Ell1 => eps / p + 1.0,
                MeasureKind::Chi2 => (eps / p).sqrt() + 1.0,
                MeasureKind::AlphaLift { alpha } => eps / p.powf(1.0 / alpha),
                _ => unreachable!("lift_based rejects other kinds"),
            };
            Ok(ImpliedBound {
                direction,
                measure_max,
                premise_holds: within(measure_max, eps),
                output: y,
                sensitive: s,
                bound,
                actual: lt.lambda()[y],
            })
        }
        Direction::MinLift => {
            let measure: Vec<f64> = (0..ny)
                .map(|y| lift_inverse_column(&lt.column(y), prior, kind))
                .collect::<Result<_>>()?;
            let measure_max = measure.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let y = first_min(lt.psi());
            let s = first_min(&(0..ns).map(|s| lt.lift(s, y)).collect::<Vec<_>>());
            let p = prior[s];
            let bound = match kind {
                MeasureKind::Ell1 => p / (eps + p),
                MeasureKind::Chi2 => p.sqrt() / (eps.sqrt() + p.sqrt()),
                MeasureKind::AlphaLift { alpha } => p.powf(1.0 / alpha) / eps,
                _ => unreachable!("lift_inverse_column rejects other kinds"),
            };
            Ok(ImpliedBound {
                direction,
                measure_max,
                premise_holds: within(measure_max, eps),
                output: y,
                sensitive: s,
                bound,
                actual: lt.psi()[y],
            })
        }
    }
}
