//! Lift statistics of a joint `P(S, Y)`.
//!
//! The lift `l(s, y) = P(s|y) / P(s)` is the multiplicative change of belief
//! about `s` after seeing `y`. Per output we keep the min-lift `Ψ(y)`, the
//! max-lift `Λ(y)` and their ratio `Γ(y)`, which is the LDP ratio.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::prob::{mutual_information, JointDistribution};

/// Absolute tolerance for budget comparisons on the log scale.
pub const LOG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LiftTable {
    ns: usize,
    ny: usize,
    lifts: Vec<f64>,
    prior: Vec<f64>,
    out_probs: Vec<f64>,
    psi: Vec<f64>,
    lambda: Vec<f64>,
    gamma: Vec<f64>,
}

/// Min and max of a lift column.
#[inline]
pub fn column_extremes(col: &[f64]) -> (f64, f64) {
    col.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)))
}

/// `Λ / Ψ`; a zero min-lift gives an infinite ratio.
#[inline]
pub(crate) fn ratio(psi: f64, lambda: f64) -> f64 {
    if psi > 0.0 {
        lambda / psi
    } else {
        f64::INFINITY
    }
}

pub fn lift_table(j: &JointDistribution) -> LiftTable {
    let (ns, ny) = (j.n_rows(), j.n_cols());
    let (ps, py) = (j.row_probs(), j.col_probs());
    let mut lifts = vec![0.0; ns * ny];
    for s in 0..ns {
        for (y, &p) in j.row(s).iter().enumerate() {
            lifts[s * ny + y] = p / (ps[s] * py[y]);
        }
    }
    let mut psi = Vec::with_capacity(ny);
    let mut lambda = Vec::with_capacity(ny);
    let mut gamma = Vec::with_capacity(ny);
    let mut col = vec![0.0; ns];
    for y in 0..ny {
        for (s, c) in col.iter_mut().enumerate() {
            *c = lifts[s * ny + y];
        }
        let (lo, hi) = column_extremes(&col);
        psi.push(lo);
        lambda.push(hi);
        gamma.push(ratio(lo, hi));
    }
    LiftTable {
        ns,
        ny,
        lifts,
        prior: ps.to_vec(),
        out_probs: py.to_vec(),
        psi,
        lambda,
        gamma,
    }
}

/// Lift column of the super-symbol obtained by merging the columns in
/// `subset`: `P(A|s) / P(A)`.
pub fn merged_lift(j: &JointDistribution, subset: &[usize]) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mass = j.subset_mass(subset);
    Ok(j.conditional_mass(subset)
        .into_iter()
        .map(|c| c / mass)
        .collect())
}

impl LiftTable {
    pub fn n_sensitive(&self) -> usize {
        self.ns
    }

    pub fn n_outputs(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn lift(&self, s: usize, y: usize) -> f64 {
        self.lifts[s * self.ny + y]
    }

    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.ns).map(|s| self.lift(s, y)).collect()
    }

    /// `P_S`, the prior the lifts are taken against.
    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// `P_Y`.
    pub fn output_probs(&self) -> &[f64] {
        &self.out_probs
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `max_y log Λ(y)`.
    pub fn max_lift_leakage(&self) -> f64 {
        self.lambda
            .iter()
            .fold(f64::NEG_INFINITY, |m, &l| m.max(l))
            .ln()
            .max(0.0)
    }

    /// `|min_y log Ψ(y)|`; infinite when some lift is zero.
    pub fn min_lift_leakage(&self) -> f64 {
        let m = self.psi.iter().fold(f64::INFINITY, |m, &p| m.min(p));
        if m > 0.0 {
            (-m.ln()).max(0.0)
        } else {
            f64::INFINITY
        }
    }
}

/// Outcome of an ALIP check.
#[derive(Debug, Clone, PartialEq)]
pub struct AlipCheck {
    pub satisfied: bool,
    /// Output with the smallest min-lift, if it violates the lower bound.
    pub worst_min: Option<usize>,
    /// Output with the largest max-lift, if it violates the upper bound.
    pub worst_max: Option<usize>,
}

#[inline]
pub(crate) fn min_lift_ok(psi: f64, b: &Budget) -> bool {
    if b.eps_l().is_infinite() {
        return true;
    }
    psi > 0.0 && psi.ln() >= -b.eps_l() - LOG_TOL
}

#[inline]
pub(crate) fn max_lift_ok(lambda: f64, b: &Budget) -> bool {
    b.eps_u().is_infinite() || lambda.ln() <= b.eps_u() + LOG_TOL
}

#[inline]
pub(crate) fn ratio_ok(gamma: f64, eps: f64) -> bool {
    eps.is_infinite() || gamma.ln() <= eps + LOG_TOL
}

/// `e^-eps_l <= Ψ(y)` and `Λ(y) <= e^eps_u` for every output.
pub fn alip_satisfied(lt: &LiftTable, b: &Budget) -> AlipCheck {
    let argmin = (0..lt.ny).min_by(|&a, &c| lt.psi[a].total_cmp(&lt.psi[c]));
    let argmax = (0..lt.ny).max_by(|&a, &c| lt.lambda[a].total_cmp(&lt.lambda[c]).then(c.cmp(&a)));
    let worst_min = argmin.filter(|&y| !min_lift_ok(lt.psi[y], b));
    let worst_max = argmax.filter(|&y| !max_lift_ok(lt.lambda[y], b));
    AlipCheck {
        satisfied: worst_min.is_none() && worst_max.is_none(),
        worst_min,
        worst_max,
    }
}

/// `max_y Γ(y) <= e^eps`.
pub fn ldp_satisfied(lt: &LiftTable, eps: f64) -> bool {
    lt.gamma.iter().all(|&g| ratio_ok(g, eps))
}

/// Average leakage measures between `S` and the released variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageMeasures {
    pub mi: f64,
    pub total_variation: f64,
    pub chi2: f64,
    pub sibson_mi: f64,
    pub arimoto_mi: f64,
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.filter(|t| *t > f64::NEG_INFINITY).collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Sibson-style order-`alpha` information with an arbitrary weighting of
/// the sensitive symbols: `α/(α-1) log Σ_y (Σ_s w(s) P(y|s)^α)^{1/α}`.
fn tilted_information(j: &JointDistribution, weights: &[f64], alpha: f64) -> f64 {
    let ps = j.row_probs();
    let terms = (0..j.n_cols()).map(|y| {
        let inner = log_sum_exp((0..j.n_rows()).filter(|&s| weights[s] > 0.0).map(|s| {
            let cond = j.prob(s, y) / ps[s];
            if cond > 0.0 {
                weights[s].ln() + alpha * cond.ln()
            } else {
                f64::NEG_INFINITY
            }
        }));
        inner / alpha
    });
    let v = alpha / (alpha - 1.0) * log_sum_exp(terms);
    v.max(0.0)
}

/// The `alpha -> inf` limit: `log Σ_y max_{s in support(w)} P(y|s)`.
fn tilted_information_limit(j: &JointDistribution, support: &[usize]) -> f64 {
    let ps = j.row_probs();
    let total: f64 = (0..j.n_cols())
        .map(|y| {
            support
                .iter()
                .map(|&s| j.prob(s, y) / ps[s])
                .fold(0.0, f64::max)
        })
        .sum();
    total.ln().max(0.0)
}

/// Mutual information, total variation, χ²-divergence, and Sibson and
/// Arimoto information of order `alpha`, computed from their standard
/// distribution-level definitions.
///
/// `alpha = f64::INFINITY` returns the limits (maximal leakage for Sibson).
pub fn avg_measures(j: &JointDistribution, alpha: f64) -> Result<AverageMeasures> {
    if alpha.is_nan() || alpha <= 1.0 {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let (ps, py) = (j.row_probs(), j.col_probs());
    let mut tv = 0.0;
    let mut chi2 = 0.0;
    for s in 0..j.n_rows() {
        for (y, &p) in j.row(s).iter().enumerate() {
            let indep = ps[s] * py[y];
            tv += (p - indep).abs();
            chi2 += (p - indep) * (p - indep) / indep;
        }
    }
    let (sibson_mi, arimoto_mi) = if alpha.is_infinite() {
        let all: Vec<usize> = (0..j.n_rows()).collect();
        let top = ps.iter().copied().fold(0.0, f64::max);
        let modes: Vec<usize> = (0..j.n_rows()).filter(|&s| ps[s] == top).collect();
        (
            tilted_information_limit(j, &all),
            tilted_information_limit(j, &modes),
        )
    } else {
        let log_norm = log_sum_exp(ps.iter().map(|p| alpha * p.ln()));
        let tilted: Vec<f64> = ps
            .iter()
            .map(|p| (alpha * p.ln() - log_norm).exp())
            .collect();
        (
            tilted_information(j, ps, alpha),
            tilted_information(j, &tilted, alpha),
        )
    };
    Ok(AverageMeasures {
        mi: mutual_information(j),
        total_variation: 0.5 * tv,
        chi2,
        sibson_mi,
        arimoto_mi,
    })
}
