//! Optimal random response under asymmetric lift bounds.
//!
//! A release `Y` meets the bounds exactly when every posterior column
//! `P(x|y)` lies in the lift polytope, so the utility-optimal channel is a
//! mixture of polytope vertices that reproduces `P_X` while minimizing
//! `H(X|Y)`. The full-alphabet version enumerates vertices over all of `X`.
//! The subset version first partitions the high-risk symbols by greedy
//! merging, publishes low-risk symbols as-is and solves one small problem
//! per group.

mod linalg;
pub mod lp;
pub mod polytope;

use rayon::prelude::*;

pub use lp::{solve_column_lp, solve_exhaustive, solve_simplex, ColumnSolution, LpMethod};
pub use polytope::{
    build_polytope, enumerate_vertices, enumerate_vertices_capped, LiftPolytope, VertexSet,
    MAX_SYSTEMS,
};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::measures::MeasureKind;
use crate::prob::{entropy_of, nmi_from, Channel, JointDistribution};
use crate::report::{assess, MechanismKind, MechanismReport};
use crate::watchdog::{merge_report, subset_merging, Partition};

/// Largest alphabet the full-alphabet mechanism will enumerate.
pub const AORR_CAP: usize = 12;

/// Randomization of one group: posterior columns `Q(x|y)` over the group and
/// output probabilities `q(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseBlock {
    pub subset: Vec<usize>,
    /// `columns[y][k] = Q(subset[k] | y)`.
    pub columns: Vec<Vec<f64>>,
    /// `q(y)`, summing to the group mass `P(X_i)`.
    pub weights: Vec<f64>,
    /// The LP ran over every vertex of the polytope. When false it ran over
    /// the low-support vertices plus the merged posterior itself.
    pub exact: bool,
}

impl ResponseBlock {
    /// `H(X|Y)` restricted to this block's outputs.
    pub fn conditional_entropy(&self) -> f64 {
        self.columns
            .iter()
            .zip(&self.weights)
            .map(|(c, &q)| q * entropy_of(c))
            .sum()
    }

    /// `sum_y Q(x|y) q(y)` for each member of the group.
    pub fn marginal(&self) -> Vec<f64> {
        (0..self.subset.len())
            .map(|k| {
                self.columns
                    .iter()
                    .zip(&self.weights)
                    .map(|(c, &q)| c[k] * q)
                    .sum()
            })
            .collect()
    }
}

/// Identity on the low-risk symbols plus one block per group.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomResponse {
    nx: usize,
    low_risk: Vec<usize>,
    blocks: Vec<ResponseBlock>,
}

impl RandomResponse {
    pub fn low_risk(&self) -> &[usize] {
        &self.low_risk
    }

    pub fn blocks(&self) -> &[ResponseBlock] {
        &self.blocks
    }

    /// Every block was solved over its full vertex set.
    pub fn is_exact(&self) -> bool {
        self.blocks.iter().all(|b| b.exact)
    }

    pub fn conditional_entropy(&self) -> f64 {
        self.blocks.iter().map(ResponseBlock::conditional_entropy).sum()
    }

    /// `I(X; Y) = H(X) - H(X|Y)`.
    pub fn utility(&self, j: &JointDistribution) -> f64 {
        (entropy_of(j.col_probs()) - self.conditional_entropy()).max(0.0)
    }

    /// `P_X` as reproduced by the mechanism.
    pub fn marginal(&self, j: &JointDistribution) -> Vec<f64> {
        let mut out = vec![0.0; self.nx];
        for &x in &self.low_risk {
            out[x] = j.col_probs()[x];
        }
        for b in &self.blocks {
            for (&x, m) in b.subset.iter().zip(b.marginal()) {
                out[x] = m;
            }
        }
        out
    }

    /// The channel `P(y|x) = Q(x|y) q(y) / P_X(x)`, outputs ordered by the
    /// smallest input they serve.
    pub fn channel(&self, j: &JointDistribution) -> Result<Channel> {
        let labels = j.col_labels();
        // (anchor, label, entries (x, unnormalized P(y|x) P(x)))
        let mut outs: Vec<(usize, String, Vec<(usize, f64)>)> = Vec::new();
        for &x in &self.low_risk {
            outs.push((x, labels[x].clone(), vec![(x, 1.0)]));
        }
        for b in &self.blocks {
            let anchor = *b.subset.iter().min().expect("nonempty block");
            let mut members = b.subset.clone();
            members.sort_unstable();
            let base = members
                .iter()
                .map(|&x| labels[x].as_str())
                .collect::<Vec<_>>()
                .join("+");
            for (y, (col, &q)) in b.columns.iter().zip(&b.weights).enumerate() {
                let entries = b
                    .subset
                    .iter()
                    .zip(col)
                    .filter(|(_, &c)| c > 0.0)
                    .map(|(&x, &c)| (x, c * q))
                    .collect();
                outs.push((anchor, format!("{base}#{}", y + 1), entries));
            }
        }
        outs.sort_by_key(|(anchor, _, _)| *anchor);

        let mut rows = vec![vec![0.0; outs.len()]; self.nx];
        for (y, (_, _, entries)) in outs.iter().enumerate() {
            for &(x, w) in entries {
                rows[x][y] = w;
            }
        }
        for row in &mut rows {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
        let outputs = outs.into_iter().map(|(_, l, _)| l).collect();
        Channel::new(labels.to_vec(), outputs, rows)
    }
}

/// `P_X` restricted to `subset` and normalized.
fn normalized_target(j: &JointDistribution, subset: &[usize]) -> (Vec<f64>, f64) {
    let mass = j.subset_mass(subset);
    let t = subset.iter().map(|&x| j.col_probs()[x] / mass).collect();
    (t, mass)
}

/// Whether a group can be randomized within the lift polytope, i.e. its
/// normalized marginal is itself a feasible posterior.
pub fn block_feasible(j: &JointDistribution, subset: &[usize], b: &Budget) -> Result<bool> {
    let p = build_polytope(j, subset, b)?;
    Ok(p.contains(&normalized_target(j, subset).0))
}

/// Solves the column LP for one group. When the polytope is too large to
/// enumerate in full, the candidates are the vertices found plus the
/// normalized group marginal, which is feasible whenever the block is.
pub fn solve_block(j: &JointDistribution, subset: &[usize], b: &Budget) -> Result<ResponseBlock> {
    let p = build_polytope(j, subset, b)?;
    let set = p.vertex_set();
    let (target, mass) = normalized_target(j, subset);
    let mut candidates: Vec<Vec<f64>> = set.vertices.clone();
    if !set.complete {
        log::warn!(
            "group of {} symbols: vertex search stopped at support {}",
            subset.len(),
            set.max_support
        );
        if p.contains(&target) {
            candidates.push(target.clone());
        }
    }
    if candidates.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    let sol = solve_column_lp(&candidates, &target)?;
    let support = sol.support();
    let columns = support.iter().map(|&(k, _)| candidates[k].clone()).collect();
    let weights = support.iter().map(|&(_, w)| w * mass).collect();
    Ok(ResponseBlock {
        subset: subset.to_vec(),
        columns,
        weights,
        exact: set.complete,
    })
}

fn response_report(
    j: &JointDistribution,
    rr: &RandomResponse,
    mechanism: MechanismKind,
    partition: Option<Partition>,
    kind: MeasureKind,
    b: &Budget,
) -> Result<MechanismReport> {
    let channel = rr.channel(j)?;
    let utility = rr.utility(j);
    let a = assess(j, &channel, kind, b)?;
    Ok(MechanismReport {
        mechanism,
        kind,
        budget: *b,
        partition,
        channel,
        utility_mi: utility,
        nmi: nmi_from(utility, entropy_of(j.col_probs())),
        max_lift_leak: a.max_lift_leak,
        min_lift_leak: a.min_lift_leak,
        satisfied: a.satisfied,
        residual: None,
        fell_back: false,
        truncated: !rr.is_exact(),
    })
}

/// Full-alphabet random response.
pub fn aorr_response(j: &JointDistribution, b: &Budget, cap: usize) -> Result<RandomResponse> {
    if j.n_cols() > cap {
        return Err(Error::CapExceeded {
            size: j.n_cols(),
            cap,
        });
    }
    let all: Vec<usize> = (0..j.n_cols()).collect();
    let block = solve_block(j, &all, b)?;
    Ok(RandomResponse {
        nx: j.n_cols(),
        low_risk: Vec::new(),
        blocks: vec![block],
    })
}

/// Utility-optimal channel meeting `b` as an asymmetric lift bound.
pub fn aorr(j: &JointDistribution, b: &Budget, cap: usize) -> Result<MechanismReport> {
    let rr = aorr_response(j, b, cap)?;
    response_report(j, &rr, MechanismKind::Aorr, None, MeasureKind::Alip, b)
}

/// Outcome of the group-repair pass of subset random response.
#[derive(Debug, Clone, PartialEq)]
pub struct SrrPlan {
    /// Groups produced by greedy subset merging.
    pub initial: Partition,
    /// Groups after unions, each with a feasible polytope, unless
    /// `fell_back` is set.
    pub subsets: Partition,
    pub fell_back: bool,
}

/// Starts from the greedy merging partition and unions each infeasible group
/// with the next pending group, or with the previously accepted one when
/// none is pending.
pub fn srr_plan(j: &JointDistribution, kind: MeasureKind, b: &Budget) -> Result<SrrPlan> {
    let initial = subset_merging(j, kind, b);
    let mut pending: std::collections::VecDeque<Vec<usize>> =
        initial.groups().iter().cloned().collect();
    let mut accepted: Vec<Vec<usize>> = Vec::new();
    let mut last_ok = true;
    while let Some(mut cur) = pending.pop_front() {
        let mut ok = block_feasible(j, &cur, b)?;
        while !ok {
            if let Some(next) = pending.pop_front() {
                cur.extend(next);
            } else if let Some(prev) = accepted.pop() {
                cur.extend(prev);
            } else {
                break;
            }
            ok = block_feasible(j, &cur, b)?;
        }
        cur.sort_unstable();
        accepted.push(cur);
        last_ok = ok;
    }
    let fell_back = !last_ok;
    let subsets = if fell_back {
        initial.clone()
    } else {
        Partition::new(j.n_cols(), initial.low_risk().to_vec(), accepted)?
    };
    Ok(SrrPlan {
        initial,
        subsets,
        fell_back,
    })
}

/// Subset random response: low-risk symbols published, each group
/// randomized optimally within its own lift polytope. Groups are formed
/// with `kind`; the polytopes always bound the lifts directly.
pub fn srr(j: &JointDistribution, kind: MeasureKind, b: &Budget) -> Result<MechanismReport> {
    let plan = srr_plan(j, kind, b)?;
    if plan.fell_back {
        let mut r = merge_report(j, plan.initial, MechanismKind::Srr, kind, b)?;
        r.fell_back = true;
        return Ok(r);
    }
    let blocks = plan
        .subsets
        .groups()
        .par_iter()
        .map(|g| solve_block(j, g, b))
        .collect::<Result<Vec<_>>>()?;
    let rr = RandomResponse {
        nx: j.n_cols(),
        low_risk: plan.subsets.low_risk().to_vec(),
        blocks,
    };
    let report = response_report(j, &rr, MechanismKind::Srr, Some(plan.subsets), kind, b)?;
    if !report.satisfied && !matches!(kind, MeasureKind::Alip) {
        let merged = merge_report(j, plan.initial, MechanismKind::Srr, kind, b)?;
        if merged.satisfied {
            return Ok(MechanismReport {
                fell_back: true,
                ..merged
            });
        }
    }
    Ok(report)
}
