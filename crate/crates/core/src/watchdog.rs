//! Watchdog mechanisms.
//!
//! The alphabet is split into low-risk symbols, published as-is, and
//! high-risk symbols, which are randomized. X-invariant randomization of a
//! set of symbols gives every member the same output distribution, so the
//! set behaves as a single merged super-symbol as far as lifts go. Complete
//! merging treats all high-risk symbols as one set; subset merging
//! partitions them greedily into smaller sets that each meet the budget,
//! which keeps more resolution.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::lift::merged_lift;
use crate::measures::{column_satisfies, risk_score, MeasureKind};
use crate::prob::{entropy_of, nmi_from, Channel, JointDistribution};
use crate::report::{assess, MechanismKind, MechanismReport};

/// Low/high-risk split of the alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskSplit {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
}

/// Low-risk symbols plus an ordered partition of the high-risk symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    nx: usize,
    low_risk: Vec<usize>,
    groups: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(nx: usize, low_risk: Vec<usize>, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; nx];
        for &x in low_risk.iter().chain(groups.iter().flatten()) {
            if x >= nx {
                return Err(Error::InvalidConfig(format!("symbol {x} out of range")));
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidConfig(format!("symbol {x} appears twice")));
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidConfig(format!("symbol {x} is not covered")));
        }
        if groups.iter().any(Vec::is_empty) {
            return Err(Error::EmptySubset);
        }
        Ok(Self {
            nx,
            low_risk,
            groups,
        })
    }

    /// Every high-risk symbol in one group.
    pub fn complete(nx: usize, split: &RiskSplit) -> Self {
        let groups = if split.high.is_empty() {
            Vec::new()
        } else {
            vec![split.high.clone()]
        };
        Self {
            nx,
            low_risk: split.low.clone(),
            groups,
        }
    }

    pub fn n_symbols(&self) -> usize {
        self.nx
    }

    pub fn low_risk(&self) -> &[usize] {
        &self.low_risk
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn high_risk(&self) -> Vec<usize> {
        let mut h: Vec<usize> = self.groups.iter().flatten().copied().collect();
        h.sort_unstable();
        h
    }

    /// True when every group of `self` is a union of groups of `coarser`'s
    /// refinement, i.e. `self` refines `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.high_risk() != coarser.high_risk() {
            return false;
        }
        self.groups.iter().all(|g| {
            coarser
                .groups
                .iter()
                .any(|c| g.iter().all(|x| c.contains(x)))
        })
    }
}

/// Randomization applied inside each group.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupRandomization {
    /// All members map to one super-symbol.
    Merge,
    /// Members map uniformly onto as many outputs as the group has members.
    Uniform,
    /// One output distribution per group.
    Custom(Vec<Vec<f64>>),
}

fn is_low_risk(j: &JointDistribution, x: usize, kind: MeasureKind, b: &Budget) -> bool {
    let col = merged_lift(j, &[x]).expect("nonempty");
    column_satisfies(&col, j.row_probs(), kind, b)
}

/// Splits the alphabet by the per-symbol statistics of `kind`.
pub fn partition_low_high(j: &JointDistribution, kind: MeasureKind, b: &Budget) -> RiskSplit {
    let (low, high) = (0..j.n_cols()).partition(|&x| is_low_risk(j, x, kind, b));
    RiskSplit { low, high }
}

/// Channel that publishes low-risk symbols unchanged and applies an
/// X-invariant randomization to each group.
///
/// Outputs are ordered by the smallest input symbol they serve.
pub fn x_invariant_channel(
    labels: &[String],
    p: &Partition,
    r: &GroupRandomization,
) -> Result<Channel> {
    if labels.len() != p.n_symbols() {
        return Err(Error::LabelMismatch(format!(
            "{} labels for a partition of {} symbols",
            labels.len(),
            p.n_symbols()
        )));
    }
    let dists: Vec<Vec<f64>> = match r {
        GroupRandomization::Merge => p.groups.iter().map(|_| vec![1.0]).collect(),
        GroupRandomization::Uniform => p
            .groups
            .iter()
            .map(|g| vec![1.0 / g.len() as f64; g.len()])
            .collect(),
        GroupRandomization::Custom(d) => {
            if d.len() != p.groups.len() {
                return Err(Error::MalformedR(format!(
                    "{} distributions for {} groups",
                    d.len(),
                    p.groups.len()
                )));
            }
            for (i, dist) in d.iter().enumerate() {
                let total: f64 = dist.iter().sum();
                if dist.is_empty()
                    || dist.iter().any(|v| !v.is_finite() || *v < 0.0)
                    || (total - 1.0).abs() > crate::prob::VALIDATION_TOL
                {
                    return Err(Error::MalformedR(format!(
                        "group {i} distribution is not a probability vector"
                    )));
                }
            }
            d.clone()
        }
    };

    // (anchor symbol, output label, per-input probabilities)
    let mut blocks: Vec<(usize, Vec<(String, Vec<(usize, f64)>)>)> = Vec::new();
    for &x in &p.low_risk {
        blocks.push((x, vec![(labels[x].clone(), vec![(x, 1.0)])]));
    }
    for (g, dist) in p.groups.iter().zip(&dists) {
        let mut sorted = g.clone();
        sorted.sort_unstable();
        let base = sorted
            .iter()
            .map(|&x| labels[x].as_str())
            .collect::<Vec<_>>()
            .join("+");
        let outs = dist
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, &w)| {
                let label = if dist.len() == 1 {
                    base.clone()
                } else {
                    format!("{base}#{}", k + 1)
                };
                (label, g.iter().map(|&x| (x, w)).collect())
            })
            .collect();
        blocks.push((sorted[0], outs));
    }
    blocks.sort_by_key(|(anchor, _)| *anchor);

    let nx = p.n_symbols();
    let mut outputs = Vec::new();
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
    for (_, outs) in blocks {
        for (label, entries) in outs {
            outputs.push(label);
            cols.push(entries);
        }
    }
    let mut rows = vec![vec![0.0; outputs.len()]; nx];
    for (y, entries) in cols.iter().enumerate() {
        for &(x, w) in entries {
            rows[x][y] = w;
        }
    }
    Channel::new(labels.to_vec(), outputs, rows)
}

/// Minimum achievable leakages `(eps_bar_l, eps_bar_u)` of merging `subset`
/// into one super-symbol.
pub fn subset_leakage(j: &JointDistribution, subset: &[usize]) -> Result<(f64, f64)> {
    let col = merged_lift(j, subset)?;
    let (lo, hi) = crate::lift::column_extremes(&col);
    let eps_l = if lo > 0.0 { lo.ln().abs() } else { f64::INFINITY };
    Ok((eps_l, hi.ln().max(0.0)))
}

/// `I(X; Y)` of X-invariant randomization of each group:
/// `H(X) - Σ_i Σ_{x in X_i} P(x) log(P(X_i) / P(x))`.
pub fn watchdog_utility(j: &JointDistribution, p: &Partition) -> f64 {
    let px = j.col_probs();
    let loss: f64 = p
        .groups
        .iter()
        .map(|g| {
            let mass: f64 = g.iter().map(|&x| px[x]).sum();
            g.iter().map(|&x| px[x] * (mass / px[x]).ln()).sum::<f64>()
        })
        .sum();
    (entropy_of(px) - loss).max(0.0)
}

/// Merged-subset statistics for the greedy search, kept as running sums.
struct MergeScorer<'a> {
    j: &'a JointDistribution,
    kind: MeasureKind,
    budget: Budget,
    col: Vec<f64>,
}

impl<'a> MergeScorer<'a> {
    fn new(j: &'a JointDistribution, kind: MeasureKind, budget: Budget) -> Self {
        Self {
            j,
            kind,
            budget,
            col: vec![0.0; j.n_rows()],
        }
    }

    fn fill(&mut self, subset: &[usize]) {
        let ps = self.j.row_probs();
        let mass = self.j.subset_mass(subset);
        for (s, c) in self.col.iter_mut().enumerate() {
            let joint: f64 = subset.iter().map(|&x| self.j.prob(s, x)).sum();
            *c = joint / ps[s] / mass;
        }
    }

    fn fill_union(&mut self, a: &[usize], b: &[usize]) {
        let ps = self.j.row_probs();
        let mass = self.j.subset_mass(a) + self.j.subset_mass(b);
        for (s, c) in self.col.iter_mut().enumerate() {
            let joint: f64 = a.iter().chain(b).map(|&x| self.j.prob(s, x)).sum();
            *c = joint / ps[s] / mass;
        }
    }

    fn satisfies(&mut self, subset: &[usize]) -> bool {
        self.fill(subset);
        column_satisfies(&self.col, self.j.row_probs(), self.kind, &self.budget)
    }

    fn risk(&mut self, subset: &[usize]) -> f64 {
        self.fill(subset);
        risk_score(&self.col, self.j.row_probs(), self.kind)
    }

    fn union_risk(&mut self, a: &[usize], b: &[usize]) -> f64 {
        self.fill_union(a, b);
        risk_score(&self.col, self.j.row_probs(), self.kind)
    }
}

/// Whether the merged super-symbol of `subset` meets the budget.
pub fn subset_satisfies(
    j: &JointDistribution,
    subset: &[usize],
    kind: MeasureKind,
    b: &Budget,
) -> bool {
    !subset.is_empty() && MergeScorer::new(j, kind, *b).satisfies(subset)
}

/// Risk score `ω` of the merged super-symbol of `subset`.
pub fn subset_risk(j: &JointDistribution, subset: &[usize], kind: MeasureKind) -> f64 {
    MergeScorer::new(j, kind, Budget::unbounded()).risk(subset)
}

/// First index attaining the extreme of `score` (lowest index wins ties).
fn arg_extreme(n: usize, mut score: impl FnMut(usize) -> f64, maximize: bool) -> usize {
    let mut best = 0;
    let mut best_val = score(0);
    for i in 1..n {
        let v = score(i);
        let better = if maximize { v > best_val } else { v < best_val };
        if better {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Greedy subset merging of the high-risk symbols.
///
/// Groups are seeded with the riskiest remaining symbol and grown with the
/// symbol that minimizes the merged risk, until the merged group meets the
/// budget or no symbols remain. A last group that still violates is
/// agglomerated with the earlier group minimizing the merged risk until it
/// meets the budget or nothing is left to merge.
pub fn subset_merging(j: &JointDistribution, kind: MeasureKind, b: &Budget) -> Partition {
    let split = partition_low_high(j, kind, b);
    let mut scorer = MergeScorer::new(j, kind, *b);
    let single_risk: Vec<f64> = (0..j.n_cols()).map(|x| scorer.risk(&[x])).collect();

    let mut remaining = split.high.clone();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    while !remaining.is_empty() {
        let seed = arg_extreme(remaining.len(), |i| single_risk[remaining[i]], true);
        let mut group = vec![remaining.remove(seed)];
        while !remaining.is_empty() && !scorer.satisfies(&group) {
            let pick = arg_extreme(
                remaining.len(),
                |i| scorer.union_risk(&group, &[remaining[i]]),
                false,
            );
            group.push(remaining.remove(pick));
        }
        groups.push(group);
    }

    while groups.len() > 1 && !scorer.satisfies(groups.last().expect("nonempty")) {
        let last = groups.pop().expect("nonempty");
        let pick = arg_extreme(groups.len(), |i| scorer.union_risk(&last, &groups[i]), false);
        let mut merged = groups.remove(pick);
        merged.extend(last);
        groups.push(merged);
    }

    for g in &mut groups {
        g.sort_unstable();
    }
    Partition {
        nx: j.n_cols(),
        low_risk: split.low,
        groups,
    }
}

/// Builds the report of an X-invariant merge mechanism over `p`.
pub fn merge_report(
    j: &JointDistribution,
    p: Partition,
    mechanism: MechanismKind,
    kind: MeasureKind,
    b: &Budget,
) -> Result<MechanismReport> {
    let channel = x_invariant_channel(j.col_labels(), &p, &GroupRandomization::Merge)?;
    let utility = watchdog_utility(j, &p);
    let a = assess(j, &channel, kind, b)?;
    let residual = match p.groups.last() {
        Some(g) if !subset_satisfies(j, g, kind, b) => Some(subset_leakage(j, g)?),
        _ => None,
    };
    Ok(MechanismReport {
        mechanism,
        kind,
        budget: *b,
        partition: Some(p),
        channel,
        utility_mi: utility,
        nmi: nmi_from(utility, entropy_of(j.col_probs())),
        max_lift_leak: a.max_lift_leak,
        min_lift_leak: a.min_lift_leak,
        satisfied: a.satisfied,
        residual,
        fell_back: false,
        truncated: false,
    })
}

/// Watchdog with all high-risk symbols merged into one super-symbol.
pub fn complete_merge_mechanism(
    j: &JointDistribution,
    kind: MeasureKind,
    b: &Budget,
) -> Result<MechanismReport> {
    let split = partition_low_high(j, kind, b);
    let p = Partition::complete(j.n_cols(), &split);
    merge_report(j, p, MechanismKind::WatchdogComplete, kind, b)
}

/// Watchdog with greedy subset merging.
pub fn subset_merge_mechanism(
    j: &JointDistribution,
    kind: MeasureKind,
    b: &Budget,
) -> Result<MechanismReport> {
    let p = subset_merging(j, kind, b);
    merge_report(j, p, MechanismKind::WatchdogSubset, kind, b)
}
