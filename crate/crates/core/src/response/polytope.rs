use std::ops::ControlFlow;
use std::sync::OnceLock;

use super::linalg::{binomial, for_each_combination, rank, solve_square};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::prob::JointDistribution;

/// Relative slack on the lift bounds when testing membership.
pub const FEAS_SLACK: f64 = 1e-10;
/// Distance under which two vertices are considered equal.
pub const VERTEX_TOL: f64 = 1e-9;
/// Largest number of linear systems the cached enumeration will solve.
pub const MAX_SYSTEMS: u128 = 20_000_000;

/// Vertices with at most `max_support` nonzero coordinates. `complete` is
/// true when that bound covers every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    pub vertices: Vec<Vec<f64>>,
    pub max_support: usize,
    pub complete: bool,
}

/// Distributions `v` over a subset of public symbols whose induced posterior
/// lifts `sum_x l(s, x) v_x` stay within `[e^-eps_l, e^eps_u]` for every `s`.
#[derive(Debug)]
pub struct LiftPolytope {
    subset: Vec<usize>,
    /// `lifts[s][k] = l(s, subset[k])`.
    lifts: Vec<Vec<f64>>,
    lower: f64,
    upper: f64,
    vertices: OnceLock<VertexSet>,
}

pub fn build_polytope(j: &JointDistribution, subset: &[usize], b: &Budget) -> Result<LiftPolytope> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let ps = j.row_probs();
    let px = j.col_probs();
    let lifts = (0..j.n_rows())
        .map(|s| {
            subset
                .iter()
                .map(|&x| j.prob(s, x) / (ps[s] * px[x]))
                .collect()
        })
        .collect();
    Ok(LiftPolytope {
        subset: subset.to_vec(),
        lifts,
        lower: b.min_lift_bound(),
        upper: b.max_lift_bound(),
        vertices: OnceLock::new(),
    })
}

impl LiftPolytope {
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn dim(&self) -> usize {
        self.subset.len()
    }

    pub fn lifts(&self) -> &[Vec<f64>] {
        &self.lifts
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    fn has_lower(&self) -> bool {
        self.lower > 0.0
    }

    fn has_upper(&self) -> bool {
        self.upper.is_finite()
    }

    /// `sum_k l(s, k) v_k` for every `s`.
    pub fn posterior_lifts(&self, v: &[f64]) -> Vec<f64> {
        self.lifts
            .iter()
            .map(|row| row.iter().zip(v).map(|(l, w)| l * w).sum())
            .collect()
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        if v.len() != self.dim() || v.iter().any(|&w| !(w >= -VERTEX_TOL)) {
            return false;
        }
        if (v.iter().sum::<f64>() - 1.0).abs() > VERTEX_TOL {
            return false;
        }
        self.posterior_lifts(v).into_iter().all(|val| {
            (!self.has_lower() || val >= self.lower * (1.0 - FEAS_SLACK))
                && (!self.has_upper() || val <= self.upper * (1.0 + FEAS_SLACK))
        })
    }

    /// Rows of the constraints active at `v`: the simplex equality, the
    /// zero coordinates and the tight lift bounds.
    pub fn active_constraints(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut rows = vec![vec![1.0; d]];
        for (k, &w) in v.iter().enumerate() {
            if w.abs() <= VERTEX_TOL {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                rows.push(e);
            }
        }
        for (row, val) in self.lifts.iter().zip(self.posterior_lifts(v)) {
            let tight = |bound: f64| (val - bound).abs() <= VERTEX_TOL * bound.max(1.0);
            if (self.has_lower() && tight(self.lower)) || (self.has_upper() && tight(self.upper)) {
                rows.push(row.clone());
            }
        }
        rows
    }

    /// Rank of the active constraint set at `v`.
    pub fn active_rank(&self, v: &[f64]) -> usize {
        let rows = self.active_constraints(v);
        let m = rows.len();
        rank(rows.concat(), m, self.dim())
    }

    /// Vertices found within [`MAX_SYSTEMS`], computed on first use.
    pub fn vertex_set(&self) -> &VertexSet {
        self.vertices
            .get_or_init(|| enumerate_vertices_capped(self, MAX_SYSTEMS))
    }

    /// The cached vertex list.
    pub fn vertices(&self) -> Result<&[Vec<f64>]> {
        let set = self.vertex_set();
        if set.vertices.is_empty() {
            Err(Error::EmptyPolytope)
        } else {
            Ok(&set.vertices)
        }
    }
}

/// Every basic solution: `k` lift constraints active (distinct `s`, one side
/// each) together with `sum v = 1`, and all but `k + 1` coordinates at zero.
pub fn enumerate_vertices(p: &LiftPolytope) -> Vec<Vec<f64>> {
    enumerate_vertices_capped(p, u128::MAX).vertices
}

fn bounds_of(p: &LiftPolytope) -> Vec<f64> {
    let mut bounds = Vec::new();
    if p.has_lower() {
        bounds.push(p.lower);
    }
    if p.has_upper() {
        bounds.push(p.upper);
    }
    bounds
}

/// Number of square systems solved at level `k`.
fn level_cost(ns: usize, sides: usize, d: usize, k: usize) -> u128 {
    binomial(ns, k)
        .saturating_mul((sides as u128).saturating_pow(k as u32))
        .saturating_mul(binomial(d, k + 1))
}

/// Enumerates levels `k = 0, 1, ...` in order while the running number of
/// systems stays within `max_systems`; a level is either done in full or
/// not at all.
pub fn enumerate_vertices_capped(p: &LiftPolytope, max_systems: u128) -> VertexSet {
    let d = p.dim();
    let ns = p.lifts.len();
    let bounds = bounds_of(p);
    let max_k = if bounds.is_empty() { 0 } else { ns.min(d - 1) };

    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut spent: u128 = 0;
    let mut last_k = 0;
    for k in 0..=max_k {
        let cost = level_cost(ns, bounds.len(), d, k);
        if k > 0 && spent.saturating_add(cost) > max_systems {
            break;
        }
        spent = spent.saturating_add(cost);
        enumerate_level(p, &bounds, k, &mut found);
        last_k = k;
    }
    VertexSet {
        vertices: dedupe(found),
        max_support: last_k + 1,
        complete: last_k == max_k,
    }
}

fn enumerate_level(p: &LiftPolytope, bounds: &[f64], k: usize, found: &mut Vec<Vec<f64>>) {
    let d = p.dim();
    let ns = p.lifts.len();
    let n = k + 1;
    let n_sides = bounds.len().pow(k as u32);
    let mut a = Vec::with_capacity(n * n);
    let mut rhs = Vec::with_capacity(n);
    let mut side = vec![0.0; k];
    let _ = for_each_combination(ns, k, |rows| {
        for mask in 0..n_sides {
            let mut m = mask;
            for b in side.iter_mut() {
                *b = bounds[m % bounds.len()];
                m /= bounds.len();
            }
            let _ = for_each_combination(d, n, |free| {
                a.clear();
                a.resize(n * n, 1.0);
                rhs.clear();
                rhs.push(1.0);
                for (i, &s) in rows.iter().enumerate() {
                    for (c, &x) in free.iter().enumerate() {
                        a[(i + 1) * n + c] = p.lifts[s][x];
                    }
                    rhs.push(side[i]);
                }
                if solve_square(&mut a, &mut rhs, n).is_none() {
                    return ControlFlow::Continue(());
                }
                if rhs.iter().any(|&w| w < -VERTEX_TOL) {
                    return ControlFlow::Continue(());
                }
                let mut v = vec![0.0; d];
                for (c, &x) in free.iter().enumerate() {
                    v[x] = rhs[c].max(0.0);
                }
                if p.contains(&v) {
                    found.push(v);
                }
                ControlFlow::Continue(())
            });
        }
        ControlFlow::Continue(())
    });
}

fn dedupe(mut vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    vs.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        let dup = out
            .iter()
            .rev()
            .take_while(|u| v[0] - u[0] <= VERTEX_TOL)
            .any(|u| u.iter().zip(&v).all(|(a, b)| (a - b).abs() <= VERTEX_TOL));
        if !dup {
            out.push(v);
        }
    }
    out
}
