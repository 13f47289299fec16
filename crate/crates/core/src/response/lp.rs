//! The column LP: `min sum_k H(v_k) beta_k` subject to
//! `sum_k v_k beta_k = target`, `beta >= 0`.

use std::ops::ControlFlow;

use super::linalg::{binomial, for_each_combination, rank, solve_columns};
use crate::error::{Error, Result};
use crate::prob::entropy_of;

/// Largest number of candidate bases searched exhaustively.
pub const EXHAUSTIVE_LIMIT: u128 = 200_000;
/// Weights below this (relative to the total) are dropped from the support.
pub const SUPPORT_TOL: f64 = 1e-10;

const NEG_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpMethod {
    Exhaustive,
    Simplex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution {
    /// One weight per vertex.
    pub beta: Vec<f64>,
    pub objective: f64,
    pub method: LpMethod,
}

impl ColumnSolution {
    /// Indices with weight above [`SUPPORT_TOL`] and their weights, rescaled
    /// to keep the original total.
    pub fn support(&self) -> Vec<(usize, f64)> {
        let total: f64 = self.beta.iter().sum();
        let kept: Vec<(usize, f64)> = self
            .beta
            .iter()
            .enumerate()
            .filter(|(_, &b)| b > SUPPORT_TOL * total)
            .map(|(k, &b)| (k, b))
            .collect();
        let kept_total: f64 = kept.iter().map(|(_, b)| b).sum();
        kept.into_iter()
            .map(|(k, b)| (k, b * total / kept_total))
            .collect()
    }
}

fn check_inputs(vertices: &[Vec<f64>], target: &[f64]) -> Result<()> {
    if vertices.is_empty() {
        return Err(Error::InfeasibleTarget);
    }
    if vertices.iter().any(|v| v.len() != target.len()) {
        return Err(Error::InvalidConfig(
            "vertex and target dimensions differ".into(),
        ));
    }
    Ok(())
}

fn objective(costs: &[f64], beta: &[f64]) -> f64 {
    costs.iter().zip(beta).map(|(c, b)| c * b).sum()
}

/// Picks the exhaustive search when the number of candidate bases is small
/// and the simplex method otherwise.
pub fn solve_column_lp(vertices: &[Vec<f64>], target: &[f64]) -> Result<ColumnSolution> {
    check_inputs(vertices, target)?;
    let d = target.len();
    let r = rank(vertices.concat(), vertices.len(), d);
    if binomial(vertices.len(), r) <= EXHAUSTIVE_LIMIT {
        solve_exhaustive(vertices, target)
    } else {
        solve_simplex(vertices, target)
    }
}

/// Minimum over every basic feasible solution. Ties keep the first basis in
/// lexicographic order.
pub fn solve_exhaustive(vertices: &[Vec<f64>], target: &[f64]) -> Result<ColumnSolution> {
    check_inputs(vertices, target)?;
    let m = vertices.len();
    let d = target.len();
    let costs: Vec<f64> = vertices.iter().map(|v| entropy_of(v)).collect();
    let r = rank(vertices.concat(), m, d);
    let scale = target.iter().sum::<f64>().max(f64::MIN_POSITIVE);

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let _ = for_each_combination(m, r, |basis| {
        let cols: Vec<&[f64]> = basis.iter().map(|&k| vertices[k].as_slice()).collect();
        let Some(x) = solve_columns(&cols, target) else {
            return ControlFlow::Continue(());
        };
        if x.iter().any(|&b| b < -NEG_TOL * scale) {
            return ControlFlow::Continue(());
        }
        let obj: f64 = basis.iter().zip(&x).map(|(&k, b)| costs[k] * b.max(0.0)).sum();
        let better = match &best {
            None => true,
            Some((o, _, _)) => obj < o - 1e-12 * o.abs().max(1.0),
        };
        if better {
            best = Some((obj, basis.to_vec(), x));
        }
        ControlFlow::Continue(())
    });
    let (_, basis, x) = best.ok_or(Error::InfeasibleTarget)?;
    let mut beta = vec![0.0; m];
    for (k, b) in basis.into_iter().zip(x) {
        beta[k] = b.max(0.0);
    }
    Ok(ColumnSolution {
        objective: objective(&costs, &beta),
        beta,
        method: LpMethod::Exhaustive,
    })
}

/// Dense tableau; the last column is the right-hand side.
struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_vertices: usize,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize, reduced: Option<&mut Vec<f64>>) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let eliminate = |row: &mut Vec<f64>| {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        };
        for row in self.rows.iter_mut() {
            if !row.is_empty() {
                eliminate(row);
            }
        }
        if let Some(z) = reduced {
            eliminate(z);
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Minimum-ratio row for entering column `c`. Ties are broken by the
    /// lexicographically smallest row of `B^-1` (the artificial block)
    /// divided by the pivot, which rules out cycling.
    fn ratio_test(&self, c: usize) -> Option<(usize, f64)> {
        let col_max = self
            .rows
            .iter()
            .map(|row| row[c].abs())
            .fold(0.0, f64::max);
        let tol = PIVOT_TOL.max(1e-9 * col_max);
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = row[c];
            if a <= tol {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let scale = br.abs().max(1e-300);
                    if ratio < br - 1e-12 * scale {
                        Some((i, ratio))
                    } else if ratio <= br + 1e-12 * scale && self.lex_less(i, bi, c) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best
    }

    fn lex_less(&self, i: usize, k: usize, c: usize) -> bool {
        let (ai, ak) = (self.rows[i][c], self.rows[k][c]);
        for col in self.n_vertices..self.width {
            let (x, y) = (self.rows[i][col] / ai, self.rows[k][col] / ak);
            if x < y - 1e-12 {
                return true;
            }
            if x > y + 1e-12 {
                return false;
            }
        }
        self.basis[i] < self.basis[k]
    }

    /// Minimizes `cost` over the columns `0..allowed` with Dantzig pricing.
    fn optimize(&mut self, cost: &[f64], allowed: usize) {
        let mut z: Vec<f64> = cost.to_vec();
        z.push(0.0);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (zj, a) in z.iter_mut().zip(row) {
                    *zj -= cb * a;
                }
            }
        }
        let mut basic = vec![false; self.width];
        for &b in &self.basis {
            basic[b] = true;
        }
        loop {
            let entering = (0..allowed)
                .filter(|&j| !basic[j] && z[j] < -PIVOT_TOL)
                .min_by(|&a, &b| z[a].total_cmp(&z[b]));
            let Some(c) = entering else { return };
            let leave = self.ratio_test(c);
            // Weights are bounded by the target mass, so a ray never occurs.
            let Some((r, _)) = leave else { return };
            basic[self.basis[r]] = false;
            basic[c] = true;
            self.pivot(r, c, Some(&mut z));
        }
    }
}

/// Two-phase dense simplex.
pub fn solve_simplex(vertices: &[Vec<f64>], target: &[f64]) -> Result<ColumnSolution> {
    check_inputs(vertices, target)?;
    let m = vertices.len();
    let d = target.len();
    let costs: Vec<f64> = vertices.iter().map(|v| entropy_of(v)).collect();
    let width = m + d;

    let mut rows = Vec::with_capacity(d);
    for i in 0..d {
        let sign = if target[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width + 1];
        for (k, v) in vertices.iter().enumerate() {
            row[k] = sign * v[i];
        }
        row[m + i] = 1.0;
        row[width] = sign * target[i];
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (m..width).collect(),
        n_vertices: m,
        width,
    };

    let mut phase1 = vec![0.0; width];
    phase1[m..].iter_mut().for_each(|c| *c = 1.0);
    t.optimize(&phase1, width);
    let infeasibility: f64 = (0..d)
        .filter(|&i| t.basis[i] >= m)
        .map(|i| t.rhs(i))
        .sum();
    let scale = target.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    if infeasibility > 1e-9 * scale {
        return Err(Error::InfeasibleTarget);
    }

    // Drive artificials out of the basis; rows where that fails are redundant.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= m {
            match (0..m).find(|&j| t.rows[i][j].abs() > 1e-9 && !t.basis.contains(&j)) {
                Some(j) => t.pivot(i, j, None),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut phase2 = costs.clone();
    phase2.resize(width, 0.0);
    t.optimize(&phase2, m);

    let mut beta = vec![0.0; m];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < m {
            beta[b] = t.rhs(i).max(0.0);
        }
    }
    Ok(ColumnSolution {
        objective: objective(&costs, &beta),
        beta,
        method: LpMethod::Simplex,
    })
}
