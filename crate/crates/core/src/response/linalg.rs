//! Small dense linear algebra on row-major `Vec<f64>` buffers.

use std::ops::ControlFlow;

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order until it
/// breaks.
pub fn for_each_combination(
    n: usize,
    k: usize,
    mut f: impl FnMut(&[usize]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if k > n {
        return ControlFlow::Continue(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx)?;
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return ControlFlow::Continue(());
        };
        idx[i] += 1;
        for m in i + 1..k {
            idx[m] = idx[m - 1] + 1;
        }
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Solves the `n x n` system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when the matrix is numerically singular.
pub fn solve_square(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let tol = 1e-12 * scale;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("nonempty range");
        if a[piv * n + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r * n + c] * b[c];
        }
        b[r] = acc / a[r * n + r];
    }
    Some(())
}

/// Numerical rank of an `m x n` row-major matrix.
pub fn rank(mut a: Vec<f64>, m: usize, n: usize) -> usize {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = 1e-9 * scale;
    let mut r = 0;
    for col in 0..n {
        if r == m {
            break;
        }
        let piv = (r..m)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("nonempty range");
        if a[piv * n + col].abs() <= tol {
            continue;
        }
        for c in 0..n {
            a.swap(piv * n + c, r * n + c);
        }
        for i in r + 1..m {
            let f = a[i * n + col] / a[r * n + col];
            for c in col..n {
                a[i * n + c] -= f * a[r * n + c];
            }
        }
        r += 1;
    }
    r
}

/// Solves `sum_j x_j cols[j] = t` for linearly independent columns of
/// length `m`. Returns `None` when the columns are dependent or `t` is not
/// in their span.
pub fn solve_columns(cols: &[&[f64]], t: &[f64]) -> Option<Vec<f64>> {
    let m = t.len();
    let r = cols.len();
    if r > m {
        return None;
    }
    // Row-major m x r copy plus right-hand side.
    let mut a = vec![0.0; m * r];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..m {
            a[i * r + j] = c[i];
        }
    }
    let mut b = t.to_vec();
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let tol = 1e-11 * scale;
    for col in 0..r {
        let piv = (col..m)
            .max_by(|&i, &j| a[i * r + col].abs().total_cmp(&a[j * r + col].abs()))
            .expect("nonempty range");
        if a[piv * r + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for c in 0..r {
                a.swap(piv * r + c, col * r + c);
            }
            b.swap(piv, col);
        }
        let p = a[col * r + col];
        for i in col + 1..m {
            let f = a[i * r + col] / p;
            if f != 0.0 {
                for c in col..r {
                    a[i * r + c] -= f * a[col * r + c];
                }
                b[i] -= f * b[col];
            }
        }
    }
    let bscale = t.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if b[r..].iter().any(|v| v.abs() > 1e-9 * bscale) {
        return None;
    }
    let mut x = vec![0.0; r];
    for i in (0..r).rev() {
        let mut acc = b[i];
        for c in i + 1..r {
            acc -= a[i * r + c] * x[c];
        }
        x[i] = acc / a[i * r + i];
    }
    Some(x)
}
