//! Discrete probability objects: joint tables, marginals and channels.
//!
//! A [`JointDistribution`] is always a table over a sensitive variable `S`
//! (rows) and a released variable (columns), either the raw data `X` or a
//! sanitized output `Y`. Both marginals have full support. All logarithms are
//! natural, so entropies and mutual information are in nats.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Axis, Error, Result};

/// Tolerance on the total mass of user-supplied tables. Totals within this
/// distance of 1 are renormalized, anything further is rejected.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Tolerance of internal sum invariants (channel rows, marginals).
pub const SUM_TOL: f64 = 1e-12;

/// Smallest cell accepted from the random generator.
pub const MIN_RANDOM_CELL: f64 = 1e-9;

/// Labels `prefix1, prefix2, ...`.
pub fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// A probability vector with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl Marginal {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyTable);
        }
        if labels.len() != probs.len() {
            return Err(Error::LabelMismatch(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite { row: 0, col: i, value: p });
            }
            if p < 0.0 {
                return Err(Error::NegativeEntry { row: 0, col: i, value: p });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::SumOutOfTolerance { total });
        }
        let probs = if total == 1.0 {
            probs
        } else {
            probs.into_iter().map(|p| p / total).collect()
        };
        Ok(Self { labels, probs })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let labels = default_labels("x", probs.len());
        Self::new(labels, probs)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }
}

/// Joint distribution `P(S, X)` (or `P(S, Y)`) with full-support marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    probs: Vec<f64>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
}

/// Validates a raw table with default labels `s1..`, `x1..`.
pub fn validate_joint(table: &[Vec<f64>]) -> Result<JointDistribution> {
    let ns = table.len();
    let nx = table.first().map_or(0, Vec::len);
    JointDistribution::with_labels(default_labels("s", ns), default_labels("x", nx), table)
}

impl JointDistribution {
    /// Validates a raw table. A total within [`VALIDATION_TOL`] of one is
    /// renormalized, unless it is already within [`SUM_TOL`].
    pub fn with_labels(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        table: &[Vec<f64>],
    ) -> Result<Self> {
        let ns = table.len();
        if ns == 0 || table[0].is_empty() {
            return Err(Error::EmptyTable);
        }
        let nx = table[0].len();
        let mut probs = Vec::with_capacity(ns * nx);
        for (r, row) in table.iter().enumerate() {
            if row.len() != nx {
                return Err(Error::Ragged {
                    row: r,
                    expected: nx,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c, value: v });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { row: r, col: c, value: v });
                }
                probs.push(v);
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::SumOutOfTolerance { total });
        }
        if (total - 1.0).abs() > SUM_TOL {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Self::from_parts(row_labels, col_labels, probs, ns, nx)
    }

    /// Builds a joint from a row-major table that is already normalized,
    /// without touching the entries.
    pub(crate) fn from_parts(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        probs: Vec<f64>,
        ns: usize,
        nx: usize,
    ) -> Result<Self> {
        if row_labels.len() != ns || col_labels.len() != nx {
            return Err(Error::LabelMismatch(format!(
                "{}x{} labels for a {ns}x{nx} table",
                row_labels.len(),
                col_labels.len()
            )));
        }
        debug_assert_eq!(probs.len(), ns * nx);
        let mut row_marginal = vec![0.0; ns];
        let mut col_marginal = vec![0.0; nx];
        for s in 0..ns {
            for x in 0..nx {
                let p = probs[s * nx + x];
                row_marginal[s] += p;
                col_marginal[x] += p;
            }
        }
        if let Some(s) = row_marginal.iter().position(|&p| p <= 0.0) {
            return Err(Error::EmptySupport { axis: Axis::Row, index: s });
        }
        if let Some(x) = col_marginal.iter().position(|&p| p <= 0.0) {
            return Err(Error::EmptySupport { axis: Axis::Column, index: x });
        }
        Ok(Self {
            row_labels,
            col_labels,
            probs,
            row_marginal,
            col_marginal,
        })
    }

    /// Product distribution `P_S ⊗ P_X`.
    pub fn product(ps: &Marginal, px: &Marginal) -> Result<Self> {
        let probs = ps
            .probs()
            .iter()
            .flat_map(|&a| px.probs().iter().map(move |&b| a * b))
            .collect();
        Self::from_parts(
            ps.labels().to_vec(),
            px.labels().to_vec(),
            probs,
            ps.len(),
            px.len(),
        )
    }

    /// Joint `P(X, Y)` of an input distribution pushed through a channel.
    pub fn from_channel(px: &Marginal, channel: &Channel) -> Result<Self> {
        if px.labels() != channel.inputs() {
            return Err(Error::LabelMismatch(
                "channel inputs differ from the marginal's labels".into(),
            ));
        }
        let ny = channel.n_outputs();
        let mut probs = Vec::with_capacity(px.len() * ny);
        for (x, &p) in px.probs().iter().enumerate() {
            probs.extend(channel.row(x).iter().map(|&q| p * q));
        }
        Self::from_parts(
            px.labels().to_vec(),
            channel.outputs().to_vec(),
            probs,
            px.len(),
            ny,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.row_marginal.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_marginal.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    #[inline]
    pub fn prob(&self, s: usize, x: usize) -> f64 {
        self.probs[s * self.n_cols() + x]
    }

    /// Row-major cell probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let n = self.n_cols();
        &self.probs[s * n..(s + 1) * n]
    }

    /// Row sums, `P_S`.
    pub fn row_probs(&self) -> &[f64] {
        &self.row_marginal
    }

    /// Column sums, `P_X` (or `P_Y`).
    pub fn col_probs(&self) -> &[f64] {
        &self.col_marginal
    }

    pub fn to_table(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|s| self.row(s).to_vec()).collect()
    }

    pub fn row_marginal(&self) -> Marginal {
        Marginal {
            labels: self.row_labels.clone(),
            probs: self.row_marginal.clone(),
        }
    }

    pub fn col_marginal(&self) -> Marginal {
        Marginal {
            labels: self.col_labels.clone(),
            probs: self.col_marginal.clone(),
        }
    }

    /// `P(A | s)` for every row `s`, where `A` is a set of columns.
    pub fn conditional_mass(&self, subset: &[usize]) -> Vec<f64> {
        (0..self.n_rows())
            .map(|s| {
                let row = self.row(s);
                subset.iter().map(|&x| row[x]).sum::<f64>() / self.row_marginal[s]
            })
            .collect()
    }

    /// `P(A)` for a set of columns.
    pub fn subset_mass(&self, subset: &[usize]) -> f64 {
        subset.iter().map(|&x| self.col_marginal[x]).sum()
    }
}

/// Both marginals `(P_S, P_X)`.
pub fn marginals(j: &JointDistribution) -> (Marginal, Marginal) {
    (j.row_marginal(), j.col_marginal())
}

/// Conditional distribution `q(y|x)`, one row per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: Vec<String>,
    outputs: Vec<String>,
    table: Vec<f64>,
}

impl Channel {
    /// Validates rows summing to one within [`VALIDATION_TOL`] and renormalizes
    /// them exactly.
    pub fn new(inputs: Vec<String>, outputs: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() || outputs.is_empty() {
            return Err(Error::EmptyTable);
        }
        if rows.len() != inputs.len() {
            return Err(Error::LabelMismatch(format!(
                "{} input labels for {} rows",
                inputs.len(),
                rows.len()
            )));
        }
        let ny = outputs.len();
        let mut table = Vec::with_capacity(inputs.len() * ny);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::Ragged {
                    row: x,
                    expected: ny,
                    found: row.len(),
                });
            }
            for (y, &q) in row.iter().enumerate() {
                if !q.is_finite() {
                    return Err(Error::NonFinite { row: x, col: y, value: q });
                }
                if q < 0.0 {
                    return Err(Error::NegativeEntry { row: x, col: y, value: q });
                }
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::SumOutOfTolerance { total });
            }
            if total == 1.0 {
                table.extend_from_slice(row);
            } else {
                table.extend(row.iter().map(|q| q / total));
            }
        }
        Ok(Self {
            inputs,
            outputs,
            table,
        })
    }

    pub fn identity(labels: &[String]) -> Self {
        let n = labels.len();
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            table[i * n + i] = 1.0;
        }
        Self {
            inputs: labels.to_vec(),
            outputs: labels.to_vec(),
            table,
        }
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.n_outputs();
        &self.table[x * n..(x + 1) * n]
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.table[x * self.n_outputs() + y]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_inputs()).map(|x| self.row(x).to_vec()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.n_inputs() == self.n_outputs()
            && (0..self.n_inputs()).all(|x| {
                self.row(x)
                    .iter()
                    .enumerate()
                    .all(|(y, &q)| q == if x == y { 1.0 } else { 0.0 })
            })
    }

    /// Drops outputs that receive no probability under `input_probs`.
    pub fn prune_outputs(&self, input_probs: &[f64]) -> Self {
        let ny = self.n_outputs();
        let keep: Vec<usize> = (0..ny)
            .filter(|&y| {
                input_probs
                    .iter()
                    .enumerate()
                    .any(|(x, &p)| p > 0.0 && self.prob(x, y) > 0.0)
            })
            .collect();
        if keep.len() == ny {
            return self.clone();
        }
        let outputs = keep.iter().map(|&y| self.outputs[y].clone()).collect();
        let mut table = Vec::with_capacity(self.n_inputs() * keep.len());
        for x in 0..self.n_inputs() {
            let row = self.row(x);
            table.extend(keep.iter().map(|&y| row[y]));
        }
        Self {
            inputs: self.inputs.clone(),
            outputs,
            table,
        }
    }
}

/// Pushes `P(S, X)` through `q(y|x)` to obtain `P(S, Y)`.
///
/// Every output must receive positive probability; use
/// [`Channel::prune_outputs`] first when that is not guaranteed.
pub fn compose_channel(j: &JointDistribution, c: &Channel) -> Result<JointDistribution> {
    if j.col_labels() != c.inputs() {
        return Err(Error::LabelMismatch(
            "channel inputs differ from the joint's column labels".into(),
        ));
    }
    let (ns, nx, ny) = (j.n_rows(), j.n_cols(), c.n_outputs());
    let mut probs = vec![0.0; ns * ny];
    for s in 0..ns {
        let row = j.row(s);
        let out = &mut probs[s * ny..(s + 1) * ny];
        for x in 0..nx {
            let p = row[x];
            for (o, &q) in out.iter_mut().zip(c.row(x)) {
                *o += p * q;
            }
        }
    }
    JointDistribution::from_parts(
        j.row_labels().to_vec(),
        c.outputs().to_vec(),
        probs,
        ns,
        ny,
    )
}

/// Shannon entropy in nats of a probability slice, `0 log 0 = 0`.
pub fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

pub fn entropy(m: &Marginal) -> f64 {
    entropy_of(m.probs())
}

/// `I(S; X)` in nats between the row and column variables.
pub fn mutual_information(j: &JointDistribution) -> f64 {
    let (ps, px) = (j.row_probs(), j.col_probs());
    let mut mi = 0.0;
    for s in 0..j.n_rows() {
        for (x, &p) in j.row(s).iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (ps[s] * px[x])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// `I / H(rows)`. A joint whose row variable is deterministic has nothing to
/// lose and is reported as 1.
pub fn normalized_mutual_information(j: &JointDistribution) -> f64 {
    nmi_from(mutual_information(j), entropy_of(j.row_probs()))
}

pub(crate) fn nmi_from(mi: f64, h: f64) -> f64 {
    if h <= 0.0 {
        1.0
    } else {
        (mi / h).clamp(0.0, 1.0)
    }
}

/// Draws a joint from the flat Dirichlet over all `ns * nx` cells, rejecting
/// draws with a cell below [`MIN_RANDOM_CELL`].
pub fn random_joint<R: Rng + ?Sized>(ns: usize, nx: usize, rng: &mut R) -> JointDistribution {
    assert!(ns >= 1 && nx >= 1, "alphabets must be nonempty");
    loop {
        let draws: Vec<f64> = (0..ns * nx).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let probs: Vec<f64> = draws.into_iter().map(|d| d / total).collect();
        if probs.iter().any(|&p| p < MIN_RANDOM_CELL) {
            continue;
        }
        if let Ok(j) = JointDistribution::from_parts(
            default_labels("s", ns),
            default_labels("x", nx),
            probs,
            ns,
            nx,
        ) {
            return j;
        }
    }
}

/// Seeded [`random_joint`].
pub fn sample_random_joint(ns: usize, nx: usize, seed: u64) -> JointDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_joint(ns, nx, &mut rng)
}
