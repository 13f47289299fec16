use thiserror::Error;

/// Which axis of a joint table an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Column => f.write_str("column"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("table is empty")]
    EmptyTable,

    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("entry ({row}, {col}) is not a finite number: {value}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("negative probability {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("probabilities sum to {total}, outside tolerance of 1")]
    SumOutOfTolerance { total: f64 },

    #[error("{axis} {index} has zero probability mass")]
    EmptySupport { axis: Axis, index: usize },

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("alpha must be greater than 1, got {0}")]
    AlphaOutOfRange(f64),

    #[error("lift is zero at sensitive symbol {s}, output {y}; the inverse is unbounded")]
    ZeroLift { s: usize, y: usize },

    #[error("subset is empty")]
    EmptySubset,

    #[error("malformed randomization: {0}")]
    MalformedR(String),

    #[error("invalid budget: {0}")]
    InvalidBudget(String),

    #[error("lift polytope has no feasible point")]
    EmptyPolytope,

    #[error("target distribution is not in the convex hull of the vertices")]
    InfeasibleTarget,

    #[error("alphabet size {size} exceeds the enumeration cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("unsupported measure for this mechanism: {0}")]
    UnsupportedKind(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: {source}")]
    AtLine {
        line: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input data or arguments, as opposed to
    /// I/O failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io(_) | Error::Csv(_) => false,
            Error::AtLine { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
