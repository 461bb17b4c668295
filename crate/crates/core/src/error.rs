use thiserror::Error;

/// Errors produced by the classification and diagnostics routines.
///
/// Dimension and finiteness checks run at operation entry, so all variants
/// describe conditions of the caller's data rather than internal states.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{0} contains non-finite entries")]
    NonFinite(&'static str),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("SVD failed to converge")]
    ConvergenceFailure,

    #[error("singular system: lambda' = 0 and the Gram matrix is numerically singular (rcond = {rcond:.3e})")]
    SingularSystem { rcond: f64 },

    #[error("k = {k} neighbours requested but only {n} samples are available (k must be < n)")]
    KTooLarge { k: usize, n: usize },

    #[error("kernel width must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("regularization must be non-negative, got {0}")]
    NegativeRegularization(f64),

    #[error("distance matrix has a negative entry: {0}")]
    NegativeDistance(f64),

    #[error("column {0} of the similarity matrix sums to zero")]
    ZeroColumn(usize),

    #[error("column {0} is degenerate: no finite kernel value")]
    DegenerateColumn(usize),

    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max |W - W^T| = {0:.3e})")]
    NotSymmetric(f64),

    #[error("data is not mean-removed (row-mean norm {deviation:.3e} exceeds tolerance {tolerance:.3e})")]
    NotMeanRemoved { deviation: f64, tolerance: f64 },

    #[error("degenerate data: all pairwise inner products are non-negative, no augmentation shift exists")]
    DegenerateData,

    #[error("column {col} has no within-class similarity mass; idealization is undefined")]
    OrphanColumn { col: usize },

    #[error("matrix is rank deficient (smallest singular value {0:.3e})")]
    RankDeficient(f64),

    #[error("target is numerically orthogonal to the data: ||F A^T|| = 0")]
    OrthogonalTarget,

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("confidence threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),

    #[error("ideal graph condition violated: max cross-class entry {max_violation:.3e} exceeds tolerance {tolerance:.3e}")]
    IdealConditionViolated { max_violation: f64, tolerance: f64 },

    #[error("label {label} out of range 1..={classes}")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("inconsistent dimension at {path}:{line}: expected {expected} fields, found {found}")]
    InconsistentDimension {
        path: String,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("dataset too large to densify: {rows} x {cols} exceeds the supported size")]
    DatasetTooLarge { rows: usize, cols: usize },

    #[error("class {class} has only {count} samples; at least {required} required")]
    TooFewSamples {
        class: usize,
        count: usize,
        required: usize,
    },

    #[error("column {0} has zero norm and cannot be scaled to unit length")]
    ZeroVector(usize),

    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
