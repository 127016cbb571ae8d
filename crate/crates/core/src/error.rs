use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row count mismatch: {left} vs {right}")]
    RowMismatch { left: usize, right: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error("row {row}, column `{column}`: {message}")]
    Cell { row: usize, column: String, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("cannot build {d_y} pairwise index-disjoint permutations of {n} elements")]
    Permutations { n: usize, d_y: usize },

    /// Every permuted sample point is (weakly) dominated degenerately; the
    /// coefficient is undefined because Y does not vary.
    #[error("Y constant in sample; coefficient undefined (requires non-constant Y)")]
    ConstantY,

    #[error("Y is (empirically) a function of X; conditional coefficient undefined")]
    YFunctionOfX,

    #[error("estimated variance is not positive ({0}); test statistic undefined")]
    DegenerateVariance(f64),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether this error reflects degenerate data rather than malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::ConstantY | Error::YFunctionOfX | Error::DegenerateVariance(_)
        )
    }
}
