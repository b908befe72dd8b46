use thiserror::Error;

/// Errors raised by the estimators in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("empty data: need at least one row and one column")]
    EmptyData,

    #[error("ragged rows: row {row} has {found} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("too few rows: n = {n} must exceed the dimension {p}")]
    TooFewRows { n: usize, p: usize },

    #[error("alpha = {0} outside [0.5, 1]")]
    BadAlpha(f64),

    #[error("probability {0} outside the open interval (0, 1)")]
    BadProb(f64),

    #[error("empty vector")]
    EmptyVector,

    #[error("subset size h = {h} invalid for n = {n} (need {min} <= h <= n)")]
    SubsetTooSmall { h: usize, n: usize, min: usize },

    #[error("scatter matrix is singular (condition number >= 1e12)")]
    SingularScatter,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("too few inliers: {count} rows kept, need more than {dim}")]
    TooFewInliers { count: usize, dim: usize },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("enumeration too large: {count} subsets exceeds the guard")]
    TooLarge { count: u128 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("x-part of the joint scatter is singular")]
    SingularXScatter,

    #[error("error scatter matrix is singular")]
    SingularErrorScatter,

    #[error("group {group} has {size} rows, need more than {needed}")]
    GroupTooSmall {
        group: usize,
        size: usize,
        needed: usize,
    },

    #[error("scatter of group {group} is singular")]
    SingularGroupScatter { group: usize },

    #[error("every projection direction has zero robust scale")]
    AllDirectionsDegenerate,

    #[error("requested {k} components but usable rank is {rank}")]
    RankTooLow { k: usize, rank: usize },

    #[error("zero eigenvalue in the score space")]
    ZeroEigenvalue,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
