//! Numeric containers shared by every estimator.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default trimming fraction: `h = 0.75 n`.
pub const DEFAULT_ALPHA: f64 = 0.75;

/// An `n x p` matrix of finite observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: DMatrix<f64>,
    names: Option<Vec<String>>,
}

impl Dataset {
    /// Wraps a matrix after checking that it is nonempty and finite.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::EmptyData);
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self {
            values,
            names: None,
        })
    }

    /// Builds a dataset from row vectors. This is the `validate` entry point
    /// used by file readers.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::EmptyData);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: p,
                    found: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// Rows listed in `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), self.p(), |i, j| self.values[(indices[i], j)])
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Dataset) -> Result<Dataset> {
        if self.n() != other.n() {
            return Err(Error::LengthMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        let (p, q) = (self.p(), other.p());
        let values = DMatrix::from_fn(self.n(), p + q, |i, j| {
            if j < p {
                self.values[(i, j)]
            } else {
                other.values[(i, j - p)]
            }
        });
        Ok(Dataset {
            values,
            names: None,
        })
    }

    /// Dataset without row `i`, used by leave-one-out loops.
    pub fn without_row(&self, i: usize) -> Dataset {
        Dataset {
            values: self.values.clone().remove_row(i),
            names: self.names.clone(),
        }
    }
}

/// Whether an estimate is the raw optimum or its one-step reweighted refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Raw,
    Reweighted,
}

/// A location vector and scatter matrix with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationScatter {
    pub location: DVector<f64>,
    pub scatter: DMatrix<f64>,
    /// Determinant of `scatter`.
    pub det: f64,
    /// Number of observations the estimate was computed from.
    pub h: usize,
    pub kind: EstimateKind,
    /// Multiplier already applied to `scatter`.
    pub consistency: f64,
}

impl LocationScatter {
    pub fn new(
        location: DVector<f64>,
        scatter: DMatrix<f64>,
        h: usize,
        kind: EstimateKind,
        consistency: f64,
    ) -> Self {
        let det = scatter.determinant().max(0.0);
        Self {
            location,
            scatter,
            det,
            h,
            kind,
            consistency,
        }
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }
}

/// A set of `h` distinct row indices, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HSubset(Vec<usize>);

impl HSubset {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

/// Hard 0/1 observation weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(Vec<bool>);

impl WeightVector {
    pub fn new(w: Vec<bool>) -> Self {
        Self(w)
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Number of rows with weight one.
    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&w| w).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i]).collect()
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.0.iter().map(|&w| u8::from(w)).collect()
    }
}

/// Subset size for a trimming fraction `alpha`: `floor(alpha n)` clamped to
/// `[floor((n + p + 1) / 2), n]`. With `alpha = 0.5` this is the
/// maximal-breakdown choice.
pub fn default_h(n: usize, p: usize, alpha: f64) -> Result<usize> {
    if n <= p {
        return Err(Error::TooFewRows { n, p });
    }
    if !(0.5..=1.0).contains(&alpha) {
        return Err(Error::BadAlpha(alpha));
    }
    let lower = (n + p + 1) / 2;
    // guard against 0.29 * 100 = 28.999...
    let raw = (alpha * n as f64 + 1e-9).floor() as usize;
    Ok(raw.clamp(lower, n))
}

/// Checks a user-supplied `h` against `p + 1 <= h <= n`.
pub(crate) fn check_h(h: usize, n: usize, p: usize) -> Result<usize> {
    if h < p + 1 || h > n {
        return Err(Error::SubsetTooSmall { h, n, min: p + 1 });
    }
    Ok(h)
}
