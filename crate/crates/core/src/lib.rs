//! High-breakdown robust multivariate statistics.
//!
//! The crate provides the minimum covariance determinant (FAST-MCD) estimator
//! of location and scatter, least trimmed squares regression (FAST-LTS), MCD
//! multivariate regression, robust quadratic and linear discriminant analysis,
//! ROBPCA, robust principal component regression, SIMPLS and RSIMPLS, plus the
//! outlier maps that separate regular observations from leverage points and
//! outliers.

pub mod calib;
pub mod classify;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod lts;
pub mod mcd;
pub mod mvreg;
pub mod oracle;
pub mod robpca;
pub mod unirobust;

pub use dataset::{default_h, Dataset, EstimateKind, HSubset, LocationScatter, WeightVector};
pub use error::{Error, Result};
