//! Brute-force reference estimators and contamination generators for
//! checking the randomized algorithms on small problems.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{check_h, Dataset, EstimateKind, HSubset, LocationScatter};
use crate::error::{Error, Result};
use crate::linalg::{col_means, lstsq, mean_cov, trimmed_sum};
use crate::lts::{design_matrix, fast_lts, ls_on_rows, residuals, LtsConfig};
use crate::mcd::{fast_mcd, McdConfig};

/// Largest number of subsets an oracle will enumerate.
pub const MAX_ENUMERATION: u128 = 10_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

fn guard(n: usize, h: usize) -> Result<()> {
    let count = binomial(n, h);
    if count > MAX_ENUMERATION {
        return Err(Error::TooLarge { count });
    }
    Ok(())
}

/// The `h`-subset with the globally smallest covariance determinant, found by
/// enumeration. Ties go to the lexicographically smallest index set. The
/// returned scatter carries no consistency factor.
pub fn exact_mcd(data: &Dataset, h: usize) -> Result<(HSubset, LocationScatter)> {
    let n = data.n();
    check_h(h, n, data.p())?;
    guard(n, h)?;
    let x = data.values();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in (0..n).combinations(h) {
        let (_, cov) = mean_cov(x, &subset);
        let det = cov.determinant();
        if best.as_ref().is_none_or(|(d, _)| det < *d) {
            best = Some((det, subset));
        }
    }
    let (_, subset) = best.expect("at least one subset");
    let (mean, cov) = mean_cov(x, &subset);
    let est = LocationScatter::new(mean, cov, h, EstimateKind::Raw, 1.0);
    Ok((HSubset::new(subset), est))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactLts {
    pub subset: HSubset,
    pub theta: DVector<f64>,
    /// Sum of the `h` smallest squared residuals over all `n` rows.
    pub objective: f64,
}

/// Least trimmed squares by enumeration: every `h`-subset is fitted by least
/// squares and scored on all `n` residuals, trimmed to the `h` smallest.
pub fn exact_lts(x: &Dataset, y: &[f64], h: usize, intercept: bool) -> Result<ExactLts> {
    let n = x.n();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    let u = design_matrix(x, intercept);
    let d = u.ncols();
    if n <= d {
        return Err(Error::TooFewRows { n, p: d });
    }
    check_h(h, n, d)?;
    guard(n, h)?;
    let yv = DVector::from_column_slice(y);
    let mut best: Option<ExactLts> = None;
    for subset in (0..n).combinations(h) {
        let theta = ls_on_rows(&u, &yv, &subset).ok_or(Error::RankDeficient)?;
        let sq: Vec<f64> = residuals(&u, &yv, &theta).iter().map(|r| r * r).collect();
        let objective = trimmed_sum(&sq, h);
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(ExactLts {
                subset: HSubset::new(subset),
                theta,
                objective,
            });
        }
    }
    Ok(best.expect("at least one subset"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Every replaced row becomes `magnitude * (1, ..., 1)`.
    PointMass,
    /// Replaced rows scatter with unit normal noise around the point mass.
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    AllColumns,
    /// Only the last column changes: vertical outliers when it is the response.
    LastColumn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationSpec {
    pub m: usize,
    pub magnitude: f64,
    pub placement: Placement,
    pub target: Target,
}

impl ContaminationSpec {
    pub fn new(m: usize, magnitude: f64, placement: Placement) -> Self {
        Self {
            m,
            magnitude,
            placement,
            target: Target::AllColumns,
        }
    }

    pub fn last_column(mut self) -> Self {
        self.target = Target::LastColumn;
        self
    }
}

/// Replaces `spec.m` rows, chosen by `seed`, with outliers.
pub fn contaminate(data: &Dataset, spec: &ContaminationSpec, seed: u64) -> Result<Dataset> {
    let (n, p) = (data.n(), data.p());
    if spec.m >= n {
        return Err(Error::InvalidParameter(format!(
            "cannot replace {} of {n} rows",
            spec.m
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = index::sample(&mut rng, n, spec.m).into_vec();
    let cols: Vec<usize> = match spec.target {
        Target::AllColumns => (0..p).collect(),
        Target::LastColumn => vec![p - 1],
    };
    let mut values = data.values().clone();
    for &i in &rows {
        for &j in &cols {
            let noise: f64 = match spec.placement {
                Placement::PointMass => 0.0,
                Placement::Cluster => StandardNormal.sample(&mut rng),
            };
            values[(i, j)] = spec.magnitude + noise;
        }
    }
    Dataset::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeEstimator {
    /// Raw MCD location.
    Mcd,
    /// Raw LTS coefficients; the last column is the response.
    Lts,
    ClassicalMean,
    /// Least squares with intercept; the last column is the response.
    Ols,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub magnitudes: Vec<f64>,
    pub placement: Placement,
    /// The escape ball has radius `radius_scale * |clean estimate| + radius_offset`.
    pub radius_scale: f64,
    pub radius_offset: f64,
    pub nstarts: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            magnitudes: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            placement: Placement::Cluster,
            radius_scale: 100.0,
            radius_offset: 100.0,
            nstarts: 500,
            seed: 0,
        }
    }
}

fn split_response(data: &Dataset) -> Result<(Dataset, Vec<f64>)> {
    let p = data.p();
    if p < 2 {
        return Err(Error::InvalidParameter(
            "regression probes need predictors and a response column".into(),
        ));
    }
    let x = Dataset::new(data.values().columns(0, p - 1).into_owned())?;
    let y = data.values().column(p - 1).iter().copied().collect();
    Ok((x, y))
}

fn estimate(estimator: ProbeEstimator, data: &Dataset, h: usize, cfg: &ProbeConfig) -> Result<DVector<f64>> {
    match estimator {
        ProbeEstimator::ClassicalMean => Ok(col_means(data.values())),
        ProbeEstimator::Mcd => {
            let mcd_cfg = McdConfig::default()
                .with_h(h)
                .with_nstarts(cfg.nstarts)
                .with_seed(cfg.seed);
            Ok(fast_mcd(data, &mcd_cfg)?.raw.location)
        }
        ProbeEstimator::Lts => {
            let (x, y) = split_response(data)?;
            let lts_cfg = LtsConfig::default()
                .with_h(h)
                .with_nstarts(cfg.nstarts)
                .with_seed(cfg.seed);
            Ok(fast_lts(&x, &y, &lts_cfg)?.raw.theta)
        }
        ProbeEstimator::Ols => {
            let (x, y) = split_response(data)?;
            let u = design_matrix(&x, true);
            let b = DMatrix::from_column_slice(y.len(), 1, &y);
            lstsq(&u, &b)
                .map(|m| m.column(0).into_owned())
                .ok_or(Error::RankDeficient)
        }
    }
}

/// Largest number of replaced rows for which the estimate stays inside the
/// escape ball at every probed magnitude. Counts are scanned upward from one
/// and the scan stops at the first failure; a failed fit counts as escaping.
pub fn breakdown_probe(estimator: ProbeEstimator, data: &Dataset, h: usize) -> Result<usize> {
    breakdown_probe_with(estimator, data, h, &ProbeConfig::default())
}

pub fn breakdown_probe_with(estimator: ProbeEstimator, data: &Dataset, h: usize, cfg: &ProbeConfig) -> Result<usize> {
    let clean = estimate(estimator, data, h, cfg)?;
    let radius = cfg.radius_scale * clean.norm() + cfg.radius_offset;
    let target = match estimator {
        ProbeEstimator::Mcd | ProbeEstimator::ClassicalMean => Target::AllColumns,
        ProbeEstimator::Lts | ProbeEstimator::Ols => Target::LastColumn,
    };
    for m in 1..data.n() {
        let escaped = cfg.magnitudes.iter().any(|&magnitude| {
            let spec = ContaminationSpec {
                m,
                magnitude,
                placement: cfg.placement,
                target,
            };
            contaminate(data, &spec, cfg.seed)
                .and_then(|bad| estimate(estimator, &bad, h, cfg))
                .map_or(true, |e| !(e.norm() <= radius))
        });
        if escaped {
            return Ok(m - 1);
        }
    }
    Ok(data.n() - 1)
}
