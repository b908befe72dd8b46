//! MCD multivariate regression: the least-squares formulas evaluated at the
//! reweighted MCD location and scatter of the joint `(x, y)` data, followed by
//! one reweighting step on the residual distances.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, EstimateKind, LocationScatter, WeightVector};
use crate::diagnostics::{MapKind, OutlierMapTable};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, solve_spd, symmetrize, with_intercept, SortedEigen};
use crate::mcd::{fast_mcd, McdConfig, McdResult};
use crate::unirobust::{chi2_cutoff, trimmed_variance_factor};

/// Error-scatter eigenvalues below this fraction of the response variance are
/// treated as zero.
const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MvRegFit {
    /// `p x q` slope matrix.
    pub coefficients: DMatrix<f64>,
    pub intercept: DVector<f64>,
    /// `q x q` error scatter.
    pub sigma_eps: DMatrix<f64>,
    pub weights: WeightVector,
    pub residual_distances: Vec<f64>,
    pub kind: EstimateKind,
    /// The error scatter is singular: the fit is exact on the weighted rows.
    /// Residual distances then use the pseudo-inverse on the attained residual
    /// subspace and are infinite for residuals leaving it.
    pub exact_fit: bool,
}

impl MvRegFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x * &self.coefficients;
        for mut row in out.row_iter_mut() {
            row += self.intercept.transpose();
        }
        out
    }

    pub fn residuals(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        y - self.predict(x)
    }
}

#[derive(Debug, Clone)]
pub struct MvRegResult {
    pub raw: MvRegFit,
    pub reweighted: MvRegFit,
}

/// Slope, intercept and error scatter implied by a joint location/scatter
/// estimate whose first `p` coordinates are the predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct PlugIn {
    pub coefficients: DMatrix<f64>,
    pub intercept: DVector<f64>,
    pub sigma_eps: DMatrix<f64>,
}

pub fn plug_in(est: &LocationScatter, p: usize) -> Result<PlugIn> {
    let dim = est.dim();
    if p == 0 || p >= dim {
        return Err(Error::DimensionMismatch {
            expected: dim - 1,
            found: p,
        });
    }
    let q = dim - p;
    let s = &est.scatter;
    let sxx = s.view((0, 0), (p, p)).into_owned();
    let sxy = s.view((0, p), (p, q)).into_owned();
    let syy = s.view((p, p), (q, q)).into_owned();
    let coefficients = solve_spd(&sxx, &sxy).map_err(|_| Error::SingularXScatter)?;
    let mux = est.location.rows(0, p);
    let muy = est.location.rows(p, q);
    let intercept = muy - coefficients.tr_mul(&mux);
    let sigma_eps = symmetrize(syy - coefficients.transpose() * &sxx * &coefficients);
    Ok(PlugIn {
        coefficients,
        intercept,
        sigma_eps,
    })
}

/// Residual distances `sqrt(r' S^- r)` together with a degeneracy flag.
/// Components along null directions of `S` beyond rounding make the distance
/// infinite.
pub fn residual_distances(residuals: &DMatrix<f64>, sigma_eps: &DMatrix<f64>, y_scale: f64) -> (Vec<f64>, bool) {
    let eig = SortedEigen::new(sigma_eps);
    let q = sigma_eps.nrows();
    let floor = DEGENERATE_TOL * y_scale * y_scale;
    let kept: Vec<usize> = (0..q).filter(|&c| eig.values[c] > floor).collect();
    let degenerate = kept.len() < q;
    let zero_tol = 1e-8 * y_scale;
    let d = residuals
        .row_iter()
        .map(|r| {
            let r = r.transpose();
            let mut sq = 0.0;
            for c in 0..q {
                let t = eig.vectors.column(c).dot(&r);
                if kept.contains(&c) {
                    sq += t * t / eig.values[c];
                } else if t.abs() > zero_tol {
                    return f64::INFINITY;
                }
            }
            sq.sqrt()
        })
        .collect();
    (d, degenerate)
}

fn response_scale(y: &DMatrix<f64>) -> f64 {
    let n = y.nrows() as f64;
    let var: f64 = y
        .column_iter()
        .map(|c| {
            let m = c.mean();
            c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        })
        .sum();
    var.sqrt().max(f64::MIN_POSITIVE)
}

fn check_pair(x: &Dataset, y: &Dataset) -> Result<()> {
    if x.n() != y.n() {
        return Err(Error::LengthMismatch {
            left: x.n(),
            right: y.n(),
        });
    }
    let d = x.p() + y.p();
    if x.n() <= d {
        return Err(Error::TooFewRows { n: x.n(), p: d });
    }
    Ok(())
}

fn fit_from_parts(
    x: &Dataset,
    y: &Dataset,
    coefficients: DMatrix<f64>,
    intercept: DVector<f64>,
    sigma_eps: DMatrix<f64>,
    weights: WeightVector,
    kind: EstimateKind,
) -> MvRegFit {
    let mut fit = MvRegFit {
        coefficients,
        intercept,
        sigma_eps,
        weights,
        residual_distances: Vec::new(),
        kind,
        exact_fit: false,
    };
    let r = fit.residuals(x.values(), y.values());
    let (d, degenerate) = residual_distances(&r, &fit.sigma_eps, response_scale(y.values()));
    fit.residual_distances = d;
    fit.exact_fit = degenerate;
    fit
}

/// Weighted least squares on the rows with weight one. Returns the slope,
/// intercept and the unscaled error covariance (divisor = weight count).
fn weighted_ls(x: &Dataset, y: &Dataset, rows: &[usize]) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let u = with_intercept(&x.select_rows(rows));
    let yw = y.select_rows(rows);
    let theta = lstsq(&u, &yw).ok_or(Error::SingularXScatter)?;
    let p = x.p();
    let coefficients = theta.rows(0, p).into_owned();
    let intercept = theta.row(p).transpose();
    let r = &yw - &u * &theta;
    let cov = symmetrize(r.tr_mul(&r) / rows.len() as f64);
    Ok((coefficients, intercept, cov))
}

/// MCD regression of `y` (`q` columns) on `x` (`p` columns) with one
/// reweighting step. The subset size follows `cfg` in dimension `p + q`.
pub fn mcd_regression(x: &Dataset, y: &Dataset, cfg: &McdConfig) -> Result<MvRegResult> {
    check_pair(x, y)?;
    let joint = x.hstack(y)?;
    let raw = match fast_mcd(&joint, cfg) {
        Ok(mcd) => {
            let fit = plug_in(&mcd.reweighted, x.p())?;
            fit_from_parts(
                x,
                y,
                fit.coefficients,
                fit.intercept,
                fit.sigma_eps,
                WeightVector::ones(x.n()),
                EstimateKind::Raw,
            )
        }
        Err(Error::DegenerateData(msg)) => exact_linear_fit(x, y).ok_or(Error::DegenerateData(msg))?,
        Err(e) => return Err(e),
    };
    let reweighted = reweight_mvreg(x, y, &raw, cfg.cutoff_prob)?;
    let raw = MvRegFit {
        weights: reweighted.weights.clone(),
        ..raw
    };
    Ok(MvRegResult { raw, reweighted })
}

/// The joint data are singular. When that is because `y` is an exact linear
/// function of a nondegenerate `x`, the least-squares fit on all rows is the
/// answer.
fn exact_linear_fit(x: &Dataset, y: &Dataset) -> Option<MvRegFit> {
    let all: Vec<usize> = (0..x.n()).collect();
    let (coefficients, intercept, cov) = weighted_ls(x, y, &all).ok()?;
    let fit = fit_from_parts(
        x,
        y,
        coefficients,
        intercept,
        cov,
        WeightVector::ones(x.n()),
        EstimateKind::Raw,
    );
    let all_on_plane = fit.residual_distances.iter().all(|d| d.is_finite());
    (fit.exact_fit && all_on_plane).then_some(fit)
}

/// One reweighting step: rows whose residual distance at `raw` is within
/// `sqrt(chi2_q(cutoff_prob))` are refitted by least squares; the error
/// scatter gets the trimmed-variance consistency factor in dimension `q`.
pub fn reweight_mvreg(x: &Dataset, y: &Dataset, raw: &MvRegFit, cutoff_prob: f64) -> Result<MvRegFit> {
    check_pair(x, y)?;
    let (n, p, q) = (x.n(), x.p(), y.p());
    if raw.coefficients.shape() != (p, q) {
        return Err(Error::DimensionMismatch {
            expected: p * q,
            found: raw.coefficients.len(),
        });
    }
    let cutoff = chi2_cutoff(q, cutoff_prob)?;
    let r = raw.residuals(x.values(), y.values());
    let (d, _) = residual_distances(&r, &raw.sigma_eps, response_scale(y.values()));
    if d.iter().all(|v| v.is_infinite()) {
        return Err(Error::SingularErrorScatter);
    }
    let weights = WeightVector::new(d.iter().map(|&v| v <= cutoff).collect());
    let count = weights.count();
    if count <= p + 1 {
        return Err(Error::TooFewInliers { count, dim: p + 1 });
    }
    let (coefficients, intercept, cov) = weighted_ls(x, y, &weights.selected())?;
    let factor = trimmed_variance_factor(count as f64 / n as f64, q);
    Ok(fit_from_parts(
        x,
        y,
        coefficients,
        intercept,
        cov * factor,
        weights,
        EstimateKind::Reweighted,
    ))
}

/// Residual distances of `fit` against the robust distances of the
/// predictors.
pub fn mvreg_outlier_map(fit: &MvRegFit, mcd_x: &McdResult, cutoff_prob: f64) -> Result<OutlierMapTable> {
    let p = mcd_x.reweighted.dim();
    let q = fit.sigma_eps.nrows();
    OutlierMapTable::new(
        MapKind::MvRegression,
        mcd_x.robust_distances.clone(),
        fit.residual_distances.clone(),
        chi2_cutoff(p, cutoff_prob)?,
        chi2_cutoff(q, cutoff_prob)?,
        cutoff_prob,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::PointClass;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    fn true_b() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 2.0, 0.25])
    }

    fn linear_y(x: &DMatrix<f64>, noise: f64, seed: u64) -> DMatrix<f64> {
        let e = gaussian(x.nrows(), 2, seed) * noise;
        let mut y = x * true_b() + e;
        for mut row in y.row_iter_mut() {
            row[0] += 3.0;
            row[1] -= 1.0;
        }
        y
    }

    #[test]
    fn exact_linear_relation_is_recovered() {
        let xm = gaussian(40, 2, 1);
        let y = Dataset::new(linear_y(&xm, 0.0, 2)).unwrap();
        let x = Dataset::new(xm).unwrap();
        let res = mcd_regression(&x, &y, &McdConfig::default()).unwrap();
        assert!((res.reweighted.coefficients.clone() - true_b()).norm() < 1e-8);
        assert!(res.reweighted.exact_fit);
        assert!(res.reweighted.residual_distances.iter().all(|&d| d < 1e-6));
    }

    #[test]
    fn plug_in_single_response_matches_scalar_formula() {
        let mu = DVector::from_vec(vec![1.0, 2.0]);
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let est = LocationScatter::new(mu, s, 10, EstimateKind::Reweighted, 1.0);
        let fit = plug_in(&est, 1).unwrap();
        assert!((fit.coefficients[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((fit.intercept[0] - 1.5).abs() < 1e-15);
        assert!((fit.sigma_eps[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_x_scatter_is_reported() {
        let est = LocationScatter::new(
            DVector::zeros(3),
            DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
            10,
            EstimateKind::Raw,
            1.0,
        );
        assert_eq!(plug_in(&est, 2).unwrap_err(), Error::SingularXScatter);
    }

    #[test]
    fn reweighting_with_all_weights_is_least_squares() {
        let xm = gaussian(50, 2, 3);
        let y = Dataset::new(linear_y(&xm, 0.5, 4)).unwrap();
        let x = Dataset::new(xm).unwrap();
        let all: Vec<usize> = (0..50).collect();
        let (b, a, _) = weighted_ls(&x, &y, &all).unwrap();
        let raw = MvRegFit {
            coefficients: b.clone(),
            intercept: a.clone(),
            sigma_eps: DMatrix::identity(2, 2) * 100.0,
            weights: WeightVector::ones(50),
            residual_distances: vec![0.0; 50],
            kind: EstimateKind::Raw,
            exact_fit: false,
        };
        let rw = reweight_mvreg(&x, &y, &raw, 0.975).unwrap();
        assert_eq!(rw.weights.count(), 50);
        assert!((rw.coefficients - b).norm() < 1e-12);
        assert!((rw.intercept - a).norm() < 1e-12);
    }

    #[test]
    fn far_residual_gets_zero_weight() {
        let xm = gaussian(60, 2, 5);
        let mut ym = linear_y(&xm, 0.3, 6);
        ym[(7, 0)] += 15.0;
        let x = Dataset::new(xm).unwrap();
        let y = Dataset::new(ym).unwrap();
        let res = mcd_regression(&x, &y, &McdConfig::default()).unwrap();
        assert!(res.raw.residual_distances[7] > 20.0);
        assert!(!res.reweighted.weights.get(7));
    }

    #[test]
    fn outlier_map_types() {
        let mut xm = gaussian(80, 2, 7);
        let mut ym = linear_y(&xm, 0.3, 8);
        // bad leverage
        xm[(0, 0)] = 10.0;
        xm[(0, 1)] = 10.0;
        // vertical outlier
        ym[(1, 1)] += 10.0;
        let x = Dataset::new(xm).unwrap();
        let y = Dataset::new(ym).unwrap();
        let res = mcd_regression(&x, &y, &McdConfig::default()).unwrap();
        let mcd_x = fast_mcd(&x, &McdConfig::default()).unwrap();
        let map = mvreg_outlier_map(&res.reweighted, &mcd_x, 0.975).unwrap();
        assert_eq!(map.flags[0], PointClass::BadLeverage);
        assert_eq!(map.flags[1], PointClass::VerticalOutlier);
        assert!(map.indices_of(PointClass::Regular).len() >= 70);
    }
}
