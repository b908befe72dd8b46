//! Multivariate calibration: SIMPLS, its robust version RSIMPLS, robust
//! principal component regression, and leave-one-out RMSECV curves for
//! choosing the number of components.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::{Dataset, WeightVector};
use crate::error::{Error, Result};
use crate::linalg::{center_rows, full_mean_cov, mean_cov, solve_spd, symmetrize};
use crate::mcd::McdConfig;
use crate::mvreg::{mcd_regression, MvRegFit};
use crate::robpca::{orthogonal_distances, robpca, scores, PcaModel, RobpcaConfig};
use crate::unirobust::chi2_cutoff;

/// Singular values of the deflated cross-covariance below this fraction of
/// the initial one end the component sequence.
const DEFLATION_TOL: f64 = 1e-12;

/// SIMPLS weight vectors computed from a scatter of `x` and a cross-scatter
/// of `x` with `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplsWeights {
    /// `p x k`, unit columns `r_a`.
    pub r: DMatrix<f64>,
    /// `q x k`, unit columns `q_a`.
    pub q: DMatrix<f64>,
    /// `p x k` x-loadings `p_a`.
    pub loadings: DMatrix<f64>,
    /// `p x k` orthonormal basis of the loadings used for deflation.
    pub basis: DMatrix<f64>,
    /// Cross-scatter after the last deflation.
    pub deflated: DMatrix<f64>,
}

/// The SIMPLS iteration on moment matrices: each `(r_a, q_a)` is the dominant
/// singular pair of the deflated cross-scatter, oriented so that the
/// largest-magnitude entry of `q_a` is positive.
pub fn simpls_weights(sx: &DMatrix<f64>, sxy: &DMatrix<f64>, k: usize) -> Result<SimplsWeights> {
    let (p, q) = sxy.shape();
    if sx.shape() != (p, p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: sx.nrows(),
        });
    }
    if k == 0 {
        return Err(Error::RankTooLow { k, rank: 0 });
    }
    let mut s = sxy.clone();
    let mut r = DMatrix::zeros(p, k);
    let mut qm = DMatrix::zeros(q, k);
    let mut loadings = DMatrix::zeros(p, k);
    let mut basis = DMatrix::<f64>::zeros(p, k);
    let first = sxy.norm();
    for a in 0..k {
        let svd = s.clone().svd(true, true);
        let top = (0..svd.singular_values.len())
            .max_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
            .expect("nonempty");
        if !(svd.singular_values[top] > DEFLATION_TOL * first) {
            return Err(Error::RankTooLow { k, rank: a });
        }
        let mut ra = svd.u.as_ref().expect("requested U").column(top).into_owned();
        let mut qa = svd.v_t.as_ref().expect("requested V").row(top).transpose();
        let lead = qa.iamax();
        if qa[lead] < 0.0 {
            ra.neg_mut();
            qa.neg_mut();
        }
        let sr = sx * &ra;
        let var = ra.dot(&sr);
        if !(var > 0.0) {
            return Err(Error::RankTooLow { k, rank: a });
        }
        let pa = &sr / var;
        let mut va = pa.clone();
        // two Gram-Schmidt passes keep the basis orthonormal to rounding
        for _ in 0..2 {
            for b in 0..a {
                let vb = basis.column(b);
                va -= vb * vb.dot(&va);
            }
        }
        va /= va.norm();
        s -= &va * (va.transpose() * &s);
        r.set_column(a, &ra);
        qm.set_column(a, &qa);
        loadings.set_column(a, &pa);
        basis.set_column(a, &va);
    }
    Ok(SimplsWeights {
        r,
        q: qm,
        loadings,
        basis,
        deflated: s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    pub x_center: DVector<f64>,
    pub y_center: DVector<f64>,
    pub weights_r: DMatrix<f64>,
    pub y_weights_q: DMatrix<f64>,
    pub x_loadings: DMatrix<f64>,
    /// `p x q`.
    pub coefficients: DMatrix<f64>,
    pub intercept: DVector<f64>,
    pub k: usize,
    pub robust: bool,
    /// Rows whose residual distance under the final regression lies within
    /// the cutoff; all ones for classical SIMPLS.
    pub weights: WeightVector,
}

impl PlsModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        predict_linear(x, &self.coefficients, &self.intercept)
    }

    /// Scores `(x - x_center) R`.
    pub fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        center_rows(x, &self.x_center) * &self.weights_r
    }
}

#[derive(Debug, Clone)]
pub struct PcrModel {
    pub pca: PcaModel,
    /// MCD regression of the responses on the robust scores.
    pub regression: MvRegFit,
    pub coefficients: DMatrix<f64>,
    pub intercept: DVector<f64>,
    pub k: usize,
}

impl PcrModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        predict_linear(x, &self.coefficients, &self.intercept)
    }
}

fn predict_linear(x: &DMatrix<f64>, b: &DMatrix<f64>, a: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x * b;
    for mut row in out.row_iter_mut() {
        row += a.transpose();
    }
    out
}

fn check_pair(x: &Dataset, y: &Dataset, k: usize) -> Result<()> {
    if x.n() != y.n() {
        return Err(Error::LengthMismatch {
            left: x.n(),
            right: y.n(),
        });
    }
    if x.n() <= k + 1 {
        return Err(Error::TooFewRows { n: x.n(), p: k + 1 });
    }
    if k == 0 || k > x.p() {
        return Err(Error::RankTooLow { k, rank: x.p() });
    }
    Ok(())
}

/// Regression of the centred responses on the SIMPLS scores, evaluated on
/// moments: `B = R (R' Sx R)^-1 R' Sxy`.
fn moment_coefficients(sx: &DMatrix<f64>, sxy: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let tt = symmetrize(r.transpose() * sx * r);
    let ty = r.transpose() * sxy;
    let bt = solve_spd(&tt, &ty).map_err(|_| Error::RankTooLow {
        k: r.ncols(),
        rank: 0,
    })?;
    Ok(r * bt)
}

/// Classical SIMPLS with `k` components.
pub fn simpls(x: &Dataset, y: &Dataset, k: usize) -> Result<PlsModel> {
    check_pair(x, y, k)?;
    let joint = x.hstack(y)?;
    let (mean, cov) = full_mean_cov(joint.values());
    let p = x.p();
    let q = y.p();
    let sx = cov.view((0, 0), (p, p)).into_owned();
    let sxy = cov.view((0, p), (p, q)).into_owned();
    let w = simpls_weights(&sx, &sxy, k)?;
    let coefficients = moment_coefficients(&sx, &sxy, &w.r)?;
    let x_center = mean.rows(0, p).into_owned();
    let y_center = mean.rows(p, q).into_owned();
    let intercept = &y_center - coefficients.tr_mul(&x_center);
    Ok(PlsModel {
        x_center,
        y_center,
        weights_r: w.r,
        y_weights_q: w.q,
        x_loadings: w.loadings,
        coefficients,
        intercept,
        k,
        robust: false,
        weights: WeightVector::ones(x.n()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibConfig {
    /// Settings for the ROBPCA stage; its `k` is set per call.
    pub robpca: RobpcaConfig,
    /// Settings for the MCD regression on the scores.
    pub mcd: McdConfig,
    /// Components of the joint ROBPCA in RSIMPLS; defaults to `k + q`.
    pub joint_k: Option<usize>,
    pub joint_moments: JointMoments,
    /// Robust RMSECV skips the rows whose residual distance under the
    /// full-data fit exceeds the square root of this chi-square quantile.
    pub cv_cutoff_prob: f64,
}

/// Where RSIMPLS takes its robust joint moments of `(x, y)` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JointMoments {
    /// Center and `P L P'` of the joint ROBPCA.
    Projected,
    /// Classical mean and covariance of the rows within the orthogonal
    /// distance cutoff of the joint ROBPCA.
    #[default]
    Reweighted,
}

impl Default for CalibConfig {
    fn default() -> Self {
        Self {
            robpca: RobpcaConfig::default(),
            mcd: McdConfig::default(),
            joint_k: None,
            joint_moments: JointMoments::default(),
            cv_cutoff_prob: 0.999,
        }
    }
}

impl CalibConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.robpca.seed = seed;
        self.mcd.seed = seed;
        self
    }

    pub fn with_nstarts(mut self, nstarts: usize) -> Self {
        self.robpca.nstarts = nstarts;
        self.mcd.nstarts = nstarts;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.robpca.alpha = alpha;
        self.mcd.alpha = alpha;
        self
    }
}

/// RSIMPLS: SIMPLS on the robust joint scatter `P L P'` and center from
/// ROBPCA of `(x, y)`, then MCD regression of `y` on the robust scores.
pub fn rsimpls(x: &Dataset, y: &Dataset, k: usize, cfg: &CalibConfig) -> Result<PlsModel> {
    rsimpls_fit(x, y, k, cfg).map(|(model, _)| model)
}

/// RSIMPLS together with the MCD regression on its scores.
fn rsimpls_fit(x: &Dataset, y: &Dataset, k: usize, cfg: &CalibConfig) -> Result<(PlsModel, MvRegFit)> {
    check_pair(x, y, k)?;
    let (p, q) = (x.p(), y.p());
    let joint = x.hstack(y)?;
    let kz = cfg.joint_k.unwrap_or(k + q).min(p + q).min(x.n() - 1);
    let pca = robpca(&joint, &RobpcaConfig { k: Some(kz), ..cfg.robpca.clone() })?;
    if pca.scale.is_some() {
        return Err(Error::InvalidParameter(
            "column scaling is not supported in the joint ROBPCA".into(),
        ));
    }
    let (center, scatter) = match cfg.joint_moments {
        JointMoments::Projected => {
            let l = DMatrix::from_diagonal(&pca.eigenvalues);
            (pca.center.clone(), symmetrize(&pca.loadings * l * pca.loadings.transpose()))
        }
        JointMoments::Reweighted => {
            let od = orthogonal_distances(&pca, joint.values())?;
            let rows: Vec<usize> = (0..od.len()).filter(|&i| od[i] <= pca.od_cutoff).collect();
            if rows.len() <= k + 1 {
                return Err(Error::TooFewInliers {
                    count: rows.len(),
                    dim: k + 1,
                });
            }
            mean_cov(joint.values(), &rows)
        }
    };
    let sx = scatter.view((0, 0), (p, p)).into_owned();
    let sxy = scatter.view((0, p), (p, q)).into_owned();
    let w = simpls_weights(&sx, &sxy, k)?;
    let x_center = center.rows(0, p).into_owned();
    let y_center = center.rows(p, q).into_owned();

    let t = Dataset::new(center_rows(x.values(), &x_center) * &w.r)?;
    let fit = mcd_regression(&t, y, &cfg.mcd)?.reweighted;
    let coefficients = &w.r * &fit.coefficients;
    let intercept = &fit.intercept - coefficients.tr_mul(&x_center);
    let model = PlsModel {
        x_center,
        y_center,
        weights_r: w.r,
        y_weights_q: w.q,
        x_loadings: w.loadings,
        coefficients,
        intercept,
        k,
        robust: true,
        weights: final_flags(&fit, cfg.mcd.cutoff_prob)?,
    };
    Ok((model, fit))
}

/// Robust principal component regression: ROBPCA on `x`, MCD regression of
/// `y` on the scores, composed back to coefficients on `x`.
pub fn rpcr(x: &Dataset, y: &Dataset, k: usize, cfg: &CalibConfig) -> Result<PcrModel> {
    check_pair(x, y, k)?;
    let pca = robpca(x, &RobpcaConfig { k: Some(k), ..cfg.robpca.clone() })?;
    let t = Dataset::new(scores(&pca, x.values())?)?;
    let regression = mcd_regression(&t, y, &cfg.mcd)?.reweighted;
    // t = P'(x / s - c), so y = a + B_t' P' (x / s - c)
    let direction = &pca.loadings * &regression.coefficients;
    let mut coefficients = direction.clone();
    if let Some(s) = &pca.scale {
        for (i, mut row) in coefficients.row_iter_mut().enumerate() {
            row /= s[i];
        }
    }
    let intercept = &regression.intercept - direction.tr_mul(&pca.center);
    Ok(PcrModel {
        pca,
        regression,
        coefficients,
        intercept,
        k,
    })
}

/// Rows regular under the reweighted fit itself, as opposed to the rows that
/// entered it, which were judged against the raw error scatter.
pub fn final_flags(fit: &MvRegFit, cutoff_prob: f64) -> Result<WeightVector> {
    let cutoff = chi2_cutoff(fit.sigma_eps.nrows(), cutoff_prob)?;
    Ok(WeightVector::new(
        fit.residual_distances.iter().map(|&d| d <= cutoff).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibMethod {
    Simpls,
    Rsimpls,
    Rpcr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvCurve {
    pub k_values: Vec<usize>,
    pub rmsecv: Vec<f64>,
    pub selected_k: usize,
    /// Number of rows entering each value.
    pub rows_used: Vec<usize>,
}

/// Fitted coefficients of one calibration model.
fn fit_linear(method: CalibMethod, x: &Dataset, y: &Dataset, k: usize, cfg: &CalibConfig) -> Result<(DMatrix<f64>, DVector<f64>)> {
    match method {
        CalibMethod::Simpls => simpls(x, y, k).map(|m| (m.coefficients, m.intercept)),
        CalibMethod::Rsimpls => rsimpls(x, y, k, cfg).map(|m| (m.coefficients, m.intercept)),
        CalibMethod::Rpcr => rpcr(x, y, k, cfg).map(|m| (m.coefficients, m.intercept)),
    }
}

/// Rows of a full-data fit that count towards the robust RMSECV.
fn cv_rows(method: CalibMethod, x: &Dataset, y: &Dataset, k: usize, cfg: &CalibConfig) -> Result<Vec<usize>> {
    let fit = match method {
        CalibMethod::Simpls => return Ok((0..x.n()).collect()),
        CalibMethod::Rsimpls => rsimpls_fit(x, y, k, cfg)?.1,
        CalibMethod::Rpcr => rpcr(x, y, k, cfg)?.regression,
    };
    Ok(final_flags(&fit, cfg.cv_cutoff_prob)?.selected())
}

/// Leave-one-out RMSECV for `k = 1..=kmax`. In robust mode each value
/// averages only over the rows that the full-data fit with the same `k`
/// keeps within the `cv_cutoff_prob` residual cutoff. For several responses the squared residual norm replaces the
/// squared residual. Every fold is a complete refit, so the cost is
/// `n * kmax` model fits.
pub fn rmsecv(x: &Dataset, y: &Dataset, kmax: usize, method: CalibMethod, robust: bool, cfg: &CalibConfig) -> Result<CvCurve> {
    let n = x.n();
    if n != y.n() {
        return Err(Error::LengthMismatch { left: n, right: y.n() });
    }
    if kmax == 0 || kmax + 1 >= n {
        return Err(Error::TooFewRows { n, p: kmax + 1 });
    }
    let mut sq_err = vec![vec![0.0; n]; kmax];
    for i in 0..n {
        let xi = x.without_row(i);
        let yi = y.without_row(i);
        let row = x.values().rows(i, 1).into_owned();
        let target = y.row(i);
        for k in 1..=kmax {
            let (b, a) = fit_linear(method, &xi, &yi, k, cfg)?;
            let pred = predict_linear(&row, &b, &a).row(0).transpose();
            sq_err[k - 1][i] = (&target - pred).norm_squared();
        }
    }
    let mut rmse = Vec::with_capacity(kmax);
    let mut rows_used = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let rows: Vec<usize> = if robust {
            cv_rows(method, x, y, k, cfg)?
        } else {
            (0..n).collect()
        };
        let total: f64 = rows.iter().map(|&i| sq_err[k - 1][i]).sum();
        rmse.push((total / rows.len() as f64).sqrt());
        rows_used.push(rows.len());
    }
    let mut selected = 0;
    for (j, v) in rmse.iter().enumerate() {
        if *v < rmse[selected] {
            selected = j;
        }
    }
    Ok(CvCurve {
        k_values: (1..=kmax).collect(),
        rmsecv: rmse,
        selected_k: selected + 1,
        rows_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lstsq;
    use crate::linalg::with_intercept;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    fn regression_data(n: usize, p: usize, seed: u64) -> (Dataset, Dataset) {
        let x = gaussian(n, p, seed);
        let beta = DVector::from_fn(p, |i, _| 1.0 - 0.3 * i as f64);
        let e = gaussian(n, 1, seed + 1000) * 0.1;
        let y = &x * beta + e.column(0);
        (
            Dataset::new(x).unwrap(),
            Dataset::new(DMatrix::from_column_slice(n, 1, y.as_slice())).unwrap(),
        )
    }

    #[test]
    fn first_weight_is_normalized_cross_covariance() {
        let (x, y) = regression_data(40, 4, 1);
        let model = simpls(&x, &y, 2).unwrap();
        let joint = x.hstack(&y).unwrap();
        let (_, cov) = full_mean_cov(joint.values());
        let sxy = cov.view((0, 4), (4, 1)).into_owned();
        let expected = &sxy / sxy.norm();
        assert!((model.weights_r.column(0) - expected.column(0)).norm() < 1e-10);
        assert!((model.y_weights_q[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_rank_pls_is_least_squares() {
        let (x, y) = regression_data(30, 5, 2);
        let model = simpls(&x, &y, 5).unwrap();
        let u = with_intercept(x.values());
        let ols = lstsq(&u, y.values()).unwrap();
        for j in 0..5 {
            assert!((model.coefficients[(j, 0)] - ols[(j, 0)]).abs() < 1e-8);
        }
        assert!((model.intercept[0] - ols[(5, 0)]).abs() < 1e-8);
    }

    #[test]
    fn scores_are_orthogonal() {
        let x = Dataset::new(gaussian(50, 6, 3)).unwrap();
        let y = Dataset::new(gaussian(50, 2, 4)).unwrap();
        let model = simpls(&x, &y, 4).unwrap();
        let t = model.scores(x.values());
        let g = t.tr_mul(&t);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert!(g[(a, b)].abs() < 1e-8 * (g[(a, a)] * g[(b, b)]).sqrt());
                }
            }
            assert!((model.weights_r.column(a).norm() - 1.0).abs() < 1e-12);
            assert!((model.y_weights_q.column(a).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deflation_annihilates_the_basis() {
        let x = gaussian(40, 5, 5);
        let y = gaussian(40, 3, 6);
        let z = Dataset::new(x).unwrap().hstack(&Dataset::new(y).unwrap()).unwrap();
        let (_, cov) = full_mean_cov(z.values());
        let sx = cov.view((0, 0), (5, 5)).into_owned();
        let sxy = cov.view((0, 5), (5, 3)).into_owned();
        for a in 1..=3 {
            let w = simpls_weights(&sx, &sxy, a).unwrap();
            let residual = w.basis.transpose() * &w.deflated;
            assert!(residual.norm() < 1e-12 * sxy.norm());
        }
    }

    #[test]
    fn exact_rank_one_data_has_zero_cv_error() {
        let t = gaussian(20, 1, 7);
        let x = DMatrix::from_fn(20, 3, |i, j| t[(i, 0)] * (j as f64 + 1.0));
        let y = DMatrix::from_fn(20, 1, |i, _| 2.0 * t[(i, 0)] + 1.0);
        let curve = rmsecv(
            &Dataset::new(x).unwrap(),
            &Dataset::new(y).unwrap(),
            1,
            CalibMethod::Simpls,
            false,
            &CalibConfig::default(),
        )
        .unwrap();
        assert!(curve.rmsecv[0] < 1e-10);
        assert_eq!(curve.selected_k, 1);
    }

    #[test]
    fn noise_curve_is_finite() {
        let x = Dataset::new(gaussian(25, 4, 8)).unwrap();
        let y = Dataset::new(gaussian(25, 1, 9)).unwrap();
        let curve = rmsecv(&x, &y, 3, CalibMethod::Simpls, false, &CalibConfig::default()).unwrap();
        assert_eq!(curve.k_values, vec![1, 2, 3]);
        assert!(curve.rmsecv.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(matches!(
            rmsecv(&x, &y, 24, CalibMethod::Simpls, false, &CalibConfig::default()),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn rpcr_exact_model_has_zero_residuals_on_regular_rows() {
        // x lies in a 2-dimensional subspace of R^5, y is linear in it
        let t = gaussian(60, 2, 10) * 2.0;
        let basis = DMatrix::from_row_slice(2, 5, &[1.0, 0.5, 0.0, -0.5, 1.0, 0.0, 1.0, 1.0, 0.5, -1.0]);
        let mut x = &t * &basis;
        let mut y = DMatrix::from_fn(60, 1, |i, _| 3.0 * t[(i, 0)] - t[(i, 1)] + 0.5);
        for i in 0..8 {
            x[(i, 2)] += 15.0;
            y[(i, 0)] += 30.0;
        }
        let x = Dataset::new(x).unwrap();
        let y = Dataset::new(y).unwrap();
        let model = rpcr(&x, &y, 2, &CalibConfig::default()).unwrap();
        let pred = model.predict(x.values());
        for i in 8..60 {
            assert!((pred[(i, 0)] - y.values()[(i, 0)]).abs() < 1e-8);
        }
    }

    #[test]
    fn rpcr_at_full_rank_predicts_like_least_squares() {
        let t = gaussian(50, 3, 14);
        let basis = gaussian(3, 6, 15);
        let x = &t * &basis;
        let y = DMatrix::from_fn(50, 1, |i, _| 2.0 * t[(i, 0)] - t[(i, 1)] + 0.5 * t[(i, 2)] + 1.0);
        let model = rpcr(&Dataset::new(x).unwrap(), &Dataset::new(y.clone()).unwrap(), 3, &CalibConfig::default()).unwrap();
        let t_new = gaussian(20, 3, 16);
        let ols = lstsq(&with_intercept(&t), &y).unwrap();
        let expected = with_intercept(&t_new) * ols;
        let pred = model.predict(&(&t_new * &basis));
        assert!((pred - expected).amax() < 1e-6);
    }

    #[test]
    fn rsimpls_tracks_simpls_on_clean_latent_data() {
        let t = gaussian(100, 2, 11) * 3.0;
        let basis = DMatrix::from_row_slice(2, 5, &[1.0, 0.5, 0.0, -0.5, 1.0, 0.0, 1.0, 1.0, 0.5, -1.0]);
        let x = &t * &basis + gaussian(100, 5, 12) * 0.1;
        let y = DMatrix::from_fn(100, 1, |i, _| t[(i, 0)] - 2.0 * t[(i, 1)]) + gaussian(100, 1, 13) * 0.1;
        let (x, y) = (Dataset::new(x).unwrap(), Dataset::new(y).unwrap());
        let classical = simpls(&x, &y, 2).unwrap();
        let robust = rsimpls(&x, &y, 2, &CalibConfig::default().with_nstarts(100)).unwrap();
        let rel = (&robust.coefficients - &classical.coefficients).norm() / classical.coefficients.norm();
        assert!(rel < 0.1, "relative difference {rel}");
        assert!(robust.robust);
    }
}
