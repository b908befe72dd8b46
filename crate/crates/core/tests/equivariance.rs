//! Equivariance of the estimators under transformations of the data, with
//! the seed held fixed.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use robmv::calib::{rpcr, rsimpls, CalibConfig};
use robmv::classify::{classify_rows, fit_rlda, fit_rqda, ClassifyConfig};
use robmv::lts::{fast_lts, LtsConfig};
use robmv::mcd::{fast_mcd, McdConfig};
use robmv::mvreg::mcd_regression;
use robmv::robpca::{orthogonal_distances, robpca, score_distances, scores, RobpcaConfig};
use robmv::Dataset;

const TOL: f64 = 1e-8;
const TRANSFORMS: u64 = 10;

/// Gaussian rows with a few displaced ones, so that trimming matters.
fn contaminated(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut x = gaussian(n, p, seed);
    for i in 0..n / 8 {
        for j in 0..p {
            x[(i, j)] += 8.0;
        }
    }
    x
}

#[test]
fn mcd_is_affine_equivariant() {
    let x = contaminated(40, 3, 1);
    let cfg = McdConfig::default().with_seed(7).with_nstarts(100);
    let base = fast_mcd(&Dataset::new(x.clone()).unwrap(), &cfg).unwrap();
    for t in 0..TRANSFORMS {
        let mut r = rng(100 + t);
        let a = random_nonsingular(3, &mut r);
        let v = gaussian_vec(3, &mut r) * 10.0;
        let moved = fast_mcd(&Dataset::new(shift_rows(&(&x * &a), &v)).unwrap(), &cfg).unwrap();
        for (est, orig) in [(&moved.raw, &base.raw), (&moved.reweighted, &base.reweighted)] {
            let loc = a.transpose() * &orig.location + &v;
            let scatter = a.transpose() * &orig.scatter * &a;
            assert!(rel_err_vec(&est.location, &loc) < TOL);
            assert!(rel_err(&est.scatter, &scatter) < TOL);
        }
        assert_eq!(moved.best_subset, base.best_subset);
    }
}

fn lts_data(seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let x = gaussian(40, 2, seed);
    let mut r = rng(seed + 1);
    let mut y: Vec<f64> = (0..40).map(|i| 1.0 + x[(i, 0)] - 2.0 * x[(i, 1)] + 0.3 * normal(&mut r)).collect();
    for v in y.iter_mut().take(6) {
        *v += 15.0;
    }
    (x, y)
}

#[test]
fn lts_is_regression_scale_and_affine_equivariant() {
    let (x, y) = lts_data(2);
    let cfg = LtsConfig::default().with_seed(3).with_nstarts(100);
    let xd = Dataset::new(x.clone()).unwrap();
    let base = fast_lts(&xd, &y, &cfg).unwrap().reweighted;
    for t in 0..TRANSFORMS {
        let mut r = rng(200 + t);
        let v = gaussian_vec(2, &mut r);
        let c = normal(&mut r);
        let shifted: Vec<f64> = (0..40).map(|i| y[i] + x.row(i).dot(&v.transpose()) + c).collect();
        let fit = fast_lts(&xd, &shifted, &cfg).unwrap().reweighted;
        let expected = DVector::from_vec(vec![base.theta[0] + v[0], base.theta[1] + v[1], base.theta[2] + c]);
        assert!(rel_err_vec(&fit.theta, &expected) < TOL);

        let s = 0.1 + 5.0 * normal(&mut r).abs();
        let scaled: Vec<f64> = y.iter().map(|v| s * v).collect();
        let fit = fast_lts(&xd, &scaled, &cfg).unwrap().reweighted;
        assert!(rel_err_vec(&fit.theta, &(&base.theta * s)) < TOL);
        assert!((fit.sigma - s * base.sigma).abs() < TOL * s * base.sigma);

        let a = random_nonsingular(2, &mut r);
        let w = gaussian_vec(2, &mut r) * 5.0;
        let moved = Dataset::new(shift_rows(&(&x * a.transpose()), &w)).unwrap();
        let fit = fast_lts(&moved, &y, &cfg).unwrap().reweighted;
        // x -> A x + w maps the slope to A^-T slope
        let slope = a.transpose().try_inverse().unwrap() * base.slope();
        let intercept = base.intercept() - w.dot(&slope);
        assert!(rel_err_vec(&fit.slope(), &slope) < TOL, "{} vs {}", fit.slope(), slope);
        assert!((fit.intercept() - intercept).abs() < TOL * intercept.abs().max(1.0));
    }
}

fn mvreg_data(seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let x = gaussian(60, 2, seed);
    let b = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 2.0, 0.25]);
    let mut y = &x * b + gaussian(60, 2, seed + 1) * 0.3;
    for i in 0..6 {
        y[(i, 0)] += 12.0;
    }
    (x, y)
}

#[test]
fn mcd_regression_is_regression_and_affine_equivariant() {
    let (x, y) = mvreg_data(3);
    let cfg = McdConfig::default().with_seed(5).with_nstarts(100);
    let xd = Dataset::new(x.clone()).unwrap();
    let base = mcd_regression(&xd, &Dataset::new(y.clone()).unwrap(), &cfg).unwrap().reweighted;
    for t in 0..TRANSFORMS {
        let mut r = rng(300 + t);

        let d = DMatrix::from_fn(2, 2, |_, _| normal(&mut r));
        let fit = mcd_regression(&xd, &Dataset::new(&y + &x * &d).unwrap(), &cfg).unwrap().reweighted;
        assert!(rel_err(&fit.coefficients, &(&base.coefficients + &d)) < TOL);
        assert!(rel_err_vec(&fit.intercept, &base.intercept) < TOL);

        let c = random_nonsingular(2, &mut r);
        let w = gaussian_vec(2, &mut r) * 3.0;
        let fit = mcd_regression(&xd, &Dataset::new(shift_rows(&(&y * &c), &w)).unwrap(), &cfg).unwrap().reweighted;
        assert!(rel_err(&fit.coefficients, &(&base.coefficients * &c)) < TOL);
        assert!(rel_err_vec(&fit.intercept, &(c.transpose() * &base.intercept + &w)) < TOL);
        assert!(rel_err(&fit.sigma_eps, &(c.transpose() * &base.sigma_eps * &c)) < TOL);

        let a = random_nonsingular(2, &mut r);
        let v = gaussian_vec(2, &mut r) * 3.0;
        let moved = Dataset::new(shift_rows(&(&x * &a), &v)).unwrap();
        let fit = mcd_regression(&moved, &Dataset::new(y.clone()).unwrap(), &cfg).unwrap().reweighted;
        let coef = a.clone().try_inverse().unwrap() * &base.coefficients;
        assert!(rel_err(&fit.coefficients, &coef) < TOL);
        assert!(rel_err_vec(&fit.intercept, &(&base.intercept - coef.transpose() * &v)) < TOL);
    }
}

#[test]
fn robpca_is_translation_and_orthogonally_equivariant() {
    let mut x = gaussian(50, 5, 4);
    for i in 0..50 {
        x[(i, 0)] *= 4.0;
        x[(i, 1)] *= 2.0;
    }
    for i in 0..6 {
        x[(i, 4)] += 10.0;
    }
    let cfg = RobpcaConfig::default().with_k(2).with_seed(9).with_nstarts(100);
    let base = robpca(&Dataset::new(x.clone()).unwrap(), &cfg).unwrap();
    let base_scores = scores(&base, &x).unwrap();
    let base_od = orthogonal_distances(&base, &x).unwrap();
    let base_sd = score_distances(&base, &x).unwrap();
    for t in 0..TRANSFORMS {
        let mut r = rng(400 + t);
        let a = random_orthogonal(5, &mut r);
        let v = gaussian_vec(5, &mut r) * 10.0;
        let moved_x = shift_rows(&(&x * a.transpose()), &v);
        let m = robpca(&Dataset::new(moved_x.clone()).unwrap(), &cfg).unwrap();
        assert!(rel_err_vec(&m.center, &(&a * &base.center + &v)) < TOL);
        assert!(rel_err(&m.loadings, &(&a * &base.loadings)) < TOL);
        assert!(rel_err_vec(&m.eigenvalues, &base.eigenvalues) < TOL);
        assert!(rel_err(&scores(&m, &moved_x).unwrap(), &base_scores) < TOL);
        let od = orthogonal_distances(&m, &moved_x).unwrap();
        let sd = score_distances(&m, &moved_x).unwrap();
        for i in 0..50 {
            assert!((od[i] - base_od[i]).abs() < TOL * base_od[i].max(1.0));
            assert!((sd[i] - base_sd[i]).abs() < TOL * base_sd[i].max(1.0));
        }
    }
}

#[test]
fn discriminant_assignments_are_affine_invariant() {
    let mut x = gaussian(80, 2, 5);
    for i in 40..80 {
        x[(i, 0)] += 3.0;
        x[(i, 1)] -= 1.0;
    }
    let labels: Vec<usize> = (0..80).map(|i| usize::from(i >= 40)).collect();
    let test = gaussian(30, 2, 6) * 2.0;
    let cfg = ClassifyConfig {
        mcd: McdConfig::default().with_nstarts(100).with_seed(2),
        ..ClassifyConfig::default()
    };
    for fit in [fit_rqda, fit_rlda] {
        let base = classify_rows(&fit(&Dataset::new(x.clone()).unwrap(), &labels, &cfg).unwrap(), &Dataset::new(test.clone()).unwrap()).unwrap();
        for t in 0..TRANSFORMS {
            let mut r = rng(500 + t);
            let a = random_nonsingular(2, &mut r);
            let v = gaussian_vec(2, &mut r);
            let model = fit(&Dataset::new(shift_rows(&(&x * &a), &v)).unwrap(), &labels, &cfg).unwrap();
            let moved = classify_rows(&model, &Dataset::new(shift_rows(&(&test * &a), &v)).unwrap()).unwrap();
            assert_eq!(moved, base);
        }
    }
}

fn calib_data(seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = gaussian(60, 2, seed) * 3.0;
    let load = DMatrix::from_row_slice(2, 5, &[1.0, 0.5, 0.0, -0.5, 1.0, 0.0, 1.0, 1.0, 0.5, -1.0]);
    let mut x = &t * load + gaussian(60, 5, seed + 1) * 0.1;
    let mut y = DMatrix::from_fn(60, 1, |i, _| t[(i, 0)] - 2.0 * t[(i, 1)]) + gaussian(60, 1, seed + 2) * 0.2;
    for i in 0..6 {
        x[(i, 2)] += 10.0;
        y[(i, 0)] += 20.0;
    }
    (x, y)
}

#[test]
fn rpcr_predictions_survive_orthogonal_transforms() {
    let (x, y) = calib_data(7);
    let cfg = CalibConfig::default().with_seed(4).with_nstarts(100);
    let yd = Dataset::new(y).unwrap();
    let base = rpcr(&Dataset::new(x.clone()).unwrap(), &yd, 2, &cfg).unwrap();
    let pred = base.predict(&x);
    for t in 0..TRANSFORMS {
        let mut r = rng(600 + t);
        let a = random_orthogonal(5, &mut r);
        let v = gaussian_vec(5, &mut r) * 5.0;
        let moved = shift_rows(&(&x * a.transpose()), &v);
        let model = rpcr(&Dataset::new(moved.clone()).unwrap(), &yd, 2, &cfg).unwrap();
        assert!(rel_err(&model.predict(&moved), &pred) < TOL);
    }
}

#[test]
fn rsimpls_follows_translations_and_sign_flips_of_y() {
    let (x, y) = calib_data(8);
    let cfg = CalibConfig::default().with_seed(4).with_nstarts(100);
    let xd = Dataset::new(x.clone()).unwrap();
    let base = rsimpls(&xd, &Dataset::new(y.clone()).unwrap(), 2, &cfg).unwrap();
    for t in 0..TRANSFORMS {
        let mut r = rng(700 + t);
        let sign = if t % 2 == 0 { -1.0 } else { 1.0 };
        let w = 10.0 * normal(&mut r);
        let moved = y.map(|v| sign * v + w);
        let fit = rsimpls(&xd, &Dataset::new(moved).unwrap(), 2, &cfg).unwrap();
        assert!(rel_err(&fit.coefficients, &(&base.coefficients * sign)) < TOL);
        assert!((fit.intercept[0] - (sign * base.intercept[0] + w)).abs() < TOL * (1.0 + w.abs()));
    }
}
