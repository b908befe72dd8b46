//! Univariate robust estimators and the chi-square / normal utilities behind
//! every cutoff in the crate.

use statrs::function::{erf, gamma};

use crate::error::{Error, Result};

/// `1 / Phi^{-1}(0.75)`: makes the MAD consistent for the normal standard
/// deviation.
pub const MAD_CONSTANT: f64 = 1.482_602_218_505_602;

/// A robust location/scale pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniEstimate {
    pub location: f64,
    pub scale: f64,
}

fn sorted_copy(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn median(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(median_sorted(&sorted_copy(v)))
}

/// Median absolute deviation, scaled by [`MAD_CONSTANT`].
pub fn mad(v: &[f64]) -> Result<f64> {
    let m = median(v)?;
    let dev: Vec<f64> = v.iter().map(|x| (x - m).abs()).collect();
    Ok(MAD_CONSTANT * median(&dev)?)
}

/// The contiguous window of a sorted sample picked by the univariate MCD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McdWindow {
    /// First position of the window in sorted order.
    pub start: usize,
    pub mean: f64,
    /// Sample variance of the window (divisor `h - 1`).
    pub variance: f64,
}

/// Scans the `n - h + 1` contiguous windows of `sorted` for the one with the
/// smallest variance. Ties keep the lowest start.
pub fn best_window(sorted: &[f64], h: usize) -> McdWindow {
    let n = sorted.len();
    let shift = median_sorted(sorted);
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, &x) in sorted.iter().enumerate() {
        let c = x - shift;
        s1[i + 1] = s1[i] + c;
        s2[i + 1] = s2[i] + c * c;
    }
    let hf = h as f64;
    let mut best = McdWindow {
        start: 0,
        mean: 0.0,
        variance: f64::INFINITY,
    };
    for start in 0..=(n - h) {
        let sum = s1[start + h] - s1[start];
        let mean = sum / hf;
        let ss = (s2[start + h] - s2[start] - sum * mean).max(0.0);
        let variance = ss / (hf - 1.0);
        if variance < best.variance {
            best = McdWindow {
                start,
                mean: mean + shift,
                variance,
            };
        }
    }
    // recompute the winner directly to shed prefix-sum rounding
    let w = &sorted[best.start..best.start + h];
    let mean = w.iter().sum::<f64>() / hf;
    let variance = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (hf - 1.0);
    McdWindow {
        start: best.start,
        mean,
        variance,
    }
}

/// Univariate MCD: mean and consistency-corrected standard deviation of the
/// `h` contiguous sorted values with the smallest variance.
pub fn univariate_mcd(v: &[f64], h: usize) -> Result<UniEstimate> {
    let n = v.len();
    if h < 2 || h > n {
        return Err(Error::SubsetTooSmall { h, n, min: 2 });
    }
    let sorted = sorted_copy(v);
    let w = best_window(&sorted, h);
    let factor = trimmed_variance_factor(h as f64 / n as f64, 1);
    Ok(UniEstimate {
        location: w.mean,
        scale: (factor * w.variance).sqrt(),
    })
}

/// Variance inflation that makes a trimmed covariance consistent at the
/// normal model: `alpha / F_{dim+2}(chi2_{dim}(alpha))`. Equals 1 at `alpha = 1`.
pub fn trimmed_variance_factor(alpha: f64, dim: usize) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let q = chi2_quantile(dim, alpha).expect("alpha in (0, 1)");
    alpha / chi2_cdf(dim + 2, q)
}

/// `P(chi2_df <= x)`.
pub fn chi2_cdf(df: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if df == 2 {
        return -(-0.5 * x).exp_m1();
    }
    gamma::gamma_lr(df as f64 / 2.0, x / 2.0)
}

fn chi2_pdf(df: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = df as f64 / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - gamma::ln_gamma(k)).exp()
}

/// Quantile of the chi-square distribution: safeguarded Newton iteration on
/// [`chi2_cdf`], started from the Wilson-Hilferty approximation.
pub fn chi2_quantile(df: usize, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::BadProb(prob));
    }
    if df == 0 {
        return Err(Error::InvalidParameter("df must be positive".into()));
    }
    let k = df as f64;
    if df == 2 {
        return Ok(-2.0 * (-prob).ln_1p());
    }
    let z = normal_quantile(prob)?;
    let a = 2.0 / (9.0 * k);
    let mut x = (k * (1.0 - a + z * a.sqrt()).powi(3)).max(1e-8);

    let (mut lo, mut hi) = (0.0_f64, x.max(1.0));
    while chi2_cdf(df, hi) < prob {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let f = chi2_cdf(df, x) - prob;
        if f < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let d = chi2_pdf(df, x);
        let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of the standard normal distribution function.
pub fn normal_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::BadProb(prob));
    }
    let mut x = -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * prob);
    // one Newton polish against the erfc-based distribution function
    let dens = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if dens > 1e-300 {
        x -= (normal_cdf(x) - prob) / dens;
    }
    Ok(x)
}

/// `sqrt(chi2_quantile(df, prob))`, the usual distance cutoff.
pub fn chi2_cutoff(df: usize, prob: f64) -> Result<f64> {
    chi2_quantile(df, prob).map(f64::sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median(&[7.5; 3]).unwrap(), 7.5);
        assert_eq!(median(&[]).unwrap_err(), Error::EmptyVector);
    }

    #[test]
    fn mad_examples() {
        let m = mad(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((m - MAD_CONSTANT).abs() < 1e-15);
        assert_eq!(mad(&[2.0; 3]).unwrap(), 0.0);
        assert_eq!(mad(&[0.0, 0.0, 0.0, 1000.0]).unwrap(), 0.0);
        assert_eq!(mad(&[]).unwrap_err(), Error::EmptyVector);
    }

    #[test]
    fn mad_constant_matches_quantile() {
        let q = normal_quantile(0.75).unwrap();
        assert!((1.0 / q - MAD_CONSTANT).abs() < 1e-12);
    }

    #[test]
    fn univariate_mcd_excludes_far_point() {
        let sorted = [0.0, 1.0, 2.0, 100.0];
        let w = best_window(&sorted, 3);
        assert_eq!(w.start, 0);
        assert!((w.mean - 1.0).abs() < 1e-15);
        assert!((w.variance.sqrt() - 1.0).abs() < 1e-15);
        let est = univariate_mcd(&[100.0, 2.0, 0.0, 1.0], 3).unwrap();
        assert!((est.location - 1.0).abs() < 1e-15);
    }

    #[test]
    fn univariate_mcd_full_window_is_classical() {
        let v = [1.0, 4.0, 2.0, 8.0, 5.0];
        let est = univariate_mcd(&v, 5).unwrap();
        let mean = v.iter().sum::<f64>() / 5.0;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!((est.location - mean).abs() < 1e-14);
        assert!((est.scale - sd).abs() < 1e-14);
    }

    #[test]
    fn univariate_mcd_rejects_small_h() {
        assert!(matches!(
            univariate_mcd(&[1.0, 2.0], 1),
            Err(Error::SubsetTooSmall { .. })
        ));
        assert!(univariate_mcd(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn chi2_cdf_closed_forms() {
        assert_eq!(chi2_cdf(5, 0.0), 0.0);
        for &x in &[0.1, 1.0, 3.7, 12.0] {
            assert!((chi2_cdf(2, x) - (1.0 - (-x / 2.0).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn chi2_quantile_reproduces_cutoffs() {
        assert!((chi2_quantile(9, 0.975).unwrap() - 19.0228).abs() < 1e-4);
        assert!((chi2_quantile(3, 0.975).unwrap() - 9.3484).abs() < 1e-4);
        assert!((chi2_quantile(4, 0.975).unwrap() - 11.1433).abs() < 1e-4);
        assert!((chi2_cdf(9, chi2_quantile(9, 0.975).unwrap()) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn bad_probabilities_are_rejected() {
        assert_eq!(chi2_quantile(3, 1.0).unwrap_err(), Error::BadProb(1.0));
        assert_eq!(normal_quantile(0.0).unwrap_err(), Error::BadProb(0.0));
    }

    #[test]
    fn trimmed_factor_is_one_without_trimming() {
        assert_eq!(trimmed_variance_factor(1.0, 3), 1.0);
        let f = trimmed_variance_factor(0.999_999, 3);
        assert!((f - 1.0).abs() < 1e-3);
        assert!(trimmed_variance_factor(0.75, 2) > 1.0);
    }
}
