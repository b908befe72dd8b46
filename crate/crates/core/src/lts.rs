//! FAST-LTS least trimmed squares regression, the LTS scale, one-step
//! reweighted least squares and the regression outlier map.
//!
//! The design matrix is `u_i = (x_i', 1)'` unless the intercept is switched
//! off, so `theta` holds the slopes followed by the intercept.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{check_h, default_h, Dataset, EstimateKind, HSubset, WeightVector, DEFAULT_ALPHA};
use crate::diagnostics::{MapKind, OutlierMapTable};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, smallest_indices, trimmed_sum, with_intercept};
use crate::mcd::{draw_elemental, start_rng, McdResult};
use crate::unirobust::{chi2_cutoff, trimmed_variance_factor};

const MAX_REFINE_STEPS: usize = 1000;

/// Residuals below this multiple of the fitted subset's response magnitude
/// count as zero.
const EXACT_FIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LtsConfig {
    pub alpha: f64,
    pub h: Option<usize>,
    pub nstarts: usize,
    pub n_refine: usize,
    pub cutoff_prob: f64,
    pub seed: u64,
    pub intercept: bool,
}

impl Default for LtsConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            h: None,
            nstarts: 500,
            n_refine: 10,
            cutoff_prob: 0.975,
            seed: 0,
            intercept: true,
        }
    }
}

impl LtsConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_h(mut self, h: usize) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_nstarts(mut self, nstarts: usize) -> Self {
        self.nstarts = nstarts;
        self
    }

    pub fn without_intercept(mut self) -> Self {
        self.intercept = false;
        self
    }

    /// Subset size for `n` rows and `d` coefficients.
    pub fn resolve_h(&self, n: usize, d: usize) -> Result<usize> {
        match self.h {
            Some(h) => {
                if n <= d {
                    return Err(Error::TooFewRows { n, p: d });
                }
                check_h(h, n, d)
            }
            None => default_h(n, d, self.alpha),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nstarts == 0 || self.n_refine == 0 {
            return Err(Error::InvalidParameter(
                "nstarts and n_refine must be at least 1".into(),
            ));
        }
        if !(self.cutoff_prob > 0.0 && self.cutoff_prob < 1.0) {
            return Err(Error::BadProb(self.cutoff_prob));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtsFit {
    /// Slopes, then the intercept when one is fitted.
    pub theta: DVector<f64>,
    pub has_intercept: bool,
    pub sigma: f64,
    /// Sum of the `h` smallest squared residuals at `theta`.
    pub objective: f64,
    pub h: usize,
    pub best_subset: HSubset,
    pub weights: WeightVector,
    pub residuals: Vec<f64>,
    /// `residuals / sigma`; under an exact fit, zero on the hyperplane and
    /// signed infinity off it.
    pub std_residuals: Vec<f64>,
    pub kind: EstimateKind,
    pub exact_fit: bool,
}

impl LtsFit {
    pub fn slope(&self) -> DVector<f64> {
        let p = self.theta.len() - usize::from(self.has_intercept);
        self.theta.rows(0, p).into_owned()
    }

    pub fn intercept(&self) -> f64 {
        if self.has_intercept {
            self.theta[self.theta.len() - 1]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct LtsResult {
    pub raw: LtsFit,
    pub reweighted: LtsFit,
}

/// LTS scale: `sqrt(c) * sqrt(sum of the h smallest squared residuals / h)`
/// with `c` the trimmed-variance consistency factor at `alpha = h / n`.
pub fn lts_scale(residuals: &[f64], h: usize) -> Result<f64> {
    let n = residuals.len();
    if h == 0 || h > n {
        return Err(Error::SubsetTooSmall { h, n, min: 1 });
    }
    let sq: Vec<f64> = residuals.iter().map(|r| r * r).collect();
    let factor = trimmed_variance_factor(h as f64 / n as f64, 1);
    Ok((factor * trimmed_sum(&sq, h) / h as f64).sqrt())
}

pub fn design_matrix(x: &Dataset, intercept: bool) -> DMatrix<f64> {
    if intercept {
        with_intercept(x.values())
    } else {
        x.values().clone()
    }
}

/// Least-squares coefficients on the listed rows; `None` if rank deficient.
pub(crate) fn ls_on_rows(u: &DMatrix<f64>, y: &DVector<f64>, rows: &[usize]) -> Option<DVector<f64>> {
    let a = DMatrix::from_fn(rows.len(), u.ncols(), |i, j| u[(rows[i], j)]);
    let b = DMatrix::from_fn(rows.len(), 1, |i, _| y[rows[i]]);
    lstsq(&a, &b).map(|m| m.column(0).into_owned())
}

pub(crate) fn residuals(u: &DMatrix<f64>, y: &DVector<f64>, theta: &DVector<f64>) -> DVector<f64> {
    y - u * theta
}

#[derive(Debug, Clone)]
struct Candidate {
    subset: Vec<usize>,
    theta: DVector<f64>,
    objective: f64,
    /// Absolute residual below which the fit counts as exact.
    tol: f64,
}

impl Candidate {
    fn from_subset(u: &DMatrix<f64>, y: &DVector<f64>, subset: Vec<usize>, h: usize) -> Option<Self> {
        let theta = ls_on_rows(u, y, &subset)?;
        let r = residuals(u, y, &theta);
        let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
        let objective = trimmed_sum(&sq, h);
        let scale = subset.iter().map(|&i| y[i].abs()).fold(0.0, f64::max);
        Some(Self {
            subset,
            theta,
            objective,
            tol: EXACT_FIT_TOL * scale.max(f64::MIN_POSITIVE),
        })
    }

    fn is_exact(&self, h: usize) -> bool {
        self.objective <= h as f64 * self.tol * self.tol
    }

    fn step(&self, u: &DMatrix<f64>, y: &DVector<f64>, h: usize) -> Option<Self> {
        let r = residuals(u, y, &self.theta);
        let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
        Candidate::from_subset(u, y, smallest_indices(&sq, h), h)
    }
}

fn iterate(u: &DMatrix<f64>, y: &DVector<f64>, mut cur: Candidate, h: usize, max_steps: usize) -> Candidate {
    for _ in 0..max_steps {
        if cur.is_exact(h) {
            return cur;
        }
        let Some(next) = cur.step(u, y, h) else {
            return cur;
        };
        if next.subset == cur.subset || next.objective >= cur.objective {
            return if next.objective < cur.objective { next } else { cur };
        }
        cur = next;
    }
    cur
}

/// Outcome of iterating LTS C-steps from a starting subset.
#[derive(Debug, Clone)]
pub struct LtsConcentration {
    pub subset: HSubset,
    pub theta: DVector<f64>,
    /// Objective at the start and after every C-step taken.
    pub objectives: Vec<f64>,
    pub converged: bool,
}

/// Iterates LTS C-steps from the least squares fit on `start` until the
/// objective stops decreasing or the fit is exact.
pub fn concentrate(x: &Dataset, y: &[f64], start: &HSubset, intercept: bool, max_steps: usize) -> Result<LtsConcentration> {
    let yv = check_inputs(x, y)?;
    let u = design_matrix(x, intercept);
    let h = start.len();
    if h < u.ncols() || h > x.n() {
        return Err(Error::SubsetTooSmall {
            h,
            n: x.n(),
            min: u.ncols(),
        });
    }
    let mut cur = Candidate::from_subset(&u, &yv, start.indices().to_vec(), h).ok_or(Error::RankDeficient)?;
    let mut objectives = vec![cur.objective];
    let mut converged = false;
    for _ in 0..max_steps {
        if cur.is_exact(h) {
            converged = true;
            break;
        }
        let Some(next) = cur.step(&u, &yv, h) else {
            converged = true;
            break;
        };
        objectives.push(next.objective);
        let stop = next.subset == cur.subset || next.objective >= cur.objective;
        if next.objective < cur.objective {
            cur = next;
        }
        if stop {
            converged = true;
            break;
        }
    }
    Ok(LtsConcentration {
        subset: HSubset::new(cur.subset),
        theta: cur.theta,
        objectives,
        converged,
    })
}

fn initial_candidate(u: &DMatrix<f64>, y: &DVector<f64>, h: usize, start: usize, seed: u64) -> Option<Candidate> {
    let (n, d) = u.shape();
    let mut rng = start_rng(seed, start);
    let chosen = draw_elemental(&mut rng, n, d - 1, |rows| ls_on_rows(u, y, rows).is_none())?;
    let theta0 = ls_on_rows(u, y, &chosen)?;
    let r = residuals(u, y, &theta0);
    let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
    Candidate::from_subset(u, y, smallest_indices(&sq, h), h)
}

fn search(u: &DMatrix<f64>, y: &DVector<f64>, h: usize, cfg: &LtsConfig) -> Result<Candidate> {
    let mut screened: Vec<(usize, Candidate)> = Vec::with_capacity(cfg.nstarts);
    for s in 0..cfg.nstarts {
        let Some(mut cand) = initial_candidate(u, y, h, s, cfg.seed) else {
            continue;
        };
        for _ in 0..2 {
            if cand.is_exact(h) {
                break;
            }
            match cand.step(u, y, h) {
                Some(next) if next.objective <= cand.objective => cand = next,
                _ => break,
            }
        }
        if cand.is_exact(h) {
            return Ok(cand);
        }
        screened.push((s, cand));
    }
    if screened.is_empty() {
        return Err(Error::RankDeficient);
    }
    screened.sort_by(|a, b| a.1.objective.total_cmp(&b.1.objective).then(a.0.cmp(&b.0)));

    let mut seen = HashSet::new();
    let mut best: Option<Candidate> = None;
    for (_, cand) in screened {
        if seen.len() == cfg.n_refine {
            break;
        }
        if !seen.insert(cand.subset.clone()) {
            continue;
        }
        let refined = iterate(u, y, cand, h, MAX_REFINE_STEPS);
        if refined.is_exact(h) {
            return Ok(refined);
        }
        if best.as_ref().is_none_or(|b| refined.objective < b.objective) {
            best = Some(refined);
        }
    }
    Ok(best.expect("at least one candidate"))
}

fn check_inputs(x: &Dataset, y: &[f64]) -> Result<DVector<f64>> {
    if y.len() != x.n() {
        return Err(Error::LengthMismatch {
            left: x.n(),
            right: y.len(),
        });
    }
    if let Some(j) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: j, col: x.p() });
    }
    Ok(DVector::from_column_slice(y))
}

/// FAST-LTS with one-step reweighting.
pub fn fast_lts(x: &Dataset, y: &[f64], cfg: &LtsConfig) -> Result<LtsResult> {
    cfg.validate()?;
    let yv = check_inputs(x, y)?;
    let u = design_matrix(x, cfg.intercept);
    let (n, d) = u.shape();
    let h = cfg.resolve_h(n, d)?;
    let all: Vec<usize> = (0..n).collect();
    if ls_on_rows(&u, &yv, &all).is_none() {
        return Err(Error::RankDeficient);
    }

    let best = if h == n {
        Candidate::from_subset(&u, &yv, all, h).ok_or(Error::RankDeficient)?
    } else {
        search(&u, &yv, h, cfg)?
    };

    if best.is_exact(h) {
        return Ok(exact_fit_result(&u, &yv, &best, h, cfg.intercept));
    }

    let r = residuals(&u, &yv, &best.theta);
    let r: Vec<f64> = r.iter().copied().collect();
    let sigma = lts_scale(&r, h)?;
    let raw = LtsFit {
        theta: best.theta.clone(),
        has_intercept: cfg.intercept,
        sigma,
        objective: best.objective,
        h,
        best_subset: HSubset::new(best.subset.clone()),
        weights: WeightVector::ones(n),
        std_residuals: r.iter().map(|v| v / sigma).collect(),
        residuals: r,
        kind: EstimateKind::Raw,
        exact_fit: false,
    };
    let reweighted = reweight_lts(x, y, &raw, cfg.cutoff_prob)?;
    let raw = LtsFit {
        weights: reweighted.weights.clone(),
        ..raw
    };
    Ok(LtsResult { raw, reweighted })
}

fn exact_fit_result(u: &DMatrix<f64>, y: &DVector<f64>, best: &Candidate, h: usize, intercept: bool) -> LtsResult {
    let r = residuals(u, y, &best.theta);
    let on_plane: Vec<bool> = r.iter().map(|v| v.abs() <= best.tol).collect();
    let std_residuals: Vec<f64> = r
        .iter()
        .zip(&on_plane)
        .map(|(&v, &on)| if on { 0.0 } else { f64::INFINITY.copysign(v) })
        .collect();
    let raw = LtsFit {
        theta: best.theta.clone(),
        has_intercept: intercept,
        sigma: 0.0,
        objective: best.objective,
        h,
        best_subset: HSubset::new(best.subset.clone()),
        weights: WeightVector::new(on_plane.clone()),
        residuals: r.iter().copied().collect(),
        std_residuals,
        kind: EstimateKind::Raw,
        exact_fit: true,
    };
    let weights = WeightVector::new(on_plane);
    let reweighted = match ls_on_rows(u, y, &weights.selected()) {
        Some(theta) => {
            let r = residuals(u, y, &theta);
            let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
            LtsFit {
                objective: trimmed_sum(&sq, h),
                theta,
                residuals: r.iter().copied().collect(),
                kind: EstimateKind::Reweighted,
                ..raw.clone()
            }
        }
        None => LtsFit {
            kind: EstimateKind::Reweighted,
            ..raw.clone()
        },
    };
    LtsResult { raw, reweighted }
}

/// One-step reweighted least squares: rows with `|r_i / sigma| <=
/// sqrt(chi2_1(cutoff_prob))` are refitted by ordinary least squares and the
/// scale is recomputed from them.
pub fn reweight_lts(x: &Dataset, y: &[f64], raw: &LtsFit, cutoff_prob: f64) -> Result<LtsFit> {
    let yv = check_inputs(x, y)?;
    if !(raw.sigma > 0.0) {
        return Err(Error::InvalidParameter("raw scale must be positive".into()));
    }
    let u = design_matrix(x, raw.has_intercept);
    let (n, d) = u.shape();
    if raw.theta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: raw.theta.len(),
        });
    }
    let cutoff = chi2_cutoff(1, cutoff_prob)?;
    let r0 = residuals(&u, &yv, &raw.theta);
    let weights = WeightVector::new(r0.iter().map(|v| (v / raw.sigma).abs() <= cutoff).collect());
    let count = weights.count();
    if count <= d {
        return Err(Error::TooFewInliers { count, dim: d });
    }
    let theta = ls_on_rows(&u, &yv, &weights.selected()).ok_or(Error::RankDeficient)?;
    let r = residuals(&u, &yv, &theta);
    let weighted_ss: f64 = weights.selected().iter().map(|&i| r[i] * r[i]).sum();
    let factor = trimmed_variance_factor(count as f64 / n as f64, 1);
    let sigma = (factor * weighted_ss / count as f64).sqrt();
    let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
    let residuals: Vec<f64> = r.iter().copied().collect();
    Ok(LtsFit {
        theta,
        has_intercept: raw.has_intercept,
        sigma,
        objective: trimmed_sum(&sq, raw.h),
        h: raw.h,
        best_subset: raw.best_subset.clone(),
        weights,
        std_residuals: residuals.iter().map(|v| v / sigma).collect(),
        residuals,
        kind: EstimateKind::Reweighted,
        exact_fit: false,
    })
}

/// Standardized residuals of `fit` against the robust distances of the
/// predictors in `mcd`.
pub fn regression_outlier_map(fit: &LtsFit, mcd: &McdResult, cutoff_prob: f64) -> Result<OutlierMapTable> {
    let p = mcd.reweighted.dim();
    OutlierMapTable::new(
        MapKind::Regression,
        mcd.robust_distances.clone(),
        fit.std_residuals.clone(),
        chi2_cutoff(p, cutoff_prob)?,
        chi2_cutoff(1, cutoff_prob)?,
        cutoff_prob,
    )
}
