//! FAST-MCD: minimum covariance determinant location and scatter, its
//! one-step reweighting, and Mahalanobis / robust distances.
//!
//! The search draws `nstarts` random `(p+1)`-subsets, turns each into an
//! `h`-subset, applies two C-steps, and then iterates the `n_refine` best
//! distinct candidates until the determinant stops decreasing. Every random
//! draw of start `s` comes from a ChaCha8 stream `s` keyed by the seed, so a
//! run is reproducible and independent of evaluation order.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{check_h, default_h, Dataset, EstimateKind, HSubset, LocationScatter, WeightVector, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::linalg::{self, mean_cov, smallest_indices, SortedEigen, Whitener};
use crate::unirobust::{chi2_cutoff, trimmed_variance_factor};

/// Upper bound on C-steps while refining one candidate.
const MAX_REFINE_STEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct McdConfig {
    /// Trimming fraction used when `h` is not given.
    pub alpha: f64,
    /// Explicit subset size; overrides `alpha`.
    pub h: Option<usize>,
    pub nstarts: usize,
    pub n_refine: usize,
    pub cutoff_prob: f64,
    pub seed: u64,
}

impl Default for McdConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            h: None,
            nstarts: 500,
            n_refine: 10,
            cutoff_prob: 0.975,
            seed: 0,
        }
    }
}

impl McdConfig {
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

    /// Subset size for an `n x p` problem.
    pub fn resolve_h(&self, n: usize, p: usize) -> Result<usize> {
        match self.h {
            Some(h) => {
                if n <= p {
                    return Err(Error::TooFewRows { n, p });
                }
                check_h(h, n, p)
            }
            None => default_h(n, p, self.alpha),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
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

#[derive(Debug, Clone)]
pub struct McdResult {
    pub raw: LocationScatter,
    pub reweighted: LocationScatter,
    pub best_subset: HSubset,
    pub weights: WeightVector,
    /// Distances at the reweighted estimates.
    pub robust_distances: Vec<f64>,
    /// The optimal `h`-subset lies on a hyperplane; the scatter estimates are
    /// singular and off-hyperplane rows carry an infinite distance.
    pub exact_fit: bool,
}

/// Consistency factor for a covariance trimmed to `h` of `n` points in `p`
/// dimensions: `alpha / F_{p+2}(chi2_p(alpha))` with `alpha = h / n`.
pub fn consistency_factor(h: usize, n: usize, p: usize) -> f64 {
    trimmed_variance_factor(h as f64 / n as f64, p)
}

/// Finite-sample multiplier applied on top of [`consistency_factor`].
/// Currently the identity; small-sample bias is left uncorrected.
pub fn finite_sample_correction(_h: usize, _n: usize, _p: usize) -> f64 {
    1.0
}

/// Classical mean and covariance (divisor `n`) of the whole dataset.
pub fn classical_estimate(data: &Dataset) -> LocationScatter {
    let (mean, cov) = linalg::full_mean_cov(data.values());
    LocationScatter::new(mean, cov, data.n(), EstimateKind::Raw, 1.0)
}

pub fn mahalanobis_distances(data: &Dataset, est: &LocationScatter) -> Result<Vec<f64>> {
    if est.dim() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            found: est.dim(),
        });
    }
    let w = Whitener::new(&est.scatter)?;
    Ok(w.distances(data.values(), &est.location))
}

/// Mean/covariance of an `h`-subset together with its log-determinant.
#[derive(Debug, Clone)]
struct Candidate {
    subset: Vec<usize>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    /// `None` when the covariance is singular (an exact fit).
    whitener: Option<Whitener>,
}

impl Candidate {
    fn from_subset(x: &DMatrix<f64>, subset: Vec<usize>) -> Self {
        let (mean, cov) = mean_cov(x, &subset);
        let whitener = Whitener::new(&cov).ok();
        Self {
            subset,
            mean,
            cov,
            whitener,
        }
    }

    fn log_det(&self) -> f64 {
        self.whitener
            .as_ref()
            .map_or(f64::NEG_INFINITY, |w| w.log_det)
    }

    /// One C-step; `None` when the current covariance is singular.
    fn step(&self, x: &DMatrix<f64>, h: usize) -> Option<Candidate> {
        let w = self.whitener.as_ref()?;
        let d = w.sq_distances(x, &self.mean);
        Some(Candidate::from_subset(x, smallest_indices(&d, h)))
    }

    fn to_estimate(&self, h: usize) -> LocationScatter {
        let det = self.whitener.as_ref().map_or(0.0, |w| w.log_det.exp());
        LocationScatter {
            location: self.mean.clone(),
            scatter: self.cov.clone(),
            det,
            h,
            kind: EstimateKind::Raw,
            consistency: 1.0,
        }
    }
}

/// One concentration step: the `h` rows nearest under `est` (ties to the
/// lower row index) and their mean and covariance (divisor `h`).
pub fn c_step(data: &Dataset, est: &LocationScatter, h: usize) -> Result<(HSubset, LocationScatter)> {
    check_h(h, data.n(), data.p())?;
    let d = Whitener::new(&est.scatter)?.sq_distances(data.values(), &est.location);
    let cand = Candidate::from_subset(data.values(), smallest_indices(&d, h));
    let est = cand.to_estimate(h);
    Ok((HSubset::new(cand.subset), est))
}

/// Outcome of iterating C-steps from a starting subset.
#[derive(Debug, Clone)]
pub struct Concentration {
    pub subset: HSubset,
    pub estimate: LocationScatter,
    /// Determinant after the start and after every C-step taken.
    pub dets: Vec<f64>,
    pub steps: usize,
    /// Stopped because the subset repeated or the determinant stopped
    /// decreasing, rather than hitting `max_steps`.
    pub converged: bool,
}

/// Iterates C-steps from `start` until the determinant reaches zero or stops
/// decreasing.
pub fn concentrate(data: &Dataset, start: &HSubset, h: usize, max_steps: usize) -> Result<Concentration> {
    check_h(h, data.n(), data.p())?;
    if start.len() != h {
        return Err(Error::DimensionMismatch {
            expected: h,
            found: start.len(),
        });
    }
    let x = data.values();
    let cur = Candidate::from_subset(x, start.indices().to_vec());
    let mut dets = vec![cur.log_det().exp()];
    let (cur, steps, converged) = iterate(x, cur, h, max_steps, &mut |c| dets.push(c.log_det().exp()));
    Ok(Concentration {
        subset: HSubset::new(cur.subset.clone()),
        estimate: cur.to_estimate(h),
        dets,
        steps,
        converged,
    })
}

/// Runs C-steps until convergence. Returns the final candidate, the number of
/// steps taken, and whether it converged before `max_steps`.
fn iterate(
    x: &DMatrix<f64>,
    mut cur: Candidate,
    h: usize,
    max_steps: usize,
    observe: &mut dyn FnMut(&Candidate),
) -> (Candidate, usize, bool) {
    for step in 0..max_steps {
        let Some(next) = cur.step(x, h) else {
            return (cur, step, true);
        };
        observe(&next);
        if next.subset == cur.subset || next.log_det() >= cur.log_det() {
            let keep = if next.log_det() < cur.log_det() { next } else { cur };
            return (keep, step + 1, true);
        }
        cur = next;
    }
    (cur, max_steps, false)
}

/// The random part of one FAST-MCD start.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSubset {
    pub start: usize,
    /// The drawn `(p+1)`-subset, extended until its covariance is nonsingular.
    pub defining: Vec<usize>,
    /// The `h` rows nearest to the defining subset's estimate.
    pub h_subset: HSubset,
}

pub(crate) fn start_rng(seed: u64, start: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    rng
}

/// Draws a random `(dim+1)`-subset and extends it with random rows while
/// `is_degenerate` holds.
pub(crate) fn draw_elemental<F>(rng: &mut ChaCha8Rng, n: usize, dim: usize, mut is_degenerate: F) -> Option<Vec<usize>>
where
    F: FnMut(&[usize]) -> bool,
{
    let mut chosen = index::sample(rng, n, (dim + 1).min(n)).into_vec();
    while is_degenerate(&chosen) {
        if chosen.len() == n {
            return None;
        }
        let in_set: HashSet<usize> = chosen.iter().copied().collect();
        let rest: Vec<usize> = (0..n).filter(|i| !in_set.contains(i)).collect();
        chosen.push(rest[rng.random_range(0..rest.len())]);
    }
    Some(chosen)
}

fn initial_candidate(x: &DMatrix<f64>, h: usize, start: usize, seed: u64) -> Option<(Vec<usize>, Candidate)> {
    let (n, p) = x.shape();
    let mut rng = start_rng(seed, start);
    let mut elemental: Option<Candidate> = None;
    let chosen = draw_elemental(&mut rng, n, p, |rows| {
        let c = Candidate::from_subset(x, rows.to_vec());
        let degenerate = c.whitener.is_none();
        elemental = Some(c);
        degenerate
    })?;
    let base = elemental?;
    let d = base.whitener.as_ref()?.sq_distances(x, &base.mean);
    Some((chosen, Candidate::from_subset(x, smallest_indices(&d, h))))
}

/// The starting subsets FAST-MCD would use for `(h, nstarts, seed)`.
pub fn initial_subsets(data: &Dataset, h: usize, nstarts: usize, seed: u64) -> Result<Vec<InitialSubset>> {
    check_h(h, data.n(), data.p())?;
    ensure_nondegenerate(data)?;
    let x = data.values();
    (0..nstarts)
        .map(|s| {
            let (defining, cand) = initial_candidate(x, h, s, seed)
                .ok_or_else(|| Error::DegenerateData("no nonsingular start".into()))?;
            Ok(InitialSubset {
                start: s,
                defining,
                h_subset: HSubset::new(cand.subset),
            })
        })
        .collect()
}

fn ensure_nondegenerate(data: &Dataset) -> Result<()> {
    let (_, cov) = linalg::full_mean_cov(data.values());
    Whitener::new(&cov)
        .map(|_| ())
        .map_err(|_| Error::DegenerateData("covariance of the full dataset is singular".into()))
}

/// FAST-MCD with one-step reweighting.
pub fn fast_mcd(data: &Dataset, cfg: &McdConfig) -> Result<McdResult> {
    cfg.validate()?;
    let (n, p) = (data.n(), data.p());
    let h = cfg.resolve_h(n, p)?;
    ensure_nondegenerate(data)?;
    let x = data.values();

    let best = if h == n {
        Candidate::from_subset(x, (0..n).collect())
    } else {
        search(x, h, cfg)?
    };

    if best.whitener.is_none() {
        return exact_fit_result(data, &best, h);
    }

    let factor = consistency_factor(h, n, p) * finite_sample_correction(h, n, p);
    let raw = LocationScatter::new(
        best.mean.clone(),
        &best.cov * factor,
        h,
        EstimateKind::Raw,
        factor,
    );
    let (reweighted, weights) = reweight_mcd(data, &raw, cfg.cutoff_prob)?;
    let robust_distances = mahalanobis_distances(data, &reweighted)?;
    Ok(McdResult {
        raw,
        reweighted,
        best_subset: HSubset::new(best.subset),
        weights,
        robust_distances,
        exact_fit: false,
    })
}

fn search(x: &DMatrix<f64>, h: usize, cfg: &McdConfig) -> Result<Candidate> {
    let mut screened: Vec<(usize, Candidate)> = Vec::with_capacity(cfg.nstarts);
    for s in 0..cfg.nstarts {
        let Some((_, mut cand)) = initial_candidate(x, h, s, cfg.seed) else {
            continue;
        };
        for _ in 0..2 {
            match cand.step(x, h) {
                Some(next) => cand = next,
                None => break,
            }
        }
        if cand.whitener.is_none() {
            // determinant zero: nothing can beat it
            return Ok(cand);
        }
        screened.push((s, cand));
    }
    if screened.is_empty() {
        return Err(Error::DegenerateData("no nonsingular start".into()));
    }
    screened.sort_by(|a, b| a.1.log_det().total_cmp(&b.1.log_det()).then(a.0.cmp(&b.0)));

    let mut seen = HashSet::new();
    let mut best: Option<Candidate> = None;
    for (_, cand) in screened {
        if seen.len() == cfg.n_refine {
            break;
        }
        if !seen.insert(cand.subset.clone()) {
            continue;
        }
        let (refined, _, _) = iterate(x, cand, h, MAX_REFINE_STEPS, &mut |_| {});
        if refined.whitener.is_none() {
            return Ok(refined);
        }
        if best.as_ref().is_none_or(|b| refined.log_det() < b.log_det()) {
            best = Some(refined);
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Builds the result when the optimal subset has a singular covariance: the
/// rows lying on the subset's hyperplane get weight one.
fn exact_fit_result(data: &Dataset, best: &Candidate, h: usize) -> Result<McdResult> {
    let x = data.values();
    let eig = SortedEigen::new(&best.cov);
    let top = eig.values[0].max(0.0);
    let normals: Vec<usize> = (0..eig.values.len())
        .filter(|&c| eig.values[c] <= top / linalg::MAX_CONDITION)
        .collect();
    let tol = 1e-8 * top.sqrt().max(f64::MIN_POSITIVE);
    let on_plane: Vec<bool> = (0..data.n())
        .map(|i| {
            let d = x.row(i).transpose() - &best.mean;
            normals
                .iter()
                .all(|&c| eig.vectors.column(c).dot(&d).abs() <= tol)
        })
        .collect();
    let weights = WeightVector::new(on_plane);
    let (mean, cov) = mean_cov(x, &weights.selected());
    let pinv = linalg::pinv_sym(&cov);
    let robust_distances = (0..data.n())
        .map(|i| {
            if weights.get(i) {
                let d = x.row(i).transpose() - &mean;
                (d.transpose() * &pinv * &d)[(0, 0)].max(0.0).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let raw = best.to_estimate(h);
    let count = weights.count();
    Ok(McdResult {
        raw,
        reweighted: LocationScatter {
            location: mean,
            scatter: cov,
            det: 0.0,
            h: count,
            kind: EstimateKind::Reweighted,
            consistency: 1.0,
        },
        best_subset: HSubset::new(best.subset.clone()),
        weights,
        robust_distances,
        exact_fit: true,
    })
}

/// One-step reweighting: rows within `sqrt(chi2_p(cutoff_prob))` of the raw
/// estimate keep weight one and are averaged classically.
pub fn reweight_mcd(data: &Dataset, raw: &LocationScatter, cutoff_prob: f64) -> Result<(LocationScatter, WeightVector)> {
    let (n, p) = (data.n(), data.p());
    let cutoff = chi2_cutoff(p, cutoff_prob)?;
    let d = mahalanobis_distances(data, raw)?;
    let weights = WeightVector::new(d.iter().map(|&v| v <= cutoff).collect());
    let count = weights.count();
    if count <= p {
        return Err(Error::TooFewInliers { count, dim: p });
    }
    let (mean, cov) = mean_cov(data.values(), &weights.selected());
    let factor = trimmed_variance_factor(count as f64 / n as f64, p) * finite_sample_correction(count, n, p);
    let est = LocationScatter::new(mean, cov * factor, count, EstimateKind::Reweighted, factor);
    Ok((est, weights))
}

/// Distances at the reweighted estimates of `result`.
pub fn robust_distances(data: &Dataset, result: &McdResult) -> Result<Vec<f64>> {
    mahalanobis_distances(data, &result.reweighted)
}
