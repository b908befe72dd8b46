//! ROBPCA: robust principal components from projection-pursuit outlyingness
//! followed by a reweighted MCD in the retained subspace, plus orthogonal and
//! score distances and the PCA outlier map.
//!
//! Steps: reduce the centred data to its affine span with an SVD; rank the
//! rows by outlyingness over directions through pairs of data points; take
//! the covariance of the `h` least outlying rows and project everything onto
//! its leading `k` eigenvectors; run FAST-MCD on those scores and use the
//! eigenstructure of its reweighted scatter as the final loadings.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dataset::{default_h, Dataset, WeightVector, DEFAULT_ALPHA};
use crate::diagnostics::{MapKind, OutlierMapTable};
use crate::error::{Error, Result};
use crate::linalg::{center_rows, col_means, mean_cov, smallest_indices, SortedEigen};
use crate::mcd::{fast_mcd, start_rng, McdConfig};
use crate::unirobust::{chi2_cutoff, mad, normal_quantile, univariate_mcd};

/// Projections whose robust scale falls below this are skipped.
const MIN_DIRECTION_SCALE: f64 = 1e-12;
/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RobpcaConfig {
    /// Number of components; `None` picks the smallest `k` explaining
    /// `variance_fraction` of the variance of the least outlying rows.
    pub k: Option<usize>,
    pub kmax: usize,
    pub variance_fraction: f64,
    pub alpha: f64,
    pub ndirs: usize,
    pub nstarts: usize,
    pub cutoff_prob: f64,
    pub seed: u64,
    /// Divide every column by its MAD before the analysis.
    pub robust_scale: bool,
}

impl Default for RobpcaConfig {
    fn default() -> Self {
        Self {
            k: None,
            kmax: 10,
            variance_fraction: 0.8,
            alpha: DEFAULT_ALPHA,
            ndirs: 250,
            nstarts: 500,
            cutoff_prob: 0.975,
            seed: 0,
            robust_scale: false,
        }
    }
}

impl RobpcaConfig {
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_nstarts(mut self, nstarts: usize) -> Self {
        self.nstarts = nstarts;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub center: DVector<f64>,
    /// `p x k`, orthonormal columns.
    pub loadings: DMatrix<f64>,
    /// Decreasing and positive.
    pub eigenvalues: DVector<f64>,
    pub k: usize,
    pub h: usize,
    pub od_cutoff: f64,
    /// The orthogonal distances had zero robust scale; `od_cutoff` fell back
    /// to the largest distance among the retained rows.
    pub od_degenerate: bool,
    pub sd_cutoff: f64,
    pub cutoff_prob: f64,
    /// Column scales divided out before the analysis.
    pub scale: Option<DVector<f64>>,
    /// Weights of the MCD in score space.
    pub weights: WeightVector,
}

impl PcaModel {
    pub fn p(&self) -> usize {
        self.center.len()
    }

    fn prepare(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.ncols() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: data.ncols(),
            });
        }
        let x = match &self.scale {
            Some(s) => DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| data[(i, j)] / s[j]),
            None => data.clone(),
        };
        Ok(center_rows(&x, &self.center))
    }
}

/// Maximal standardized deviation of every row over directions through pairs
/// of rows, each direction standardized by its univariate MCD (subset size
/// `h`). All pairs are used when there are no more than `ndirs` of them.
pub fn outlyingness(data: &DMatrix<f64>, ndirs: usize, seed: u64, h: usize) -> Result<Vec<f64>> {
    let n = data.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { n, p: 1 });
    }
    let pairs = direction_pairs(n, ndirs, seed);
    let mut out = vec![0.0_f64; n];
    let mut used = 0;
    for (i, j) in pairs {
        let dir = (data.row(i) - data.row(j)).transpose();
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        let proj: Vec<f64> = (data * (dir / norm)).iter().copied().collect();
        let est = univariate_mcd(&proj, h)?;
        if est.scale < MIN_DIRECTION_SCALE {
            continue;
        }
        used += 1;
        for (o, v) in out.iter_mut().zip(&proj) {
            *o = o.max((v - est.location).abs() / est.scale);
        }
    }
    if used == 0 {
        return Err(Error::AllDirectionsDegenerate);
    }
    Ok(out)
}

fn direction_pairs(n: usize, ndirs: usize, seed: u64) -> Vec<(usize, usize)> {
    let all = n * (n - 1) / 2;
    if all <= ndirs {
        return (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
    }
    let mut rng = start_rng(seed, 0);
    (0..ndirs)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect()
}

/// Outlier cutoff for orthogonal distances: the univariate MCD of
/// `od^(2/3)` with `h = floor(0.75 n)` gives `(m, s)` and the cutoff is
/// `(m + s z)^(3/2)` with `z` the normal quantile at `prob`.
pub fn od_cutoff(ods: &[f64], prob: f64) -> Result<(f64, bool)> {
    let n = ods.len();
    if n < 2 {
        return Err(Error::TooFewRows { n, p: 1 });
    }
    if ods.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidParameter("orthogonal distances must be nonnegative".into()));
    }
    let h = ((0.75 * n as f64) as usize).max(2);
    let u: Vec<f64> = ods.iter().map(|d| d.powf(2.0 / 3.0)).collect();
    let est = univariate_mcd(&u, h)?;
    // zero up to rounding of the window mean
    if est.scale <= 1e-12 * est.location.abs() {
        let kept = smallest_indices(&u, h);
        let top = kept.iter().map(|&i| ods[i]).fold(0.0, f64::max);
        return Ok((top, true));
    }
    let z = normal_quantile(prob)?;
    Ok(((est.location + est.scale * z).max(0.0).powf(1.5), false))
}

/// `t_i = P'(x_i - center)`.
pub fn scores(model: &PcaModel, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(model.prepare(data)? * &model.loadings)
}

/// `|x_i - center - P t_i|`.
pub fn orthogonal_distances(model: &PcaModel, data: &DMatrix<f64>) -> Result<Vec<f64>> {
    let centered = model.prepare(data)?;
    if model.k == model.p() {
        return Ok(vec![0.0; data.nrows()]);
    }
    let t = &centered * &model.loadings;
    let resid = centered - t * model.loadings.transpose();
    Ok(resid.row_iter().map(|r| r.norm()).collect())
}

/// `sqrt(sum_j t_ij^2 / l_j)`.
pub fn score_distances(model: &PcaModel, data: &DMatrix<f64>) -> Result<Vec<f64>> {
    if model.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::ZeroEigenvalue);
    }
    let t = scores(model, data)?;
    Ok(t.row_iter()
        .map(|r| {
            r.iter()
                .zip(model.eigenvalues.iter())
                .map(|(v, l)| v * v / l)
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Score distances against orthogonal distances.
pub fn pca_outlier_map(model: &PcaModel, data: &DMatrix<f64>) -> Result<OutlierMapTable> {
    OutlierMapTable::new(
        MapKind::Pca,
        score_distances(model, data)?,
        orthogonal_distances(model, data)?,
        model.sd_cutoff,
        model.od_cutoff,
        model.cutoff_prob,
    )
}

/// Orthonormal basis of the affine span of the centred rows: returns the
/// column means and `V` (`p x r`).
fn affine_span(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mean = col_means(x);
    let centered = center_rows(x, &mean);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    let basis = DMatrix::from_fn(x.ncols(), keep.len(), |r, c| v_t[(keep[c], r)]);
    (mean, basis)
}

fn robust_column_scales(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let s: Vec<f64> = x
        .column_iter()
        .map(|c| mad(c.as_slice()))
        .collect::<Result<_>>()?;
    if let Some(j) = s.iter().position(|&v| v == 0.0) {
        return Err(Error::DegenerateData(format!("column {j} has zero MAD")));
    }
    Ok(DVector::from_vec(s))
}

/// Flips each loading so that the row with the largest absolute score on it
/// scores positively; ties go to the lower row.
fn orient(loadings: &mut DMatrix<f64>, centered: &DMatrix<f64>) {
    let t = centered * &*loadings;
    for c in 0..loadings.ncols() {
        let mut best = 0;
        for i in 0..t.nrows() {
            if t[(i, c)].abs() > t[(best, c)].abs() {
                best = i;
            }
        }
        if t[(best, c)] < 0.0 {
            loadings.column_mut(c).neg_mut();
        }
    }
}

pub fn robpca(data: &Dataset, cfg: &RobpcaConfig) -> Result<PcaModel> {
    let n = data.n();
    if !(cfg.cutoff_prob > 0.0 && cfg.cutoff_prob < 1.0) {
        return Err(Error::BadProb(cfg.cutoff_prob));
    }
    let scale = if cfg.robust_scale {
        Some(robust_column_scales(data.values())?)
    } else {
        None
    };
    let x = match &scale {
        Some(s) => DMatrix::from_fn(n, data.p(), |i, j| data.values()[(i, j)] / s[j]),
        None => data.values().clone(),
    };

    let (mean, span) = affine_span(&x);
    let rank = span.ncols();
    if rank == 0 {
        return Err(Error::DegenerateData("all rows coincide".into()));
    }
    if let Some(k) = cfg.k {
        if k == 0 || k > rank {
            return Err(Error::RankTooLow { k, rank });
        }
    }
    let k_for_h = cfg.k.unwrap_or(cfg.kmax.min(rank));
    let h = default_h(n, k_for_h, cfg.alpha)?;
    let z = center_rows(&x, &mean) * &span;

    let out = outlyingness(&z, cfg.ndirs, cfg.seed, h)?;
    let subset = smallest_indices(&out, h);
    let (zh_mean, zh_cov) = mean_cov(&z, &subset);
    let eig = SortedEigen::new(&zh_cov);
    let k = match cfg.k {
        Some(k) => k,
        None => choose_k(&eig.values, cfg.variance_fraction, cfg.kmax),
    };
    let top = eig.values[0];
    if !(top > 0.0) || eig.values[k - 1] <= top * RANK_TOL {
        let attained = eig.values.iter().filter(|&&l| l > top * RANK_TOL).count();
        return Err(Error::RankTooLow { k, rank: attained });
    }
    let p1 = eig.vectors.columns(0, k).into_owned();
    let t = center_rows(&z, &zh_mean) * &p1;

    let mcd_cfg = McdConfig::default()
        .with_h(h)
        .with_nstarts(cfg.nstarts)
        .with_seed(cfg.seed);
    let t_data = Dataset::new(t)?;
    let mcd = fast_mcd(&t_data, &mcd_cfg)?;
    let final_eig = SortedEigen::new(&mcd.reweighted.scatter);
    if final_eig.values.iter().any(|&l| !(l > 0.0)) || mcd.exact_fit {
        return Err(Error::DegenerateData("scores of the retained rows are singular".into()));
    }
    let center = &mean + &span * (&zh_mean + &p1 * &mcd.reweighted.location);
    let mut loadings = &span * &p1 * &final_eig.vectors;
    orient(&mut loadings, &center_rows(&x, &center));

    let mut model = PcaModel {
        center,
        loadings,
        eigenvalues: final_eig.values,
        k,
        h,
        od_cutoff: 0.0,
        od_degenerate: false,
        sd_cutoff: chi2_cutoff(k, cfg.cutoff_prob)?,
        cutoff_prob: cfg.cutoff_prob,
        scale,
        weights: mcd.weights,
    };
    if k < model.p() {
        let ods = orthogonal_distances(&model, data.values())?;
        let (cut, degenerate) = od_cutoff(&ods, cfg.cutoff_prob)?;
        model.od_cutoff = cut;
        model.od_degenerate = degenerate;
    }
    Ok(model)
}

/// Smallest `k` whose leading eigenvalues reach `fraction` of the total,
/// capped at `kmax` and the number of positive eigenvalues.
pub fn choose_k(values: &DVector<f64>, fraction: f64, kmax: usize) -> usize {
    let positive: Vec<f64> = values.iter().copied().filter(|&l| l > 0.0).collect();
    let total: f64 = positive.iter().sum();
    let cap = kmax.min(positive.len()).max(1);
    let mut acc = 0.0;
    for (i, l) in positive.iter().enumerate() {
        acc += l;
        if acc >= fraction * total || i + 1 == cap {
            return i + 1;
        }
    }
    cap
}
