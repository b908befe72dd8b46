//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Matrices whose eigenvalue ratio reaches this bound are treated as singular.
/// Rounding puts the ratio of a truly singular scatter near 1e-16, while a
/// subset mixing rows at scale 1 and 1e6 is legitimately conditioned near 1e12.
pub const MAX_CONDITION: f64 = 1e14;

/// Mean and covariance (divisor = number of rows) of the listed rows.
pub fn mean_cov(x: &DMatrix<f64>, rows: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let p = x.ncols();
    let m = rows.len() as f64;
    let mut mean = DVector::zeros(p);
    for &i in rows {
        for j in 0..p {
            mean[j] += x[(i, j)];
        }
    }
    mean /= m;
    let centered = DMatrix::from_fn(rows.len(), p, |r, j| x[(rows[r], j)] - mean[j]);
    let cov = centered.tr_mul(&centered) / m;
    (mean, symmetrize(cov))
}

/// Mean and covariance over all rows.
pub fn full_mean_cov(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let all: Vec<usize> = (0..x.nrows()).collect();
    mean_cov(x, &all)
}

/// Column means.
pub fn col_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(x.ncols(), |j, _| x.column(j).mean())
}

/// Subtracts `center` from every row.
pub fn center_rows(x: &DMatrix<f64>, center: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - center[j])
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Symmetric eigendecomposition with eigenvalues sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(symmetrize(m.clone()));
        let p = m.nrows();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = DVector::from_fn(p, |i, _| eig.eigenvalues[order[i]]);
        let mut vectors = DMatrix::from_fn(p, p, |r, c| eig.eigenvectors[(r, order[c])]);
        for c in 0..p {
            fix_sign(&mut vectors, c);
        }
        Self { values, vectors }
    }
}

/// Flips column `c` so that its largest-magnitude entry is positive.
pub fn fix_sign(m: &mut DMatrix<f64>, c: usize) {
    let mut best = 0;
    for r in 0..m.nrows() {
        if m[(r, c)].abs() > m[(best, c)].abs() {
            best = r;
        }
    }
    if m[(best, c)] < 0.0 {
        m.column_mut(c).neg_mut();
    }
}

/// Whitening transform of a positive-definite scatter matrix, used to
/// evaluate many Mahalanobis distances against the same estimate.
#[derive(Debug, Clone)]
pub struct Whitener {
    /// `V diag(1/sqrt(lambda))`, so that `|| W'(x - mu) ||` is the distance.
    transform: DMatrix<f64>,
    pub log_det: f64,
}

impl Whitener {
    pub fn new(scatter: &DMatrix<f64>) -> Result<Self> {
        let eig = SortedEigen::new(scatter);
        let p = scatter.nrows();
        let top = eig.values[0];
        let bottom = eig.values[p - 1];
        if !(top > 0.0) || bottom <= top / MAX_CONDITION {
            return Err(Error::SingularScatter);
        }
        let mut transform = eig.vectors.clone();
        for c in 0..p {
            let s = 1.0 / eig.values[c].sqrt();
            transform.column_mut(c).scale_mut(s);
        }
        let log_det = eig.values.iter().map(|v| v.ln()).sum();
        Ok(Self { transform, log_det })
    }

    /// Squared distances of every row of `x` from `center`.
    pub fn sq_distances(&self, x: &DMatrix<f64>, center: &DVector<f64>) -> Vec<f64> {
        let z = center_rows(x, center) * &self.transform;
        z.row_iter().map(|r| r.norm_squared()).collect()
    }

    pub fn distances(&self, x: &DMatrix<f64>, center: &DVector<f64>) -> Vec<f64> {
        self.sq_distances(x, center)
            .into_iter()
            .map(f64::sqrt)
            .collect()
    }

    pub fn sq_distance(&self, v: &DVector<f64>) -> f64 {
        (self.transform.tr_mul(v)).norm_squared()
    }
}

/// Natural log of the determinant of a symmetric matrix, or `None` when it is
/// singular in the sense of [`MAX_CONDITION`].
pub fn log_det(m: &DMatrix<f64>) -> Option<f64> {
    Whitener::new(m).ok().map(|w| w.log_det)
}

/// Moore-Penrose pseudo-inverse of a symmetric positive-semidefinite matrix.
pub fn pinv_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SortedEigen::new(m);
    let p = m.nrows();
    let tol = eig.values[0].abs().max(0.0) * 1e-10;
    let mut out = DMatrix::zeros(p, p);
    for c in 0..p {
        let l = eig.values[c];
        if l > tol && l > 0.0 {
            let v = eig.vectors.column(c);
            out += (v * v.transpose()) / l;
        }
    }
    out
}

/// Least-squares solution of `a x = b`, or `None` when `a` is rank deficient.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if a.nrows() < a.ncols() {
        return None;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-12 {
        return None;
    }
    svd.solve(b, 0.0).ok()
}

/// Solves the symmetric positive-definite system `m x = b`.
pub fn solve_spd(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Whitener::new(m)?;
    m.clone()
        .cholesky()
        .map(|c| c.solve(b))
        .ok_or(Error::SingularScatter)
}

/// Inverse of a positive-definite matrix.
pub fn inverse_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    solve_spd(m, &DMatrix::identity(n, n)).map(symmetrize)
}

/// The `h` smallest entries of `d`, ties broken by lower index; returned
/// sorted by index.
pub fn smallest_indices(d: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    let key = |&a: &usize, &b: &usize| d[a].total_cmp(&d[b]).then(a.cmp(&b));
    if h < idx.len() {
        idx.select_nth_unstable_by(h, key);
        idx.truncate(h);
    }
    idx.sort_unstable();
    idx
}

/// Sum of the `h` smallest values.
pub fn trimmed_sum(values: &[f64], h: usize) -> f64 {
    let mut v = values.to_vec();
    if h < v.len() {
        v.select_nth_unstable_by(h, |a, b| a.total_cmp(b));
    }
    let mut head = v[..h].to_vec();
    head.sort_by(|a, b| a.total_cmp(b));
    head.iter().sum()
}

/// Appends a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    DMatrix::from_fn(n, p + 1, |i, j| if j < p { x[(i, j)] } else { 1.0 })
}
