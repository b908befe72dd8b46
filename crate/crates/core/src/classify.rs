//! Robust quadratic and linear discriminant analysis built on per-group
//! reweighted MCD estimates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, symmetrize, Whitener};
use crate::mcd::{fast_mcd, McdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Quadratic,
    Linear,
}

/// How membership probabilities are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorRule {
    /// Share of the weight-one observations falling in each group.
    #[default]
    RegularCounts,
    /// Plain group sizes `n_j / n`.
    GroupSizes,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassifyConfig {
    pub mcd: McdConfig,
    pub prior: PriorRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupEstimate {
    pub id: usize,
    pub center: DVector<f64>,
    pub scatter: DMatrix<f64>,
    /// Number of training rows in the group.
    pub n: usize,
    /// Rows with weight one after reweighting.
    pub regular: usize,
    pub prior: f64,
}

/// A fitted discriminant rule. Groups are ordered by id.
#[derive(Debug, Clone)]
pub struct GroupModel {
    pub groups: Vec<GroupEstimate>,
    pub pooled: Option<DMatrix<f64>>,
    pub mode: Mode,
    metrics: Vec<Whitener>,
}

impl GroupModel {
    /// Validates the estimates and precomputes the inverse scatters.
    pub fn new(groups: Vec<GroupEstimate>, mode: Mode, pooled: Option<DMatrix<f64>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::EmptyData);
        }
        let total: f64 = groups.iter().map(|g| g.prior).sum();
        if groups.iter().any(|g| !(g.prior > 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "membership probabilities must be positive and sum to one".into(),
            ));
        }
        let metrics = match mode {
            Mode::Quadratic => groups
                .iter()
                .map(|g| Whitener::new(&g.scatter).map_err(|_| Error::SingularGroupScatter { group: g.id }))
                .collect::<Result<Vec<_>>>()?,
            Mode::Linear => {
                let pooled = pooled
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("linear mode needs a pooled scatter".into()))?;
                vec![Whitener::new(pooled)?]
            }
        };
        Ok(Self {
            groups,
            pooled,
            mode,
            metrics,
        })
    }

    pub fn ids(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.id).collect()
    }

    pub fn dim(&self) -> usize {
        self.groups[0].center.len()
    }

    /// The same model with replaced membership probabilities, given in group
    /// order.
    pub fn with_priors(&self, priors: &[f64]) -> Result<Self> {
        if priors.len() != self.groups.len() {
            return Err(Error::DimensionMismatch {
                expected: self.groups.len(),
                found: priors.len(),
            });
        }
        let groups = self
            .groups
            .iter()
            .zip(priors)
            .map(|(g, &prior)| GroupEstimate { prior, ..g.clone() })
            .collect();
        Self::new(groups, self.mode, self.pooled.clone())
    }

    /// Equal membership probabilities.
    pub fn with_equal_priors(&self) -> Self {
        let l = self.groups.len();
        self.with_priors(&vec![1.0 / l as f64; l])
            .expect("equal priors are valid")
    }
}

fn group_rows(labels: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|id| (id, (0..labels.len()).filter(|&i| labels[i] == id).collect()))
        .collect()
}

fn check_labels(data: &Dataset, labels: &[usize]) -> Result<Vec<(usize, Vec<usize>)>> {
    if labels.len() != data.n() {
        return Err(Error::LengthMismatch {
            left: data.n(),
            right: labels.len(),
        });
    }
    let groups = group_rows(labels);
    let p = data.p();
    for (id, rows) in &groups {
        if rows.len() <= p + 1 {
            return Err(Error::GroupTooSmall {
                group: *id,
                size: rows.len(),
                needed: p + 2,
            });
        }
    }
    Ok(groups)
}

/// Per-group estimates with `(center, scatter, regular count)`.
fn robust_groups(data: &Dataset, labels: &[usize], cfg: &ClassifyConfig) -> Result<Vec<GroupEstimate>> {
    let groups = check_labels(data, labels)?;
    let mut out = Vec::with_capacity(groups.len());
    for (id, rows) in groups {
        let sub = Dataset::new(data.select_rows(&rows))?;
        let mcd = fast_mcd(&sub, &cfg.mcd).map_err(|e| match e {
            Error::DegenerateData(_) | Error::SingularScatter => Error::SingularGroupScatter { group: id },
            other => other,
        })?;
        if mcd.exact_fit {
            return Err(Error::SingularGroupScatter { group: id });
        }
        out.push(GroupEstimate {
            id,
            center: mcd.reweighted.location,
            scatter: mcd.reweighted.scatter,
            n: rows.len(),
            regular: mcd.weights.count(),
            prior: 0.0,
        });
    }
    assign_priors(&mut out, cfg.prior);
    Ok(out)
}

fn classical_groups(data: &Dataset, labels: &[usize]) -> Result<Vec<GroupEstimate>> {
    let groups = check_labels(data, labels)?;
    let mut out: Vec<GroupEstimate> = groups
        .into_iter()
        .map(|(id, rows)| {
            let (center, scatter) = linalg::mean_cov(data.values(), &rows);
            GroupEstimate {
                id,
                center,
                scatter,
                n: rows.len(),
                regular: rows.len(),
                prior: 0.0,
            }
        })
        .collect();
    assign_priors(&mut out, PriorRule::GroupSizes);
    Ok(out)
}

fn assign_priors(groups: &mut [GroupEstimate], rule: PriorRule) {
    let count = |g: &GroupEstimate| match rule {
        PriorRule::RegularCounts => g.regular,
        PriorRule::GroupSizes => g.n,
    };
    let total: usize = groups.iter().map(count).sum();
    for g in groups.iter_mut() {
        g.prior = count(g) as f64 / total as f64;
    }
}

/// `sum_j n_j S_j / n`.
pub fn pooled_scatter(groups: &[GroupEstimate]) -> DMatrix<f64> {
    let n: usize = groups.iter().map(|g| g.n).sum();
    let p = groups[0].center.len();
    let sum = groups
        .iter()
        .fold(DMatrix::zeros(p, p), |acc, g| acc + &g.scatter * g.n as f64);
    symmetrize(sum / n as f64)
}

pub fn fit_rqda(data: &Dataset, labels: &[usize], cfg: &ClassifyConfig) -> Result<GroupModel> {
    GroupModel::new(robust_groups(data, labels, cfg)?, Mode::Quadratic, None)
}

pub fn fit_rlda(data: &Dataset, labels: &[usize], cfg: &ClassifyConfig) -> Result<GroupModel> {
    let groups = robust_groups(data, labels, cfg)?;
    let pooled = pooled_scatter(&groups);
    GroupModel::new(groups, Mode::Linear, Some(pooled))
}

/// Quadratic discriminant rule from classical group means and covariances.
pub fn fit_classical_qda(data: &Dataset, labels: &[usize]) -> Result<GroupModel> {
    GroupModel::new(classical_groups(data, labels)?, Mode::Quadratic, None)
}

/// Linear discriminant rule from classical group means and the pooled
/// classical covariance.
pub fn fit_classical_lda(data: &Dataset, labels: &[usize]) -> Result<GroupModel> {
    let groups = classical_groups(data, labels)?;
    let pooled = pooled_scatter(&groups);
    GroupModel::new(groups, Mode::Linear, Some(pooled))
}

/// One score per group, in group order.
pub fn discriminant_scores(model: &GroupModel, x: &DVector<f64>) -> Result<Vec<f64>> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.len(),
        });
    }
    let scores = match model.mode {
        Mode::Quadratic => model
            .groups
            .iter()
            .zip(&model.metrics)
            .map(|(g, w)| -0.5 * w.log_det - 0.5 * w.sq_distance(&(x - &g.center)) + g.prior.ln())
            .collect(),
        Mode::Linear => {
            let w = &model.metrics[0];
            // mu' S^-1 x - mu' S^-1 mu / 2 = (|x|^2 - |x - mu|^2) / 2 in the S-metric
            let xx = w.sq_distance(x);
            model
                .groups
                .iter()
                .map(|g| 0.5 * (xx - w.sq_distance(&(x - &g.center))) + g.prior.ln())
                .collect()
        }
    };
    Ok(scores)
}

/// The group with the largest score; exact ties go to the smallest id.
pub fn classify(model: &GroupModel, x: &DVector<f64>) -> Result<usize> {
    let scores = discriminant_scores(model, x)?;
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = j;
        }
    }
    Ok(model.groups[best].id)
}

pub fn classify_rows(model: &GroupModel, data: &Dataset) -> Result<Vec<usize>> {
    (0..data.n()).map(|i| classify(model, &data.row(i))).collect()
}

/// Posterior membership probabilities implied by the scores.
pub fn membership_probabilities(model: &GroupModel, x: &DVector<f64>) -> Result<Vec<f64>> {
    let scores = discriminant_scores(model, x)?;
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let total: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cloud(n: usize, center: &[f64], seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                center
                    .iter()
                    .map(|c| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        c + z
                    })
                    .collect()
            })
            .collect()
    }

    fn manual(mode: Mode, centers: &[[f64; 2]], priors: &[f64]) -> GroupModel {
        let groups: Vec<GroupEstimate> = centers
            .iter()
            .zip(priors)
            .enumerate()
            .map(|(j, (c, &prior))| GroupEstimate {
                id: j + 1,
                center: DVector::from_column_slice(c),
                scatter: DMatrix::identity(2, 2),
                n: 50,
                regular: 50,
                prior,
            })
            .collect();
        let pooled = pooled_scatter(&groups);
        GroupModel::new(groups, mode, Some(pooled)).unwrap()
    }

    #[test]
    fn clean_group_priors_are_frequencies() {
        let mut rows = cloud(60, &[0.0, 0.0], 1);
        rows.extend(cloud(40, &[8.0, 8.0], 2));
        let labels: Vec<usize> = (0..100).map(|i| if i < 60 { 1 } else { 2 }).collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let cfg = ClassifyConfig::default();
        let plain = fit_rqda(&data, &labels, &ClassifyConfig { prior: PriorRule::GroupSizes, ..cfg.clone() }).unwrap();
        assert!((plain.groups[0].prior - 0.6).abs() < 1e-15);
        let model = fit_rqda(&data, &labels, &cfg).unwrap();
        let total: f64 = model.groups.iter().map(|g| g.prior).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn downweighted_rows_leave_the_prior() {
        let mut rows = cloud(60, &[0.0, 0.0], 3);
        rows.extend(cloud(5, &[60.0, -60.0], 4));
        rows.extend(cloud(40, &[8.0, 8.0], 5));
        let labels: Vec<usize> = (0..105).map(|i| if i < 65 { 1 } else { 2 }).collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let model = fit_rqda(&data, &labels, &ClassifyConfig::default()).unwrap();
        let g1 = &model.groups[0];
        let g2 = &model.groups[1];
        for i in 60..65 {
            // the five far rows are never regular
            assert!((data.row(i) - &g1.center).norm() > 50.0);
        }
        let expected = g1.regular as f64 / (g1.regular + g2.regular) as f64;
        assert!((g1.prior - expected).abs() < 1e-15);
        assert!(g1.regular <= 60);
        assert!(g1.center.norm() < 0.5);
    }

    #[test]
    fn pooled_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let g = |s: &DMatrix<f64>, n| GroupEstimate {
            id: 0,
            center: DVector::zeros(2),
            scatter: s.clone(),
            n,
            regular: n,
            prior: 0.5,
        };
        assert!((pooled_scatter(&[g(&a, 30), g(&a, 70)]) - &a).norm() < 1e-15);
        assert!((pooled_scatter(&[g(&a, 40), g(&b, 40)]) - (&a + &b) / 2.0).norm() < 1e-15);
    }

    #[test]
    fn center_goes_to_its_group() {
        let model = manual(Mode::Quadratic, &[[0.0, 0.0], [4.0, 0.0]], &[0.5, 0.5]);
        assert_eq!(classify(&model, &DVector::from_vec(vec![0.0, 0.0])).unwrap(), 1);
        assert_eq!(classify(&model, &DVector::from_vec(vec![4.0, 0.0])).unwrap(), 2);
    }

    #[test]
    fn equal_priors_give_the_bisector() {
        let model = manual(Mode::Linear, &[[0.0, 0.0], [4.0, 0.0]], &[0.5, 0.5]);
        for &y in &[-3.0, 0.0, 5.0] {
            let left = classify(&model, &DVector::from_vec(vec![1.99, y])).unwrap();
            let right = classify(&model, &DVector::from_vec(vec![2.01, y])).unwrap();
            assert_eq!((left, right), (1, 2));
            // exact midpoint: tie goes to the smaller id
            assert_eq!(classify(&model, &DVector::from_vec(vec![2.0, y])).unwrap(), 1);
        }
    }

    #[test]
    fn priors_shift_scores_by_log_ratio() {
        let even = manual(Mode::Linear, &[[0.0, 0.0], [4.0, 0.0]], &[0.5, 0.5]);
        let skewed = even.with_priors(&[0.9, 0.1]).unwrap();
        let x = DVector::from_vec(vec![1.3, -0.7]);
        let a = discriminant_scores(&even, &x).unwrap();
        let b = discriminant_scores(&skewed, &x).unwrap();
        let shift = (b[0] - b[1]) - (a[0] - a[1]);
        assert!((shift - 9f64.ln()).abs() < 1e-12);
        // the boundary moves toward the rare group: x1 = 2 + ln 9 / 4
        let edge = 2.0 + 9f64.ln() / 4.0;
        assert_eq!(classify(&skewed, &DVector::from_vec(vec![edge - 1e-6, 0.0])).unwrap(), 1);
        assert_eq!(classify(&skewed, &DVector::from_vec(vec![edge + 1e-6, 0.0])).unwrap(), 2);
    }

    #[test]
    fn linear_scores_match_closed_form() {
        let model = manual(Mode::Linear, &[[1.0, 2.0], [-1.0, 0.5]], &[0.3, 0.7]);
        let x = DVector::from_vec(vec![0.4, -1.1]);
        let s = discriminant_scores(&model, &x).unwrap();
        for (j, g) in model.groups.iter().enumerate() {
            let expected = g.center.dot(&x) - 0.5 * g.center.dot(&g.center) + g.prior.ln();
            assert!((s[j] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn groups_must_be_large_enough() {
        let rows = cloud(10, &[0.0, 0.0], 6);
        let data = Dataset::from_rows(&rows).unwrap();
        let labels = vec![1, 1, 1, 2, 2, 2, 2, 2, 2, 2];
        assert_eq!(
            fit_rlda(&data, &labels, &ClassifyConfig::default()).unwrap_err(),
            Error::GroupTooSmall {
                group: 1,
                size: 3,
                needed: 4
            }
        );
        let labels_short = vec![1; 9];
        assert!(fit_rqda(&data, &labels_short, &ClassifyConfig::default()).is_err());
    }
}
