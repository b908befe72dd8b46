//! Outlier maps and distance plots as plot-ready tables.
//!
//! Every table is written as CSV with the fixed header
//! `index,x_dist,y_dist,flag` (index is 1-based, in input order) plus a JSON
//! sidecar carrying `kind`, `x_cutoff`, `y_cutoff`, `cutoff_prob` and the flag
//! vocabulary.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::unirobust::chi2_cutoff;

pub const CSV_HEADER: &str = "index,x_dist,y_dist,flag";

/// The kind of observation an outlier map assigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Regular,
    GoodLeverage,
    /// Outlying residual, regular predictors (regression maps).
    VerticalOutlier,
    /// Large orthogonal distance, regular score distance (PCA map).
    OrthogonalOutlier,
    BadLeverage,
}

impl PointClass {
    pub fn label(self) -> &'static str {
        match self {
            PointClass::Regular => "regular",
            PointClass::GoodLeverage => "good_leverage",
            PointClass::VerticalOutlier => "vertical_outlier",
            PointClass::OrthogonalOutlier => "orthogonal_outlier",
            PointClass::BadLeverage => "bad_leverage",
        }
    }

    pub fn is_outlying(self) -> bool {
        self != PointClass::Regular
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Standardized LTS residuals against robust distances of `x`.
    Regression,
    /// Residual distances against robust distances of `x`.
    MvRegression,
    /// Orthogonal distances against score distances.
    Pca,
}

/// Per-observation `(x_dist, y_dist, flag)` with the two cutoffs.
///
/// For regression maps `y_dist` may be a signed standardized residual; the
/// flag compares its absolute value to `y_cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierMapTable {
    pub kind: MapKind,
    pub x_dist: Vec<f64>,
    pub y_dist: Vec<f64>,
    pub flags: Vec<PointClass>,
    pub x_cutoff: f64,
    pub y_cutoff: f64,
    pub cutoff_prob: f64,
}

/// The four-way classification shared by all outlier maps.
pub fn classify_point(kind: MapKind, x: f64, y: f64, x_cutoff: f64, y_cutoff: f64) -> PointClass {
    let far_x = x > x_cutoff;
    let far_y = y.abs() > y_cutoff;
    match (far_x, far_y) {
        (false, false) => PointClass::Regular,
        (true, false) => PointClass::GoodLeverage,
        (true, true) => PointClass::BadLeverage,
        (false, true) => match kind {
            MapKind::Pca => PointClass::OrthogonalOutlier,
            _ => PointClass::VerticalOutlier,
        },
    }
}

impl OutlierMapTable {
    pub fn new(
        kind: MapKind,
        x_dist: Vec<f64>,
        y_dist: Vec<f64>,
        x_cutoff: f64,
        y_cutoff: f64,
        cutoff_prob: f64,
    ) -> Result<Self> {
        if x_dist.len() != y_dist.len() {
            return Err(Error::LengthMismatch {
                left: x_dist.len(),
                right: y_dist.len(),
            });
        }
        let flags = x_dist
            .iter()
            .zip(&y_dist)
            .map(|(&x, &y)| classify_point(kind, x, y, x_cutoff, y_cutoff))
            .collect();
        Ok(Self {
            kind,
            x_dist,
            y_dist,
            flags,
            x_cutoff,
            y_cutoff,
            cutoff_prob,
        })
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    /// Row indices carrying the given flag.
    pub fn indices_of(&self, class: PointClass) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.flags[i] == class).collect()
    }

    pub fn to_table(&self) -> DiagnosticTable {
        let kind = match self.kind {
            MapKind::Regression => TableKind::RegressionMap,
            MapKind::MvRegression => TableKind::MvregMap,
            MapKind::Pca => TableKind::PcaMap,
        };
        let vocabulary = match self.kind {
            MapKind::Pca => vec!["regular", "good_leverage", "orthogonal_outlier", "bad_leverage"],
            _ => vec!["regular", "good_leverage", "vertical_outlier", "bad_leverage"],
        };
        DiagnosticTable {
            kind,
            x_dist: self.x_dist.clone(),
            y_dist: self.y_dist.clone(),
            flags: self.flags.iter().map(|f| f.label().to_string()).collect(),
            x_cutoff: Some(self.x_cutoff),
            y_cutoff: Some(self.y_cutoff),
            cutoff_prob: Some(self.cutoff_prob),
            vocabulary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    IndexDistance,
    DdPlot,
    RegressionMap,
    MvregMap,
    PcaMap,
}

impl TableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TableKind::IndexDistance => "index_distance",
            TableKind::DdPlot => "dd_plot",
            TableKind::RegressionMap => "regression_map",
            TableKind::MvregMap => "mvreg_map",
            TableKind::PcaMap => "pca_map",
        }
    }
}

/// Uniform container for every diagnostic plot.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticTable {
    pub kind: TableKind,
    pub x_dist: Vec<f64>,
    pub y_dist: Vec<f64>,
    pub flags: Vec<String>,
    pub x_cutoff: Option<f64>,
    pub y_cutoff: Option<f64>,
    pub cutoff_prob: Option<f64>,
    pub vocabulary: Vec<&'static str>,
}

impl DiagnosticTable {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flagged(&self) -> usize {
        self.flags.iter().filter(|f| f.as_str() != "regular").count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for i in 0..self.len() {
            writeln!(w, "{},{},{},{}", i + 1, self.x_dist[i], self.y_dist[i], self.flags[i])?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn sidecar(&self) -> serde_json::Value {
        json!({
            "kind": self.kind.as_str(),
            "x_cutoff": self.x_cutoff,
            "y_cutoff": self.y_cutoff,
            "cutoff_prob": self.cutoff_prob,
            "flags": self.vocabulary,
        })
    }
}

/// Index plot of distances: `x_dist` is the 1-based observation index.
pub fn index_distance_table(distances: &[f64], cutoff: f64) -> DiagnosticTable {
    DiagnosticTable {
        kind: TableKind::IndexDistance,
        x_dist: (1..=distances.len()).map(|i| i as f64).collect(),
        y_dist: distances.to_vec(),
        flags: distances
            .iter()
            .map(|&d| if d > cutoff { "outlier" } else { "regular" }.to_string())
            .collect(),
        x_cutoff: None,
        y_cutoff: Some(cutoff),
        cutoff_prob: None,
        vocabulary: vec!["regular", "outlier"],
    }
}

/// Distance-distance plot: classical Mahalanobis (`x_dist`) against robust
/// distances (`y_dist`) with the shared cutoff `sqrt(chi2_p(cutoff_prob))`.
pub fn dd_plot_table(md: &[f64], rd: &[f64], p: usize, cutoff_prob: f64) -> Result<DiagnosticTable> {
    if md.len() != rd.len() {
        return Err(Error::LengthMismatch {
            left: md.len(),
            right: rd.len(),
        });
    }
    let cutoff = chi2_cutoff(p, cutoff_prob)?;
    let flags = md
        .iter()
        .zip(rd)
        .map(|(&m, &r)| {
            match (m > cutoff, r > cutoff) {
                (false, false) => "regular",
                (true, false) => "classical_only",
                (false, true) => "robust_only",
                (true, true) => "both",
            }
            .to_string()
        })
        .collect();
    Ok(DiagnosticTable {
        kind: TableKind::DdPlot,
        x_dist: md.to_vec(),
        y_dist: rd.to_vec(),
        flags,
        x_cutoff: Some(cutoff),
        y_cutoff: Some(cutoff),
        cutoff_prob: Some(cutoff_prob),
        vocabulary: vec!["regular", "classical_only", "robust_only", "both"],
    })
}
