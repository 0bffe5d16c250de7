//! Statistical analysis: z-score standardization, seeded k-means with
//! elbow/silhouette model selection, correlation matrices, cluster
//! agreement, and the qualitative Low/High tables.
//!
//! Everything here is deterministic given an explicit seed; no wall-clock
//! seeding anywhere.

mod kmeans;
mod qualitative;
mod stats;

pub use kmeans::{
    elbow_k, kmeans_fit, select_k, silhouette_score, ClusterModel, SelectionDiagnostics,
};
pub use qualitative::{
    label_for_z, qualitative_labels, QualitativeLabel, QualitativeRow, QualitativeTable,
    Z_THRESHOLDS,
};
pub use stats::{cluster_agreement, mid_ranks, pearson, spearman, ClusterAgreement};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("standardization needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("ragged matrix: row {row} has width {got}, expected {expected}")]
    RaggedMatrix {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("k={k} is out of range for {rows} rows")]
    KOutOfRange { k: usize, rows: usize },
    #[error("silhouette requires at least 2 clusters")]
    TooFewClusters,
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("inertia curve must cover consecutive k starting at 1, with at least 3 entries")]
    NonConsecutiveKRange,
    #[error("no k in [2, k_max] produced a scoreable clustering")]
    NoViableK,
    #[error("input vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 3 paired observations, got {0}")]
    TooFewObservations(usize),
    #[error("correlation is undefined: {0} input is constant")]
    ConstantInput(&'static str),
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("index '{0}' is not part of the joined dataset")]
    UnknownIndex(String),
    #[error("qualitative split needs at least 4 countries, got {0}")]
    TooFewCountries(usize),
}

/// Column-wise z-scores with the statistics needed to invert the mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedMatrix {
    pub values: Vec<Vec<f64>>,
    pub column_means: Vec<f64>,
    /// Population standard deviations; 0.0 for flagged constant columns.
    pub column_sds: Vec<f64>,
    /// Columns whose raw values were all identical; their z-scores are 0.
    pub constant_columns: Vec<usize>,
}

/// Standardizes each column to mean 0 and population standard deviation 1.
/// Constant columns map to all zeros and are flagged instead of dividing by
/// zero.
pub fn standardize(matrix: &[Vec<f64>]) -> Result<StandardizedMatrix, AnalysisError> {
    let rows = matrix.len();
    if rows < 2 {
        return Err(AnalysisError::TooFewRows(rows));
    }
    let width = matrix[0].len();
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != width {
            return Err(AnalysisError::RaggedMatrix {
                row: i,
                got: row.len(),
                expected: width,
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFinite);
        }
    }

    let n = rows as f64;
    let mut column_means = vec![0.0; width];
    let mut column_sds = vec![0.0; width];
    let mut constant_columns = Vec::new();
    for c in 0..width {
        let first = matrix[0][c];
        let constant = matrix.iter().all(|row| row[c] == first);
        let mean = matrix.iter().map(|row| row[c]).sum::<f64>() / n;
        column_means[c] = mean;
        if constant {
            constant_columns.push(c);
        } else {
            let var = matrix
                .iter()
                .map(|row| {
                    let d = row[c] - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            column_sds[c] = var.sqrt();
        }
    }

    let values = matrix
        .iter()
        .map(|row| {
            (0..width)
                .map(|c| {
                    if column_sds[c] == 0.0 {
                        0.0
                    } else {
                        (row[c] - column_means[c]) / column_sds[c]
                    }
                })
                .collect()
        })
        .collect();

    Ok(StandardizedMatrix {
        values,
        column_means,
        column_sds,
        constant_columns,
    })
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
