//! Qualitative Low/High tables: median-split countries by index score and
//! label each feature's group mean on a seven-step z-score scale.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::{standardize, AnalysisError};
use crate::indices::{IndexDirection, JoinedDataset};

/// Band edges for the label scale: |z| below 0.15 is Average, then the
/// Slightly/plain/Very bands at 0.15, 0.5, and 1.0.
pub const Z_THRESHOLDS: [f64; 3] = [0.15, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QualitativeLabel {
    #[serde(rename = "Very Low")]
    VeryLow,
    #[serde(rename = "Low")]
    Low,
    #[serde(rename = "Slightly Low")]
    SlightlyLow,
    #[serde(rename = "Average")]
    Average,
    #[serde(rename = "Slightly High")]
    SlightlyHigh,
    #[serde(rename = "High")]
    High,
    #[serde(rename = "Very High")]
    VeryHigh,
}

impl fmt::Display for QualitativeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            QualitativeLabel::VeryLow => "Very Low",
            QualitativeLabel::Low => "Low",
            QualitativeLabel::SlightlyLow => "Slightly Low",
            QualitativeLabel::Average => "Average",
            QualitativeLabel::SlightlyHigh => "Slightly High",
            QualitativeLabel::High => "High",
            QualitativeLabel::VeryHigh => "Very High",
        };
        f.write_str(text)
    }
}

/// Maps a group-mean z-score to its label band. The positive bands are
/// closed below ([0.15, 0.5), [0.5, 1.0), [1.0, inf)) and mirrored for
/// negative values.
pub fn label_for_z(z: f64) -> QualitativeLabel {
    if z >= Z_THRESHOLDS[2] {
        QualitativeLabel::VeryHigh
    } else if z >= Z_THRESHOLDS[1] {
        QualitativeLabel::High
    } else if z >= Z_THRESHOLDS[0] {
        QualitativeLabel::SlightlyHigh
    } else if z > -Z_THRESHOLDS[0] {
        QualitativeLabel::Average
    } else if z > -Z_THRESHOLDS[1] {
        QualitativeLabel::SlightlyLow
    } else if z > -Z_THRESHOLDS[2] {
        QualitativeLabel::Low
    } else {
        QualitativeLabel::VeryLow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeRow {
    pub feature: String,
    pub low: QualitativeLabel,
    pub high: QualitativeLabel,
    pub low_mean_z: f64,
    pub high_mean_z: f64,
}

/// One Low/High table for one index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeTable {
    pub index: String,
    pub direction: IndexDirection,
    /// Countries in the low-score half (first floor(n/2) by score).
    pub low_group: Vec<String>,
    /// Countries in the high-score half.
    pub high_group: Vec<String>,
    pub rows: Vec<QualitativeRow>,
    /// The z bands behind the labels, for output metadata.
    pub z_thresholds: [f64; 3],
}

/// Median-splits the index's joined countries into Low/High halves by score
/// (ties broken by country name; the high half takes the extra country when
/// the count is odd), standardizes each feature over the joined countries,
/// and labels the per-group mean z-scores.
pub fn qualitative_labels(
    joined: &JoinedDataset,
    index_name: &str,
) -> Result<QualitativeTable, AnalysisError> {
    let join = joined
        .index_joins
        .iter()
        .find(|j| j.name == index_name)
        .ok_or_else(|| AnalysisError::UnknownIndex(index_name.to_string()))?;

    let n = join.countries.len();
    if n < 4 {
        return Err(AnalysisError::TooFewCountries(n));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        join.scores[a]
            .partial_cmp(&join.scores[b])
            .expect("finite scores")
            .then_with(|| join.countries[a].cmp(&join.countries[b]))
    });
    let split = n / 2;
    let low_idx = &order[..split];
    let high_idx = &order[split..];

    let matrix: Vec<Vec<f64>> = join
        .country_rows
        .iter()
        .map(|&row| joined.features[row].clone())
        .collect();
    let standardized = standardize(&matrix)?;

    let group_mean = |idx: &[usize], feature: usize| -> f64 {
        idx.iter()
            .map(|&i| standardized.values[i][feature])
            .sum::<f64>()
            / idx.len() as f64
    };

    let rows = joined
        .feature_names
        .iter()
        .enumerate()
        .map(|(f, name)| {
            let low_mean_z = group_mean(low_idx, f);
            let high_mean_z = group_mean(high_idx, f);
            QualitativeRow {
                feature: name.clone(),
                low: label_for_z(low_mean_z),
                high: label_for_z(high_mean_z),
                low_mean_z,
                high_mean_z,
            }
        })
        .collect();

    Ok(QualitativeTable {
        index: join.name.clone(),
        direction: join.direction,
        low_group: low_idx.iter().map(|&i| join.countries[i].clone()).collect(),
        high_group: high_idx
            .iter()
            .map(|&i| join.countries[i].clone())
            .collect(),
        rows,
        z_thresholds: Z_THRESHOLDS,
    })
}
