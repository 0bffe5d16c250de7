//! Correlation and partition-agreement statistics.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

fn validate_pair(x: &[f64], y: &[f64]) -> Result<(), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AnalysisError::TooFewObservations(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(AnalysisError::ConstantInput("first"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(AnalysisError::ConstantInput("second"));
    }
    Ok(())
}

/// Product-moment correlation. Constant inputs are an explicit error, not a
/// silent zero.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    validate_pair(x, y)?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    Ok((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Mid-ranks (1-based); tied values receive the average of their ranks.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j share the average rank of that run.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    validate_pair(x, y)?;
    pearson(&mid_ranks(x), &mid_ranks(y))
}

/// Agreement between two partitions of the same items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAgreement {
    /// Sorted distinct labels of the first partition (rows).
    pub row_labels: Vec<usize>,
    /// Sorted distinct labels of the second partition (columns).
    pub col_labels: Vec<usize>,
    /// Joint label counts, rows x columns.
    pub contingency: Vec<Vec<usize>>,
    /// Adjusted Rand index in [-1, 1].
    pub ari: f64,
    /// Cramer's V in [0, 1]; 0 when either side has a single label.
    pub cramers_v: f64,
}

fn comb2(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        (n as f64) * (n as f64 - 1.0) / 2.0
    }
}

/// Builds the contingency table of two equal-length label vectors and
/// computes the adjusted Rand index and Cramer's V.
pub fn cluster_agreement(a: &[usize], b: &[usize]) -> Result<ClusterAgreement, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnalysisError::TooFewObservations(0));
    }
    let row_labels: Vec<usize> = a
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let col_labels: Vec<usize> = b
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let row_of = |label: usize| row_labels.binary_search(&label).expect("known label");
    let col_of = |label: usize| col_labels.binary_search(&label).expect("known label");

    let mut contingency = vec![vec![0usize; col_labels.len()]; row_labels.len()];
    for (&ai, &bi) in a.iter().zip(b) {
        contingency[row_of(ai)][col_of(bi)] += 1;
    }

    let n = a.len();
    let row_sums: Vec<usize> = contingency.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..col_labels.len())
        .map(|c| contingency.iter().map(|r| r[c]).sum())
        .collect();

    // Adjusted Rand index from pair counts.
    let sum_cells: f64 = contingency.iter().flatten().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = row_sums.iter().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = col_sums.iter().map(|&c| comb2(c)).sum();
    let total_pairs = comb2(n);
    let expected = sum_rows * sum_cols / total_pairs.max(1.0);
    let max_index = (sum_rows + sum_cols) / 2.0;
    let ari = if (max_index - expected).abs() < f64::EPSILON {
        1.0 // both partitions trivial and identical in pair structure
    } else {
        (sum_cells - expected) / (max_index - expected)
    };

    // Cramer's V from the chi-squared statistic; degenerate 1xC or Rx1
    // tables carry no association.
    let min_dim = row_labels.len().min(col_labels.len());
    let cramers_v = if min_dim < 2 {
        0.0
    } else {
        let nf = n as f64;
        let mut chi2 = 0.0;
        for (r, row) in contingency.iter().enumerate() {
            for (c, &obs) in row.iter().enumerate() {
                let e = row_sums[r] as f64 * col_sums[c] as f64 / nf;
                if e > 0.0 {
                    let d = obs as f64 - e;
                    chi2 += d * d / e;
                }
            }
        }
        (chi2 / (nf * (min_dim as f64 - 1.0)))
            .sqrt()
            .clamp(0.0, 1.0)
    };

    Ok(ClusterAgreement {
        row_labels,
        col_labels,
        contingency,
        ari,
        cramers_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_self_is_one() {
        let x = [1.0, 2.0, 5.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_negation_is_minus_one() {
        let x = [1.0, 2.0, 5.0, 3.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_hand_example() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap();
        assert!((r - 0.99340).abs() < 1e-5, "got {r}");
        // Exact value is 15 / sqrt(228).
        assert!((r - 15.0 / 228.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_constant() {
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(AnalysisError::ConstantInput("first"))
        );
    }

    #[test]
    fn pearson_rejects_short_input() {
        assert_eq!(
            pearson(&[1.0, 2.0], &[2.0, 3.0]),
            Err(AnalysisError::TooFewObservations(2))
        );
    }

    #[test]
    fn spearman_monotone_is_one() {
        let x = [1.0, 2.0, 3.0, 10.0];
        let y = [0.1, 0.5, 0.6, 100.0];
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_hand_example() {
        let rho = spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 15.0]).unwrap();
        assert!((rho - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mid_ranks_average_ties() {
        assert_eq!(mid_ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(mid_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn spearman_uses_mid_ranks_for_ties() {
        // Ranks (1.5, 1.5, 3) against (1, 2, 3).
        let rho = spearman(&[1.0, 1.0, 2.0], &[3.0, 5.0, 9.0]).unwrap();
        let expected = pearson(&[1.5, 1.5, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((rho - expected).abs() < 1e-12);
    }

    #[test]
    fn ari_identical_partitions() {
        let a = [0, 0, 1, 1, 2, 2];
        let agreement = cluster_agreement(&a, &a).unwrap();
        assert!((agreement.ari - 1.0).abs() < 1e-12);
        assert!((agreement.cramers_v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ari_label_permutation_invariant() {
        let a = [0, 0, 1, 1, 2, 2];
        let b = [2, 2, 0, 0, 1, 1];
        let agreement = cluster_agreement(&a, &b).unwrap();
        assert!((agreement.ari - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ari_cross_example() {
        let agreement = cluster_agreement(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((agreement.ari + 0.5).abs() < 1e-12, "got {}", agreement.ari);
    }

    #[test]
    fn ari_one_sided_trivial_partition() {
        let agreement = cluster_agreement(&[0, 0, 0, 0], &[0, 1, 0, 1]).unwrap();
        assert_eq!(agreement.ari, 0.0);
        assert_eq!(agreement.cramers_v, 0.0);
    }

    #[test]
    fn contingency_counts_pairs() {
        let agreement = cluster_agreement(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        assert_eq!(agreement.contingency, vec![vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn agreement_rejects_length_mismatch() {
        assert_eq!(
            cluster_agreement(&[0, 1], &[0]),
            Err(AnalysisError::LengthMismatch(2, 1))
        );
    }
}
