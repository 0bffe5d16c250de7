//! Seeded k-means (k-means++ initialization, Lloyd iterations) and the
//! elbow/silhouette machinery for choosing k.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{squared_distance, AnalysisError};

/// Hard cap on Lloyd iterations per fit.
pub const MAX_ITERATIONS: usize = 300;

/// A fitted k-means model. Given identical (data, k, seed) the fit is
/// bit-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Row index -> cluster id in [0, k). Every row is assigned to its
    /// nearest centroid, ties resolved toward the lowest cluster id.
    pub assignments: Vec<usize>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    pub seed: u64,
    pub iterations: usize,
    /// Inertia after each assignment pass; non-increasing.
    pub inertia_trace: Vec<f64>,
}

/// Fits k-means with k-means++ initialization from `seed` and Lloyd
/// iterations until the assignment fixpoint or [`MAX_ITERATIONS`].
///
/// An empty cluster is repaired by reseeding its centroid to the point
/// farthest from its assigned centroid, then reassigning.
pub fn kmeans_fit(data: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterModel, AnalysisError> {
    let rows = data.len();
    if k < 1 || k > rows {
        return Err(AnalysisError::KOutOfRange { k, rows });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(data, k, &mut rng);
    let mut assignments = assign_with_repair(data, &mut centroids);
    let mut inertia = total_inertia(data, &centroids, &assignments);
    let mut inertia_trace = vec![inertia];
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        let mut new_centroids = centroid_means(data, &assignments, k, &centroids);
        let new_assignments = assign_with_repair(data, &mut new_centroids);
        iterations = iter;
        inertia = total_inertia(data, &new_centroids, &new_assignments);
        inertia_trace.push(inertia);
        let converged = new_assignments == assignments;
        centroids = new_centroids;
        assignments = new_assignments;
        if converged {
            break;
        }
    }

    Ok(ClusterModel {
        k,
        centroids,
        assignments,
        inertia,
        seed,
        iterations,
        inertia_trace,
    })
}

fn plus_plus_init(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let rows = data.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(data[rng.gen_range(0..rows)].clone());

    let mut nearest_sq: Vec<f64> = data
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest_sq.iter().sum();
        let chosen = if total > 0.0 {
            // D^2-weighted draw.
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = rows - 1;
            for (i, &d) in nearest_sq.iter().enumerate() {
                acc += d;
                if acc >= target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.gen_range(0..rows)
        };
        let centroid = data[chosen].clone();
        for (i, p) in data.iter().enumerate() {
            let d = squared_distance(p, &centroid);
            if d < nearest_sq[i] {
                nearest_sq[i] = d;
            }
        }
        centroids.push(centroid);
    }
    centroids
}

fn assign(data: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    data.iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = squared_distance(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Assigns points to nearest centroids, repairing empty clusters by moving
/// their centroid onto the point farthest from its assigned centroid. The
/// repair loop is bounded; coincident-point degeneracies are left as-is.
fn assign_with_repair(data: &[Vec<f64>], centroids: &mut [Vec<f64>]) -> Vec<usize> {
    let k = centroids.len();
    let mut assignments = assign(data, centroids);
    for _ in 0..k {
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return assignments;
        };
        let (farthest, dist) = data
            .iter()
            .enumerate()
            .map(|(i, p)| (i, squared_distance(p, &centroids[assignments[i]])))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, d)| {
                    if d > acc.1 {
                        (i, d)
                    } else {
                        acc
                    }
                },
            );
        if dist <= 0.0 {
            // All points coincide with their centroids; nothing to move.
            return assignments;
        }
        centroids[empty] = data[farthest].clone();
        assignments = assign(data, centroids);
    }
    assignments
}

fn centroid_means(
    data: &[Vec<f64>],
    assignments: &[usize],
    k: usize,
    previous: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let dim = data[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in data.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            sums[c] = previous[c].clone();
        } else {
            for s in &mut sums[c] {
                *s /= counts[c] as f64;
            }
        }
    }
    sums
}

fn total_inertia(data: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    data.iter()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum()
}

/// Mean silhouette over all points with Euclidean distance:
/// `s(i) = (b - a) / max(a, b)`. Points in singleton clusters contribute 0.
pub fn silhouette_score(data: &[Vec<f64>], assignments: &[usize]) -> Result<f64, AnalysisError> {
    if data.len() != assignments.len() {
        return Err(AnalysisError::LengthMismatch(data.len(), assignments.len()));
    }
    let k = assignments.iter().max().map_or(0, |&m| m + 1);
    if k < 2 {
        return Err(AnalysisError::TooFewClusters);
    }
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(AnalysisError::EmptyCluster(empty));
    }

    let n = data.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if counts[own] == 1 {
            continue; // singleton contributes s = 0
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i == j {
                continue;
            }
            sums[assignments[j]] += squared_distance(&data[i], &data[j]).sqrt();
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Elbow heuristic: the interior k maximizing the second difference
/// `inertia(k-1) - 2*inertia(k) + inertia(k+1)`; ties break toward smaller k.
/// `inertias` must cover consecutive k starting at 1 with at least 3 entries.
pub fn elbow_k(inertias: &[(usize, f64)]) -> Result<usize, AnalysisError> {
    if inertias.len() < 3 || inertias.first().map(|&(k, _)| k) != Some(1) {
        return Err(AnalysisError::NonConsecutiveKRange);
    }
    for (i, &(k, _)) in inertias.iter().enumerate() {
        if k != i + 1 {
            return Err(AnalysisError::NonConsecutiveKRange);
        }
    }
    let mut best_k = inertias[1].0;
    let mut best = f64::NEG_INFINITY;
    for w in inertias.windows(3) {
        let second_difference = w[0].1 - 2.0 * w[1].1 + w[2].1;
        if second_difference > best {
            best = second_difference;
            best_k = w[1].0;
        }
    }
    Ok(best_k)
}

/// Diagnostics emitted alongside the chosen k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDiagnostics {
    /// (k, inertia) for k in [1, k_max].
    pub inertia_curve: Vec<(usize, f64)>,
    /// (k, mean silhouette) for the scoreable k in [2, k_max].
    pub silhouette_curve: Vec<(usize, f64)>,
    pub elbow_k: usize,
    pub chosen_k: usize,
    pub seed: u64,
}

/// Highest-scoring k; equal scores resolve toward the smaller k.
fn argmax_smallest_k(curve: &[(usize, f64)]) -> Option<usize> {
    curve
        .iter()
        .fold(None::<(usize, f64)>, |acc, &(k, s)| match acc {
            Some((_, best)) if s <= best => acc,
            _ => Some((k, s)),
        })
        .map(|(k, _)| k)
}

/// Fits k in [2, k_max] (plus k=1 for the inertia curve) and picks the k
/// with the highest silhouette; ties break toward smaller k. The elbow k is
/// reported as a diagnostic, not used for the decision.
pub fn select_k(
    data: &[Vec<f64>],
    k_max: usize,
    seed: u64,
) -> Result<(usize, SelectionDiagnostics), AnalysisError> {
    let rows = data.len();
    if k_max < 3 || k_max > rows {
        return Err(AnalysisError::KOutOfRange { k: k_max, rows });
    }

    let mut inertia_curve = Vec::with_capacity(k_max);
    let mut silhouette_curve = Vec::new();
    for k in 1..=k_max {
        let model = kmeans_fit(data, k, seed)?;
        inertia_curve.push((k, model.inertia));
        if k >= 2 {
            if let Ok(score) = silhouette_score(data, &model.assignments) {
                silhouette_curve.push((k, score));
            }
        }
    }

    let chosen_k = argmax_smallest_k(&silhouette_curve).ok_or(AnalysisError::NoViableK)?;
    let elbow = elbow_k(&inertia_curve)?;

    Ok((
        chosen_k,
        SelectionDiagnostics {
            inertia_curve,
            silhouette_curve,
            elbow_k: elbow,
            chosen_k,
            seed,
        },
    ))
}
