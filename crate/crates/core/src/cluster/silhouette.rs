//! Per-point silhouette scores for a clustering.

use crate::error::{Error, Result};

use super::som::squared_distance;

/// Silhouette value per point: `(b - a) / max(a, b)` where `a` is the mean
/// distance to the point's own cluster and `b` the smallest mean distance
/// to another cluster. Members of singleton clusters score 0 by convention.
///
/// Values near 1 mean well-separated points, negative values likely
/// misassignments. Requires at least two non-empty clusters.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<Vec<f64>> {
    if points.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: labels.len(),
        });
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let non_empty = counts.iter().filter(|&&c| c > 0).count();
    if non_empty < 2 {
        return Err(Error::TooFewClusters(non_empty));
    }

    let n = points.len();
    // Pairwise distances once; n is at most ~1000 users here.
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = squared_distance(&points[i], &points[j]).sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let own = labels[i];
        if counts[own] <= 1 {
            scores.push(0.0);
            continue;
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist[i * n + j];
            }
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        scores.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    Ok(scores)
}
