//! Lloyd's k-means with seeded initial centroids drawn from the points.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::som::squared_distance;

/// Result of a k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub labels: Vec<usize>,
    /// Total within-cluster squared error after each iteration's update
    /// step. Non-increasing.
    pub sse_per_iter: Vec<f64>,
    pub iterations: usize,
}

impl KmeansFit {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

/// Lloyd iterations until the largest centroid movement falls below `tol`
/// or `max_iter` is reached. Initial centroids are drawn without
/// replacement from the distinct points; a cluster that empties is
/// re-seeded with the point farthest from its assigned centroid.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KmeansFit> {
    let mut distinct: Vec<usize> = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for &j in &distinct {
            if points[j] == *p {
                continue 'outer;
            }
        }
        distinct.push(i);
    }
    if k < 1 || k > distinct.len() {
        return Err(Error::InvalidK {
            k,
            distinct: distinct.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Sample k distinct points as initial centroids (partial Fisher-Yates).
    for slot in 0..k {
        let pick = rng.random_range(slot..distinct.len());
        distinct.swap(slot, pick);
    }
    let mut centroids: Vec<Vec<f64>> = distinct[..k].iter().map(|&i| points[i].clone()).collect();

    let dim = points[0].len();
    let mut labels = vec![0usize; points.len()];
    let mut sse_per_iter = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;

        // Assignment step: nearest centroid, ties to the lowest index.
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = squared_distance(p, centroid);
                if d < best_dist {
                    best_dist = d;
                    best = c;
                }
            }
            labels[i] = best;
        }

        // Re-seed empty clusters with the point farthest from its centroid.
        loop {
            let mut counts = vec![0usize; k];
            for &l in &labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let farthest = (0..points.len())
                .max_by(|&a, &b| {
                    let da = squared_distance(&points[a], &centroids[labels[a]]);
                    let db = squared_distance(&points[b], &centroids[labels[b]]);
                    da.partial_cmp(&db).unwrap()
                })
                .expect("points is non-empty");
            centroids[empty] = points[farthest].clone();
            labels[farthest] = empty;
        }

        // Update step: centroid = mean of its members.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            let new: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            movement = movement.max(squared_distance(&centroids[c], &new).sqrt());
            centroids[c] = new;
        }

        let sse: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| squared_distance(p, &centroids[l]))
            .sum();
        sse_per_iter.push(sse);

        if movement < tol {
            break;
        }
    }

    Ok(KmeansFit {
        centroids,
        labels,
        sse_per_iter,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: (f64, f64), spread: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let angle = i as f64;
                vec![
                    center.0 + spread * angle.sin(),
                    center.1 + spread * angle.cos(),
                ]
            })
            .collect()
    }

    #[test]
    fn k_equal_to_distinct_points_gives_zero_sse() {
        let points = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let fit = kmeans(&points, 3, 1, 100, 1e-9).unwrap();
        let final_sse = *fit.sse_per_iter.last().unwrap();
        assert_eq!(final_sse, 0.0);
        let mut labels = fit.labels.clone();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(labels.len(), 3);
    }

    #[test]
    fn two_blobs_are_recovered() {
        let mut points = blob((0.0, 0.0), 0.3, 12);
        points.extend(blob((10.0, 10.0), 0.3, 12));
        let fit = kmeans(&points, 2, 5, 300, 1e-6).unwrap();
        let first = fit.labels[0];
        assert!(fit.labels[..12].iter().all(|&l| l == first));
        assert!(fit.labels[12..].iter().all(|&l| l != first));
    }

    #[test]
    fn invalid_k_is_rejected() {
        let points = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            kmeans(&points, 0, 0, 10, 1e-6),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            kmeans(&points, 3, 0, 10, 1e-6),
            Err(Error::InvalidK { .. })
        ));
        // Duplicates collapse the distinct count.
        let dup = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            kmeans(&dup, 3, 0, 10, 1e-6),
            Err(Error::InvalidK { distinct: 2, .. })
        ));
    }

    #[test]
    fn sse_is_monotone_nonincreasing() {
        let points: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 13) as f64, (i % 7) as f64, (i % 5) as f64])
            .collect();
        for seed in 0..10 {
            let fit = kmeans(&points, 4, seed, 300, 0.0).unwrap();
            for pair in fit.sse_per_iter.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-9,
                    "SSE increased: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let points: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 % 11.0, i as f64]).collect();
        let a = kmeans(&points, 3, 9, 300, 1e-6).unwrap();
        let b = kmeans(&points, 3, 9, 300, 1e-6).unwrap();
        assert_eq!(a, b);
    }
}
