//! Sweep driver: cross-validated evaluation over the configured
//! (sparsity, measure, K, N) grid, and the two-arm silhouette comparison.
//!
//! All randomness flows from the config seed: fold-level seeds are
//! `seed + fold_index`, refined per purpose with [`derive_seed`]. Fold
//! evaluations are independent and run in parallel; results are assembled
//! in deterministic grid order, so reports do not depend on scheduling.

use std::time::Instant;

use rayon::prelude::*;

use crate::cluster::{build_cluster_model, kmeans, silhouette, train_som, SomMap};
use crate::data::{load_movielens, make_folds, sparsify, RatingMatrix};
use crate::derive_seed;
use crate::error::Result;
use crate::pipeline::{
    evaluate_fold_with_som, train_fold_som, FoldMetrics, FoldSeeds, PipelineParams,
    KMEANS_MAX_ITER, KMEANS_TOL,
};
use crate::sim::SimilarityMeasure;

use super::{
    ClusteringArm, ExperimentConfig, ExperimentReport, FoldId, ReportRow, RunMetadata,
    SilhouetteRow,
};

// Seed stream tags.
const TAG_SOM: u64 = 1;
const TAG_KMEANS: u64 = 2;
const TAG_HIDE: u64 = 3;
const TAG_SPARSIFY: u64 = 100;
const TAG_SIL_SOM: u64 = 200;
const TAG_SIL_KMEANS: u64 = 300;

fn fold_seeds(base_seed: u64, fold: usize) -> FoldSeeds {
    let fold_seed = base_seed.wrapping_add(fold as u64);
    FoldSeeds {
        som: derive_seed(fold_seed, TAG_SOM),
        kmeans: derive_seed(fold_seed, TAG_KMEANS),
        hide: derive_seed(fold_seed, TAG_HIDE),
    }
}

/// Runs the full grid: for every sparsity level the matrix is thinned and
/// cross-validated once per (measure, K, N) point; per-fold rows and their
/// mean are appended in grid order. Nothing is emitted unless every grid
/// point succeeds.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let matrix = load_movielens(&config.data_path)?;
    let mut rows = Vec::new();

    for (s_idx, &sparsity) in config.sparsity_levels.iter().enumerate() {
        let sparse = if sparsity == 1.0 {
            matrix.clone()
        } else {
            sparsify(
                &matrix,
                sparsity,
                derive_seed(config.seed, TAG_SPARSIFY + s_idx as u64),
            )?
        };
        let plan = make_folds(&sparse, config.folds, config.seed)?;

        // One SOM per fold serves every measure, K and N: it depends only
        // on the training users and the fold's SOM seed.
        let soms: Vec<SomMap> = (0..config.folds)
            .into_par_iter()
            .map(|fold| {
                train_fold_som(
                    &sparse,
                    &plan.folds[fold],
                    &config.som,
                    fold_seeds(config.seed, fold).som,
                )
            })
            .collect::<Result<_>>()?;

        for &measure in &config.measures {
            for &k in &config.k_values {
                for &n in &config.n_values {
                    let fold_results: Vec<FoldMetrics> = (0..config.folds)
                        .into_par_iter()
                        .map(|fold| {
                            let params = PipelineParams {
                                k,
                                n,
                                measure: SimilarityMeasure {
                                    kind: measure,
                                    welch: config.welch,
                                },
                                som: config.som.clone(),
                                hidden_per_user: config.hidden_per_user,
                                relevance_threshold: config.relevance_threshold,
                                seeds: fold_seeds(config.seed, fold),
                            };
                            evaluate_fold_with_som(&sparse, &plan.folds[fold], &params, &soms[fold])
                        })
                        .collect::<Result<_>>()?;

                    let folds = fold_results.len() as f64;
                    let mut mean = (0.0, 0.0, 0.0, 0.0);
                    for (fold, metrics) in fold_results.iter().enumerate() {
                        rows.push(ReportRow {
                            measure,
                            k,
                            n,
                            sparsity,
                            fold: FoldId::Fold(fold),
                            mae: metrics.mae,
                            precision: metrics.precision,
                            recall: metrics.recall,
                            f1: metrics.f1,
                        });
                        mean.0 += metrics.mae;
                        mean.1 += metrics.precision;
                        mean.2 += metrics.recall;
                        mean.3 += metrics.f1;
                    }
                    rows.push(ReportRow {
                        measure,
                        k,
                        n,
                        sparsity,
                        fold: FoldId::Mean,
                        mae: mean.0 / folds,
                        precision: mean.1 / folds,
                        recall: mean.2 / folds,
                        f1: mean.3 / folds,
                    });
                }
            }
        }
    }

    Ok(ExperimentReport {
        rows,
        metadata: RunMetadata {
            config: config.clone(),
            wall_clock_secs: started.elapsed().as_secs_f64(),
        },
    })
}

/// Compares plain k-means on the user profiles against SOM followed by
/// k-means on the occupied prototypes (users scored through their best
/// matching unit), for every k in `k_values`. Returns two rows per k with
/// negative-silhouette counts, mean silhouette and per-arm wall-clock.
pub fn silhouette_comparison(
    matrix: &RatingMatrix,
    k_values: &[usize],
    seed: u64,
    som_config: &crate::cluster::SomConfig,
) -> Result<Vec<SilhouetteRow>> {
    let users: Vec<usize> = (0..matrix.n_users()).collect();
    let profiles: Vec<Vec<f64>> = users.iter().map(|&u| matrix.profile(u)).collect();

    // The SOM is independent of k; train it once and charge each k-row its
    // full cost, which is what a standalone run of that arm would pay.
    let som_started = Instant::now();
    let som = train_som(&profiles, som_config, derive_seed(seed, TAG_SIL_SOM))?;
    let som_secs = som_started.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    for &k in k_values {
        let kmeans_seed = derive_seed(seed, TAG_SIL_KMEANS + k as u64);

        let started = Instant::now();
        let fit = kmeans(&profiles, k, kmeans_seed, KMEANS_MAX_ITER, KMEANS_TOL)?;
        let scores = silhouette(&profiles, &fit.labels)?;
        rows.push(SilhouetteRow {
            k,
            arm: ClusteringArm::KmeansDirect,
            negative_count: scores.iter().filter(|&&s| s < 0.0).count(),
            mean_silhouette: scores.iter().sum::<f64>() / scores.len() as f64,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        });

        let started = Instant::now();
        let model = build_cluster_model(
            &profiles,
            &users,
            &som,
            k,
            kmeans_seed,
            KMEANS_MAX_ITER,
            KMEANS_TOL,
        )?;
        let labels: Vec<usize> = users.iter().map(|u| model.assignment[u]).collect();
        let scores = silhouette(&profiles, &labels)?;
        rows.push(SilhouetteRow {
            k,
            arm: ClusteringArm::SomKmeans,
            negative_count: scores.iter().filter(|&&s| s < 0.0).count(),
            mean_silhouette: scores.iter().sum::<f64>() / scores.len() as f64,
            wall_clock_secs: som_secs + started.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RatingMatrix;
    use crate::pipeline::evaluate_fold;
    use crate::sim::SimilarityKind;
    use std::io::Write as _;

    fn staggered_matrix(n_users: u32, n_items: u32) -> RatingMatrix {
        // Two broad taste groups with deterministic ratings.
        let mut records = Vec::new();
        for u in 0..n_users {
            let group_offset = if u % 2 == 0 { 0 } else { n_items / 2 };
            for j in 0..6 {
                let item = (group_offset + (u + j * 3) % (n_items / 2)) % n_items;
                let rating = 1 + ((u + j) % 5) as u8;
                records.push((u, item, rating));
            }
        }
        RatingMatrix::from_records(&records).unwrap()
    }

    fn tiny_config(path: &std::path::Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(path, 7);
        config.folds = 2;
        config.k_values = vec![2];
        config.n_values = vec![3];
        config.sparsity_levels = vec![1.0];
        config.measures = vec![SimilarityKind::Jaccard, SimilarityKind::Msd];
        config.som = crate::cluster::SomConfig {
            grid_rows: 3,
            grid_cols: 3,
            ordering_steps: 100,
            tuning_steps: 100,
            ..crate::cluster::SomConfig::with_grid(3, 3)
        };
        config
    }

    fn write_dataset(matrix: &RatingMatrix) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        let mut buf = Vec::new();
        matrix.write_tsv(&mut buf).unwrap();
        file.write_all(&buf).unwrap();
        file
    }

    #[test]
    fn grid_runs_produce_fold_and_mean_rows() {
        let matrix = staggered_matrix(14, 12);
        let file = write_dataset(&matrix);
        let config = tiny_config(file.path());
        let report = run_experiment(&config).unwrap();
        // 1 sparsity x 2 measures x 1 K x 1 N x (2 folds + mean).
        assert_eq!(report.rows.len(), 2 * 3);
        for chunk in report.rows.chunks(3) {
            let mean = &chunk[2];
            assert!(matches!(mean.fold, FoldId::Mean));
            assert!((mean.mae - (chunk[0].mae + chunk[1].mae) / 2.0).abs() < 1e-12);
            assert!((mean.f1 - (chunk[0].f1 + chunk[1].f1) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_are_reproducible_for_a_seed() {
        let matrix = staggered_matrix(14, 12);
        let file = write_dataset(&matrix);
        let config = tiny_config(file.path());
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn shared_som_grid_matches_naive_per_fold_evaluation() {
        let matrix = staggered_matrix(14, 12);
        let file = write_dataset(&matrix);
        let config = tiny_config(file.path());
        let report = run_experiment(&config).unwrap();

        // Recompute one grid point the slow way: evaluate_fold trains its
        // own SOM from the same derived seeds.
        let plan = make_folds(&matrix, config.folds, config.seed).unwrap();
        for fold in 0..config.folds {
            let params = PipelineParams {
                k: 2,
                n: 3,
                measure: SimilarityMeasure::new(SimilarityKind::Jaccard),
                som: config.som.clone(),
                hidden_per_user: config.hidden_per_user,
                relevance_threshold: config.relevance_threshold,
                seeds: fold_seeds(config.seed, fold),
            };
            let naive = evaluate_fold(&matrix, &plan.folds[fold], &params).unwrap();
            let row = report
                .rows
                .iter()
                .find(|r| r.measure == SimilarityKind::Jaccard && r.fold == FoldId::Fold(fold))
                .unwrap();
            assert_eq!(row.mae, naive.mae);
            assert_eq!(row.f1, naive.f1);
        }
    }

    #[test]
    fn silhouette_comparison_emits_two_rows_per_k() {
        let matrix = staggered_matrix(20, 12);
        let som_config = crate::cluster::SomConfig {
            grid_rows: 3,
            grid_cols: 3,
            ordering_steps: 150,
            tuning_steps: 150,
            ..crate::cluster::SomConfig::with_grid(3, 3)
        };
        let rows = silhouette_comparison(&matrix, &[2, 3], 5, &som_config).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].k, 2);
        assert_eq!(rows[0].arm, ClusteringArm::KmeansDirect);
        assert_eq!(rows[1].arm, ClusteringArm::SomKmeans);
        for row in &rows {
            assert!(row.negative_count <= 20);
            assert!((-1.0..=1.0).contains(&row.mean_silhouette));
        }
    }

    #[test]
    fn two_blob_matrix_has_no_negative_silhouettes() {
        // Two tight taste blobs: group 0 rates items 0..3, group 1 items 8..11.
        let mut records = Vec::new();
        for u in 0..10u32 {
            let base = if u < 5 { 0 } else { 8 };
            for j in 0..4u32 {
                records.push((u, base + j, 4 + (j % 2) as u8));
            }
        }
        let matrix = RatingMatrix::from_records(&records).unwrap();
        let som_config = crate::cluster::SomConfig {
            grid_rows: 3,
            grid_cols: 3,
            ordering_steps: 200,
            tuning_steps: 200,
            ..crate::cluster::SomConfig::with_grid(3, 3)
        };
        let rows = silhouette_comparison(&matrix, &[2], 3, &som_config).unwrap();
        for row in rows {
            assert_eq!(row.negative_count, 0, "arm {} had negatives", row.arm);
        }
    }
}
