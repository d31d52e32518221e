//! Cross-validated experiments: configuration, the sweep driver, the
//! silhouette comparison of the two clustering arms, and CSV reports.

pub mod metrics;
mod runner;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use runner::{run_experiment, silhouette_comparison};

use crate::cluster::SomConfig;
use crate::error::{Error, Result};
use crate::sim::SimilarityKind;
use crate::spectral::WelchParams;

/// Full description of an experiment run: the grid of
/// (sparsity, measure, K, N) points, the cross-validation shape, and the
/// clustering/estimator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub seed: u64,
    /// Cross-validation folds.
    pub folds: usize,
    /// Cluster counts to sweep.
    pub k_values: Vec<usize>,
    /// Neighborhood sizes to sweep.
    pub n_values: Vec<usize>,
    /// Keep-fractions of the original rating count; 1.0 means unchanged.
    pub sparsity_levels: Vec<f64>,
    pub measures: Vec<SimilarityKind>,
    pub som: SomConfig,
    /// Welch estimator override for the coherence measure; `None` derives
    /// segmenting from each cluster's size.
    pub welch: Option<WelchParams>,
    pub hidden_per_user: usize,
    pub relevance_threshold: f64,
}

impl ExperimentConfig {
    /// Defaults mirroring the headline sweeps: 5 folds, K from 10 to 55 in
    /// steps of 5, N from 10 to 100 in steps of 10, keep-fractions
    /// {1.0, 0.18, 0.1, 0.05}, all five measures.
    pub fn new(data_path: impl Into<PathBuf>, seed: u64) -> Self {
        ExperimentConfig {
            data_path: data_path.into(),
            seed,
            folds: 5,
            k_values: (10..=55).step_by(5).collect(),
            n_values: (10..=100).step_by(10).collect(),
            sparsity_levels: vec![1.0, 0.18, 0.1, 0.05],
            measures: SimilarityKind::ALL.to_vec(),
            som: SomConfig::default(),
            welch: None,
            hidden_per_user: 10,
            relevance_threshold: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        if self.k_values.is_empty() || self.k_values.iter().any(|&k| k < 1) {
            return Err(Error::InvalidParameter("K values must be >= 1".into()));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 1) {
            return Err(Error::InvalidParameter("N values must be >= 1".into()));
        }
        if self.sparsity_levels.is_empty()
            || self.sparsity_levels.iter().any(|&s| !(s > 0.0 && s <= 1.0))
        {
            return Err(Error::InvalidParameter(
                "sparsity levels must lie in (0, 1]".into(),
            ));
        }
        if self.measures.is_empty() {
            return Err(Error::InvalidParameter("no measures selected".into()));
        }
        if !(1.0..=5.0).contains(&self.relevance_threshold) {
            return Err(Error::InvalidParameter(
                "relevance threshold must lie in 1..=5".into(),
            ));
        }
        if self.hidden_per_user < 1 {
            return Err(Error::InvalidParameter(
                "hidden_per_user must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Fold column of a report row: a concrete fold or the cross-fold mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldId {
    Fold(usize),
    Mean,
}

impl std::fmt::Display for FoldId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FoldId::Fold(i) => write!(f, "{i}"),
            FoldId::Mean => f.write_str("mean"),
        }
    }
}

/// One grid-point x fold (or mean) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub measure: SimilarityKind,
    pub k: usize,
    pub n: usize,
    pub sparsity: f64,
    pub fold: FoldId,
    pub mae: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Description of the run that produced a report: the full configuration
/// (which carries the seed and dataset path) plus the wall clock. Not part
/// of the CSV so identical runs emit identical bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub wall_clock_secs: f64,
}

/// All rows of one experiment plus run metadata. Rows appear in
/// deterministic grid order (sparsity, measure, K, N, folds then mean).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub metadata: RunMetadata,
}

impl ExperimentReport {
    /// Serializes the rows as CSV with a fixed column order and 4-decimal
    /// floats. Byte-identical for identical rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "measure,K,N,sparsity,fold,mae,precision,recall,f1")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.4},{},{:.4},{:.4},{:.4},{:.4}",
                row.measure,
                row.k,
                row.n,
                row.sparsity,
                row.fold,
                row.mae,
                row.precision,
                row.recall,
                row.f1
            )?;
        }
        Ok(())
    }
}

/// Writes a report to a file. See [`ExperimentReport::write_csv`].
pub fn emit_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    report.write_csv(&mut file).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Which clustering produced a silhouette measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusteringArm {
    /// k-means directly on the user profiles.
    KmeansDirect,
    /// SOM first, k-means on the occupied prototypes, users scored through
    /// their best matching unit.
    SomKmeans,
}

impl std::fmt::Display for ClusteringArm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusteringArm::KmeansDirect => f.write_str("kmeans"),
            ClusteringArm::SomKmeans => f.write_str("som+kmeans"),
        }
    }
}

/// One (k, arm) measurement of the silhouette comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteRow {
    pub k: usize,
    pub arm: ClusteringArm,
    /// Users with a negative silhouette (likely misassigned).
    pub negative_count: usize,
    pub mean_silhouette: f64,
    /// Wall-clock of the arm's clustering plus scoring. Reported alongside
    /// the table but kept out of the CSV so reruns are byte-identical.
    pub wall_clock_secs: f64,
}

/// Writes silhouette-comparison rows as CSV (`k,arm,negative,mean_silhouette`).
pub fn emit_silhouette_csv(rows: &[SilhouetteRow], path: &Path) -> Result<()> {
    let mut out = String::from("k,arm,negative,mean_silhouette\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.4}\n",
            row.k, row.arm, row.negative_count, row.mean_silhouette
        ));
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
