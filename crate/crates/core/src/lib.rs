//! Item-based collaborative filtering built around a frequency-domain
//! similarity measure.
//!
//! The crate clusters user rating profiles with a self-organizing map
//! followed by k-means, maps the item rating columns of each cluster to the
//! frequency domain with a radix-2 FFT, and scores item-item similarity by
//! the mean magnitude-squared coherence of the column spectra. Rating
//! prediction uses a top-N weighted average over the most similar items,
//! with cluster-mean and scale-midpoint fallbacks for cold starts.
//!
//! Modules follow the processing stages:
//!
//! - [`data`]: sparse rating matrix, MovieLens loading, sparsification,
//!   fold plans and hidden-rating masks,
//! - [`cluster`]: SOM training, k-means over the trained prototypes,
//!   silhouette scoring, user-to-cluster assignment,
//! - [`spectral`]: FFT/IFFT, power and cross-power spectra, Welch-averaged
//!   magnitude-squared coherence and the coherence similarity,
//! - [`sim`]: baseline similarity measures (PCC, Jaccard, MSD, JMSD) behind
//!   one dispatch type shared with the coherence measure,
//! - [`pipeline`]: per-fold evaluation (cluster, index items, top-N,
//!   predict),
//! - [`experiment`]: metrics, cross-validated parameter sweeps, silhouette
//!   comparison and CSV report emission.

pub mod cluster;
pub mod data;
pub mod error;
pub mod experiment;
pub mod pipeline;
pub mod sim;
pub mod spectral;

pub use cluster::{ClusterModel, KmeansFit, SomConfig, SomMap};
pub use data::{FoldPlan, HiddenRatings, RatingMatrix};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentReport, SilhouetteRow};
pub use pipeline::{ClusterItemIndex, FoldMetrics, PipelineParams, TopNList};
pub use sim::{SimilarityKind, SimilarityMeasure};
pub use spectral::{CoherenceEstimate, Spectrum, WelchParams, Window};

/// Derives an independent seed stream from a base seed and a stream tag.
///
/// Fold-level seeds are `base + fold_index`; this mixes that fold seed with
/// a per-purpose tag (SOM init, k-means init, rating hiding, ...) so the
/// streams never overlap. SplitMix64 finalizer, stable across platforms.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
