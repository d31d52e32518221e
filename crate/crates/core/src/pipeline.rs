//! Per-fold evaluation: train the clustering on the fold's training users,
//! hide ratings from the test users, assign each test user to its closest
//! cluster, index the cluster's item columns, and predict every hidden
//! rating from the top-N most similar items.

use std::collections::{BTreeMap, HashMap};

use crate::cluster::{
    assign_cluster, build_cluster_model, train_som, ClusterModel, SomConfig, SomMap,
};
use crate::data::{hide_ratings, RatingMatrix};
use crate::error::{Error, Result};
use crate::experiment::metrics::{f1, mae, precision_recall};
use crate::sim::{self, SimilarityKind, SimilarityMeasure};
use crate::spectral::SegmentSpectra;

/// k-means settings shared by every pipeline run.
pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_TOL: f64 = 1e-6;

/// Midpoint of the 1..=5 rating scale, the prediction of last resort.
pub const SCALE_MIDPOINT: f64 = 3.0;

/// Seeds for the three stochastic stages of one fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldSeeds {
    pub som: u64,
    pub kmeans: u64,
    pub hide: u64,
}

/// Everything one fold evaluation needs beyond the data itself.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    /// Number of user clusters.
    pub k: usize,
    /// Neighborhood size for prediction.
    pub n: usize,
    pub measure: SimilarityMeasure,
    pub som: SomConfig,
    /// Ratings hidden per test user (capped at half the user's profile).
    pub hidden_per_user: usize,
    /// Ratings at or above this count as relevant/recommended.
    pub relevance_threshold: f64,
    pub seeds: FoldSeeds,
}

/// Metrics of one evaluated fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldMetrics {
    pub mae: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of hidden ratings predicted (every hidden entry gets exactly
    /// one prediction).
    pub hidden_count: usize,
}

/// Item rating columns of one cluster, materialized over the cluster's
/// members in ascending user order so cross-spectra compare aligned
/// positions. Items nobody in the cluster rated are absent.
#[derive(Debug, Clone)]
pub struct ClusterItemIndex {
    pub cluster: usize,
    /// Ascending member user indices; every column has this length.
    pub user_order: Vec<usize>,
    /// Item -> dense rating column (0 = unrated).
    pub item_columns: BTreeMap<usize, Vec<f64>>,
    /// Per-item windowed segment spectra, present once
    /// [`ClusterItemIndex::prepare_spectra`] has run and the columns are
    /// long enough for a two-segment Welch estimate.
    spectra: BTreeMap<usize, SegmentSpectra>,
}

impl ClusterItemIndex {
    pub fn contains(&self, item: usize) -> bool {
        self.item_columns.contains_key(&item)
    }

    /// Items present in the index, ascending.
    pub fn items(&self) -> Vec<usize> {
        self.item_columns.keys().copied().collect()
    }

    /// Computes and caches the segment spectra of every column. A no-op
    /// for non-coherence measures. Clusters too small for two Welch
    /// segments get no spectra; their coherence similarities are treated
    /// as 0 (no evidence of relation) and predictions fall back to the
    /// cluster item mean.
    pub fn prepare_spectra(&mut self, measure: &SimilarityMeasure) {
        if measure.kind != SimilarityKind::Cohr || !self.spectra.is_empty() {
            return;
        }
        let params = measure.welch_for_len(self.user_order.len());
        for (&item, column) in &self.item_columns {
            match SegmentSpectra::compute(column, &params) {
                Ok(spectra) => {
                    self.spectra.insert(item, spectra);
                }
                Err(_) => return, // same length everywhere: all or none
            }
        }
    }

    fn pair_similarity(&self, measure: &SimilarityMeasure, a: usize, b: usize) -> Result<f64> {
        if measure.kind == SimilarityKind::Cohr {
            match (self.spectra.get(&a), self.spectra.get(&b)) {
                (Some(sa), Some(sb)) => Ok(sa.coherence_with(sb)?.mean()),
                _ => Ok(0.0),
            }
        } else {
            sim::similarity(measure, &self.item_columns[&a], &self.item_columns[&b])
        }
    }
}

/// Materializes the item columns of `cluster` from the matrix. Errors when
/// the cluster has no members.
pub fn build_cluster_index(
    matrix: &RatingMatrix,
    model: &ClusterModel,
    cluster: usize,
) -> Result<ClusterItemIndex> {
    let user_order = model.members(cluster);
    if user_order.is_empty() {
        return Err(Error::EmptyCluster(cluster));
    }
    let mut item_columns: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (pos, &user) in user_order.iter().enumerate() {
        for (&item, &rating) in matrix.user_ratings(user) {
            item_columns
                .entry(item)
                .or_insert_with(|| vec![0.0; user_order.len()])[pos] = rating as f64;
        }
    }
    Ok(ClusterItemIndex {
        cluster,
        user_order,
        item_columns,
        spectra: BTreeMap::new(),
    })
}

/// The top-N most similar items to a target within one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct TopNList {
    pub target_item: usize,
    /// `(item, similarity)` sorted by descending similarity, ties by
    /// ascending item index. Only positive similarities are kept, and
    /// never the target itself.
    pub neighbors: Vec<(usize, f64)>,
}

/// Ranks `candidates` by similarity to `target` and keeps the `n` best
/// positive-similarity items.
pub fn item_topn(
    index: &ClusterItemIndex,
    target: usize,
    n: usize,
    measure: &SimilarityMeasure,
    candidates: &[usize],
) -> Result<TopNList> {
    if !index.contains(target) {
        return Err(Error::TargetNotInIndex(target));
    }
    let mut scored = Vec::new();
    for &candidate in candidates {
        if candidate == target {
            continue;
        }
        if !index.contains(candidate) {
            return Err(Error::TargetNotInIndex(candidate));
        }
        let s = index.pair_similarity(measure, target, candidate)?;
        if s > 0.0 {
            scored.push((candidate, s));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(TopNList {
        target_item: target,
        neighbors: scored,
    })
}

/// Similarity-weighted average of the active user's ratings over the
/// neighbors they actually rated, clamped to the rating scale. Falls back
/// to [`predict_cold`] when the user rated none of the neighbors or the
/// weights sum to zero.
pub fn predict(
    active_user_ratings: &BTreeMap<usize, u8>,
    target_item: usize,
    topn: &TopNList,
    index: &ClusterItemIndex,
) -> f64 {
    debug_assert_eq!(topn.target_item, target_item);
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for &(item, s) in &topn.neighbors {
        if let Some(&rating) = active_user_ratings.get(&item) {
            numerator += rating as f64 * s;
            denominator += s;
        }
    }
    if denominator == 0.0 {
        return predict_cold(target_item, index);
    }
    (numerator / denominator).clamp(1.0, 5.0)
}

/// Mean of the ratings the cluster's members gave the item; the scale
/// midpoint when nobody in the cluster rated it.
pub fn predict_cold(target_item: usize, index: &ClusterItemIndex) -> f64 {
    match index.item_columns.get(&target_item) {
        Some(column) => {
            let rated: Vec<f64> = column.iter().copied().filter(|&v| v != 0.0).collect();
            if rated.is_empty() {
                SCALE_MIDPOINT
            } else {
                rated.iter().sum::<f64>() / rated.len() as f64
            }
        }
        None => SCALE_MIDPOINT,
    }
}

/// Trains the fold's SOM on the profiles of every user outside the test
/// set. Split out of [`evaluate_fold`] so a sweep over measures or cluster
/// counts can reuse one training run per fold.
pub fn train_fold_som(
    matrix: &RatingMatrix,
    test_users: &[usize],
    config: &SomConfig,
    seed: u64,
) -> Result<SomMap> {
    let (train_users, profiles) = training_profiles(matrix, test_users);
    if train_users.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    train_som(&profiles, config, seed)
}

fn training_profiles(matrix: &RatingMatrix, test_users: &[usize]) -> (Vec<usize>, Vec<Vec<f64>>) {
    let test: std::collections::BTreeSet<usize> = test_users.iter().copied().collect();
    let train_users: Vec<usize> = (0..matrix.n_users())
        .filter(|u| !test.contains(u))
        .collect();
    let profiles = train_users.iter().map(|&u| matrix.profile(u)).collect();
    (train_users, profiles)
}

/// Runs one cross-validation fold end to end and returns its metrics.
/// Deterministic for fixed inputs and seeds.
pub fn evaluate_fold(
    matrix: &RatingMatrix,
    test_users: &[usize],
    params: &PipelineParams,
) -> Result<FoldMetrics> {
    let som = train_fold_som(matrix, test_users, &params.som, params.seeds.som)?;
    evaluate_fold_with_som(matrix, test_users, params, &som)
}

/// [`evaluate_fold`] with a pre-trained SOM (which must have been trained
/// exactly as [`train_fold_som`] would for these arguments).
pub fn evaluate_fold_with_som(
    matrix: &RatingMatrix,
    test_users: &[usize],
    params: &PipelineParams,
    som: &SomMap,
) -> Result<FoldMetrics> {
    let (train_users, profiles) = training_profiles(matrix, test_users);
    if train_users.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let model = build_cluster_model(
        &profiles,
        &train_users,
        som,
        params.k,
        params.seeds.kmeans,
        KMEANS_MAX_ITER,
        KMEANS_TOL,
    )?;

    let (masked, hidden) = hide_ratings(
        matrix,
        test_users,
        params.hidden_per_user,
        params.seeds.hide,
    )?;
    if hidden.is_empty() {
        return Err(Error::NoHiddenRatings);
    }

    // Assign test users by their masked profile, unrated entries zero.
    let mut user_cluster: BTreeMap<usize, usize> = BTreeMap::new();
    for &(user, _, _) in &hidden.entries {
        if let std::collections::btree_map::Entry::Vacant(slot) = user_cluster.entry(user) {
            slot.insert(assign_cluster(&masked.profile(user), &model)?);
        }
    }

    let mut indexes: BTreeMap<usize, ClusterItemIndex> = BTreeMap::new();
    let mut topn_cache: HashMap<(usize, usize), TopNList> = HashMap::new();
    let mut pairs = Vec::with_capacity(hidden.entries.len());

    for &(user, item, actual) in &hidden.entries {
        let cluster = user_cluster[&user];
        let index = match indexes.entry(cluster) {
            std::collections::btree_map::Entry::Occupied(slot) => slot.into_mut(),
            std::collections::btree_map::Entry::Vacant(slot) => {
                let mut index = build_cluster_index(&masked, &model, cluster)?;
                index.prepare_spectra(&params.measure);
                slot.insert(index)
            }
        };

        let predicted = if index.contains(item) {
            let topn = match topn_cache.entry((cluster, item)) {
                std::collections::hash_map::Entry::Occupied(slot) => slot.into_mut(),
                std::collections::hash_map::Entry::Vacant(slot) => slot.insert(item_topn(
                    index,
                    item,
                    params.n,
                    &params.measure,
                    &index.items(),
                )?),
            };
            predict(masked.user_ratings(user), item, topn, index)
        } else {
            // Nobody in the cluster rated the item.
            predict_cold(item, index)
        };
        pairs.push((predicted, actual as f64));
    }

    let mae = mae(&pairs)?;
    let (precision, recall) = precision_recall(&pairs, params.relevance_threshold)?;
    Ok(FoldMetrics {
        mae,
        precision,
        recall,
        f1: f1(precision, recall),
        hidden_count: pairs.len(),
    })
}
