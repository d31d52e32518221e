//! Sparse rating matrix: loading, cleaning, sparsification, fold plans and
//! hidden-rating masks.
//!
//! Ratings are stored as a coordinate map per user (roughly 6% of MovieLens
//! 100K cells are rated); dense rows and columns are materialized on
//! demand. Every stochastic operation takes an explicit seed and is
//! reproducible bit for bit.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Users x items grid of ratings in `1..=5`; absent entries are unrated
/// (semantically 0). Indices are contiguous and 0-based; the original file
/// ids are kept for round-tripping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    n_items: usize,
    /// `rows[user_index]` maps item index to rating.
    rows: Vec<BTreeMap<usize, u8>>,
    /// Original dataset id per user index.
    user_ids: Vec<u32>,
    /// Original dataset id per item index.
    item_ids: Vec<u32>,
}

impl RatingMatrix {
    /// Builds a matrix from `(user_id, item_id, rating)` records with
    /// arbitrary original ids. Indices are assigned by ascending id. A
    /// repeated (user, item) pair keeps the last rating seen.
    pub fn from_records(records: &[(u32, u32, u8)]) -> Result<Self> {
        let mut user_ids: Vec<u32> = records.iter().map(|r| r.0).collect();
        let mut item_ids: Vec<u32> = records.iter().map(|r| r.1).collect();
        user_ids.sort_unstable();
        user_ids.dedup();
        item_ids.sort_unstable();
        item_ids.dedup();
        let user_index: BTreeMap<u32, usize> = user_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        let item_index: BTreeMap<u32, usize> = item_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();

        let mut rows = vec![BTreeMap::new(); user_ids.len()];
        for &(u, i, r) in records {
            if !(1..=5).contains(&r) {
                return Err(Error::InvalidParameter(format!(
                    "rating {r} outside 1..=5 for user {u}, item {i}"
                )));
            }
            rows[user_index[&u]].insert(item_index[&i], r);
        }
        Ok(RatingMatrix {
            n_items: item_ids.len(),
            rows,
            user_ids,
            item_ids,
        })
    }

    pub fn n_users(&self) -> usize {
        self.rows.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Total number of stored ratings.
    pub fn rating_count(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Rating of `user` for `item`, or `None` if unrated.
    pub fn rating(&self, user: usize, item: usize) -> Option<u8> {
        self.rows[user].get(&item).copied()
    }

    /// The rated items of one user, ordered by item index.
    pub fn user_ratings(&self, user: usize) -> &BTreeMap<usize, u8> {
        &self.rows[user]
    }

    /// Dense profile vector of one user (length `n_items`, 0 = unrated).
    pub fn profile(&self, user: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_items];
        for (&item, &rating) in &self.rows[user] {
            row[item] = rating as f64;
        }
        row
    }

    /// Original dataset id of a user index.
    pub fn user_id(&self, user: usize) -> u32 {
        self.user_ids[user]
    }

    /// Original dataset id of an item index.
    pub fn item_id(&self, item: usize) -> u32 {
        self.item_ids[item]
    }

    /// Iterates all stored `(user, item, rating)` triples in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |(&i, &r)| (u, i, r)))
    }

    /// Inserts a rating. Used by tests and by mask reconstruction.
    pub fn insert(&mut self, user: usize, item: usize, rating: u8) {
        debug_assert!((1..=5).contains(&rating));
        self.rows[user].insert(item, rating);
    }

    /// Percentage of cells holding a rating: `R / (M N) * 100`.
    pub fn sparsity_level(&self) -> f64 {
        self.rating_count() as f64 / (self.n_users() as f64 * self.n_items as f64) * 100.0
    }

    /// Writes the matrix in the four-column tab-separated layout
    /// (`user_id<TAB>item_id<TAB>rating<TAB>0`), rows ordered by user then
    /// item index. The output is itself loadable by [`load_movielens`].
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (u, i, r) in self.iter() {
            writeln!(out, "{}\t{}\t{}\t0", self.user_ids[u], self.item_ids[i], r)?;
        }
        Ok(())
    }
}

/// Disjoint user partitions for cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

/// Ratings removed from test users for evaluation, with their true values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenRatings {
    /// `(user, item, true_rating)`, sorted by user then item.
    pub entries: Vec<(usize, usize, u8)>,
    pub seed: u64,
}

impl HiddenRatings {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the hidden entries in the same four-column layout as
    /// [`RatingMatrix::write_tsv`], using the matrix for original ids.
    pub fn write_tsv<W: Write>(&self, matrix: &RatingMatrix, out: &mut W) -> std::io::Result<()> {
        for &(u, i, r) in &self.entries {
            writeln!(
                out,
                "{}\t{}\t{}\t0",
                matrix.user_id(u),
                matrix.item_id(i),
                r
            )?;
        }
        Ok(())
    }
}

/// Loads a MovieLens-style file: one `user<TAB>item<TAB>rating<TAB>timestamp`
/// record per line. Timestamps are discarded; user and item ids are
/// compacted to contiguous 0-based indices in ascending id order.
pub fn load_movielens(path: &Path) -> Result<RatingMatrix> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let line_no = line_no + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                reason: format!("expected 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<i64> {
            s.trim().parse::<i64>().map_err(|_| Error::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                reason: format!("{what} `{s}` is not an integer"),
            })
        };
        let user = parse(fields[0], "user id")?;
        let item = parse(fields[1], "item id")?;
        let rating = parse(fields[2], "rating")?;
        parse(fields[3], "timestamp")?;
        if !(1..=5).contains(&rating) {
            return Err(Error::OutOfRangeRating {
                path: path.to_path_buf(),
                line: line_no,
                rating,
            });
        }
        if user < 0 || item < 0 || user > u32::MAX as i64 || item > u32::MAX as i64 {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                reason: "user or item id out of range".into(),
            });
        }
        records.push((user as u32, item as u32, rating as u8));
    }
    if records.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    RatingMatrix::from_records(&records)
}

/// Drops users with fewer than `min_count` ratings and re-compacts user
/// indices. The item set is left unchanged.
pub fn clean_min_ratings(matrix: &RatingMatrix, min_count: usize) -> Result<RatingMatrix> {
    if min_count < 1 {
        return Err(Error::InvalidParameter(
            "min_count must be at least 1".into(),
        ));
    }
    let keep: Vec<usize> = (0..matrix.n_users())
        .filter(|&u| matrix.rows[u].len() >= min_count)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Ok(RatingMatrix {
        n_items: matrix.n_items,
        rows: keep.iter().map(|&u| matrix.rows[u].clone()).collect(),
        user_ids: keep.iter().map(|&u| matrix.user_ids[u]).collect(),
        item_ids: matrix.item_ids.clone(),
    })
}

/// Retains exactly `round(keep_fraction * R)` ratings chosen uniformly at
/// random. Matrix dimensions and id maps are unchanged; users may end up
/// with empty profiles.
pub fn sparsify(matrix: &RatingMatrix, keep_fraction: f64, seed: u64) -> Result<RatingMatrix> {
    if keep_fraction <= 0.0 || keep_fraction > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "keep_fraction must be in (0, 1], got {keep_fraction}"
        )));
    }
    let total = matrix.rating_count();
    let keep = (keep_fraction * total as f64).round() as usize;
    if keep == total {
        return Ok(matrix.clone());
    }
    let mut coords: Vec<(usize, usize)> = matrix.iter().map(|(u, i, _)| (u, i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Partial Fisher-Yates: after k swaps the first k slots are a uniform
    // sample without replacement.
    for slot in 0..keep {
        let pick = rng.random_range(slot..coords.len());
        coords.swap(slot, pick);
    }
    let mut rows = vec![BTreeMap::new(); matrix.n_users()];
    for &(u, i) in &coords[..keep] {
        rows[u].insert(i, matrix.rows[u][&i]);
    }
    Ok(RatingMatrix {
        n_items: matrix.n_items,
        rows,
        user_ids: matrix.user_ids.clone(),
        item_ids: matrix.item_ids.clone(),
    })
}

/// Partitions the users into `k` disjoint folds of nearly equal size
/// (sizes differ by at most one), shuffled with the given seed.
pub fn make_folds(matrix: &RatingMatrix, k: usize, seed: u64) -> Result<FoldPlan> {
    let n_users = matrix.n_users();
    if k < 2 || k > n_users {
        return Err(Error::InvalidFoldCount { k, n_users });
    }
    let mut users: Vec<usize> = (0..n_users).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    users.shuffle(&mut rng);
    let base = n_users / k;
    let extra = n_users % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(users[start..start + size].to_vec());
        start += size;
    }
    Ok(FoldPlan { folds, seed })
}

/// Removes up to `per_user` ratings from each test user, capped at half the
/// user's rating count so every test user keeps at least half a profile.
/// Returns the masked matrix and the removed entries with true values.
///
/// Users with fewer than two ratings contribute no hidden entries.
pub fn hide_ratings(
    matrix: &RatingMatrix,
    test_users: &[usize],
    per_user: usize,
    seed: u64,
) -> Result<(RatingMatrix, HiddenRatings)> {
    if per_user < 1 {
        return Err(Error::InvalidParameter(
            "per_user must be at least 1".into(),
        ));
    }
    let mut ordered: Vec<usize> = test_users.to_vec();
    ordered.sort_unstable();
    ordered.dedup();
    if ordered.iter().any(|&u| u >= matrix.n_users()) {
        return Err(Error::InvalidParameter(
            "test user index out of range".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masked = matrix.clone();
    let mut entries = Vec::new();
    for &user in &ordered {
        let items: Vec<usize> = matrix.rows[user].keys().copied().collect();
        let count = per_user.min(items.len() / 2);
        if count == 0 {
            continue;
        }
        let mut pool = items;
        for slot in 0..count {
            let pick = rng.random_range(slot..pool.len());
            pool.swap(slot, pick);
        }
        let mut chosen: Vec<usize> = pool[..count].to_vec();
        chosen.sort_unstable();
        for item in chosen {
            let rating = masked.rows[user].remove(&item).expect("item was rated");
            entries.push((user, item, rating));
        }
    }
    Ok((masked, HiddenRatings { entries, seed }))
}
