//! User clustering: a self-organizing map compresses the user profiles
//! into neuron prototypes, k-means groups the occupied prototypes, and
//! users inherit the cluster of their best matching unit.

mod kmeans;
mod silhouette;
mod som;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

pub use kmeans::{kmeans, KmeansFit};
pub use silhouette::silhouette;
pub use som::{
    best_matching_unit, euclidean_distance, map_to_input_space, neighborhood, sigma_schedule,
    som_update, train_som, SomMapping,
};

use crate::error::{Error, Result};

/// Grid shape and training schedule of a self-organizing map.
///
/// Training runs an ordering phase in which the neighborhood radius decays
/// from `sigma0` toward `tuning_sigma`, then a tuning phase at the fixed
/// small radius. The default decay constant is chosen so the radius reaches
/// `tuning_sigma` exactly at the phase boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SomConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Initial neighborhood radius.
    pub sigma0: f64,
    /// Decay constant of the radius schedule.
    pub tau: f64,
    pub ordering_steps: usize,
    pub tuning_steps: usize,
    /// Radius held during the tuning phase (also the floor during ordering).
    pub tuning_sigma: f64,
}

impl SomConfig {
    /// Config for a `rows x cols` grid with the default schedule: the
    /// initial radius covers half the larger grid side and decays over
    /// 1000 ordering steps to the tuning radius, followed by 2000 tuning
    /// steps.
    ///
    /// The tuning radius doubles as the winner's learning factor (the
    /// update step is `sigma(t) * T` clamped to 1), so it must sit well
    /// below 1: at 1 the winning neuron would jump exactly onto every
    /// input and the prototypes would never average over their members.
    /// 0.2 keeps each prototype an exponential moving average of roughly
    /// its last five winning inputs.
    pub fn with_grid(rows: usize, cols: usize) -> Self {
        let sigma0 = (rows.max(cols) as f64 / 2.0).max(1.5);
        let tuning_sigma = 0.2;
        let ordering_steps = 1000;
        SomConfig {
            grid_rows: rows,
            grid_cols: cols,
            sigma0,
            tau: ordering_steps as f64 / (sigma0 / tuning_sigma).ln(),
            ordering_steps,
            tuning_steps: 2000,
            tuning_sigma,
        }
    }

    /// Neighborhood radius at training step `t`.
    pub fn sigma_at(&self, t: usize) -> Result<f64> {
        if t < self.ordering_steps {
            Ok(sigma_schedule(t, self.sigma0, self.tau)?.max(self.tuning_sigma))
        } else {
            Ok(self.tuning_sigma)
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.grid_rows * self.grid_cols < 1 {
            return Err(Error::InvalidParameter("SOM grid is empty".into()));
        }
        if !(self.tuning_sigma > 0.0 && self.sigma0 >= self.tuning_sigma) {
            return Err(Error::InvalidParameter(format!(
                "need sigma0 >= tuning_sigma > 0, got {} and {}",
                self.sigma0, self.tuning_sigma
            )));
        }
        if self.tau <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.ordering_steps < 1 || self.tuning_steps < 1 {
            return Err(Error::InvalidParameter(
                "ordering_steps and tuning_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SomConfig {
    fn default() -> Self {
        SomConfig::with_grid(10, 10)
    }
}

/// A trained map: one weight vector per neuron, row-major grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SomMap {
    pub config: SomConfig,
    pub weights: Vec<Vec<f64>>,
    /// Input-space dimension; equals the item count of the training matrix.
    pub dimension: usize,
}

impl SomMap {
    /// Plain-text checkpoint: a header line
    /// `som <rows> <cols> <dim> <sigma0> <tau> <ordering> <tuning> <tuning_sigma>`
    /// followed by one whitespace-separated weight vector per neuron.
    pub fn write_text<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "som {} {} {} {} {} {} {} {}",
            self.config.grid_rows,
            self.config.grid_cols,
            self.dimension,
            self.config.sigma0,
            self.config.tau,
            self.config.ordering_steps,
            self.config.tuning_steps,
            self.config.tuning_sigma
        )?;
        for w in &self.weights {
            let strs: Vec<String> = w.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", strs.join(" "))?;
        }
        Ok(())
    }

    /// Reads a checkpoint produced by [`SomMap::write_text`].
    pub fn read_text<R: BufRead>(input: &mut R) -> Result<Self> {
        let mut lines = input.lines();
        let header = next_line(&mut lines)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 9 || fields[0] != "som" {
            return Err(Error::InvalidParameter(
                "malformed SOM checkpoint header".into(),
            ));
        }
        let config = SomConfig {
            grid_rows: parse(fields[1])?,
            grid_cols: parse(fields[2])?,
            sigma0: parse(fields[4])?,
            tau: parse(fields[5])?,
            ordering_steps: parse(fields[6])?,
            tuning_steps: parse(fields[7])?,
            tuning_sigma: parse(fields[8])?,
        };
        let dimension: usize = parse(fields[3])?;
        let neurons = config.grid_rows * config.grid_cols;
        let mut weights = Vec::with_capacity(neurons);
        for _ in 0..neurons {
            let line = next_line(&mut lines)?;
            let w: Vec<f64> = line.split_whitespace().map(parse).collect::<Result<_>>()?;
            if w.len() != dimension {
                return Err(Error::InvalidParameter(format!(
                    "weight line has {} values, expected {dimension}",
                    w.len()
                )));
            }
            weights.push(w);
        }
        Ok(SomMap {
            config,
            weights,
            dimension,
        })
    }
}

/// k centroids in user-profile space plus the user and neuron assignments
/// that produced them, with per-cluster rating totals for cold-start
/// placement.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Training user index -> cluster.
    pub assignment: BTreeMap<usize, usize>,
    /// Occupied neuron index -> cluster.
    pub neuron_to_cluster: BTreeMap<usize, usize>,
    /// Number of ratings held by each cluster's members.
    pub rating_counts: Vec<u64>,
    /// Sum of rating values held by each cluster's members.
    pub rating_sums: Vec<f64>,
}

impl ClusterModel {
    /// Members of `cluster` in ascending user order.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .filter(|(_, &c)| c == cluster)
            .map(|(&u, _)| u)
            .collect()
    }

    /// Plain-text checkpoint mirroring [`SomMap::write_text`].
    pub fn write_text<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let dim = self.centroids.first().map_or(0, Vec::len);
        writeln!(out, "clusters {} {}", self.k, dim)?;
        for c in &self.centroids {
            let strs: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", strs.join(" "))?;
        }
        writeln!(out, "stats {}", self.k)?;
        for c in 0..self.k {
            writeln!(out, "{} {}", self.rating_counts[c], self.rating_sums[c])?;
        }
        writeln!(out, "assignment {}", self.assignment.len())?;
        for (u, c) in &self.assignment {
            writeln!(out, "{u} {c}")?;
        }
        writeln!(out, "neurons {}", self.neuron_to_cluster.len())?;
        for (n, c) in &self.neuron_to_cluster {
            writeln!(out, "{n} {c}")?;
        }
        Ok(())
    }

    /// Reads a checkpoint produced by [`ClusterModel::write_text`].
    pub fn read_text<R: BufRead>(input: &mut R) -> Result<Self> {
        let mut lines = input.lines();
        let header = next_line(&mut lines)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "clusters" {
            return Err(Error::InvalidParameter(
                "malformed cluster checkpoint header".into(),
            ));
        }
        let k: usize = parse(fields[1])?;
        let dim: usize = parse(fields[2])?;
        let mut centroids = Vec::with_capacity(k);
        for _ in 0..k {
            let line = next_line(&mut lines)?;
            let c: Vec<f64> = line.split_whitespace().map(parse).collect::<Result<_>>()?;
            if c.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "centroid line has {} values, expected {dim}",
                    c.len()
                )));
            }
            centroids.push(c);
        }
        let stats = expect_section(&next_line(&mut lines)?, "stats")?;
        if stats != k {
            return Err(Error::InvalidParameter("stats count mismatch".into()));
        }
        let mut rating_counts = Vec::with_capacity(k);
        let mut rating_sums = Vec::with_capacity(k);
        for _ in 0..k {
            let line = next_line(&mut lines)?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::InvalidParameter("malformed stats line".into()));
            }
            rating_counts.push(parse(parts[0])?);
            rating_sums.push(parse(parts[1])?);
        }
        let assignment = read_pairs(&mut lines, "assignment")?;
        let neuron_to_cluster = read_pairs(&mut lines, "neurons")?;
        Ok(ClusterModel {
            k,
            centroids,
            assignment,
            neuron_to_cluster,
            rating_counts,
            rating_sums,
        })
    }
}

fn next_line<B: BufRead>(lines: &mut std::io::Lines<B>) -> Result<String> {
    lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("unexpected end of checkpoint".into()))?
        .map_err(|e| Error::InvalidParameter(format!("checkpoint read failed: {e}")))
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse `{s}` in checkpoint")))
}

fn expect_section(line: &str, name: &str) -> Result<usize> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 || fields[0] != name {
        return Err(Error::InvalidParameter(format!(
            "expected `{name} <count>` section header"
        )));
    }
    parse(fields[1])
}

fn read_pairs<B: BufRead>(
    lines: &mut std::io::Lines<B>,
    name: &str,
) -> Result<BTreeMap<usize, usize>> {
    let count = expect_section(&next_line(lines)?, name)?;
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let line = next_line(lines)?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "malformed {name} line in checkpoint"
            )));
        }
        map.insert(parse(parts[0])?, parse(parts[1])?);
    }
    Ok(map)
}

/// Trains k-means over the occupied prototypes of a trained SOM and
/// assigns each training user the cluster of its best matching unit.
///
/// `profiles[i]` must be the profile vector of user `user_indices[i]`; the
/// per-cluster rating totals for cold-start placement are accumulated from
/// the nonzero profile entries.
pub fn build_cluster_model(
    profiles: &[Vec<f64>],
    user_indices: &[usize],
    som: &SomMap,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterModel> {
    if profiles.len() != user_indices.len() {
        return Err(Error::LengthMismatch {
            left: profiles.len(),
            right: user_indices.len(),
        });
    }
    let mapping = map_to_input_space(som, profiles)?;
    let fit = kmeans(&mapping.prototypes, k, seed, max_iter, tol)?;

    let mut assignment = BTreeMap::new();
    let mut neuron_to_cluster = BTreeMap::new();
    let mut rating_counts = vec![0u64; k];
    let mut rating_sums = vec![0.0f64; k];
    for (p, &neuron) in mapping.neurons.iter().enumerate() {
        let cluster = fit.labels[p];
        neuron_to_cluster.insert(neuron, cluster);
        for &pos in &mapping.members[p] {
            assignment.insert(user_indices[pos], cluster);
            for &v in &profiles[pos] {
                if v != 0.0 {
                    rating_counts[cluster] += 1;
                    rating_sums[cluster] += v;
                }
            }
        }
    }

    Ok(ClusterModel {
        k,
        centroids: fit.centroids,
        assignment,
        neuron_to_cluster,
        rating_counts,
        rating_sums,
    })
}

/// Cluster for a (possibly new) user vector: the nearest centroid by
/// Euclidean distance, ties to the lowest index. An all-zero vector is a
/// cold start and goes to the cluster whose members hold the fewest
/// ratings, ties broken by the smaller rating sum, then the lower index.
pub fn assign_cluster(user_vector: &[f64], model: &ClusterModel) -> Result<usize> {
    let dim = model.centroids.first().map_or(0, Vec::len);
    if user_vector.len() != dim {
        return Err(Error::DimensionMismatch {
            left: user_vector.len(),
            right: dim,
        });
    }
    if user_vector.iter().all(|&v| v == 0.0) {
        let mut best = 0;
        for c in 1..model.k {
            let better = (model.rating_counts[c], model.rating_sums[c])
                < (model.rating_counts[best], model.rating_sums[best]);
            if better {
                best = c;
            }
        }
        return Ok(best);
    }
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (c, centroid) in model.centroids.iter().enumerate() {
        let d = som::squared_distance(user_vector, centroid);
        if d < best_dist {
            best_dist = d;
            best = c;
        }
    }
    Ok(best)
}
