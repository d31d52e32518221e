//! Self-organizing map: competitive training of a neuron grid on user
//! profiles, in an ordering phase with a shrinking neighborhood followed by
//! a tuning phase with a small fixed one.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{SomConfig, SomMap};

/// Euclidean distance between two equal-dimension vectors.
pub fn euclidean_distance(x: &[f64], w: &[f64]) -> Result<f64> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: w.len(),
        });
    }
    Ok(squared_distance(x, w).sqrt())
}

pub(crate) fn squared_distance(x: &[f64], w: &[f64]) -> f64 {
    x.iter()
        .zip(w)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

/// Index of the neuron with the closest weight vector; ties go to the
/// lowest flat (row-major) index.
pub fn best_matching_unit(som: &SomMap, x: &[f64]) -> Result<usize> {
    if x.len() != som.dimension {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: som.dimension,
        });
    }
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (idx, w) in som.weights.iter().enumerate() {
        let d = squared_distance(x, w);
        if d < best_dist {
            best_dist = d;
            best = idx;
        }
    }
    Ok(best)
}

/// Gaussian neighborhood `exp(-d^2 / (2 sigma^2))`: 1 at the winner,
/// strictly decreasing in the lateral distance.
pub fn neighborhood(lateral_distance: f64, sigma: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::InvalidSigma(sigma));
    }
    Ok((-(lateral_distance * lateral_distance) / (2.0 * sigma * sigma)).exp())
}

/// Exponentially decaying neighborhood radius `sigma0 exp(-t / tau)`.
pub fn sigma_schedule(t: usize, sigma0: f64, tau: f64) -> Result<f64> {
    if sigma0 <= 0.0 {
        return Err(Error::InvalidSigma(sigma0));
    }
    if tau <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    Ok(sigma0 * (-(t as f64) / tau).exp())
}

/// One weight update `w + sigma(t) T (x - w)`, with the effective step
/// factor clamped to at most 1 so a wide early neighborhood cannot
/// overshoot past the input.
pub fn som_update(
    w: &[f64],
    x: &[f64],
    t: usize,
    winner_lateral_distance: f64,
    config: &SomConfig,
) -> Result<Vec<f64>> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch {
            left: w.len(),
            right: x.len(),
        });
    }
    let sigma = config.sigma_at(t)?;
    let factor = step_factor(sigma, winner_lateral_distance)?;
    Ok(w.iter()
        .zip(x)
        .map(|(wi, xi)| wi + factor * (xi - wi))
        .collect())
}

fn step_factor(sigma: f64, lateral_distance: f64) -> Result<f64> {
    let t_neigh = neighborhood(lateral_distance, sigma)?;
    Ok((sigma * t_neigh).min(1.0))
}

/// Trains a map on the given vectors: weights start uniformly random in
/// the per-dimension data range, then each step draws one input, finds its
/// best matching unit and moves every neuron toward the input by the
/// clamped neighborhood-weighted step. Deterministic for a fixed seed.
pub fn train_som(data: &[Vec<f64>], config: &SomConfig, seed: u64) -> Result<SomMap> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    config.validate()?;
    let dimension = data[0].len();
    if data.iter().any(|v| v.len() != dimension) {
        return Err(Error::DimensionMismatch {
            left: dimension,
            right: data.iter().map(Vec::len).find(|&l| l != dimension).unwrap(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let neurons = config.grid_rows * config.grid_cols;

    // Per-dimension data range for initialization.
    let mut lo = vec![f64::INFINITY; dimension];
    let mut hi = vec![f64::NEG_INFINITY; dimension];
    for v in data {
        for (d, &value) in v.iter().enumerate() {
            lo[d] = lo[d].min(value);
            hi[d] = hi[d].max(value);
        }
    }
    let mut weights: Vec<Vec<f64>> = (0..neurons)
        .map(|_| {
            (0..dimension)
                .map(|d| {
                    if hi[d] > lo[d] {
                        rng.random_range(lo[d]..hi[d])
                    } else {
                        lo[d]
                    }
                })
                .collect()
        })
        .collect();

    let mut som = SomMap {
        config: config.clone(),
        weights: Vec::new(),
        dimension,
    };

    let total_steps = config.ordering_steps + config.tuning_steps;
    for t in 0..total_steps {
        let sigma = config.sigma_at(t)?;
        let input = &data[rng.random_range(0..data.len())];

        // BMU over the current weights.
        let mut winner = 0;
        let mut best = f64::INFINITY;
        for (idx, w) in weights.iter().enumerate() {
            let d = squared_distance(input, w);
            if d < best {
                best = d;
                winner = idx;
            }
        }
        let (win_row, win_col) = (winner / config.grid_cols, winner % config.grid_cols);

        for (idx, w) in weights.iter_mut().enumerate() {
            let row = idx / config.grid_cols;
            let col = idx % config.grid_cols;
            let dr = row as f64 - win_row as f64;
            let dc = col as f64 - win_col as f64;
            let lateral = (dr * dr + dc * dc).sqrt();
            let factor = step_factor(sigma, lateral)?;
            for (wi, xi) in w.iter_mut().zip(input) {
                *wi += factor * (xi - *wi);
            }
        }
    }

    som.weights = weights;
    Ok(som)
}

/// A trained SOM mapped back to the input space: the occupied neurons'
/// weight vectors and the inputs attached to each.
#[derive(Debug, Clone, PartialEq)]
pub struct SomMapping {
    /// Weight vectors of neurons that won at least one input, by
    /// ascending neuron index.
    pub prototypes: Vec<Vec<f64>>,
    /// Neuron index behind each prototype.
    pub neurons: Vec<usize>,
    /// Input indices attached to each prototype (its BMU wins).
    pub members: Vec<Vec<usize>>,
}

/// Maps a trained SOM back to the input space: the prototypes are the
/// weight vectors of neurons that win at least one input, and the
/// membership lists attach each input to its best matching unit.
pub fn map_to_input_space(som: &SomMap, data: &[Vec<f64>]) -> Result<SomMapping> {
    let mut membership: Vec<Vec<usize>> = vec![Vec::new(); som.weights.len()];
    for (idx, v) in data.iter().enumerate() {
        let bmu = best_matching_unit(som, v)?;
        membership[bmu].push(idx);
    }
    let neurons: Vec<usize> = (0..som.weights.len())
        .filter(|&n| !membership[n].is_empty())
        .collect();
    let prototypes = neurons.iter().map(|&n| som.weights[n].clone()).collect();
    let members = neurons
        .iter()
        .map(|&n| std::mem::take(&mut membership[n]))
        .collect();
    Ok(SomMapping {
        prototypes,
        neurons,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SomConfig {
        SomConfig {
            grid_rows: 3,
            grid_cols: 3,
            ordering_steps: 200,
            tuning_steps: 400,
            ..SomConfig::default()
        }
    }

    #[test]
    fn euclidean_distance_basics() {
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let xy = euclidean_distance(&[1.0, 7.0], &[4.0, 2.0]).unwrap();
        let yx = euclidean_distance(&[4.0, 2.0], &[1.0, 7.0]).unwrap();
        assert_eq!(xy, yx);
        assert!(euclidean_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn bmu_finds_exact_match_and_breaks_ties_low() {
        let som = SomMap {
            config: small_config(),
            weights: vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![2.0, 2.0],
                vec![3.0, 3.0],
            ],
            dimension: 2,
        };
        assert_eq!(best_matching_unit(&som, &[3.0, 3.0]).unwrap(), 3);
        assert_eq!(best_matching_unit(&som, &[0.9, 0.9]).unwrap(), 1);
        // Equidistant between neurons 1 and 2: lowest index wins.
        assert_eq!(best_matching_unit(&som, &[1.5, 1.5]).unwrap(), 1);
        assert!(best_matching_unit(&som, &[1.0]).is_err());
    }

    #[test]
    fn neighborhood_shape() {
        assert_eq!(neighborhood(0.0, 2.0).unwrap(), 1.0);
        let at_sigma = neighborhood(2.0, 2.0).unwrap();
        assert!((at_sigma - (-0.5f64).exp()).abs() < 1e-12);
        let mut last = 1.0;
        for d in 1..10 {
            let v = neighborhood(d as f64, 2.0).unwrap();
            assert!(v < last && v > 0.0);
            last = v;
        }
        assert!(neighborhood(1.0, 0.0).is_err());
    }

    #[test]
    fn sigma_schedule_decays_exponentially() {
        let sigma0 = 5.0;
        let tau = 100.0;
        assert_eq!(sigma_schedule(0, sigma0, tau).unwrap(), sigma0);
        let at_tau = sigma_schedule(100, sigma0, tau).unwrap();
        assert!((at_tau - sigma0 / std::f64::consts::E).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for t in 0..10 {
            let v = sigma_schedule(t * 50, sigma0, tau).unwrap();
            assert!(v < last && v > 0.0);
            last = v;
        }
    }

    #[test]
    fn som_update_moves_toward_input() {
        let config = SomConfig::default();
        // x == w: no movement.
        let w = som_update(&[2.0, 3.0], &[2.0, 3.0], 0, 1.0, &config).unwrap();
        assert_eq!(w, vec![2.0, 3.0]);
        // Clamped full step lands exactly on the input: at t=0 and d=0 the
        // raw factor is sigma0 * 1 = 5, clamped to 1.
        let w = som_update(&[0.0], &[2.0], 0, 0.0, &config).unwrap();
        assert_eq!(w, vec![2.0]);
    }

    #[test]
    fn som_update_quarter_step() {
        // Pick sigma and distance so sigma(t) * T = 0.25 exactly:
        // sigma = 0.25 at d = 0 means T = 1, factor = 0.25.
        let config = SomConfig {
            sigma0: 0.25,
            tuning_sigma: 0.25,
            tau: 1.0,
            ..SomConfig::default()
        };
        let w = som_update(&[0.0], &[2.0], 0, 0.0, &config).unwrap();
        assert_eq!(w, vec![0.5]);
    }

    #[test]
    fn training_on_one_repeated_vector_converges_to_it() {
        let target = vec![1.0, 2.0, 3.0];
        let data = vec![target.clone(); 8];
        let som = train_som(&data, &small_config(), 7).unwrap();
        let bmu = best_matching_unit(&som, &target).unwrap();
        let d = euclidean_distance(&som.weights[bmu], &target).unwrap();
        assert!(d < 1e-6, "BMU distance {d} after training");
    }

    #[test]
    fn separated_clouds_win_disjoint_neurons() {
        let mut data = Vec::new();
        for i in 0..10 {
            let offset = i as f64 * 0.01;
            data.push(vec![0.0 + offset, 0.0]);
            data.push(vec![10.0 + offset, 10.0]);
        }
        let som = train_som(&data, &small_config(), 3).unwrap();
        let mut low_bmus = std::collections::BTreeSet::new();
        let mut high_bmus = std::collections::BTreeSet::new();
        for v in &data {
            let bmu = best_matching_unit(&som, v).unwrap();
            if v[0] < 5.0 {
                low_bmus.insert(bmu);
            } else {
                high_bmus.insert(bmu);
            }
        }
        assert!(low_bmus.is_disjoint(&high_bmus));
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let data: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64, (i * i % 7) as f64])
            .collect();
        let a = train_som(&data, &small_config(), 99).unwrap();
        let b = train_som(&data, &small_config(), 99).unwrap();
        assert_eq!(a.weights, b.weights);
        let c = train_som(&data, &small_config(), 100).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn training_rejects_empty_data() {
        assert!(matches!(
            train_som(&[], &small_config(), 0),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn weights_remain_finite() {
        let data: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i % 5) as f64, (i % 3) as f64 * 2.0])
            .collect();
        let som = train_som(&data, &small_config(), 5).unwrap();
        assert!(som.weights.iter().all(|w| w.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn mapping_partitions_inputs_across_occupied_neurons() {
        let data: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64, -(i as f64)]).collect();
        let som = train_som(&data, &small_config(), 2).unwrap();
        let mapping = map_to_input_space(&som, &data).unwrap();
        assert_eq!(mapping.prototypes.len(), mapping.neurons.len());
        assert_eq!(mapping.prototypes.len(), mapping.members.len());
        let total: usize = mapping.members.iter().map(Vec::len).sum();
        assert_eq!(total, data.len());
        assert!(mapping.members.iter().all(|m| !m.is_empty()));
        // Neuron indices ascending.
        assert!(mapping.neurons.windows(2).all(|w| w[0] < w[1]));
    }
}
