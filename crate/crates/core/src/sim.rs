//! Similarity measures over rating sequences, behind one dispatch type.
//!
//! A rating sequence is a dense vector over a shared index set with 0 for
//! unrated positions. Inside a cluster the sequences are item columns and
//! the positions are the cluster's users; the same formulas apply to user
//! rows. The baselines (PCC, Jaccard, MSD, JMSD) restrict themselves to
//! commonly rated positions; the coherence measure transforms the whole
//! column.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectral::{self, WelchParams};

/// Maximum squared difference between two ratings on the 1..=5 scale,
/// used to normalize MSD into a similarity.
const MAX_SQUARED_DIFF: f64 = 16.0;

/// The five supported similarity measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimilarityKind {
    /// Mean magnitude-squared coherence of the two sequences' spectra.
    Cohr,
    /// Pearson correlation over commonly rated positions.
    Pcc,
    /// Overlap of the rated position sets.
    Jaccard,
    /// Mean-squared-difference similarity over common positions.
    Msd,
    /// Product of Jaccard and MSD.
    Jmsd,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 5] = [
        SimilarityKind::Cohr,
        SimilarityKind::Pcc,
        SimilarityKind::Jaccard,
        SimilarityKind::Msd,
        SimilarityKind::Jmsd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SimilarityKind::Cohr => "cohr",
            SimilarityKind::Pcc => "pcc",
            SimilarityKind::Jaccard => "jaccard",
            SimilarityKind::Msd => "msd",
            SimilarityKind::Jmsd => "jmsd",
        }
    }
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cohr" => Ok(SimilarityKind::Cohr),
            "pcc" => Ok(SimilarityKind::Pcc),
            "jaccard" => Ok(SimilarityKind::Jaccard),
            "msd" => Ok(SimilarityKind::Msd),
            "jmsd" => Ok(SimilarityKind::Jmsd),
            other => Err(Error::InvalidParameter(format!(
                "unknown similarity measure `{other}` (expected cohr|pcc|jaccard|msd|jmsd)"
            ))),
        }
    }
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A measure plus its parameters. Only the coherence measure is
/// parameterized (by the Welch estimator settings).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityMeasure {
    pub kind: SimilarityKind,
    /// Welch parameters for [`SimilarityKind::Cohr`]; `None` picks
    /// [`WelchParams::for_signal_len`] per sequence length.
    pub welch: Option<WelchParams>,
}

impl SimilarityMeasure {
    pub fn new(kind: SimilarityKind) -> Self {
        SimilarityMeasure { kind, welch: None }
    }

    /// Welch parameters for sequences of length `n`.
    pub fn welch_for_len(&self, n: usize) -> WelchParams {
        self.welch.unwrap_or_else(|| WelchParams::for_signal_len(n))
    }
}

fn check_len(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(())
}

/// Positions rated in both sequences.
fn common_positions(u: &[f64], v: &[f64]) -> Vec<usize> {
    (0..u.len())
        .filter(|&i| u[i] != 0.0 && v[i] != 0.0)
        .collect()
}

/// Pearson correlation coefficient over the commonly rated positions, with
/// means taken over those positions. Returns 0 when fewer than two common
/// positions exist or either side has zero variance, so rankings over many
/// pairs stay total.
pub fn pcc(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u, v)?;
    let common = common_positions(u, v);
    if common.len() < 2 {
        return Ok(0.0);
    }
    let n = common.len() as f64;
    let mean_u: f64 = common.iter().map(|&i| u[i]).sum::<f64>() / n;
    let mean_v: f64 = common.iter().map(|&i| v[i]).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_u = 0.0;
    let mut var_v = 0.0;
    for &i in &common {
        let du = u[i] - mean_u;
        let dv = v[i] - mean_v;
        cov += du * dv;
        var_u += du * du;
        var_v += dv * dv;
    }
    if var_u == 0.0 || var_v == 0.0 {
        return Ok(0.0);
    }
    // Rounding can push a perfect correlation a few ulps past 1.
    Ok((cov / (var_u.sqrt() * var_v.sqrt())).clamp(-1.0, 1.0))
}

/// Jaccard similarity of the rated position sets, 0 when both are empty.
pub fn jaccard(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u, v)?;
    let mut intersection = 0usize;
    let mut union = 0usize;
    for i in 0..u.len() {
        let a = u[i] != 0.0;
        let b = v[i] != 0.0;
        if a && b {
            intersection += 1;
        }
        if a || b {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(0.0);
    }
    Ok(intersection as f64 / union as f64)
}

/// Mean-squared-difference similarity: `1 - (mean squared diff) / 16` over
/// the common positions, 16 being the largest possible squared difference
/// on the 1..=5 scale. Returns 0 with no common positions.
pub fn msd(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u, v)?;
    let common = common_positions(u, v);
    if common.is_empty() {
        return Ok(0.0);
    }
    let sum_sq: f64 = common
        .iter()
        .map(|&i| {
            let d = u[i] - v[i];
            d * d
        })
        .sum();
    Ok(1.0 - sum_sq / common.len() as f64 / MAX_SQUARED_DIFF)
}

/// Jaccard-weighted MSD: the product of the two similarities.
pub fn jmsd(u: &[f64], v: &[f64]) -> Result<f64> {
    Ok(jaccard(u, v)? * msd(u, v)?)
}

/// Dispatches to the measure's implementation. The coherence measure
/// delegates to [`spectral::cohr_sim`] and propagates its errors.
pub fn similarity(measure: &SimilarityMeasure, a: &[f64], b: &[f64]) -> Result<f64> {
    match measure.kind {
        SimilarityKind::Cohr => {
            check_len(a, b)?;
            spectral::cohr_sim(a, b, &measure.welch_for_len(a.len()))
        }
        SimilarityKind::Pcc => pcc(a, b),
        SimilarityKind::Jaccard => jaccard(a, b),
        SimilarityKind::Msd => msd(a, b),
        SimilarityKind::Jmsd => jmsd(a, b),
    }
}
