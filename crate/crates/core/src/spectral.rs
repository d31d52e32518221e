//! Frequency-domain kernel: FFT/IFFT, power and cross-power spectra,
//! Welch-averaged magnitude-squared coherence, and the coherence similarity.
//!
//! The coherence of two real sequences is estimated with Welch's method:
//! the inputs are cut into overlapping windowed segments, each segment is
//! transformed, and the auto- and cross-power spectra are averaged across
//! segments before forming the ratio `|<Pxy>|^2 / (<Pxx> <Pyy>)`. Averaging
//! is required: with a single raw periodogram the numerator and denominator
//! cancel bin by bin and the estimate is identically 1.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Discrete Fourier transform of a sequence, with the zero-padding applied
/// by [`fft`] recorded so the inverse can recover the original length.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Coefficients `X_k` for `k = 0..padded_length`.
    pub coefficients: Vec<Complex64>,
    /// Length of the sequence before padding.
    pub original_length: usize,
    /// Transform length. A power of two for [`fft`]-produced spectra;
    /// [`dft_naive`] transforms at the input length without padding.
    pub padded_length: usize,
}

/// Segmenting and windowing parameters for the Welch coherence estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchParams {
    /// Samples per segment, >= 2. Zero-padded to the next power of two
    /// after windowing if not already one.
    pub segment_length: usize,
    /// Fraction of a segment shared with its successor, in `[0, 1)`.
    pub overlap: f64,
    /// Taper applied to each segment before transforming.
    pub window: Window,
}

/// Segment taper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    /// Periodic Hann taper `0.5 (1 - cos(2 pi n / L))`. The periodic form
    /// keeps two-sample segments from vanishing entirely.
    Hann,
}

impl Default for WelchParams {
    fn default() -> Self {
        WelchParams {
            segment_length: 32,
            overlap: 0.5,
            window: Window::Hann,
        }
    }
}

impl WelchParams {
    /// Default parameters for signals of length `n`: segment length is the
    /// largest power of two at most `n/2`, capped at 32, with 50% overlap
    /// and a Hann window. Guarantees at least two (in practice three)
    /// segments whenever `n >= 4`.
    pub fn for_signal_len(n: usize) -> Self {
        let half = n / 2;
        let seg = if half >= 1 { floor_pow2(half) } else { 1 };
        WelchParams {
            segment_length: seg.min(32),
            ..WelchParams::default()
        }
    }

    /// Hop between segment starts, always >= 1.
    pub fn step(&self) -> usize {
        let step = (self.segment_length as f64 * (1.0 - self.overlap)).floor() as usize;
        step.max(1)
    }

    /// Number of full segments that fit a signal of length `n`.
    pub fn segment_count(&self, n: usize) -> usize {
        if n < self.segment_length {
            0
        } else {
            (n - self.segment_length) / self.step() + 1
        }
    }

    /// Transform length per segment (next power of two).
    pub fn padded_segment_len(&self) -> usize {
        self.segment_length.next_power_of_two()
    }

    /// Retained one-sided frequency bins per segment transform.
    pub fn bins(&self) -> usize {
        self.padded_segment_len() / 2 + 1
    }

    fn validate(&self) -> Result<()> {
        if self.segment_length < 2 {
            return Err(Error::InvalidParameter(format!(
                "segment_length must be >= 2, got {}",
                self.segment_length
            )));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidParameter(format!(
                "overlap must be in [0, 1), got {}",
                self.overlap
            )));
        }
        Ok(())
    }

    fn window_values(&self) -> Vec<f64> {
        let len = self.segment_length;
        match self.window {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos()))
                .collect(),
        }
    }
}

/// Per-frequency magnitude-squared coherence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceEstimate {
    /// One value per retained one-sided frequency bin.
    pub values: Vec<f64>,
    pub params: WelchParams,
}

impl CoherenceEstimate {
    /// Mean coherence across the frequency band: the coherence similarity.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Largest power of two `<= n`. `n` must be >= 1.
fn floor_pow2(n: usize) -> usize {
    debug_assert!(n >= 1);
    1 << (usize::BITS - 1 - n.leading_zeros())
}

/// Direct `O(n^2)` evaluation of the DFT, `X_k = sum_n x_n e^{-2 pi i k n / N}`.
///
/// No padding is applied; this is the reference the radix-2 transform is
/// checked against.
pub fn dft_naive(input: &[Complex64]) -> Result<Spectrum> {
    if input.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = input.len();
    let mut coefficients = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, x) in input.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (k * idx) as f64 / n as f64;
            acc += x * Complex64::new(angle.cos(), angle.sin());
        }
        coefficients.push(acc);
    }
    Ok(Spectrum {
        coefficients,
        original_length: n,
        padded_length: n,
    })
}

/// Radix-2 decimation-in-time FFT. Zero-pads to the next power of two.
pub fn fft(input: &[Complex64]) -> Result<Spectrum> {
    if input.is_empty() {
        return Err(Error::EmptyInput);
    }
    let original_length = input.len();
    let padded_length = original_length.next_power_of_two();
    let mut buf = input.to_vec();
    buf.resize(padded_length, Complex64::new(0.0, 0.0));
    radix2_in_place(&mut buf, false);
    Ok(Spectrum {
        coefficients: buf,
        original_length,
        padded_length,
    })
}

/// Convenience forward transform of a real sequence.
pub fn fft_real(input: &[f64]) -> Result<Spectrum> {
    let complex: Vec<Complex64> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft(&complex)
}

/// Inverse transform. Returns the full `padded_length` sequence; truncating
/// to `spectrum.original_length` recovers the pre-padding input.
pub fn ifft(spectrum: &Spectrum) -> Vec<Complex64> {
    let mut buf = spectrum.coefficients.clone();
    let n = buf.len();
    if n > 1 {
        radix2_in_place(&mut buf, true);
    }
    let scale = 1.0 / n as f64;
    for value in &mut buf {
        *value *= scale;
    }
    buf
}

/// In-place iterative Cooley-Tukey butterflies. `buf.len()` must be a power
/// of two.
fn radix2_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 0..n {
        if i < j {
            buf.swap(i, j);
        }
        let mut m = n >> 1;
        while m > 0 && j >= m {
            j -= m;
            m >>= 1;
        }
        j += m;
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let angle = sign * 2.0 * std::f64::consts::PI / len as f64;
        let w_base = Complex64::new(angle.cos(), angle.sin());
        let mut start = 0;
        while start < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
                w *= w_base;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Per-bin auto-power `|X_k|^2`.
pub fn power_spectrum(spectrum: &Spectrum) -> Vec<f64> {
    spectrum.coefficients.iter().map(|c| c.norm_sqr()).collect()
}

/// Per-bin cross-power density `Y_k conj(X_k)`.
pub fn cross_power(x: &Spectrum, y: &Spectrum) -> Result<Vec<Complex64>> {
    if x.padded_length != y.padded_length {
        return Err(Error::LengthMismatch {
            left: x.padded_length,
            right: y.padded_length,
        });
    }
    Ok(x.coefficients
        .iter()
        .zip(&y.coefficients)
        .map(|(xc, yc)| yc * xc.conj())
        .collect())
}

/// One-sided segment spectra of a real sequence: the per-segment windowed
/// FFT coefficients the Welch estimator averages over. Computing these once
/// per item column lets a cluster pipeline reuse them across every pairing.
#[derive(Debug, Clone)]
pub struct SegmentSpectra {
    /// `segments[s][k]` = coefficient at bin `k` of segment `s`.
    segments: Vec<Vec<Complex64>>,
    params: WelchParams,
}

impl SegmentSpectra {
    /// Windowed segment transforms of `x`. Errors if fewer than two
    /// segments fit (the estimate would be degenerate).
    pub fn compute(x: &[f64], params: &WelchParams) -> Result<Self> {
        params.validate()?;
        let seg_len = params.segment_length;
        let count = params.segment_count(x.len());
        if count < 2 {
            return Err(Error::TooFewSegments {
                segments: count,
                input_len: x.len(),
                segment_len: seg_len,
            });
        }
        let window = params.window_values();
        let padded = params.padded_segment_len();
        let bins = params.bins();
        let step = params.step();
        let mut segments = Vec::with_capacity(count);
        for s in 0..count {
            let start = s * step;
            let mut buf: Vec<Complex64> = (0..seg_len)
                .map(|i| Complex64::new(x[start + i] * window[i], 0.0))
                .collect();
            buf.resize(padded, Complex64::new(0.0, 0.0));
            radix2_in_place(&mut buf, false);
            buf.truncate(bins);
            segments.push(buf);
        }
        Ok(SegmentSpectra {
            segments,
            params: *params,
        })
    }

    pub fn params(&self) -> &WelchParams {
        &self.params
    }

    /// Welch magnitude-squared coherence of the two pre-transformed
    /// sequences. This is the single implementation behind [`coherence`].
    pub fn coherence_with(&self, other: &SegmentSpectra) -> Result<CoherenceEstimate> {
        if self.params != other.params || self.segments.len() != other.segments.len() {
            return Err(Error::LengthMismatch {
                left: self.segments.len(),
                right: other.segments.len(),
            });
        }
        let bins = self.params.bins();
        let count = self.segments.len() as f64;
        let mut pxy = vec![Complex64::new(0.0, 0.0); bins];
        let mut pxx = vec![0.0f64; bins];
        let mut pyy = vec![0.0f64; bins];
        for (xs, ys) in self.segments.iter().zip(&other.segments) {
            for k in 0..bins {
                pxy[k] += ys[k] * xs[k].conj();
                pxx[k] += xs[k].norm_sqr();
                pyy[k] += ys[k].norm_sqr();
            }
        }
        let values = (0..bins)
            .map(|k| {
                let denom = (pxx[k] / count) * (pyy[k] / count);
                if denom > 0.0 {
                    let num = (pxy[k] / count).norm_sqr();
                    (num / denom).clamp(0.0, 1.0)
                } else {
                    // No power at this bin in one of the inputs: no
                    // evidence of relation.
                    0.0
                }
            })
            .collect();
        Ok(CoherenceEstimate {
            values,
            params: self.params,
        })
    }
}

/// Welch-averaged magnitude-squared coherence of two equal-length real
/// sequences, `|<Pxy>|^2 / (<Pxx> <Pyy>)` per one-sided frequency bin.
///
/// Bins where either averaged auto-power vanishes are defined as 0. Errors
/// if the lengths differ or fewer than two segments fit.
pub fn coherence(x: &[f64], y: &[f64], params: &WelchParams) -> Result<CoherenceEstimate> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let sx = SegmentSpectra::compute(x, params)?;
    let sy = SegmentSpectra::compute(y, params)?;
    sx.coherence_with(&sy)
}

/// Coherence similarity: mean magnitude-squared coherence across the
/// frequency band. Symmetric, in `[0, 1]`.
pub fn cohr_sim(x: &[f64], y: &[f64], params: &WelchParams) -> Result<f64> {
    Ok(coherence(x, y, params)?.mean())
}

/// Writes a spectrum as CSV (`bin,re,im,mag2`) for offline inspection.
pub fn write_spectrum_csv<W: std::io::Write>(
    spectrum: &Spectrum,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "bin,re,im,mag2")?;
    for (k, c) in spectrum.coefficients.iter().enumerate() {
        writeln!(out, "{},{},{},{}", k, c.re, c.im, c.norm_sqr())?;
    }
    Ok(())
}
