//! Turning a DI recording and its amplified counterpart into a training pair.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::silence::{silent_runs, splice_out, SilenceParams, RMS_WINDOW_S};
use super::wav::WavData;
use crate::buffer::AudioBuffer;
use crate::error::{Error, Result};

/// Input and target of equal length with zero relative offset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPair {
    pub input: AudioBuffer,
    pub target: AudioBuffer,
}

impl DatasetPair {
    pub fn new(input: AudioBuffer, target: AudioBuffer) -> Result<Self> {
        input.check_compatible(&target)?;
        Ok(Self { input, target })
    }

    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.input.sample_rate_hz
    }

    /// Split off the trailing `fraction` of the pair, e.g. for validation.
    pub fn split_tail(&self, fraction: f64) -> (DatasetPair, DatasetPair) {
        let n = self.len();
        let tail = ((n as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
        let cut = n - tail;
        (
            DatasetPair { input: self.input.slice(0..cut), target: self.target.slice(0..cut) },
            DatasetPair { input: self.input.slice(cut..n), target: self.target.slice(cut..n) },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepareOptions {
    /// Remove silence detected on the input from both signals.
    pub strip: Option<SilenceParams>,
    /// Largest accepted estimated offset between input and target, in samples.
    pub max_lag_samples: usize,
    /// Offsets searched by the alignment check, in samples either way.
    pub lag_search_samples: usize,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self { strip: Some(SilenceParams::default()), max_lag_samples: 2, lag_search_samples: 4096 }
    }
}

/// Mono-mix, check alignment, and optionally strip silence from a pair.
///
/// Lengths may differ by at most one 10 ms RMS window; the longer signal is
/// truncated. Silence is detected on the input and removed from both signals
/// at the same indices.
pub fn prepare_pair(input: &WavData, target: &WavData, opts: &PrepareOptions) -> Result<DatasetPair> {
    if input.sample_rate_hz != target.sample_rate_hz {
        return Err(Error::SampleRateMismatch {
            expected: input.sample_rate_hz as f64,
            found: target.sample_rate_hz as f64,
        });
    }
    let mut x = input.to_mono();
    let mut y = target.to_mono();
    let tolerance = (RMS_WINDOW_S * x.sample_rate_hz).round() as usize;
    if x.len().abs_diff(y.len()) > tolerance {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len().min(y.len());
    x.samples.truncate(n);
    y.samples.truncate(n);

    if let Some(lag) = estimate_lag(&x.samples, &y.samples, opts.lag_search_samples) {
        if lag.unsigned_abs() as usize > opts.max_lag_samples {
            return Err(Error::Misaligned { lag });
        }
    }

    if let Some(params) = opts.strip {
        let runs = silent_runs(&x.samples, x.sample_rate_hz, params);
        x.samples = splice_out(&x.samples, &runs);
        y.samples = splice_out(&y.samples, &runs);
    }
    DatasetPair::new(x, y)
}

/// Offset of `target` relative to `input` maximizing |cross-correlation|.
///
/// Positive means the target lags the input. `None` when either signal has no
/// energy in the analysed excerpt.
pub fn estimate_lag(input: &[f64], target: &[f64], max_lag: usize) -> Option<i64> {
    const EXCERPT: usize = 1 << 18;
    let n = input.len().min(target.len()).min(EXCERPT);
    if n == 0 {
        return None;
    }
    let (a, b) = (&input[..n], &target[..n]);
    if a.iter().all(|v| *v == 0.0) || b.iter().all(|v| *v == 0.0) {
        return None;
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let spectrum = |s: &[f64]| {
        let mut buf: Vec<Complex<f64>> = s.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(size, Complex::default());
        fwd.process(&mut buf);
        buf
    };
    let fa = spectrum(a);
    let mut corr: Vec<Complex<f64>> = spectrum(b).iter().zip(&fa).map(|(fb, fa)| fb * fa.conj()).collect();
    inv.process(&mut corr);

    // corr[l] = sum_t target[t + l] * input[t], circular in `size`.
    let max_lag = max_lag.min(n - 1) as i64;
    let value = |lag: i64| corr[lag.rem_euclid(size as i64) as usize].re.abs();
    (-max_lag..=max_lag).max_by(|&p, &q| value(p).total_cmp(&value(q)).then(q.abs().cmp(&p.abs())))
}
