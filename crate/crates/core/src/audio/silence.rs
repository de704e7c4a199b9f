//! Detection and removal of long silent stretches.
//!
//! A sample is quiet when its own amplitude is below the threshold and it lies
//! inside at least one 10 ms window whose RMS is below the threshold. Runs of
//! quiet samples longer than `min_silence_s` are removed outright; shorter
//! runs are kept.

use std::ops::Range;

use crate::buffer::AudioBuffer;

pub const DEFAULT_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_MIN_SILENCE_S: f64 = 1.0;
pub const RMS_WINDOW_S: f64 = 0.010;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilenceParams {
    pub threshold_amp: f64,
    pub min_silence_s: f64,
}

impl Default for SilenceParams {
    fn default() -> Self {
        Self { threshold_amp: DEFAULT_THRESHOLD, min_silence_s: DEFAULT_MIN_SILENCE_S }
    }
}

/// Sample ranges that qualify as removable silence, in ascending order.
pub fn silent_runs(x: &[f64], sample_rate_hz: f64, params: SilenceParams) -> Vec<Range<usize>> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let win = ((RMS_WINDOW_S * sample_rate_hz).round() as usize).clamp(1, n);
    let limit = params.threshold_amp * params.threshold_amp * win as f64;

    // quiet_window[s]: window [s, s + win) has RMS below threshold.
    let mut energy: f64 = x[..win].iter().map(|v| v * v).sum();
    let mut quiet_window = Vec::with_capacity(n - win + 1);
    quiet_window.push(energy < limit);
    for s in 1..=n - win {
        energy += x[s + win - 1] * x[s + win - 1] - x[s - 1] * x[s - 1];
        // Re-anchor periodically so the running sum cannot drift.
        if s % 4096 == 0 {
            energy = x[s..s + win].iter().map(|v| v * v).sum();
        }
        quiet_window.push(energy < limit);
    }

    let min_len = params.min_silence_s * sample_rate_hz;
    let mut runs = Vec::new();
    let mut run_start = None;
    // Number of quiet windows covering the current sample.
    let mut covering = 0usize;
    for i in 0..n {
        if i < quiet_window.len() && quiet_window[i] {
            covering += 1;
        }
        if i >= win && quiet_window[i - win] {
            covering -= 1;
        }
        let quiet = covering > 0 && x[i].abs() < params.threshold_amp;
        match (quiet, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(start)) => {
                if (i - start) as f64 > min_len {
                    runs.push(start..i);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = run_start {
        if (n - start) as f64 > min_len {
            runs.push(start..n);
        }
    }
    runs
}

/// Remove `runs` (sorted, disjoint) from `x`.
pub fn splice_out(x: &[f64], runs: &[Range<usize>]) -> Vec<f64> {
    let removed: usize = runs.iter().map(|r| r.len()).sum();
    let mut out = Vec::with_capacity(x.len() - removed);
    let mut pos = 0;
    for r in runs {
        out.extend_from_slice(&x[pos..r.start]);
        pos = r.end;
    }
    out.extend_from_slice(&x[pos..]);
    out
}

pub fn strip_silence(x: &AudioBuffer, params: SilenceParams) -> AudioBuffer {
    let runs = silent_runs(&x.samples, x.sample_rate_hz, params);
    AudioBuffer::new(splice_out(&x.samples, &runs), x.sample_rate_hz)
}
