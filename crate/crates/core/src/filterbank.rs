//! Fixed bank of linear-phase FIR bandpass filters.
//!
//! Every model is built over the same bank, so a given weight index always
//! refers to the same frequency band. Centers are spaced geometrically from
//! `f_lo_hz` to `f_hi_hz`; band edges sit at the geometric means between
//! neighbouring centers. Kernels are Hann-windowed sinc bandpasses (the
//! difference of two windowed-sinc lowpasses), mirrored so that they are
//! exactly symmetric, then scaled to unit gain at their center frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of serial blocks in a model; used for the latency budget.
pub const NUM_LAYERS: usize = 6;

/// Upper bound on the summed group delay of all layers, in seconds.
pub const LATENCY_BUDGET_S: f64 = 0.002;

pub const DEFAULT_NUM_FILTERS: usize = 60;
pub const DEFAULT_F_LO_HZ: f64 = 40.0;
pub const DEFAULT_F_HI_HZ: f64 = 20_000.0;
pub const LATENCY_TAPS: usize = 29;
pub const QUALITY_TAPS: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Short kernels that keep six layers under the 2 ms latency budget.
    Latency,
    /// Long kernels for offline rendering with tight band shapes.
    Quality,
}

impl Profile {
    pub fn default_taps(self) -> usize {
        match self {
            Profile::Latency => LATENCY_TAPS,
            Profile::Quality => QUALITY_TAPS,
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latency" => Ok(Profile::Latency),
            "quality" => Ok(Profile::Quality),
            other => Err(Error::InvalidSpec(format!("unknown profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterBankSpec {
    pub sample_rate_hz: f64,
    pub num_filters: usize,
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub taps: usize,
    pub profile: Profile,
}

impl Default for FilterBankSpec {
    fn default() -> Self {
        Self::latency(44_100.0)
    }
}

impl FilterBankSpec {
    pub fn with_profile(sample_rate_hz: f64, profile: Profile) -> Self {
        Self {
            sample_rate_hz,
            num_filters: DEFAULT_NUM_FILTERS,
            f_lo_hz: DEFAULT_F_LO_HZ,
            f_hi_hz: DEFAULT_F_HI_HZ,
            taps: profile.default_taps(),
            profile,
        }
    }

    pub fn latency(sample_rate_hz: f64) -> Self {
        Self::with_profile(sample_rate_hz, Profile::Latency)
    }

    pub fn quality(sample_rate_hz: f64) -> Self {
        Self::with_profile(sample_rate_hz, Profile::Quality)
    }

    /// The same bands realized with the other profile's kernel length.
    pub fn reprofiled(&self, profile: Profile) -> Self {
        Self {
            taps: profile.default_taps(),
            profile,
            ..*self
        }
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0
    }

    /// Linear-phase delay of one kernel, in samples.
    pub fn half_taps(&self) -> usize {
        (self.taps - 1) / 2
    }

    /// Constant ratio between adjacent center frequencies.
    pub fn center_ratio(&self) -> f64 {
        (self.f_hi_hz / self.f_lo_hz).powf(1.0 / (self.num_filters - 1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!("sample rate {} must be positive", self.sample_rate_hz));
        }
        if self.num_filters < 2 {
            return bad(format!("need at least 2 filters, got {}", self.num_filters));
        }
        if !(self.f_lo_hz.is_finite() && self.f_lo_hz > 0.0) {
            return bad(format!("f_lo_hz {} must be positive", self.f_lo_hz));
        }
        if !(self.f_lo_hz < self.f_hi_hz) {
            return bad(format!("f_lo_hz {} must be below f_hi_hz {}", self.f_lo_hz, self.f_hi_hz));
        }
        if !(self.f_hi_hz < self.nyquist_hz()) {
            return bad(format!(
                "band edge {} Hz is at or above Nyquist {} Hz",
                self.f_hi_hz,
                self.nyquist_hz()
            ));
        }
        if self.taps == 0 || self.taps.is_multiple_of(2) {
            return bad(format!("taps must be odd, got {}", self.taps));
        }
        Ok(())
    }
}

/// Center frequency of band `k`: `f_lo * (f_hi / f_lo)^(k / (num_filters - 1))`.
pub fn center_frequency(spec: &FilterBankSpec, k: usize) -> Result<f64> {
    if k >= spec.num_filters {
        return Err(Error::IndexOutOfRange { index: k, len: spec.num_filters });
    }
    // Pin the endpoints so they come out exact.
    if k == 0 {
        return Ok(spec.f_lo_hz);
    }
    if k == spec.num_filters - 1 {
        return Ok(spec.f_hi_hz);
    }
    let frac = k as f64 / (spec.num_filters - 1) as f64;
    Ok(spec.f_lo_hz * (spec.f_hi_hz / spec.f_lo_hz).powf(frac))
}

/// Lower and upper band edges of band `k`, in Hz.
pub fn band_edges(spec: &FilterBankSpec, k: usize) -> Result<(f64, f64)> {
    let fk = center_frequency(spec, k)?;
    let half_step = spec.center_ratio().sqrt();
    let lower = if k == 0 {
        fk / half_step
    } else {
        (center_frequency(spec, k - 1)? * fk).sqrt()
    };
    let upper = if k + 1 == spec.num_filters {
        (fk * half_step).min(0.99 * spec.nyquist_hz())
    } else {
        (fk * center_frequency(spec, k + 1)?).sqrt()
    };
    Ok((lower, upper))
}

/// Summed linear-phase delay of `num_layers` serial filter stages, in seconds.
pub fn total_group_delay(spec: &FilterBankSpec, num_layers: usize) -> f64 {
    total_group_delay_samples(spec, num_layers) as f64 / spec.sample_rate_hz
}

pub fn total_group_delay_samples(spec: &FilterBankSpec, num_layers: usize) -> usize {
    num_layers * spec.half_taps()
}

/// `|sum_n kernel[n] * exp(-i 2 pi f n / fs)|`, evaluated directly.
pub fn magnitude_response(kernel: &[f64], freq_hz: f64, sample_rate_hz: f64) -> f64 {
    let omega = 2.0 * PI * freq_hz / sample_rate_hz;
    let (re, im) = kernel.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &h)| {
        let phase = omega * n as f64;
        (re + h * phase.cos(), im - h * phase.sin())
    });
    re.hypot(im)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    spec: FilterBankSpec,
    centers_hz: Vec<f64>,
    kernels: Vec<Vec<f64>>,
}

/// JSON view of a bank for inspection tools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterBankExport {
    pub spec: FilterBankSpec,
    pub centers_hz: Vec<f64>,
    pub kernels: Vec<Vec<f64>>,
}

impl FilterBank {
    pub fn spec(&self) -> &FilterBankSpec {
        &self.spec
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    pub fn kernels(&self) -> &[Vec<f64>] {
        &self.kernels
    }

    pub fn kernel(&self, k: usize) -> &[f64] {
        &self.kernels[k]
    }

    pub fn num_filters(&self) -> usize {
        self.kernels.len()
    }

    pub fn taps(&self) -> usize {
        self.spec.taps
    }

    /// Collapse the bank into one kernel: `sum_k gains[k] * h_k`.
    ///
    /// Convolution is linear, so filtering with this kernel equals summing the
    /// weighted band outputs.
    pub fn combined_kernel(&self, gains: &[f64]) -> Vec<f64> {
        debug_assert_eq!(gains.len(), self.kernels.len());
        let mut out = vec![0.0; self.spec.taps];
        for (kernel, &g) in self.kernels.iter().zip(gains) {
            for (o, &h) in out.iter_mut().zip(kernel) {
                *o += g * h;
            }
        }
        out
    }

    pub fn export(&self) -> FilterBankExport {
        FilterBankExport {
            spec: self.spec,
            centers_hz: self.centers_hz.clone(),
            kernels: self.kernels.clone(),
        }
    }
}

/// Build the bank described by `spec`. Pure: equal specs give bit-identical banks.
pub fn design_filterbank(spec: &FilterBankSpec) -> Result<FilterBank> {
    spec.validate()?;
    if spec.profile == Profile::Latency {
        let delay = total_group_delay(spec, NUM_LAYERS);
        if delay >= LATENCY_BUDGET_S {
            return Err(Error::InvalidSpec(format!(
                "{} taps give {:.3} ms over {NUM_LAYERS} layers, above the {:.1} ms budget",
                spec.taps,
                delay * 1e3,
                LATENCY_BUDGET_S * 1e3
            )));
        }
    }

    let window = hann_window(spec.taps);
    let mut centers_hz = Vec::with_capacity(spec.num_filters);
    let mut kernels = Vec::with_capacity(spec.num_filters);
    for k in 0..spec.num_filters {
        let fk = center_frequency(spec, k)?;
        let (lo, hi) = band_edges(spec, k)?;
        let mut kernel = bandpass_kernel(lo, hi, spec.sample_rate_hz, &window);
        let gain = magnitude_response(&kernel, fk, spec.sample_rate_hz);
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::InvalidSpec(format!("band {k} has no response at {fk} Hz")));
        }
        kernel.iter_mut().for_each(|h| *h /= gain);
        centers_hz.push(fk);
        kernels.push(kernel);
    }
    Ok(FilterBank { spec: *spec, centers_hz, kernels })
}

/// Hann window without zero end points, mirrored for exact symmetry.
fn hann_window(taps: usize) -> Vec<f64> {
    let mut w = vec![0.0; taps];
    let mid = (taps - 1) / 2;
    for n in 0..=mid {
        let v = 0.5 - 0.5 * (2.0 * PI * (n + 1) as f64 / (taps + 1) as f64).cos();
        w[n] = v;
        w[taps - 1 - n] = v;
    }
    w
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn bandpass_kernel(lo_hz: f64, hi_hz: f64, fs: f64, window: &[f64]) -> Vec<f64> {
    let taps = window.len();
    let mid = (taps - 1) / 2;
    let (a, b) = (2.0 * lo_hz / fs, 2.0 * hi_hz / fs);
    let mut h = vec![0.0; taps];
    for n in 0..=mid {
        let t = n as f64 - mid as f64;
        let v = window[n] * (b * sinc(b * t) - a * sinc(a * t));
        h[n] = v;
        h[taps - 1 - n] = v;
    }
    h
}
