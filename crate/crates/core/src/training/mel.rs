//! Mel spectrogram with an exact adjoint for backpropagation.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MelParams {
    pub fft_size: usize,
    pub hop: usize,
    pub num_mels: usize,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    /// STFT magnitudes are clamped from below to this value.
    pub magnitude_floor: f64,
    /// Compare natural-log mel energies instead of linear ones.
    pub log_magnitude: bool,
}

impl Default for MelParams {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            hop: 256,
            num_mels: 64,
            f_min_hz: 40.0,
            f_max_hz: 20_000.0,
            magnitude_floor: 1e-8,
            log_magnitude: false,
        }
    }
}

impl MelParams {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.fft_size < 2 || self.hop == 0 || self.hop > self.fft_size {
            return bad(format!("need 0 < hop ({}) <= fft_size ({})", self.hop, self.fft_size));
        }
        if self.num_mels == 0 {
            return bad("num_mels must be positive".into());
        }
        if !(self.f_min_hz >= 0.0 && self.f_min_hz < self.f_max_hz && self.f_max_hz <= sample_rate_hz / 2.0) {
            return bad(format!(
                "need 0 <= f_min ({}) < f_max ({}) <= Nyquist ({})",
                self.f_min_hz,
                self.f_max_hz,
                sample_rate_hz / 2.0
            ));
        }
        if !(self.magnitude_floor > 0.0) {
            return bad("magnitude_floor must be positive".into());
        }
        Ok(())
    }

    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.fft_size {
            0
        } else {
            (len - self.fft_size) / self.hop + 1
        }
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Row-major `frames x num_mels` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub frames: usize,
    pub num_mels: usize,
    pub data: Vec<f64>,
}

impl MelSpectrogram {
    pub fn get(&self, frame: usize, mel: usize) -> f64 {
        self.data[frame * self.num_mels + mel]
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.data[frame * self.num_mels..(frame + 1) * self.num_mels]
    }
}

struct MelBand {
    first_bin: usize,
    weights: Vec<f64>,
}

/// Reusable STFT + mel filter state for one sample rate and parameter set.
pub struct MelAnalyzer {
    params: MelParams,
    window: Vec<f64>,
    bands: Vec<MelBand>,
    edges_hz: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Forward results kept for [`MelAnalyzer::backward`].
pub struct MelTrace {
    spectra: Vec<Vec<Complex<f64>>>,
    pub mel: MelSpectrogram,
}

impl MelAnalyzer {
    pub fn new(params: MelParams, sample_rate_hz: f64) -> Result<Self> {
        params.validate(sample_rate_hz)?;
        let n = params.fft_size;
        // Periodic Hann.
        let window = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();

        let (m_lo, m_hi) = (hz_to_mel(params.f_min_hz), hz_to_mel(params.f_max_hz));
        let step = (m_hi - m_lo) / (params.num_mels + 1) as f64;
        let edges_hz: Vec<f64> = (0..params.num_mels + 2).map(|i| mel_to_hz(m_lo + step * i as f64)).collect();
        let bin_hz = sample_rate_hz / n as f64;
        let bands = edges_hz
            .windows(3)
            .map(|e| {
                let (lo, mid, hi) = (e[0], e[1], e[2]);
                let weight = |k: usize| {
                    let f = k as f64 * bin_hz;
                    let up = (f - lo) / (mid - lo);
                    let down = (hi - f) / (hi - mid);
                    up.min(down).max(0.0)
                };
                let first_bin = (lo / bin_hz).floor() as usize;
                let last_bin = ((hi / bin_hz).ceil() as usize).min(n / 2);
                MelBand { first_bin, weights: (first_bin..=last_bin).map(weight).collect() }
            })
            .collect();

        let mut planner = FftPlanner::new();
        Ok(Self {
            params,
            window,
            bands,
            edges_hz,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn params(&self) -> &MelParams {
        &self.params
    }

    /// Frequency span `(lower, upper)` of mel band `j`'s triangle, in Hz.
    pub fn band_span_hz(&self, j: usize) -> (f64, f64) {
        (self.edges_hz[j], self.edges_hz[j + 2])
    }

    /// Dense filter weight of FFT bin `k` in band `j`.
    pub fn filter_weight(&self, j: usize, k: usize) -> f64 {
        let b = &self.bands[j];
        k.checked_sub(b.first_bin).and_then(|i| b.weights.get(i)).copied().unwrap_or(0.0)
    }

    pub fn spectrogram(&self, x: &[f64]) -> Result<MelSpectrogram> {
        Ok(self.trace(x)?.mel)
    }

    pub fn trace(&self, x: &[f64]) -> Result<MelTrace> {
        let p = &self.params;
        let frames = p.num_frames(x.len());
        if frames == 0 {
            return Err(Error::TooShort { len: x.len(), frame: p.fft_size });
        }
        let nbins = p.fft_size / 2 + 1;
        let mut scratch = vec![Complex::default(); self.forward.get_inplace_scratch_len()];
        let mut spectra = Vec::with_capacity(frames);
        let mut data = Vec::with_capacity(frames * p.num_mels);
        for t in 0..frames {
            let frame = &x[t * p.hop..t * p.hop + p.fft_size];
            let mut buf: Vec<Complex<f64>> =
                frame.iter().zip(&self.window).map(|(&s, &w)| Complex::new(s * w, 0.0)).collect();
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            buf.truncate(nbins);
            let mags: Vec<f64> = buf.iter().map(|c| c.norm().max(p.magnitude_floor)).collect();
            for band in &self.bands {
                let e: f64 = band.weights.iter().zip(&mags[band.first_bin..]).map(|(w, m)| w * m).sum();
                data.push(if p.log_magnitude { e.max(p.magnitude_floor).ln() } else { e });
            }
            spectra.push(buf);
        }
        Ok(MelTrace { spectra, mel: MelSpectrogram { frames, num_mels: p.num_mels, data } })
    }

    /// Gradient with respect to the input signal of `sum(grad_mel * mel)`.
    pub fn backward(&self, trace: &MelTrace, grad_mel: &[f64], len: usize) -> Vec<f64> {
        let p = &self.params;
        let n = p.fft_size;
        let nbins = n / 2 + 1;
        let mut grad_x = vec![0.0; len];
        let mut scratch = vec![Complex::default(); self.inverse.get_inplace_scratch_len()];
        let mut grad_mag = vec![0.0; nbins];
        let mut buf = vec![Complex::default(); n];
        for t in 0..trace.mel.frames {
            grad_mag.iter_mut().for_each(|g| *g = 0.0);
            for (j, band) in self.bands.iter().enumerate() {
                let mut g = grad_mel[t * p.num_mels + j];
                if p.log_magnitude {
                    let e = trace.mel.get(t, j).exp();
                    g = if e > p.magnitude_floor { g / e } else { 0.0 };
                }
                for (gm, w) in grad_mag[band.first_bin..].iter_mut().zip(&band.weights) {
                    *gm += g * w;
                }
            }
            // d|Z_k|/da_n = Re(Z_k e^{+i 2 pi k n / N}) / |Z_k|; the floor is flat.
            buf.iter_mut().for_each(|c| *c = Complex::default());
            for k in 0..nbins {
                let z = trace.spectra[t][k];
                let mag = z.norm();
                if mag > p.magnitude_floor {
                    buf[k] = z * (grad_mag[k] / mag);
                }
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = t * p.hop;
            for (i, (gx, w)) in grad_x[start..start + n].iter_mut().zip(&self.window).enumerate() {
                *gx += w * buf[i].re;
            }
        }
        grad_x
    }
}

pub fn mel_spectrogram(x: &crate::buffer::AudioBuffer, params: &MelParams) -> Result<MelSpectrogram> {
    MelAnalyzer::new(*params, x.sample_rate_hz)?.spectrogram(&x.samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 44_100.0;

    #[test]
    fn frame_count() {
        let p = MelParams::default();
        assert_eq!(p.num_frames(1024 + 256 * 9), 10);
        assert_eq!(p.num_frames(1023), 0);
        let a = MelAnalyzer::new(p, FS).unwrap();
        assert_eq!(a.spectrogram(&vec![0.1; 1024 + 256 * 9 + 255]).unwrap().frames, 10);
        assert!(matches!(a.spectrogram(&[0.0; 1000]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn zero_signal_maps_floor_through_filters() {
        let p = MelParams::default();
        let a = MelAnalyzer::new(p, FS).unwrap();
        let m = a.spectrogram(&vec![0.0; 4096]).unwrap();
        for j in 0..p.num_mels {
            let row_sum: f64 = (0..=512).map(|k| a.filter_weight(j, k)).sum();
            for t in 0..m.frames {
                assert!((m.get(t, j) - 1e-8 * row_sum).abs() < 1e-20);
            }
        }
    }

    #[test]
    fn sine_peaks_in_band_containing_its_frequency() {
        let p = MelParams::default();
        let a = MelAnalyzer::new(p, FS).unwrap();
        let x: Vec<f64> = (0..8192).map(|n| 0.5 * (2.0 * PI * 1000.0 * n as f64 / FS).sin()).collect();
        let m = a.spectrogram(&x).unwrap();
        for t in 0..m.frames {
            let row = m.row(t);
            let arg = (0..row.len()).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
            let (lo, hi) = a.band_span_hz(arg);
            assert!(lo <= 1000.0 && 1000.0 <= hi, "frame {t}: band {arg} spans {lo}..{hi}");
        }
    }

    #[test]
    fn every_band_sees_at_least_one_bin() {
        let a = MelAnalyzer::new(MelParams::default(), FS).unwrap();
        for j in 0..64 {
            assert!((0..=512).any(|k| a.filter_weight(j, k) > 0.0), "band {j}");
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(MelAnalyzer::new(MelParams { hop: 2048, ..Default::default() }, FS).is_err());
        assert!(MelAnalyzer::new(MelParams { f_max_hz: 30_000.0, ..Default::default() }, FS).is_err());
    }

    #[test]
    fn mel_scale_round_trip() {
        for f in [0.0, 40.0, 700.0, 1000.0, 20_000.0] {
            assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn backward_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let p = MelParams { fft_size: 64, hop: 16, num_mels: 8, f_min_hz: 100.0, f_max_hz: 8000.0, ..Default::default() };
        for log in [false, true] {
            let p = MelParams { log_magnitude: log, ..p };
            let a = MelAnalyzer::new(p, 16_000.0).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            let x: Vec<f64> = (0..160).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let probe: Vec<f64> = (0..a.trace(&x).unwrap().mel.data.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = |x: &[f64]| -> f64 { a.spectrogram(x).unwrap().data.iter().zip(&probe).map(|(m, g)| m * g).sum() };
            let trace = a.trace(&x).unwrap();
            let grad = a.backward(&trace, &probe, x.len());
            for i in (0..x.len()).step_by(7) {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += 1e-6;
                xm[i] -= 1e-6;
                let fd = (f(&xp) - f(&xm)) / 2e-6;
                assert!((fd - grad[i]).abs() < 1e-5 * (1.0 + fd.abs()), "log={log} i={i}: {fd} vs {}", grad[i]);
            }
        }
    }
}
