//! Seeded synthetic material for training demos and tests.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::AudioBuffer;

pub fn sine(freq_hz: f64, amplitude: f64, len: usize, sample_rate_hz: f64) -> AudioBuffer {
    let w = 2.0 * PI * freq_hz / sample_rate_hz;
    AudioBuffer::new((0..len).map(|n| amplitude * (w * n as f64).sin()).collect(), sample_rate_hz)
}

/// Uniform white noise in `[-amplitude, amplitude)`.
pub fn white_noise(amplitude: f64, len: usize, sample_rate_hz: f64, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..len).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
    AudioBuffer::new(samples, sample_rate_hz)
}

/// Karplus-Strong plucked strings at random guitar pitches, a new note every
/// 0.15 to 0.6 s, with slightly varied pick strength and decay.
pub fn plucks(duration_s: f64, sample_rate_hz: f64, seed: u64) -> AudioBuffer {
    let len = (duration_s * sample_rate_hz).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; len];
    let mut start = 0usize;
    while start < len {
        // E2 to E5
        let midi = rng.gen_range(40.0..76.0_f64).round();
        let freq = 440.0 * 2f64.powf((midi - 69.0) / 12.0);
        let period = (sample_rate_hz / freq).round().max(2.0) as usize;
        let amp = rng.gen_range(0.2..0.6);
        let damping = rng.gen_range(0.990..0.998);
        let note_len = ((rng.gen_range(0.15..0.6) + 0.4) * sample_rate_hz) as usize;

        let mut line: Vec<f64> = (0..period).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
        let mut idx = 0;
        let end = (start + note_len).min(len);
        for o in &mut out[start..end] {
            let next = (idx + 1) % period;
            *o += line[idx];
            line[idx] = damping * 0.5 * (line[idx] + line[next]);
            idx = next;
        }
        start += (rng.gen_range(0.15..0.6) * sample_rate_hz) as usize;
    }
    AudioBuffer::new(out, sample_rate_hz)
}

/// Plucks over a bed of low-level noise, normalized to `peak`.
pub fn guitar_like(duration_s: f64, sample_rate_hz: f64, peak: f64, seed: u64) -> AudioBuffer {
    let mut x = plucks(duration_s, sample_rate_hz, seed);
    let noise = white_noise(0.02, x.len(), sample_rate_hz, seed ^ 0x9E37_79B9_7F4A_7C15);
    for (s, n) in x.samples.iter_mut().zip(&noise.samples) {
        *s += n;
    }
    let p = x.peak();
    if p > 0.0 {
        x.samples.iter_mut().for_each(|s| *s *= peak / p);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let a = guitar_like(2.0, 44_100.0, 0.8, 3);
        let b = guitar_like(2.0, 44_100.0, 0.8, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 88_200);
        assert!((a.peak() - 0.8).abs() < 1e-12);
        assert_ne!(a, guitar_like(2.0, 44_100.0, 0.8, 4));
    }

    #[test]
    fn noise_range() {
        let n = white_noise(0.5, 10_000, 48_000.0, 1);
        assert!(n.samples.iter().all(|v| (-0.5..0.5).contains(v)));
    }
}
