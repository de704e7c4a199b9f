//! Linear convolution: a direct O(N·K) path and an FFT overlap-add path.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::buffer::AudioBuffer;
use crate::error::Result;

/// Which convolution implementation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvPath {
    Direct,
    Fft,
    /// Direct for short kernels, FFT otherwise.
    #[default]
    Auto,
}

/// Kernels up to this length use the direct path under [`ConvPath::Auto`].
pub const AUTO_DIRECT_MAX_TAPS: usize = 64;

impl ConvPath {
    fn resolve(self, kernel_len: usize) -> ConvPath {
        match self {
            ConvPath::Auto if kernel_len <= AUTO_DIRECT_MAX_TAPS => ConvPath::Direct,
            ConvPath::Auto => ConvPath::Fft,
            other => other,
        }
    }
}

/// Full linear convolution, length `x.len() + kernel.len() - 1`.
pub fn direct_convolve(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    if x.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; x.len() + kernel.len() - 1];
    for (m, &h) in kernel.iter().enumerate() {
        for (o, &s) in out[m..m + x.len()].iter_mut().zip(x) {
            *o += h * s;
        }
    }
    out
}

/// Full linear convolution by overlap-add with power-of-two FFT blocks.
pub fn fft_convolve(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    if x.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let k = kernel.len();
    let fft_size = (4 * k).max(1024).next_power_of_two();
    let block = fft_size - k + 1;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_size);
    let inverse = planner.plan_fft_inverse(fft_size);
    let mut scratch = vec![Complex::default(); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];

    let mut spectrum: Vec<Complex<f64>> = kernel.iter().map(|&h| Complex::new(h, 0.0)).collect();
    spectrum.resize(fft_size, Complex::default());
    forward.process_with_scratch(&mut spectrum, &mut scratch);

    let scale = 1.0 / fft_size as f64;
    let mut out = vec![0.0; x.len() + k - 1];
    let mut buf = vec![Complex::default(); fft_size];
    for (i, chunk) in x.chunks(block).enumerate() {
        buf.iter_mut().for_each(|c| *c = Complex::default());
        for (c, &s) in buf.iter_mut().zip(chunk) {
            c.re = s;
        }
        forward.process_with_scratch(&mut buf, &mut scratch);
        for (c, h) in buf.iter_mut().zip(&spectrum) {
            *c *= h;
        }
        inverse.process_with_scratch(&mut buf, &mut scratch);
        let start = i * block;
        let valid = chunk.len() + k - 1;
        for (o, c) in out[start..start + valid].iter_mut().zip(&buf) {
            *o += c.re * scale;
        }
    }
    out
}

/// Convolve and keep `x.len()` samples starting at `offset` of the full result.
pub fn convolve_window(x: &[f64], kernel: &[f64], offset: usize, path: ConvPath) -> Vec<f64> {
    let n = x.len();
    match path.resolve(kernel.len()) {
        ConvPath::Fft => fft_convolve(x, kernel)[offset..offset + n].to_vec(),
        _ => direct_window(x, kernel, offset),
    }
}

/// Zero-phase convolution with an odd-length kernel centered on its middle tap.
///
/// Output sample `n` is `sum_m kernel[m] * x[n + (K-1)/2 - m]`, with `x` zero
/// outside its bounds, so a symmetric kernel introduces no delay.
pub fn aligned_convolve(x: &[f64], kernel: &[f64], path: ConvPath) -> Vec<f64> {
    debug_assert!(kernel.len() % 2 == 1);
    convolve_window(x, kernel, (kernel.len() - 1) / 2, path)
}

/// Causal convolution truncated to the input length.
pub fn causal_convolve(x: &[f64], kernel: &[f64], path: ConvPath) -> Vec<f64> {
    convolve_window(x, kernel, 0, path)
}

// Direct convolution evaluated only over output indices offset..offset+N.
fn direct_window(x: &[f64], kernel: &[f64], offset: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (m, &h) in kernel.iter().enumerate() {
        // out[j] += h * x[j + offset - m] for valid source indices.
        let lo = m.saturating_sub(offset);
        let hi = (n + m).saturating_sub(offset).min(n);
        if lo >= hi {
            continue;
        }
        let src = lo + offset - m;
        for (o, &s) in out[lo..hi].iter_mut().zip(&x[src..src + (hi - lo)]) {
            *o += h * s;
        }
    }
    out
}

/// Convolve a buffer with a speaker impulse response, keeping the input length.
///
/// With `normalize`, the output is scaled so its peak matches the input peak.
pub fn convolve_ir(x: &AudioBuffer, ir: &AudioBuffer, normalize: bool) -> Result<AudioBuffer> {
    ir.check_rate(x.sample_rate_hz)?;
    if x.is_empty() || ir.is_empty() {
        return Ok(AudioBuffer::silence(x.len(), x.sample_rate_hz));
    }
    let mut samples = convolve_window(&x.samples, &ir.samples, 0, ConvPath::Auto);
    if normalize {
        let out_peak = samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        let in_peak = x.peak();
        if out_peak > 0.0 {
            let g = in_peak / out_peak;
            samples.iter_mut().for_each(|s| *s *= g);
        }
    }
    Ok(AudioBuffer::new(samples, x.sample_rate_hz))
}
