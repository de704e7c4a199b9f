use serde::Serialize;

use super::{AmpModel, EqBlockParams};
use crate::audio::convolve::{aligned_convolve, causal_convolve, ConvPath};
use crate::buffer::AudioBuffer;
use crate::error::{Error, Result};
use crate::filterbank::FilterBank;

/// Time alignment of the block output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Linear-phase delay compensated; edges zero-padded. Used for training and renders.
    #[default]
    AlignedOffline,
    /// Causal: each block delays its output (and residual path) by `(taps-1)/2`.
    CausalStream,
}

pub fn softsign(x: f64) -> f64 {
    x / (1.0 + x.abs())
}

pub fn softsign_derivative(x: f64) -> f64 {
    let d = 1.0 + x.abs();
    1.0 / (d * d)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Intermediate signals of one block, kept for backprop and inspection.
pub(crate) struct BlockTrace {
    pub pre_activation: Vec<f64>,
    pub output: Vec<f64>,
}

pub(crate) fn check_bank(model: &AmpModel, bank: &FilterBank) -> Result<()> {
    if model.filterbank_spec != *bank.spec() {
        return Err(Error::FilterbankMismatch);
    }
    Ok(())
}

pub(crate) fn block_trace(
    x: &[f64],
    params: &EqBlockParams,
    bank: &FilterBank,
    mode: Mode,
    path: ConvPath,
) -> BlockTrace {
    let kernel = bank.combined_kernel(&params.effective_weights());
    let r = params.residual_mix();
    let mut u = match mode {
        Mode::AlignedOffline => aligned_convolve(x, &kernel, path),
        Mode::CausalStream => causal_convolve(x, &kernel, path),
    };
    u.iter_mut().for_each(|v| *v += params.bias);
    let output = match mode {
        Mode::AlignedOffline => x.iter().zip(&u).map(|(&xi, &ui)| (1.0 - r) * xi + r * softsign(ui)).collect(),
        Mode::CausalStream => {
            let delay = bank.spec().half_taps();
            u.iter()
                .enumerate()
                .map(|(n, &ui)| {
                    let dry = if n >= delay { x[n - delay] } else { 0.0 };
                    (1.0 - r) * dry + r * softsign(ui)
                })
                .collect()
        }
    };
    BlockTrace { pre_activation: u, output }
}

pub fn eq_block_forward(x: &AudioBuffer, params: &EqBlockParams, bank: &FilterBank, mode: Mode) -> Result<AudioBuffer> {
    x.check_rate(bank.spec().sample_rate_hz)?;
    if x.is_empty() {
        return Err(Error::Empty("block input"));
    }
    if params.weights_raw.len() != bank.num_filters() {
        return Err(Error::InvalidParams(format!(
            "{} weights for a {}-band filterbank",
            params.weights_raw.len(),
            bank.num_filters()
        )));
    }
    let trace = block_trace(&x.samples, params, bank, mode, ConvPath::Auto);
    Ok(AudioBuffer::new(trace.output, x.sample_rate_hz))
}

pub fn model_forward(x: &AudioBuffer, model: &AmpModel, bank: &FilterBank, mode: Mode) -> Result<AudioBuffer> {
    model_forward_with(x, model, bank, mode, ConvPath::Auto)
}

/// [`model_forward`] with an explicit convolution implementation.
pub fn model_forward_with(
    x: &AudioBuffer,
    model: &AmpModel,
    bank: &FilterBank,
    mode: Mode,
    path: ConvPath,
) -> Result<AudioBuffer> {
    check_bank(model, bank)?;
    x.check_rate(model.sample_rate_hz)?;
    if x.is_empty() {
        return Err(Error::Empty("model input"));
    }
    let mut signal = x.samples.clone();
    for block in &model.blocks {
        signal = block_trace(&signal, block, bank, mode, path).output;
    }
    Ok(AudioBuffer::new(signal, x.sample_rate_hz))
}

/// Per-block intermediate signals of an offline render.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockActivations {
    /// RMS of each weighted band output `w_k^2 * (h_k * x)`.
    pub band_rms: Vec<f64>,
    /// `u`: weighted band sum plus bias, before soft-sign.
    pub pre_activation: Vec<f64>,
    /// Block output after the residual mix.
    pub output: Vec<f64>,
}

/// Downsampled view of [`BlockActivations`] for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivationSummary {
    pub block: usize,
    pub hop: usize,
    pub frames: usize,
    pub band_rms: Vec<f64>,
    /// Per-frame peak |u|.
    pub pre_activation_peak: Vec<f64>,
    /// Per-frame peak |y|.
    pub output_peak: Vec<f64>,
}

impl BlockActivations {
    pub fn summarize(&self, block: usize, hop: usize) -> ActivationSummary {
        let peaks = |s: &[f64]| s.chunks(hop).map(|c| c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))).collect::<Vec<_>>();
        let output_peak = peaks(&self.output);
        ActivationSummary {
            block,
            hop,
            frames: output_peak.len(),
            band_rms: self.band_rms.clone(),
            pre_activation_peak: peaks(&self.pre_activation),
            output_peak,
        }
    }
}

pub fn activations_dump(x: &AudioBuffer, model: &AmpModel, bank: &FilterBank) -> Result<Vec<BlockActivations>> {
    check_bank(model, bank)?;
    x.check_rate(model.sample_rate_hz)?;
    if x.is_empty() {
        return Err(Error::Empty("model input"));
    }
    let mut records = Vec::with_capacity(model.blocks.len());
    let mut signal = x.samples.clone();
    for block in &model.blocks {
        let band_rms = block
            .effective_weights()
            .iter()
            .zip(bank.kernels())
            .map(|(&w, h)| {
                let band = aligned_convolve(&signal, h, ConvPath::Auto);
                w * (band.iter().map(|v| v * v).sum::<f64>() / band.len() as f64).sqrt()
            })
            .collect();
        let trace = block_trace(&signal, block, bank, Mode::AlignedOffline, ConvPath::Auto);
        signal = trace.output.clone();
        records.push(BlockActivations { band_rms, pre_activation: trace.pre_activation, output: trace.output });
    }
    Ok(records)
}
