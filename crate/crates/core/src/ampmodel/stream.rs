use super::forward::{check_bank, softsign};
use super::AmpModel;
use crate::error::Result;
use crate::filterbank::FilterBank;

struct BlockState {
    kernel: Vec<f64>,
    bias: f64,
    mix: f64,
    // Last taps-1 input samples, oldest first.
    history: Vec<f64>,
}

/// Chunked causal renderer with a fixed latency of `6 * (taps-1)/2` samples.
///
/// Feeding a signal through [`StreamProcessor::process`] in any chunking gives
/// the same samples as a whole-buffer render in [`super::Mode::CausalStream`].
pub struct StreamProcessor {
    blocks: Vec<BlockState>,
    half_taps: usize,
    scratch: Vec<f64>,
}

impl StreamProcessor {
    pub fn new(model: &AmpModel, bank: &FilterBank) -> Result<Self> {
        check_bank(model, bank)?;
        let taps = bank.taps();
        let blocks = model
            .blocks
            .iter()
            .map(|b| BlockState {
                kernel: bank.combined_kernel(&b.effective_weights()),
                bias: b.bias,
                mix: b.residual_mix(),
                history: vec![0.0; taps - 1],
            })
            .collect();
        Ok(Self { blocks, half_taps: bank.spec().half_taps(), scratch: Vec::new() })
    }

    pub fn latency_samples(&self) -> usize {
        self.blocks.len() * self.half_taps
    }

    pub fn reset(&mut self) {
        for b in &mut self.blocks {
            b.history.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Process one chunk in place.
    pub fn process(&mut self, chunk: &mut [f64]) {
        let half = self.half_taps;
        for block in &mut self.blocks {
            let past = block.history.len();
            self.scratch.clear();
            self.scratch.extend_from_slice(&block.history);
            self.scratch.extend_from_slice(chunk);
            let ext = &self.scratch;
            for (n, out) in chunk.iter_mut().enumerate() {
                let newest = n + past;
                let mut acc = block.bias;
                for (m, &h) in block.kernel.iter().enumerate() {
                    acc += h * ext[newest - m];
                }
                let dry = ext[newest - half];
                *out = (1.0 - block.mix) * dry + block.mix * softsign(acc);
            }
            block.history.copy_from_slice(&ext[ext.len() - past..]);
        }
    }
}
