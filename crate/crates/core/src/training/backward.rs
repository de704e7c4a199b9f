//! Reverse-mode gradients of the loss through all six blocks.

use super::loss::{LossBreakdown, Objective};
use super::mel::MelParams;
use crate::ampmodel::forward::{block_trace, check_bank};
use crate::ampmodel::{softsign, softsign_derivative, AmpModel, Gradients, Mode};
use crate::audio::convolve::{aligned_convolve, ConvPath};
use crate::buffer::AudioBuffer;
use crate::error::{Error, Result};
use crate::filterbank::FilterBank;

struct Saved {
    input: Vec<f64>,
    pre_activation: Vec<f64>,
    kernel: Vec<f64>,
}

/// Loss of the offline render of `input` against `target`, and its gradient
/// with respect to every raw model parameter.
pub fn loss_and_gradients(
    input: &[f64],
    target: &[f64],
    model: &AmpModel,
    bank: &FilterBank,
    objective: &Objective,
) -> Result<(LossBreakdown, Gradients)> {
    check_bank(model, bank)?;
    if input.len() != target.len() {
        return Err(Error::LengthMismatch { left: input.len(), right: target.len() });
    }
    let mut saved = Vec::with_capacity(model.blocks.len());
    let mut signal = input.to_vec();
    for (i, block) in model.blocks.iter().enumerate() {
        let trace = block_trace(&signal, block, bank, Mode::AlignedOffline, ConvPath::Auto);
        if !trace.output.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteBlock { block: i, stage: "forward" });
        }
        saved.push(Saved {
            input: std::mem::replace(&mut signal, trace.output),
            pre_activation: trace.pre_activation,
            kernel: bank.combined_kernel(&block.effective_weights()),
        });
    }

    let (loss, mut grad_out) = objective.loss_and_grad(&signal, target)?;
    if !loss.total.is_finite() {
        return Err(Error::NonFiniteBlock { block: model.blocks.len() - 1, stage: "loss" });
    }

    let nf = bank.num_filters();
    let half = bank.spec().half_taps();
    let mut grads = Gradients::zeros(model.num_params());
    for (i, (block, s)) in model.blocks.iter().zip(&saved).enumerate().rev() {
        let r = block.residual_mix();
        let x = &s.input;
        let mut grad_logit = 0.0;
        let grad_u: Vec<f64> = grad_out
            .iter()
            .zip(x)
            .zip(&s.pre_activation)
            .map(|((&gy, &xi), &u)| {
                grad_logit += gy * (softsign(u) - xi);
                gy * r * softsign_derivative(u)
            })
            .collect();
        grad_logit *= r * (1.0 - r);
        let grad_bias: f64 = grad_u.iter().sum();

        // lag[m] = sum_n grad_u[n] * x[n + half - m]
        let n = x.len();
        let lag: Vec<f64> = (0..bank.taps())
            .map(|m| {
                let lo = m.saturating_sub(half);
                let hi = (n + m).saturating_sub(half).min(n);
                if lo >= hi {
                    return 0.0;
                }
                let src = lo + half - m;
                grad_u[lo..hi].iter().zip(&x[src..src + (hi - lo)]).map(|(g, v)| g * v).sum()
            })
            .collect();

        let out = grads.block_mut(i, nf);
        for (k, w) in block.weights_raw.iter().enumerate() {
            let band: f64 = bank.kernel(k).iter().zip(&lag).map(|(h, c)| h * c).sum();
            out[k] = 2.0 * w * band;
        }
        out[nf] = grad_bias;
        out[nf + 1] = grad_logit;

        // Symmetric kernel: the adjoint of aligned convolution is itself.
        let through = aligned_convolve(&grad_u, &s.kernel, ConvPath::Auto);
        grad_out = grad_out.iter().zip(&through).map(|(gy, t)| (1.0 - r) * gy + t).collect();

        if !grads.block(i, nf).iter().all(|v| v.is_finite()) || !grad_out.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteBlock { block: i, stage: "backward" });
        }
    }
    Ok((loss, grads))
}

/// One-shot form: builds the mel analyzer for this call.
pub fn backward(
    x: &AudioBuffer,
    target: &AudioBuffer,
    model: &AmpModel,
    bank: &FilterBank,
    mel: &MelParams,
    lambda: f64,
) -> Result<(f64, Gradients)> {
    x.check_compatible(target)?;
    x.check_rate(model.sample_rate_hz)?;
    let objective = Objective::from_params(*mel, x.sample_rate_hz, lambda)?;
    let (loss, grads) = loss_and_gradients(&x.samples, &target.samples, model, bank, &objective)?;
    Ok((loss.total, grads))
}
