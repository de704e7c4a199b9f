//! JSON views of models and filterbanks for `inspect` and the weights endpoint.

use ampforge_core::ampmodel::{activations_dump, ActivationSummary, AmpModel, Provenance};
use ampforge_core::filterbank::{design_filterbank, total_group_delay, total_group_delay_samples, FilterBankSpec, NUM_LAYERS};
use ampforge_core::AudioBuffer;
use serde::Serialize;

use crate::error::ShellError;

#[derive(Debug, Clone, Serialize)]
pub struct BlockWeights {
    pub block: usize,
    pub weights_raw: Vec<f64>,
    /// `weights_raw` squared, as used in the forward pass.
    pub weights_effective: Vec<f64>,
    pub bias: f64,
    pub residual_logit: f64,
    pub residual_mix: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub name: String,
    pub sample_rate_hz: f64,
    pub filterbank_spec: FilterBankSpec,
    pub centers_hz: Vec<f64>,
    pub blocks: Vec<BlockWeights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Provenance>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FilterbankReport {
    pub spec: FilterBankSpec,
    pub centers_hz: Vec<f64>,
    pub group_delay_samples: usize,
    pub group_delay_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernels: Option<Vec<Vec<f64>>>,
}

pub fn weights_report(id: Option<&str>, model: &AmpModel) -> Result<WeightsReport, ShellError> {
    let bank = design_filterbank(&model.filterbank_spec)?;
    Ok(WeightsReport {
        id: id.map(str::to_string),
        name: model.name.clone(),
        sample_rate_hz: model.sample_rate_hz,
        filterbank_spec: model.filterbank_spec,
        centers_hz: bank.centers_hz().to_vec(),
        blocks: model
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| BlockWeights {
                block: i,
                weights_raw: b.weights_raw.clone(),
                weights_effective: b.effective_weights(),
                bias: b.bias,
                residual_logit: b.residual_logit,
                residual_mix: b.residual_mix(),
            })
            .collect(),
        metadata: model.metadata.clone(),
    })
}

pub fn filterbank_report(spec: &FilterBankSpec, with_kernels: bool) -> Result<FilterbankReport, ShellError> {
    let bank = design_filterbank(spec)?;
    Ok(FilterbankReport {
        spec: *spec,
        centers_hz: bank.centers_hz().to_vec(),
        group_delay_samples: total_group_delay_samples(spec, NUM_LAYERS),
        group_delay_ms: total_group_delay(spec, NUM_LAYERS) * 1e3,
        kernels: with_kernels.then(|| bank.kernels().to_vec()),
    })
}

pub fn activation_report(model: &AmpModel, input: &AudioBuffer, hop: usize) -> Result<Vec<ActivationSummary>, ShellError> {
    if hop == 0 {
        return Err(ShellError::Invalid("hop must be positive".into()));
    }
    let bank = design_filterbank(&model.filterbank_spec)?;
    Ok(activations_dump(input, model, &bank)?
        .iter()
        .enumerate()
        .map(|(i, a)| a.summarize(i, hop))
        .collect())
}
