//! The six-block EQ/distortion network and its file format.
//!
//! Each block filters its input through the shared filterbank, mixes the 60
//! band outputs with squared (hence non-negative) weights, adds a bias, and
//! saturates with soft-sign. A learned convex mix `r = sigmoid(residual_logit)`
//! blends the saturated signal with the block input.

pub(crate) mod forward;
mod stream;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::FilterBankSpec;

pub use forward::{
    activations_dump, eq_block_forward, model_forward, model_forward_with, sigmoid, softsign,
    softsign_derivative, ActivationSummary, BlockActivations, Mode,
};
pub use stream::StreamProcessor;

pub const NUM_BLOCKS: usize = 6;
pub const FORMAT_VERSION: u32 = 1;
pub const MODEL_FILE_EXTENSION: &str = ".ampmodel.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqBlockParams {
    /// Learned band weights before squaring.
    pub weights_raw: Vec<f64>,
    pub bias: f64,
    pub residual_logit: f64,
}

impl EqBlockParams {
    /// A block that passes its input through (r = sigmoid(-30)).
    pub fn bypass(num_filters: usize) -> Self {
        Self { weights_raw: vec![0.0; num_filters], bias: 0.0, residual_logit: -30.0 }
    }

    pub fn effective_weights(&self) -> Vec<f64> {
        self.weights_raw.iter().map(|w| w * w).collect()
    }

    pub fn residual_mix(&self) -> f64 {
        sigmoid(self.residual_logit)
    }

    fn is_finite(&self) -> bool {
        self.weights_raw.iter().all(|w| w.is_finite()) && self.bias.is_finite() && self.residual_logit.is_finite()
    }
}

/// Where a blended model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `(model id, weight)` for every parent.
    pub parents: Vec<(String, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmpModel {
    pub format_version: u32,
    pub name: String,
    pub sample_rate_hz: f64,
    pub filterbank_spec: FilterBankSpec,
    pub blocks: Vec<EqBlockParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Provenance>,
}

impl AmpModel {
    pub fn new(name: impl Into<String>, filterbank_spec: FilterBankSpec, blocks: Vec<EqBlockParams>) -> Result<Self> {
        let model = Self {
            format_version: FORMAT_VERSION,
            name: name.into(),
            sample_rate_hz: filterbank_spec.sample_rate_hz,
            filterbank_spec,
            blocks,
            metadata: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// All blocks bypassed: output equals input to within ~1e-13.
    pub fn identity(name: impl Into<String>, filterbank_spec: FilterBankSpec) -> Self {
        let blocks = vec![EqBlockParams::bypass(filterbank_spec.num_filters); NUM_BLOCKS];
        Self::new(name, filterbank_spec, blocks).expect("bypass blocks are valid")
    }

    pub fn num_params(&self) -> usize {
        param_count(&self.filterbank_spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedFormatVersion(self.format_version));
        }
        if self.blocks.len() != NUM_BLOCKS {
            return Err(Error::BlockCount(self.blocks.len()));
        }
        self.filterbank_spec.validate()?;
        if self.sample_rate_hz != self.filterbank_spec.sample_rate_hz {
            return Err(Error::SampleRateMismatch {
                expected: self.filterbank_spec.sample_rate_hz,
                found: self.sample_rate_hz,
            });
        }
        for (i, block) in self.blocks.iter().enumerate() {
            if block.weights_raw.len() != self.filterbank_spec.num_filters {
                return Err(Error::InvalidParams(format!(
                    "block {i} has {} weights, filterbank has {} bands",
                    block.weights_raw.len(),
                    self.filterbank_spec.num_filters
                )));
            }
            if !block.is_finite() {
                return Err(Error::NonFinite(format!("block {i} parameters")));
            }
        }
        Ok(())
    }

    /// Flat parameter view: per block, the raw weights then bias then residual logit.
    pub fn params(&self) -> ParamVector {
        let mut v = Vec::with_capacity(self.num_params());
        for b in &self.blocks {
            v.extend_from_slice(&b.weights_raw);
            v.push(b.bias);
            v.push(b.residual_logit);
        }
        ParamVector(v)
    }

    /// Copy of this model carrying `params` (same layout as [`AmpModel::params`]).
    pub fn with_params(&self, params: &ParamVector) -> Result<Self> {
        let nf = self.filterbank_spec.num_filters;
        if params.len() != self.num_params() {
            return Err(Error::InvalidParams(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let blocks = params
            .0
            .chunks_exact(nf + 2)
            .map(|c| EqBlockParams { weights_raw: c[..nf].to_vec(), bias: c[nf], residual_logit: c[nf + 1] })
            .collect();
        let model = Self { blocks, ..self.clone() };
        model.validate()?;
        Ok(model)
    }
}

pub fn param_count(spec: &FilterBankSpec) -> usize {
    NUM_BLOCKS * (spec.num_filters + 2)
}

/// Flat, fixed-order view of a model's raw parameters. Also used for gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// The slice belonging to block `i` of a model with `num_filters` bands.
    pub fn block(&self, i: usize, num_filters: usize) -> &[f64] {
        let stride = num_filters + 2;
        &self.0[i * stride..(i + 1) * stride]
    }

    pub fn block_mut(&mut self, i: usize, num_filters: usize) -> &mut [f64] {
        let stride = num_filters + 2;
        &mut self.0[i * stride..(i + 1) * stride]
    }

    pub fn add_assign(&mut self, other: &ParamVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().for_each(|v| *v *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

pub type Gradients = ParamVector;

pub fn serialize_model(model: &AmpModel) -> Result<Vec<u8>> {
    model.validate()?;
    Ok(serde_json::to_vec_pretty(model)?)
}

pub fn deserialize_model(bytes: &[u8]) -> Result<AmpModel> {
    let doc: serde_json::Value = serde_json::from_slice(bytes)?;
    match doc.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => return Err(Error::UnsupportedFormatVersion(u32::try_from(v).unwrap_or(u32::MAX))),
        None => return Err(Error::InvalidParams("missing or non-integer format_version".into())),
    }
    if let Some(blocks) = doc.get("blocks").and_then(|b| b.as_array()) {
        if blocks.len() != NUM_BLOCKS {
            return Err(Error::BlockCount(blocks.len()));
        }
    }
    let model: AmpModel = serde_json::from_value(doc)?;
    model.validate()?;
    Ok(model)
}
