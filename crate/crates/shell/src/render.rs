//! The render path shared by `ampforge render` and `POST /api/render`.

use ampforge_core::ampmodel::{model_forward, AmpModel, Mode};
use ampforge_core::audio::{convolve_ir, write_wav, BitDepth, WavData};
use ampforge_core::filterbank::{design_filterbank, Profile};
use ampforge_core::latent::{apply_gain, blend_models, interpolate, ModelLookup};
use ampforge_core::AudioBuffer;
use serde::{Deserialize, Serialize};

use crate::error::ShellError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlendEntry {
    Pair(String, f64),
    Named { model_id: String, weight: f64 },
}

impl BlendEntry {
    pub fn parts(&self) -> (&str, f64) {
        match self {
            BlendEntry::Pair(id, w) | BlendEntry::Named { model_id: id, weight: w } => (id, *w),
        }
    }
}

/// Which model to render with.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSelection {
    Single(String),
    Pair { model_i: String, model_j: String, alpha: f64 },
    Blend(Vec<(String, f64)>),
}

impl ModelSelection {
    pub fn resolve(&self, lookup: &impl ModelLookup) -> Result<AmpModel, ShellError> {
        let get = |id: &str| lookup.lookup(id).ok_or_else(|| ShellError::UnknownModel(id.to_string()));
        match self {
            ModelSelection::Single(id) => Ok(get(id)?.clone()),
            ModelSelection::Pair { model_i, model_j, alpha } => {
                let mut m = interpolate(get(model_i)?, get(model_j)?, *alpha)?;
                if let Some(meta) = m.metadata.as_mut() {
                    meta.parents[0].0 = model_i.clone();
                    meta.parents[1].0 = model_j.clone();
                }
                Ok(m)
            }
            ModelSelection::Blend(entries) => {
                let resolved = entries
                    .iter()
                    .map(|(id, w)| Ok((id.as_str(), get(id)?, *w)))
                    .collect::<Result<Vec<_>, ShellError>>()?;
                Ok(blend_models(&resolved)?)
            }
        }
    }
}

/// `[IR ∘] model(gain ∘ input)`, offline and delay-compensated.
///
/// `profile` swaps in a filterbank of that profile with the same centers.
pub fn render(
    model: &AmpModel,
    input: &AudioBuffer,
    gain_db: f64,
    ir: Option<&AudioBuffer>,
    profile: Option<Profile>,
) -> Result<AudioBuffer, ShellError> {
    if !gain_db.is_finite() {
        return Err(ShellError::Invalid("gain_db must be finite".into()));
    }
    let mut model = model.clone();
    if let Some(p) = profile {
        model.filterbank_spec = model.filterbank_spec.reprofiled(p);
    }
    let bank = design_filterbank(&model.filterbank_spec)?;
    let driven = apply_gain(input, gain_db);
    let out = model_forward(&driven, &model, &bank, Mode::AlignedOffline)?;
    let out = match ir {
        Some(ir) => convolve_ir(&out, ir, false)?,
        None => out,
    };
    if !out.samples.iter().all(|v| v.is_finite()) {
        return Err(ShellError::NonFinite("render output".into()));
    }
    Ok(out)
}

/// Mono 32-bit float WAV bytes.
pub fn encode_wav(buffer: &AudioBuffer) -> Result<Vec<u8>, ShellError> {
    Ok(write_wav(&WavData::from_buffer(buffer, BitDepth::Float32))?)
}
