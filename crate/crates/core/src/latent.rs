//! Blending models in raw-parameter space.
//!
//! Models trained over the same filterbank share one parameter layout, so a
//! weighted sum of their parameter vectors is again a model. Weights are used
//! as given: nothing is normalized, which makes `alpha > 1` an extrapolation
//! away from the first model.

use std::collections::{BTreeMap, HashMap};

use crate::ampmodel::{AmpModel, ParamVector, Provenance};
use crate::buffer::AudioBuffer;
use crate::error::{Error, Result};

/// Weighted list of model ids.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendSpec {
    pub entries: Vec<(String, f64)>,
}

impl BlendSpec {
    pub fn new(entries: Vec<(String, f64)>) -> Self {
        Self { entries }
    }

    /// `[(i, 1 - alpha), (j, alpha)]`.
    pub fn pair(model_i: impl Into<String>, model_j: impl Into<String>, alpha: f64) -> Self {
        Self { entries: vec![(model_i.into(), 1.0 - alpha), (model_j.into(), alpha)] }
    }
}

/// Anything that can resolve a model id.
pub trait ModelLookup {
    fn lookup(&self, id: &str) -> Option<&AmpModel>;
}

impl ModelLookup for HashMap<String, AmpModel> {
    fn lookup(&self, id: &str) -> Option<&AmpModel> {
        self.get(id)
    }
}

impl ModelLookup for BTreeMap<String, AmpModel> {
    fn lookup(&self, id: &str) -> Option<&AmpModel> {
        self.get(id)
    }
}

/// `sum_m weight_m * theta_m` over already-resolved models.
///
/// Terms with weight exactly zero are skipped, so a weight vector like
/// `[1, 0]` reproduces the first model bit for bit.
pub fn blend_models(entries: &[(&str, &AmpModel, f64)]) -> Result<AmpModel> {
    let (_, first, _) = entries.first().ok_or(Error::Empty("blend entries"))?;
    for (id, model, weight) in entries {
        if !weight.is_finite() {
            return Err(Error::InvalidParams(format!("weight for `{id}` is not finite")));
        }
        if model.filterbank_spec != first.filterbank_spec || model.sample_rate_hz != first.sample_rate_hz {
            return Err(Error::FilterbankMismatch);
        }
    }

    let mut acc: Option<Vec<f64>> = None;
    for (_, model, weight) in entries.iter().filter(|(_, _, w)| *w != 0.0) {
        let theta = model.params();
        match acc.as_mut() {
            None => acc = Some(theta.iter().map(|p| weight * p).collect()),
            Some(sum) => sum.iter_mut().zip(theta.iter()).for_each(|(s, p)| *s += weight * p),
        }
    }
    let values = acc.unwrap_or_else(|| vec![0.0; first.num_params()]);

    let mut out = first.with_params(&ParamVector(values))?;
    out.name = "blend".into();
    out.metadata = Some(Provenance {
        parents: entries.iter().map(|(id, _, w)| (id.to_string(), *w)).collect(),
        alpha: None,
    });
    Ok(out)
}

/// `(1 - alpha) * theta_i + alpha * theta_j`; alpha outside [0, 1] extrapolates.
pub fn interpolate(model_i: &AmpModel, model_j: &AmpModel, alpha: f64) -> Result<AmpModel> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParams("alpha must be finite".into()));
    }
    let mut out = blend_models(&[(&model_i.name, model_i, 1.0 - alpha), (&model_j.name, model_j, alpha)])?;
    out.name = format!("{} ~ {} @ {alpha}", model_i.name, model_j.name);
    if let Some(meta) = out.metadata.as_mut() {
        meta.alpha = Some(alpha);
    }
    Ok(out)
}

/// Resolve every id in `spec` and blend.
pub fn blend(spec: &BlendSpec, registry: &impl ModelLookup) -> Result<AmpModel> {
    let resolved = spec
        .entries
        .iter()
        .map(|(id, w)| {
            registry.lookup(id).map(|m| (id.as_str(), m, *w)).ok_or_else(|| Error::UnknownModel(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    blend_models(&resolved)
}

/// Scale by `10^(gain_db / 20)`. Meant for the model input, where it acts as a drive control.
pub fn apply_gain(x: &AudioBuffer, gain_db: f64) -> AudioBuffer {
    let g = 10f64.powf(gain_db / 20.0);
    AudioBuffer::new(x.samples.iter().map(|s| s * g).collect(), x.sample_rate_hz)
}
