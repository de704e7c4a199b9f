//! Training configuration files: a JSON object, or `key = value` lines with
//! dotted keys for nested sections (`mel.fft_size = 2048`).

use ampforge_core::audio::{PrepareOptions, SilenceParams};
use ampforge_core::filterbank::{FilterBankSpec, Profile};
use ampforge_core::training::TrainConfig;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::ShellError;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterbankSection {
    pub profile: Profile,
    pub taps: Option<usize>,
    pub num_filters: usize,
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
}

impl Default for FilterbankSection {
    fn default() -> Self {
        let d = FilterBankSpec::default();
        Self { profile: d.profile, taps: None, num_filters: d.num_filters, f_lo_hz: d.f_lo_hz, f_hi_hz: d.f_hi_hz }
    }
}

impl FilterbankSection {
    pub fn spec(&self, sample_rate_hz: f64) -> FilterBankSpec {
        FilterBankSpec {
            sample_rate_hz,
            num_filters: self.num_filters,
            f_lo_hz: self.f_lo_hz,
            f_hi_hz: self.f_hi_hz,
            taps: self.taps.unwrap_or(self.profile.default_taps()),
            profile: self.profile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub strip_silence: bool,
    pub silence_threshold_amp: f64,
    pub min_silence_s: f64,
    pub max_lag_samples: usize,
    /// Trailing share of the training pair held out when no validation files are given.
    pub validation_fraction: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        let s = SilenceParams::default();
        Self {
            strip_silence: true,
            silence_threshold_amp: s.threshold_amp,
            min_silence_s: s.min_silence_s,
            max_lag_samples: PrepareOptions::default().max_lag_samples,
            validation_fraction: 0.1,
        }
    }
}

impl DataSection {
    pub fn prepare_options(&self) -> PrepareOptions {
        PrepareOptions {
            strip: self.strip_silence.then_some(SilenceParams {
                threshold_amp: self.silence_threshold_amp,
                min_silence_s: self.min_silence_s,
            }),
            max_lag_samples: self.max_lag_samples,
            ..PrepareOptions::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainFileConfig {
    pub train: TrainConfig,
    pub filterbank: FilterbankSection,
    pub data: DataSection,
}

fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn parse_key_values(text: &str) -> Result<Value, ShellError> {
    let mut root = Map::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ShellError::Parse(format!("config line {}: expected key = value", lineno + 1)))?;
        let path: Vec<&str> = key.trim().split('.').collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(ShellError::Parse(format!("config line {}: bad key `{}`", lineno + 1, key.trim())));
        }
        let mut node = &mut root;
        for part in &path[..path.len() - 1] {
            let entry = node.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
            node = entry
                .as_object_mut()
                .ok_or_else(|| ShellError::Parse(format!("config line {}: `{part}` is not a section", lineno + 1)))?;
        }
        node.insert(path[path.len() - 1].to_string(), parse_scalar(value.trim()));
    }
    Ok(Value::Object(root))
}

fn section<T: for<'de> Deserialize<'de> + Default>(map: &mut Map<String, Value>, key: &str) -> Result<T, ShellError> {
    match map.remove(key) {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v).map_err(|e| ShellError::Parse(format!("config section `{key}`: {e}"))),
    }
}

pub fn parse_train_config(text: &str) -> Result<TrainFileConfig, ShellError> {
    let value = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| ShellError::Parse(format!("config: {e}")))?
    } else {
        parse_key_values(text)?
    };
    let Value::Object(mut map) = value else {
        return Err(ShellError::Parse("config must be an object".into()));
    };
    let filterbank = section(&mut map, "filterbank")?;
    let data = section(&mut map, "data")?;
    let train: TrainConfig =
        serde_json::from_value(Value::Object(map)).map_err(|e| ShellError::Parse(format!("config: {e}")))?;
    train.validate().map_err(|e| ShellError::Parse(format!("config: {e}")))?;
    Ok(TrainFileConfig { train, filterbank, data })
}
