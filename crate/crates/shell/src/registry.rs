//! On-disk model registry: `models/*.ampmodel.json`, `clips/*.wav`, `irs/*.wav`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ampforge_core::ampmodel::{deserialize_model, AmpModel, MODEL_FILE_EXTENSION};
use ampforge_core::audio::read_wav;
use ampforge_core::latent::ModelLookup;
use ampforge_core::AudioBuffer;

use crate::error::ShellError;

pub const MODELS_DIR: &str = "models";
pub const CLIPS_DIR: &str = "clips";
pub const IRS_DIR: &str = "irs";

/// Models are parsed once at open; clips and IRs are indexed by path and read on demand.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    root: PathBuf,
    models: BTreeMap<String, AmpModel>,
    clips: BTreeMap<String, PathBuf>,
    irs: BTreeMap<String, PathBuf>,
}

fn index_dir(dir: &Path, suffix: &str) -> Result<BTreeMap<String, PathBuf>, ShellError> {
    let mut out = BTreeMap::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(ShellError::io(dir, e)),
    };
    for entry in entries {
        let path = entry.map_err(|e| ShellError::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(id) = name.strip_suffix(suffix).filter(|id| !id.is_empty()) {
            out.insert(id.to_string(), path.clone());
        }
    }
    Ok(out)
}

pub fn load_model(path: &Path) -> Result<AmpModel, ShellError> {
    let bytes = fs::read(path).map_err(|e| ShellError::io(path, e))?;
    deserialize_model(&bytes).map_err(|e| ShellError::Parse(format!("{}: {e}", path.display())))
}

pub fn load_audio(path: &Path) -> Result<AudioBuffer, ShellError> {
    let bytes = fs::read(path).map_err(|e| ShellError::io(path, e))?;
    let wav = read_wav(&bytes).map_err(|e| ShellError::BadAudio(format!("{}: {e}", path.display())))?;
    Ok(wav.to_mono())
}

impl Registry {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ShellError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(ShellError::NotFound(root.display().to_string()));
        }
        let models = index_dir(&root.join(MODELS_DIR), MODEL_FILE_EXTENSION)?
            .into_iter()
            .map(|(id, path)| Ok((id, load_model(&path)?)))
            .collect::<Result<_, ShellError>>()?;
        Ok(Self {
            models,
            clips: index_dir(&root.join(CLIPS_DIR), ".wav")?,
            irs: index_dir(&root.join(IRS_DIR), ".wav")?,
            root,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn models(&self) -> impl Iterator<Item = (&str, &AmpModel)> {
        self.models.iter().map(|(id, m)| (id.as_str(), m))
    }

    pub fn clip_ids(&self) -> impl Iterator<Item = &str> {
        self.clips.keys().map(String::as_str)
    }

    pub fn ir_ids(&self) -> impl Iterator<Item = &str> {
        self.irs.keys().map(String::as_str)
    }

    pub fn model(&self, id: &str) -> Option<&AmpModel> {
        self.models.get(id)
    }

    pub fn clip(&self, id: &str) -> Result<AudioBuffer, ShellError> {
        let path = self.clips.get(id).ok_or_else(|| ShellError::UnknownClip(id.to_string()))?;
        load_audio(path)
    }

    pub fn ir(&self, id: &str) -> Result<AudioBuffer, ShellError> {
        let path = self.irs.get(id).ok_or_else(|| ShellError::UnknownIr(id.to_string()))?;
        load_audio(path)
    }

    /// True when every model shares one filterbank spec and sample rate.
    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.models.values();
        match it.next() {
            None => true,
            Some(first) => it.all(|m| m.filterbank_spec == first.filterbank_spec && m.sample_rate_hz == first.sample_rate_hz),
        }
    }
}

impl ModelLookup for Registry {
    fn lookup(&self, id: &str) -> Option<&AmpModel> {
        self.model(id)
    }
}
