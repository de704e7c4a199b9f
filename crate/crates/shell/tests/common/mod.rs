#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use ampforge_core::ampmodel::{serialize_model, AmpModel, EqBlockParams};
use ampforge_core::audio::{write_wav, BitDepth, WavData};
use ampforge_core::filterbank::FilterBankSpec;
use ampforge_core::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

pub const FS: f64 = 44_100.0;

pub fn noise(len: usize, amp: f64, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioBuffer::new((0..len).map(|_| rng.gen_range(-amp..amp)).collect(), FS)
}

pub fn random_model(name: &str, spec: FilterBankSpec, seed: u64) -> AmpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (0..6)
        .map(|_| EqBlockParams {
            weights_raw: (0..spec.num_filters).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            bias: rng.gen_range(-0.3..0.3),
            residual_logit: rng.gen_range(-1.5..1.5),
        })
        .collect();
    AmpModel::new(name, spec, blocks).unwrap()
}

pub fn write_audio(path: &Path, buf: &AudioBuffer, depth: BitDepth) {
    fs::write(path, write_wav(&WavData::from_buffer(buf, depth)).unwrap()).unwrap();
}

pub fn write_model(path: &Path, model: &AmpModel) {
    fs::write(path, serialize_model(model).unwrap()).unwrap();
}

/// models: `crunch`, `fuzz` (latency bank), `clean` (identity), `wide` (quality bank);
/// clips: `riff` (0.5 s noise), `long` (3 s); irs: `cab`.
pub struct Fixture {
    pub dir: TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        for sub in ["models", "clips", "irs"] {
            fs::create_dir(root.join(sub)).unwrap();
        }
        let spec = FilterBankSpec::default();
        write_model(&root.join("models/crunch.ampmodel.json"), &random_model("Crunch", spec, 1));
        write_model(&root.join("models/fuzz.ampmodel.json"), &random_model("Fuzz", spec, 2));
        write_model(&root.join("models/clean.ampmodel.json"), &AmpModel::identity("Clean", spec));
        write_model(&root.join("models/wide.ampmodel.json"), &random_model("Wide", FilterBankSpec::quality(FS), 3));
        write_audio(&root.join("clips/riff.wav"), &noise(22_050, 0.5, 4), BitDepth::Float32);
        write_audio(&root.join("clips/long.wav"), &noise(3 * 44_100, 0.5, 5), BitDepth::Pcm24);
        let ir: Vec<f64> = (0..256).map(|n| 0.5 * (-(n as f64) / 40.0).exp() * if n % 2 == 0 { 1.0 } else { -0.6 }).collect();
        write_audio(&root.join("irs/cab.wav"), &AudioBuffer::new(ir, FS), BitDepth::Float32);
        Self { dir }
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }
}
