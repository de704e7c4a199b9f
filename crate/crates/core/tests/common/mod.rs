#![allow(dead_code)]

use ampforge_core::ampmodel::{AmpModel, EqBlockParams};
use ampforge_core::filterbank::FilterBankSpec;
use ampforge_core::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FS: f64 = 44_100.0;

pub fn noise(len: usize, amp: f64, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioBuffer::new((0..len).map(|_| rng.gen_range(-amp..amp)).collect(), FS)
}

/// Every block active with moderate random weights, bias and mix.
pub fn random_model(spec: FilterBankSpec, seed: u64) -> AmpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (0..6)
        .map(|_| EqBlockParams {
            weights_raw: (0..spec.num_filters).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            bias: rng.gen_range(-0.3..0.3),
            residual_logit: rng.gen_range(-1.5..1.5),
        })
        .collect();
    AmpModel::new("random", spec, blocks).unwrap()
}
