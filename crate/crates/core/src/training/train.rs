//! Seeded mini-batch training with validation-driven early stopping.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::backward::loss_and_gradients;
use super::loss::Objective;
use super::mel::MelParams;
use crate::ampmodel::{AmpModel, EqBlockParams, Gradients, NUM_BLOCKS};
use crate::audio::dataset::DatasetPair;
use crate::error::{Error, Result};
use crate::filterbank::{FilterBank, FilterBankSpec};

pub const INIT_WEIGHT_RANGE: f64 = 0.05;
pub const INIT_RESIDUAL_LOGIT: f64 = -2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub segment_len: usize,
    pub batch_segments: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Relative improvement a validation loss must make to reset patience.
    pub min_delta: f64,
    pub loss_weight_lambda: f64,
    pub rng_seed: u64,
    pub mel: MelParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            segment_len: 16_384,
            batch_segments: 8,
            max_epochs: 100,
            patience: 10,
            min_delta: 0.0,
            loss_weight_lambda: 1.0,
            rng_seed: 0,
            mel: MelParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.adam_eps];
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("learning_rate and adam_eps must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if self.segment_len == 0 || self.batch_segments == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("segment_len, batch_segments, max_epochs and patience must be positive");
        }
        if self.segment_len < self.mel.fft_size {
            return bad("segment_len must hold at least one mel frame");
        }
        if !(self.min_delta >= 0.0) || !(self.loss_weight_lambda >= 0.0) {
            return bad("min_delta and loss_weight_lambda must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub best_flag: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: AmpModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// True when patience ran out before `max_epochs`.
    pub stopped_early: bool,
}

/// Near-identity starting point: small random weights, zero bias, r ~ 0.12.
pub fn init_model(name: &str, spec: FilterBankSpec, seed: u64) -> Result<AmpModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (0..NUM_BLOCKS)
        .map(|_| EqBlockParams {
            weights_raw: (0..spec.num_filters).map(|_| rng.gen_range(-INIT_WEIGHT_RANGE..INIT_WEIGHT_RANGE)).collect(),
            bias: 0.0,
            residual_logit: INIT_RESIDUAL_LOGIT,
        })
        .collect();
    AmpModel::new(name, spec, blocks)
}

/// Cut every pair into `segment_len` pieces; a short tail is kept if it holds a mel frame.
pub fn segment_pairs(pairs: &[DatasetPair], segment_len: usize, min_len: usize) -> Vec<DatasetPair> {
    let mut out = Vec::new();
    for pair in pairs {
        let n = pair.len();
        let mut start = 0;
        while start < n {
            let end = (start + segment_len).min(n);
            if end - start >= min_len {
                out.push(DatasetPair { input: pair.input.slice(start..end), target: pair.target.slice(start..end) });
            }
            start = end;
        }
    }
    out
}

/// Mean total loss over `segments`.
pub fn evaluate(model: &AmpModel, bank: &FilterBank, segments: &[DatasetPair], objective: &Objective) -> Result<f64> {
    let losses: Vec<Result<f64>> = segments
        .par_iter()
        .map(|s| {
            let pred = crate::ampmodel::model_forward(&s.input, model, bank, crate::ampmodel::Mode::AlignedOffline)?;
            Ok(objective.loss(&pred.samples, &s.target.samples)?.total)
        })
        .collect();
    let mut sum = 0.0;
    for l in losses {
        sum += l?;
    }
    Ok(sum / segments.len() as f64)
}

pub fn train(
    train_pairs: &[DatasetPair],
    val_pairs: &[DatasetPair],
    config: &TrainConfig,
    bank: &FilterBank,
) -> Result<TrainOutcome> {
    let initial = init_model("trained", *bank.spec(), config.rng_seed)?;
    train_from(initial, train_pairs, val_pairs, config, bank, &mut |_| {})
}

/// Train starting from `initial`, calling `observer` after every epoch.
pub fn train_from(
    initial: AmpModel,
    train_pairs: &[DatasetPair],
    val_pairs: &[DatasetPair],
    config: &TrainConfig,
    bank: &FilterBank,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    let fs = bank.spec().sample_rate_hz;
    for p in train_pairs.iter().chain(val_pairs) {
        p.input.check_rate(fs)?;
        p.input.check_compatible(&p.target)?;
    }
    let objective = Objective::from_params(config.mel, fs, config.loss_weight_lambda)?;
    let train_segments = segment_pairs(train_pairs, config.segment_len, config.mel.fft_size);
    let val_segments = segment_pairs(val_pairs, config.segment_len, config.mel.fft_size);
    if train_segments.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if val_segments.is_empty() {
        return Err(Error::Empty("validation data"));
    }

    let adam = config.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut model = initial;
    let mut params = model.params();
    let mut state = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train_segments.len()).collect();

    let mut best = (model.clone(), f64::INFINITY, 0usize);
    let mut history = Vec::new();
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(config.batch_segments).enumerate() {
            let results: Vec<Result<(f64, Gradients)>> = batch
                .par_iter()
                .map(|&i| {
                    let s = &train_segments[i];
                    loss_and_gradients(&s.input.samples, &s.target.samples, &model, bank, &objective)
                        .map(|(l, g)| (l.total, g))
                })
                .collect();
            // Fixed reduction order keeps runs bit-reproducible.
            let mut grads = Gradients::zeros(params.len());
            let mut batch_loss = 0.0;
            for r in results {
                let (l, g) = r.map_err(|e| Error::Diverged(format!("epoch {epoch}, batch {b}: {e}")))?;
                batch_loss += l;
                grads.add_assign(&g);
            }
            if !batch_loss.is_finite() || !grads.is_finite() {
                return Err(Error::Diverged(format!("epoch {epoch}, batch {b}: non-finite loss {batch_loss}")));
            }
            grads.scale(1.0 / batch.len() as f64);
            epoch_loss += batch_loss;
            adam_step(&mut params, &grads, &mut state, &adam);
            model = model.with_params(&params)?;
        }
        let train_loss = epoch_loss / train_segments.len() as f64;
        let val_loss = evaluate(&model, bank, &val_segments, &objective)?;
        if !val_loss.is_finite() {
            return Err(Error::Diverged(format!("epoch {epoch}: non-finite validation loss")));
        }
        let improved = val_loss < best.1 * (1.0 - config.min_delta) || best.1.is_infinite();
        if val_loss < best.1 {
            best = (model.clone(), val_loss, epoch);
        }
        since_best = if improved { 0 } else { since_best + 1 };
        let record = EpochRecord { epoch, train_loss, val_loss, best_flag: best.2 == epoch };
        observer(&record);
        history.push(record);
        if since_best >= config.patience {
            stopped_early = true;
            break;
        }
    }

    let (model, best_val_loss, best_epoch) = best;
    Ok(TrainOutcome { model, history, best_epoch, best_val_loss, stopped_early })
}
