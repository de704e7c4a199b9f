//! Losses, exact gradients, Adam, and the early-stopped training loop.

pub mod adam;
pub mod backward;
pub mod loss;
pub mod mel;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward, loss_and_gradients};
pub use loss::{mse_mel, mse_time, total_loss, LossBreakdown, Objective};
pub use mel::{mel_spectrogram, MelAnalyzer, MelParams, MelSpectrogram};
pub use train::{evaluate, init_model, segment_pairs, train, train_from, EpochRecord, TrainConfig, TrainOutcome};
