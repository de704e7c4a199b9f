//! Differentiable amplifier models built from a fixed linear-phase FIR
//! filterbank: design, rendering, training, blending and audio I/O.

// `!(a < b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ampmodel;
pub mod audio;
pub mod buffer;
pub mod error;
pub mod filterbank;
pub mod latent;
pub mod testsignal;
pub mod training;

pub use ampmodel::{AmpModel, EqBlockParams, Mode, ParamVector};
pub use buffer::AudioBuffer;
pub use error::{Error, Result};
pub use filterbank::{design_filterbank, FilterBank, FilterBankSpec, Profile};
