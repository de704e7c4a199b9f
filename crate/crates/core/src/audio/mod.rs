//! WAV I/O, convolution, speaker IRs and dataset preparation.

pub mod convolve;
pub mod dataset;
pub mod silence;
pub mod wav;

pub use convolve::{
    aligned_convolve, causal_convolve, convolve_ir, direct_convolve, fft_convolve, ConvPath,
};
pub use dataset::{estimate_lag, prepare_pair, DatasetPair, PrepareOptions};
pub use silence::{silent_runs, strip_silence, SilenceParams};
pub use wav::{read_wav, write_wav, BitDepth, WavData};
