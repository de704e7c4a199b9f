use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono audio at a fixed sample rate. Samples are nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        Self { samples, sample_rate_hz }
    }

    pub fn silence(len: usize, sample_rate_hz: f64) -> Self {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// A copy holding `range` of the samples.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self::new(self.samples[range].to_vec(), self.sample_rate_hz)
    }

    pub fn check_rate(&self, expected_hz: f64) -> Result<()> {
        if self.sample_rate_hz != expected_hz {
            return Err(Error::SampleRateMismatch { expected: expected_hz, found: self.sample_rate_hz });
        }
        Ok(())
    }

    /// Errors unless `other` has the same rate and length.
    pub fn check_compatible(&self, other: &AudioBuffer) -> Result<()> {
        other.check_rate(self.sample_rate_hz)?;
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }
}
