//! Time-domain and mel-domain mean-squared errors and their weighted sum.

use super::mel::{MelAnalyzer, MelParams};
use crate::buffer::AudioBuffer;
use crate::error::Result;

pub fn mse_time(pred: &AudioBuffer, target: &AudioBuffer) -> Result<f64> {
    pred.check_compatible(target)?;
    Ok(mse(&pred.samples, &target.samples))
}

pub fn mse_mel(pred: &AudioBuffer, target: &AudioBuffer, params: &MelParams) -> Result<f64> {
    pred.check_compatible(target)?;
    let analyzer = MelAnalyzer::new(*params, pred.sample_rate_hz)?;
    Objective::new(analyzer, 1.0).mel_loss(&pred.samples, &target.samples)
}

pub fn total_loss(pred: &AudioBuffer, target: &AudioBuffer, params: &MelParams, lambda: f64) -> Result<f64> {
    Ok(mse_time(pred, target)? + lambda * mse_mel(pred, target, params)?)
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / a.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub time: f64,
    pub mel: f64,
    pub total: f64,
}

/// `mse_time + lambda * mse_mel` with cached FFT plans and mel filters.
pub struct Objective {
    analyzer: MelAnalyzer,
    lambda: f64,
}

impl Objective {
    pub fn new(analyzer: MelAnalyzer, lambda: f64) -> Self {
        Self { analyzer, lambda }
    }

    pub fn from_params(params: MelParams, sample_rate_hz: f64, lambda: f64) -> Result<Self> {
        Ok(Self::new(MelAnalyzer::new(params, sample_rate_hz)?, lambda))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn analyzer(&self) -> &MelAnalyzer {
        &self.analyzer
    }

    fn mel_loss(&self, pred: &[f64], target: &[f64]) -> Result<f64> {
        let p = self.analyzer.spectrogram(pred)?;
        let t = self.analyzer.spectrogram(target)?;
        Ok(mse(&p.data, &t.data))
    }

    pub fn loss(&self, pred: &[f64], target: &[f64]) -> Result<LossBreakdown> {
        let time = mse(pred, target);
        let mel = self.mel_loss(pred, target)?;
        Ok(LossBreakdown { time, mel, total: time + self.lambda * mel })
    }

    /// Loss and its gradient with respect to `pred`.
    pub fn loss_and_grad(&self, pred: &[f64], target: &[f64]) -> Result<(LossBreakdown, Vec<f64>)> {
        let n = pred.len() as f64;
        let time = mse(pred, target);
        let mut grad: Vec<f64> = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();

        let pt = self.analyzer.trace(pred)?;
        let tm = self.analyzer.spectrogram(target)?;
        let cells = pt.mel.data.len() as f64;
        let mel = mse(&pt.mel.data, &tm.data);
        if self.lambda != 0.0 {
            let grad_mel: Vec<f64> =
                pt.mel.data.iter().zip(&tm.data).map(|(p, t)| self.lambda * 2.0 * (p - t) / cells).collect();
            let gx = self.analyzer.backward(&pt, &grad_mel, pred.len());
            grad.iter_mut().zip(&gx).for_each(|(g, m)| *g += m);
        }
        Ok((LossBreakdown { time, mel, total: time + self.lambda * mel }, grad))
    }
}
