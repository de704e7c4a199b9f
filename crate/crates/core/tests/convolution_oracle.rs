mod common;

use ampforge_core::ampmodel::{model_forward_with, Mode};
use ampforge_core::audio::{direct_convolve, fft_convolve, ConvPath};
use ampforge_core::filterbank::{design_filterbank, FilterBankSpec};
use common::{noise, random_model, FS};

/// Plain double loop, independent of the library's direct path.
fn textbook(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len() + h.len() - 1;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(h.len() - 1);
            let hi = i.min(x.len() - 1);
            (lo..=hi).map(|j| x[j] * h[i - j]).sum()
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn fft_path_matches_direct_for_both_profiles() {
    let x = noise(FS as usize, 0.9, 1);
    for spec in [FilterBankSpec::latency(FS), FilterBankSpec::quality(FS)] {
        let bank = design_filterbank(&spec).unwrap();
        let gains: Vec<f64> = (0..spec.num_filters).map(|k| 0.2 + 0.05 * (k % 7) as f64).collect();
        let kernel = bank.combined_kernel(&gains);
        let d = direct_convolve(&x.samples, &kernel);
        let f = fft_convolve(&x.samples, &kernel);
        assert!(max_abs_diff(&d, &f) < 1e-9, "{:?}", spec.profile);
        assert!(max_abs_diff(&d, &textbook(&x.samples, &kernel)) < 1e-12);

        let model = random_model(spec, 2);
        let a = model_forward_with(&x, &model, &bank, Mode::AlignedOffline, ConvPath::Direct).unwrap();
        let b = model_forward_with(&x, &model, &bank, Mode::AlignedOffline, ConvPath::Fft).unwrap();
        assert!(max_abs_diff(&a.samples, &b.samples) < 1e-9, "{:?}", spec.profile);
    }
}

#[test]
fn single_band_sine_matches_brute_force() {
    let spec = FilterBankSpec::default();
    let bank = design_filterbank(&spec).unwrap();
    let k = 30;
    let f = bank.centers_hz()[k];
    let x: Vec<f64> = (0..4096).map(|n| (2.0 * std::f64::consts::PI * f * n as f64 / FS).sin()).collect();
    let mut gains = vec![0.0; spec.num_filters];
    gains[k] = 1.0;
    let combined = bank.combined_kernel(&gains);
    let oracle = textbook(&x, bank.kernel(k));
    assert!(max_abs_diff(&fft_convolve(&x, &combined), &oracle) < 1e-9);
    assert!(max_abs_diff(&direct_convolve(&x, &combined), &oracle) < 1e-9);
}
