mod common;

use ampforge_core::ampmodel::{model_forward, Mode, ParamVector};
use ampforge_core::filterbank::{design_filterbank, FilterBankSpec};
use ampforge_core::training::{backward, total_loss, MelParams};
use common::{noise, random_model};

#[test]
fn analytic_gradient_matches_central_differences() {
    let spec = FilterBankSpec::default();
    let bank = design_filterbank(&spec).unwrap();
    let mel = MelParams::default();
    let lambda = 1.0;
    let model = random_model(spec, 11);
    let x = noise(2048, 0.6, 12);
    // the target is another model's output, so the loss surface is not flat
    let target = model_forward(&x, &random_model(spec, 13), &bank, Mode::AlignedOffline).unwrap();

    let (loss, grads) = backward(&x, &target, &model, &bank, &mel, lambda).unwrap();
    assert_eq!(grads.len(), 372);

    let loss_at = |p: &ParamVector| {
        let m = model.with_params(p).unwrap();
        let y = model_forward(&x, &m, &bank, Mode::AlignedOffline).unwrap();
        total_loss(&y, &target, &mel, lambda).unwrap()
    };
    let theta = model.params();
    assert!((loss_at(&theta) - loss).abs() <= 1e-12 * loss);

    let eps = 1e-5;
    let numeric: Vec<f64> = (0..theta.len())
        .map(|i| {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus.0[i] += eps;
            minus.0[i] -= eps;
            (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps)
        })
        .collect();

    let scale = numeric.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let floor = 1e-6 * scale;
    let mut worst = (0.0, 0);
    for (i, (a, n)) in grads.iter().zip(&numeric).enumerate() {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(floor);
        if rel > worst.0 {
            worst = (rel, i);
        }
    }
    assert!(worst.0 < 1e-4, "max relative error {} at parameter {}", worst.0, worst.1);
}
