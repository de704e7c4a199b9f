//! Acceptance suite: one check per headline requirement, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p ampforge --test acceptance -- --nocapture` to see the report.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ampforge::{encode_wav, router, Registry, ServiceConfig};
use ampforge_core::ampmodel::{deserialize_model, model_forward, serialize_model, AmpModel, Mode, ParamVector};
use ampforge_core::audio::{direct_convolve, fft_convolve, prepare_pair, strip_silence, BitDepth, DatasetPair, PrepareOptions, SilenceParams, WavData};
use ampforge_core::filterbank::{
    design_filterbank, magnitude_response, total_group_delay, total_group_delay_samples, FilterBankSpec, Profile, NUM_LAYERS,
};
use ampforge_core::latent::{interpolate, BlendSpec};
use ampforge_core::testsignal::{guitar_like, white_noise};
use ampforge_core::training::{backward, evaluate, init_model, segment_pairs, total_loss, train_from, MelParams, Objective, TrainConfig};
use ampforge_core::{AudioBuffer, Error};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use common::{noise, random_model, Fixture, FS};
use http_body_util::BodyExt;
use serde_json::json;
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn bits(p: &ParamVector) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

fn latency_budget() -> Outcome {
    let spec = FilterBankSpec::default();
    let samples = total_group_delay_samples(&spec, NUM_LAYERS);
    let ms = total_group_delay(&spec, NUM_LAYERS) * 1e3;
    ensure(spec.taps == 29 && samples == 84, format!("taps {} delay {samples} samples", spec.taps))?;
    ensure(ms < 2.0, format!("{ms} ms"))?;
    ensure((ms - 84.0 / 44.1).abs() < 1e-12, format!("{ms} ms"))?;
    let too_long = FilterBankSpec { taps: 33, ..spec };
    ensure(design_filterbank(&too_long).is_err(), "33-tap latency bank was accepted")?;
    Ok(format!("{samples} samples = {ms:.4} ms over {NUM_LAYERS} layers"))
}

fn linear_phase() -> Outcome {
    let mut worst_db = 0.0f64;
    for profile in [Profile::Latency, Profile::Quality] {
        let bank = design_filterbank(&FilterBankSpec::with_profile(FS, profile)).unwrap();
        ensure(bank.num_filters() == 60, "filter count")?;
        for (k, h) in bank.kernels().iter().enumerate() {
            let n = h.len();
            ensure((0..n).all(|i| h[i].to_bits() == h[n - 1 - i].to_bits()), format!("{profile:?} kernel {k} not symmetric"))?;
        }
        if profile == Profile::Quality {
            for (k, (&f, h)) in bank.centers_hz().iter().zip(bank.kernels()).enumerate() {
                let db = 20.0 * magnitude_response(h, f, FS).log10();
                ensure(db.abs() <= 1.0, format!("quality kernel {k} gain {db:.3} dB at {f:.1} Hz"))?;
                worst_db = worst_db.max(db.abs());
            }
        }
    }
    Ok(format!("120 kernels bit-symmetric; worst quality center gain {worst_db:.2e} dB"))
}

fn gradient_correctness() -> Outcome {
    let spec = FilterBankSpec::default();
    let bank = design_filterbank(&spec).unwrap();
    let mel = MelParams::default();
    let model = random_model("m", spec, 31);
    let x = noise(2048, 0.6, 32);
    let target = model_forward(&x, &random_model("t", spec, 33), &bank, Mode::AlignedOffline).unwrap();
    let (_, grads) = backward(&x, &target, &model, &bank, &mel, 1.0).unwrap();
    ensure(grads.len() == 372, format!("{} gradients", grads.len()))?;
    let theta = model.params();
    let loss_at = |p: &ParamVector| {
        let y = model_forward(&x, &model.with_params(p).unwrap(), &bank, Mode::AlignedOffline).unwrap();
        total_loss(&y, &target, &mel, 1.0).unwrap()
    };
    let eps = 1e-5;
    let numeric: Vec<f64> = (0..theta.len())
        .map(|i| {
            let (mut a, mut b) = (theta.clone(), theta.clone());
            a.0[i] += eps;
            b.0[i] -= eps;
            (loss_at(&a) - loss_at(&b)) / (2.0 * eps)
        })
        .collect();
    let floor = 1e-6 * numeric.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let worst = grads
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max);
    ensure(worst < 1e-4, format!("max relative error {worst:.3e}"))?;
    Ok(format!("372 parameters, max relative error {worst:.2e}"))
}

fn identity_invariant() -> Outcome {
    let spec = FilterBankSpec::default();
    let bank = design_filterbank(&spec).unwrap();
    let model = AmpModel::identity("id", spec);
    let x = noise(44_100, 0.9, 41);
    let y = model_forward(&x, &model, &bank, Mode::AlignedOffline).unwrap();
    let err = max_abs_diff(&x.samples, &y.samples);
    ensure(err < 1e-9, format!("max deviation {err:.3e}"))?;
    Ok(format!("max per-sample deviation {err:.2e}"))
}

fn endpoints_and_affinity() -> Outcome {
    let spec = FilterBankSpec::default();
    let mut a = random_model("a", spec, 51);
    let mut b = random_model("b", spec, 52);
    a.blocks[0].bias = 0.2;
    b.blocks[0].bias = 0.6;
    a.blocks[1].bias = -0.0;
    let (ta, tb) = (a.params(), b.params());
    ensure(bits(&interpolate(&a, &b, 0.0).unwrap().params()) == bits(&ta), "alpha 0 differs from model i")?;
    ensure(bits(&interpolate(&a, &b, 1.0).unwrap().params()) == bits(&tb), "alpha 1 differs from model j")?;
    let mut registry = std::collections::HashMap::new();
    registry.insert("a".to_string(), a.clone());
    registry.insert("b".to_string(), b.clone());
    let mut worst = 0.0f64;
    for alpha in [-0.5, 0.25, 0.5, 0.75, 1.25, 1.5, 2.0] {
        let m = interpolate(&a, &b, alpha).unwrap();
        let via_blend = ampforge_core::latent::blend(&BlendSpec::pair("a", "b", alpha), &registry).unwrap();
        ensure(bits(&m.params()) == bits(&via_blend.params()), format!("blend and interpolate differ at {alpha}"))?;
        for ((p, p0), p1) in m.params().iter().zip(ta.iter()).zip(tb.iter()) {
            let scale = p0.abs().max(p1.abs());
            if scale > 0.0 {
                worst = worst.max(((p - p0) - alpha * (p1 - p0)).abs() / scale);
            }
        }
    }
    ensure(worst <= 1e-15, format!("affinity error {worst:.3e}"))?;
    let x15 = interpolate(&a, &b, 1.5).unwrap();
    for ((p, p0), p1) in x15.params().iter().zip(ta.iter()).zip(tb.iter()) {
        let closed = -0.5 * p0 + 1.5 * p1;
        ensure((p - closed).abs() <= 1e-15 * p0.abs().max(p1.abs()).max(1e-300) * 2.0, "alpha 1.5 closed form")?;
    }
    ensure((x15.blocks[0].bias - 0.8).abs() < 1e-15, format!("bias {}", x15.blocks[0].bias))?;
    Ok(format!("endpoints bit-exact; affinity error {worst:.1e}; bias 0.2/0.6 at 1.5 -> 0.8"))
}

fn convolution_oracle() -> Outcome {
    let x = white_noise(0.9, FS as usize, FS, 61);
    let mut details = Vec::new();
    for profile in [Profile::Latency, Profile::Quality] {
        let bank = design_filterbank(&FilterBankSpec::with_profile(FS, profile)).unwrap();
        let gains: Vec<f64> = (0..60).map(|k| 0.1 + 0.02 * k as f64).collect();
        let h = bank.combined_kernel(&gains);
        let err = max_abs_diff(&direct_convolve(&x.samples, &h), &fft_convolve(&x.samples, &h));
        ensure(err < 1e-9, format!("{profile:?}: {err:.3e}"))?;
        details.push(format!("{profile:?} {err:.1e}"));
    }
    Ok(format!("max |fft - direct| on 1 s noise: {}", details.join(", ")))
}

/// Hand-set reference: block 1 boosts 150 Hz to 3 kHz into a biased soft-sign, the rest bypass.
fn reference_model(spec: FilterBankSpec) -> AmpModel {
    let bank = design_filterbank(&spec).unwrap();
    let mut m = AmpModel::identity("reference", spec);
    let b = &mut m.blocks[1];
    for (w, &f) in b.weights_raw.iter_mut().zip(bank.centers_hz()) {
        *w = if (150.0..3000.0).contains(&f) { 1.2 } else { 0.4 };
    }
    b.bias = 0.15;
    b.residual_logit = 3.0;
    m
}

fn desk_training() -> Outcome {
    let spec = FilterBankSpec::default();
    let bank = design_filterbank(&spec).unwrap();
    let mut x = guitar_like(30.0, FS, 0.5, 7);
    let hiss = white_noise(0.1, x.len(), FS, 8);
    x.samples.iter_mut().zip(&hiss.samples).for_each(|(s, n)| *s += n);
    let y = model_forward(&x, &reference_model(spec), &bank, Mode::AlignedOffline).unwrap();
    let (train_pair, val_pair) = DatasetPair::new(x, y).unwrap().split_tail(0.1);

    let cfg = TrainConfig { learning_rate: 1e-2, max_epochs: 100, patience: 8, min_delta: 0.05, rng_seed: 1, ..Default::default() };
    let objective = Objective::from_params(cfg.mel, FS, cfg.loss_weight_lambda).unwrap();
    let segments = segment_pairs(std::slice::from_ref(&train_pair), cfg.segment_len, cfg.mel.fft_size);
    let initial = init_model("desk", spec, cfg.rng_seed).unwrap();
    let initial_loss = evaluate(&initial, &bank, &segments, &objective).unwrap();
    let start = Instant::now();
    let out = train_from(initial, &[train_pair], &[val_pair], &cfg, &bank, &mut |_| {}).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let final_loss = evaluate(&out.model, &bank, &segments, &objective).unwrap();
    let ratio = final_loss / initial_loss;
    ensure(ratio <= 0.1, format!("final/initial train loss {ratio:.4}"))?;
    ensure(out.stopped_early && out.history.len() < cfg.max_epochs, format!("no early stop after {} epochs", out.history.len()))?;
    ensure(elapsed < Duration::from_secs(600), format!("took {elapsed:?}"))?;
    Ok(format!(
        "loss {initial_loss:.3e} -> {final_loss:.3e} (ratio {ratio:.4}), early stop after {} epochs (best {}), {:.1} s",
        out.history.len(),
        out.best_epoch,
        elapsed.as_secs_f64()
    ))
}

fn dataset_prep() -> Outcome {
    let params = SilenceParams::default();
    // start mid-cycle so the first sample after a gap is not itself silent
    let tone = |secs: f64, f: f64| -> Vec<f64> {
        let w = 2.0 * std::f64::consts::PI * f / FS;
        (0..(secs * FS) as usize).map(|n| 0.5 * (w * n as f64 + 1.0).sin()).collect()
    };
    let quiet = |secs: f64| vec![0.0; (secs * FS) as usize];

    let five = AudioBuffer::new([tone(1.5, 220.0), quiet(2.0), tone(1.5, 330.0)].concat(), FS);
    let out = strip_silence(&five, params);
    ensure(out.len() == 3 * 44_100, format!("5 s with 2 s gap -> {} samples", out.len()))?;
    ensure(out.samples == [tone(1.5, 220.0), tone(1.5, 330.0)].concat(), "spliced content differs")?;

    let short = AudioBuffer::new([tone(1.0, 220.0), quiet(0.5), tone(1.0, 330.0)].concat(), FS);
    ensure(strip_silence(&short, params) == short, "0.5 s gap was altered")?;
    ensure(strip_silence(&AudioBuffer::silence(2 * 44_100, FS), params).is_empty(), "all-silent input not emptied")?;

    // target is a memoryless map of the input, so any misaligned splice would show
    let x = AudioBuffer::new([tone(1.0, 110.0), quiet(2.0), tone(1.0, 440.0)].concat(), FS);
    let shape = |v: f64| (2.0 * v).tanh() * 0.7 + 0.05 * v * v;
    let target = AudioBuffer::new(
        x.samples.iter().enumerate().map(|(n, &v)| if (44_100..132_300).contains(&n) { 0.0 } else { shape(v) }).collect(),
        FS,
    );
    let pair = prepare_pair(
        &WavData::from_buffer(&x, BitDepth::Float32),
        &WavData::from_buffer(&target, BitDepth::Float32),
        &PrepareOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(pair.input.len() == 88_200 && pair.target.len() == 88_200, format!("pair length {}", pair.len()))?;
    let err = pair
        .input
        .samples
        .iter()
        .zip(&pair.target.samples)
        .map(|(&i, &t)| (shape(i) - t).abs())
        .fold(0.0, f64::max);
    ensure(err == 0.0, format!("spliced pair misaligned, max error {err:.3e}"))?;
    Ok("2 s gap removed (5 s -> 3 s), 0.5 s gap kept, all-silent -> empty; pair spliced at identical indices".into())
}

fn render_performance() -> Outcome {
    let spec = FilterBankSpec::default();
    let bank = design_filterbank(&spec).unwrap();
    let model = random_model("perf", spec, 71);
    let seconds = 20.0;
    let x = guitar_like(seconds, FS, 0.8, 72);
    let elapsed = timed_render(&x, &model, &bank);
    let rtf = seconds / elapsed.as_secs_f64();
    ensure(rtf >= 5.0, format!("real-time factor {rtf:.1}"))?;
    Ok(format!("{seconds} s rendered in {:.3} s, real-time factor {rtf:.0}", elapsed.as_secs_f64()))
}

/// Offline render on the calling thread; the forward pass spawns no workers.
fn timed_render(x: &AudioBuffer, model: &AmpModel, bank: &ampforge_core::FilterBank) -> Duration {
    let _ = model_forward(&x.slice(0..4096), model, bank, Mode::AlignedOffline).unwrap();
    let start = Instant::now();
    let y = model_forward(x, model, bank, Mode::AlignedOffline).unwrap();
    let t = start.elapsed();
    assert_eq!(y.len(), x.len());
    t
}

fn serialization() -> Outcome {
    let spec = FilterBankSpec::default();
    for seed in 0..20 {
        let m = random_model("r", spec, 80 + seed);
        let back = deserialize_model(&serialize_model(&m).unwrap()).map_err(|e| e.to_string())?;
        ensure(bits(&back.params()) == bits(&m.params()) && back == m, format!("round trip differs (seed {seed})"))?;
    }
    let doc: serde_json::Value = serde_json::from_slice(&serialize_model(&random_model("r", spec, 99)).unwrap()).unwrap();
    let mut v999 = doc.clone();
    v999["format_version"] = json!(999);
    let mut five = doc.clone();
    five["blocks"].as_array_mut().unwrap().pop();
    let mut huge = doc.clone();
    huge["blocks"][0]["bias"] = json!(12345.5);
    let huge_text = serde_json::to_string(&huge).unwrap().replace("12345.5", "1e999");
    assert!(huge_text.contains("1e999"));
    let mut short = doc.clone();
    short["blocks"][2]["weights_raw"].as_array_mut().unwrap().pop();

    let check = |bytes: &[u8], want: fn(&Error) -> bool, label: &str| match deserialize_model(bytes) {
        Err(e) if want(&e) => Ok(()),
        other => Err(format!("{label}: got {other:?}")),
    };
    check(&serde_json::to_vec(&v999).unwrap(), |e| matches!(e, Error::UnsupportedFormatVersion(999)), "version 999")?;
    check(&serde_json::to_vec(&five).unwrap(), |e| matches!(e, Error::BlockCount(5)), "5 blocks")?;
    check(huge_text.as_bytes(), |e| matches!(e, Error::Json(_) | Error::NonFinite(_)), "non-finite")?;
    check(&serde_json::to_vec(&short).unwrap(), |e| matches!(e, Error::InvalidParams(_)), "59 weights")?;
    check(b"{\"format_version\": 1, \"name\": ", |e| matches!(e, Error::Json(_)), "truncated")?;
    Ok("20 random models bit-exact; version 999, 5 blocks, non-finite, short weights, truncated JSON rejected".into())
}

fn service_determinism() -> Outcome {
    let fx = Fixture::new();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let post = |app: axum::Router, body: serde_json::Value| {
        rt.block_on(async move {
            let req = Request::post("/api/render").body(Body::from(body.to_string())).unwrap();
            let resp = app.oneshot(req).await.unwrap();
            let status = resp.status();
            (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
        })
    };
    let fresh = || router(Registry::open(fx.root()).unwrap(), &ServiceConfig::default());
    let shared = fresh();
    let body = json!({"model_i": "crunch", "model_j": "fuzz", "alpha": 0.0, "clip_id": "riff", "gain_db": 2.0, "ir_id": "cab"});
    let (s1, a) = post(fresh(), body.clone());
    let (s2, b) = post(fresh(), body.clone());
    let (_, c) = post(shared.clone(), body.clone());
    let (_, d) = post(shared.clone(), body);
    ensure(s1 == StatusCode::OK && s2 == StatusCode::OK, format!("status {s1} {s2}"))?;
    ensure(a == b && b == c && c == d, "identical bodies gave different bytes")?;

    let (_, alpha0) = post(shared.clone(), json!({"model_i": "crunch", "model_j": "fuzz", "alpha": 0.0, "clip_id": "riff"}));
    let (_, single) = post(shared, json!({"model_id": "crunch", "clip_id": "riff"}));
    let registry = Registry::open(fx.root()).unwrap();
    let model = registry.model("crunch").unwrap();
    let clip = registry.clip("riff").unwrap();
    let bank = design_filterbank(&model.filterbank_spec).unwrap();
    let direct = encode_wav(&model_forward(&clip, model, &bank, Mode::AlignedOffline).unwrap()).unwrap();
    ensure(alpha0 == single && single == direct, "alpha 0 render differs from direct model render")?;
    Ok(format!("4 identical requests byte-identical ({} bytes); alpha 0 == model_i == direct render", a.len()))
}

#[test]
fn acceptance() {
    let criteria: &[(&str, Check)] = &[
        ("latency budget", latency_budget),
        ("linear phase", linear_phase),
        ("gradient correctness", gradient_correctness),
        ("identity invariant", identity_invariant),
        ("interpolation endpoints and affinity", endpoints_and_affinity),
        ("convolution oracle", convolution_oracle),
        ("desk-scale training", desk_training),
        ("dataset prep", dataset_prep),
        ("render performance", render_performance),
        ("serialization", serialization),
        ("service determinism", service_determinism),
    ];
    let mut failures = Vec::new();
    for &(name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name:<38} {secs:>7.2}s  {detail}"),
            Err(why) => {
                println!("FAIL  {name:<38} {secs:>7.2}s  {why}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
