use std::collections::BTreeMap;

use effiara_core::features::FeatureVector;
use effiara_core::labeling::{LabeledSample, SoftLabel};
use effiara_core::metrics::{expected_calibration_error, macro_f1};
use effiara_core::trainer::{
    build_examples, loss_gradient, objective, train_classifier, weighted_cross_entropy, Example, LabelMode,
    LinearSoftmax, TrainConfig, Weighting,
};
use effiara_core::{Error, LabelSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_soft(rng: &mut ChaCha8Rng, n: usize) -> SoftLabel {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    SoftLabel::new(raw.into_iter().map(|v| v / sum).collect()).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (LinearSoftmax, Vec<Example>, f64) {
    let classes = rng.random_range(2..=4);
    let dim = rng.random_range(2..=6);
    let mut model = LinearSoftmax::zeros(classes, dim);
    for w in model.weights.iter_mut().chain(model.bias.iter_mut()) {
        *w = rng.random_range(-1.0..1.0);
    }
    let batch = (0..rng.random_range(1..=5))
        .map(|_| Example {
            features: FeatureVector::dense(&(0..dim).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>()),
            target: random_soft(rng, classes),
            weight: rng.random_range(0.2..2.0),
        })
        .collect();
    (model, batch, rng.random_range(0.0..0.1))
}

/// Central differences of the objective over every weight and bias.
fn numeric_gradient(model: &LinearSoftmax, batch: &[Example], l2: f64, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let params = model.weights.len() + model.bias.len();
    for p in 0..params {
        let bump = |delta: f64| {
            let mut m = model.clone();
            if p < m.weights.len() {
                m.weights[p] += delta;
            } else {
                m.bias[p - model.weights.len()] += delta;
            }
            objective(&m, batch, l2)
        };
        out.push((bump(h) - bump(-h)) / (2.0 * h));
    }
    out
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (model, batch, l2) = random_instance(&mut rng);
        let g = loss_gradient(&model, &batch, l2);
        let analytic: Vec<f64> = g.weights.iter().chain(&g.bias).copied().collect();
        let numeric = numeric_gradient(&model, &batch, l2, 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-5, "max relative error {worst:e}");
}

#[test]
fn sample_weight_scales_loss_and_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (model, mut batch, _) = random_instance(&mut rng);
    batch.truncate(1);
    batch[0].weight = 1.0;
    let base_loss = objective(&model, &batch, 0.0);
    let base_grad = loss_gradient(&model, &batch, 0.0);
    batch[0].weight = 2.0;
    assert!((objective(&model, &batch, 0.0) - 2.0 * base_loss).abs() < 1e-12);
    let doubled = loss_gradient(&model, &batch, 0.0);
    for (a, b) in doubled.weights.iter().zip(&base_grad.weights) {
        assert!((a - 2.0 * b).abs() < 1e-12);
    }
}

#[test]
fn prediction_equal_to_target_has_zero_ce_gradient() {
    let model = LinearSoftmax::zeros(3, 2);
    let batch = [Example {
        features: FeatureVector::dense(&[1.0, -0.5]),
        target: SoftLabel::uniform(3),
        weight: 1.7,
    }];
    let g = loss_gradient(&model, &batch, 0.0);
    assert!(g.weights.iter().chain(&g.bias).all(|v| v.abs() < 1e-15));
}

proptest! {
    #[test]
    fn cross_entropy_is_nonnegative_and_linear_in_weight(
        seed in any::<u64>(),
        w in 0.01f64..5.0,
        k in 0.01f64..5.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = random_soft(&mut rng, 3);
        let target = random_soft(&mut rng, 3);
        let loss = weighted_cross_entropy(pred.probs(), &target, w);
        prop_assert!(loss >= 0.0);
        prop_assert!((weighted_cross_entropy(pred.probs(), &target, k * w) - k * loss).abs() < 1e-9 * (1.0 + loss));
    }
}

fn labeled(id: &str, probs: &[f64], hard: &str, annotators: &[&str]) -> LabeledSample {
    LabeledSample {
        sample_id: id.into(),
        soft_label: SoftLabel::new(probs.to_vec()).unwrap(),
        hard_label: hard.into(),
        annotator_ids: annotators.iter().map(|a| a.to_string()).collect(),
        weight: 1.0,
        gold: false,
    }
}

/// Two clusters in 3-d, class 0 near e0 and class 1 near e1.
fn separable() -> (LabelSet, Vec<LabeledSample>, BTreeMap<String, FeatureVector>) {
    let ls = LabelSet::new(["pos", "neg"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut samples = Vec::new();
    let mut feats = BTreeMap::new();
    for i in 0..40 {
        let class = i % 2;
        let mut x = [
            rng.random_range(0.0..0.3),
            rng.random_range(0.0..0.3),
            rng.random_range(-1.0..1.0),
        ];
        x[class] += 1.0;
        let id = format!("s{i}");
        let probs = if class == 0 { [0.8, 0.2] } else { [0.3, 0.7] };
        samples.push(labeled(
            &id,
            &probs,
            ls.name(class),
            &[if i % 3 == 0 { "a1" } else { "a2" }],
        ));
        feats.insert(id, FeatureVector::dense(&x));
    }
    (ls, samples, feats)
}

fn examples(config: &TrainConfig, rel: &BTreeMap<String, f64>) -> Vec<Example> {
    let (ls, samples, feats) = separable();
    build_examples(&samples, &ls, rel, config, |id| Ok(feats[id].clone())).unwrap()
}

fn ones() -> BTreeMap<String, f64> {
    [("a1".to_string(), 1.0), ("a2".to_string(), 1.0)].into()
}

#[test]
fn separable_set_is_fit_exactly() {
    for mode in [LabelMode::Hard, LabelMode::Soft] {
        let config = TrainConfig {
            label_mode: mode,
            ..Default::default()
        };
        let ex = examples(&config, &ones());
        let trained = train_classifier(&ex, 2, 3, &config).unwrap();
        let correct = ex
            .iter()
            .filter(|e| trained.model.predict(&e.features) == e.target.argmax())
            .count();
        assert_eq!(correct, ex.len(), "{mode:?}");
        let trace = &trained.loss_trace;
        assert!(trace.iter().all(|l| l.is_finite()));
        assert!(trace[trace.len() - 1] < trace[0]);
    }
}

#[test]
fn unit_reliabilities_reproduce_the_unweighted_run() {
    let base = TrainConfig {
        seed: 17,
        ..Default::default()
    };
    let weighted = TrainConfig {
        weighting: Weighting::Reliability,
        ..base.clone()
    };
    let a = train_classifier(&examples(&base, &ones()), 2, 3, &base).unwrap();
    let b = train_classifier(&examples(&weighted, &ones()), 2, 3, &weighted).unwrap();
    assert_eq!(a.loss_trace, b.loss_trace);
    assert_eq!(a.model, b.model);
}

#[test]
fn training_is_deterministic_per_seed() {
    let config = TrainConfig {
        seed: 5,
        ..Default::default()
    };
    let ex = examples(&config, &ones());
    let a = train_classifier(&ex, 2, 3, &config).unwrap();
    let b = train_classifier(&ex, 2, 3, &config).unwrap();
    assert_eq!(a, b);
    let other = TrainConfig {
        seed: 6,
        ..config.clone()
    };
    assert_ne!(a.model, train_classifier(&ex, 2, 3, &other).unwrap().model);
}

#[test]
fn single_class_training_set_is_rejected() {
    let config = TrainConfig::default();
    let ex: Vec<Example> = examples(&config, &ones())
        .into_iter()
        .filter(|e| e.target.argmax() == 0)
        .collect();
    assert_eq!(train_classifier(&ex, 2, 3, &config).unwrap_err(), Error::SingleClass);
}

#[test]
fn calibrated_predictions_have_zero_ece() {
    // 20 predictions at 0.7 with 14 correct, 10 at 0.9 with 9 correct,
    // 4 at 0.75 with 3 correct: every bin's accuracy equals its confidence.
    let mut probs = Vec::new();
    let mut gold = Vec::new();
    for (conf, total, hits) in [(0.7, 20, 14), (0.9, 10, 9), (0.75, 4, 3)] {
        for i in 0..total {
            probs.push(SoftLabel::new(vec![conf, 1.0 - conf]).unwrap());
            gold.push(if i < hits { 0 } else { 1 });
        }
    }
    let ece = expected_calibration_error(&probs, &gold, 10).unwrap();
    assert!(ece.abs() < 1e-12, "{ece}");
}

proptest! {
    #[test]
    fn macro_f1_ignores_label_names(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..40),
        perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let (pred, gold): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let rename = |v: &[usize]| v.iter().map(|&c| format!("class{}", perm[c])).collect::<Vec<_>>();
        let a = macro_f1(&pred, &gold).unwrap();
        let b = macro_f1(&rename(&pred), &rename(&gold)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
