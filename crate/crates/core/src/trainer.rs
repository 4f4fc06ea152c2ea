//! Linear softmax classifier trained with per-sample weighted cross-entropy.
//!
//! The objective over a batch of `N` examples is
//!
//! ```text
//! L = 1/N * sum_i w_i * CE(softmax(W x_i + b), t_i) + l2/2 * |W|^2
//! ```
//!
//! where `t_i` is a soft or one-hot target and `w_i` the sample weight.
//! Weights are used raw, not normalized per batch. Training is full-batch
//! gradient descent with a fixed step.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::labeling::{LabeledSample, SoftLabel};
use crate::model::LabelSet;
use crate::rng;

/// Predictions are clamped to this before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

const INIT_SCALE: f64 = 1e-2;
const STREAM_INIT: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    None,
    Reliability,
}

/// Which agreement the reliability scores were built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReliabilitySource {
    Inter,
    Intra,
    InterIntra,
}

impl ReliabilitySource {
    /// Intra-agreement weight producing this source.
    pub fn lambda(self) -> f64 {
        match self {
            ReliabilitySource::Inter => 0.0,
            ReliabilitySource::Intra => 1.0,
            ReliabilitySource::InterIntra => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub label_mode: LabelMode,
    pub weighting: Weighting,
    pub reliability_source: ReliabilitySource,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.5,
            l2: 1e-4,
            seed: 0,
            label_mode: LabelMode::Soft,
            weighting: Weighting::None,
            reliability_source: ReliabilitySource::InterIntra,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        Ok(())
    }
}

/// Training weight of a labeled sample: the annotator's reliability, or the
/// mean reliability of both annotators of a double-annotated sample.
pub fn sample_weight(
    sample: &LabeledSample,
    reliabilities: &BTreeMap<alloc::string::String, f64>,
    weighting: Weighting,
) -> Result<f64> {
    if weighting == Weighting::None {
        return Ok(1.0);
    }
    if sample.annotator_ids.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "sample `{}` lists no annotators",
            sample.sample_id
        )));
    }
    let mut sum = 0.0;
    for id in &sample.annotator_ids {
        sum += reliabilities
            .get(id)
            .copied()
            .ok_or_else(|| Error::MissingReliability(id.clone()))?;
    }
    let weight = sum / sample.annotator_ids.len() as f64;
    if weight > 0.0 {
        Ok(weight)
    } else {
        Err(Error::InvalidWeight(weight))
    }
}

/// `-weight * sum_c target_c * ln(max(pred_c, 1e-12))`.
pub fn weighted_cross_entropy(pred: &[f64], target: &SoftLabel, weight: f64) -> f64 {
    -weight
        * pred
            .iter()
            .zip(target.probs())
            .filter(|(_, t)| **t > 0.0)
            .map(|(p, t)| t * libm::log(p.max(PROB_FLOOR)))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub target: SoftLabel,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSoftmax {
    pub num_classes: usize,
    pub dim: usize,
    /// Row-major `num_classes x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

fn log_softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = libm::log(logits.iter().map(|z| libm::exp(z - max)).sum::<f64>()) + max;
    for z in logits.iter_mut() {
        *z -= log_sum;
    }
}

impl LinearSoftmax {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        Self {
            num_classes,
            dim,
            weights: vec![0.0; num_classes * dim],
            bias: vec![0.0; num_classes],
        }
    }

    pub fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        let mut z = self.bias.clone();
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &self.weights[c * self.dim..(c + 1) * self.dim];
            *zc += x.entries().iter().map(|&(j, v)| row[j as usize] * v).sum::<f64>();
        }
        z
    }

    fn log_probs(&self, x: &FeatureVector) -> Vec<f64> {
        let mut z = self.logits(x);
        log_softmax(&mut z);
        z
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> SoftLabel {
        let probs: Vec<f64> = self.log_probs(x).into_iter().map(libm::exp).collect();
        let sum: f64 = probs.iter().sum();
        SoftLabel::new(probs.into_iter().map(|p| p / sum).collect()).expect("softmax output is a distribution")
    }

    pub fn predict(&self, x: &FeatureVector) -> usize {
        self.predict_proba(x).argmax()
    }

    fn check(&self, batch: &[Example]) -> Result<()> {
        for e in batch {
            if e.features.dim() != self.dim {
                return Err(Error::LengthMismatch(e.features.dim(), self.dim));
            }
            if e.target.len() != self.num_classes {
                return Err(Error::LengthMismatch(e.target.len(), self.num_classes));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean weighted cross-entropy plus the L2 penalty on the weight matrix.
pub fn objective(model: &LinearSoftmax, batch: &[Example], l2: f64) -> f64 {
    let n = batch.len().max(1) as f64;
    let ce: f64 = batch
        .iter()
        .map(|e| {
            let lp = model.log_probs(&e.features);
            -e.weight * e.target.probs().iter().zip(&lp).map(|(t, l)| t * l).sum::<f64>()
        })
        .sum();
    ce / n + 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`objective`]. With respect to the logits of example
/// `i` it is `w_i * (softmax(z_i) - t_i) / N`.
pub fn loss_gradient(model: &LinearSoftmax, batch: &[Example], l2: f64) -> Gradient {
    let n = batch.len().max(1) as f64;
    let mut weights: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut bias = vec![0.0; model.num_classes];
    for e in batch {
        let lp = model.log_probs(&e.features);
        for c in 0..model.num_classes {
            let g = e.weight * (libm::exp(lp[c]) - e.target.probs()[c]) / n;
            bias[c] += g;
            let row = &mut weights[c * model.dim..(c + 1) * model.dim];
            for &(j, v) in e.features.entries() {
                row[j as usize] += g * v;
            }
        }
    }
    Gradient { weights, bias }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: LinearSoftmax,
    /// Objective before each update.
    pub loss_trace: Vec<f64>,
}

pub fn train_classifier(
    examples: &[Example],
    num_classes: usize,
    dim: usize,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let classes: BTreeSet<usize> = examples.iter().map(|e| e.target.argmax()).collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }

    let mut model = LinearSoftmax::zeros(num_classes, dim);
    model.check(examples)?;
    let mut init = rng::stream(config.seed, &[STREAM_INIT]);
    for w in &mut model.weights {
        *w = init.random_range(-INIT_SCALE..INIT_SCALE);
    }

    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        loss_trace.push(objective(&model, examples, config.l2));
        let grad = loss_gradient(&model, examples, config.l2);
        for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
            *w -= config.learning_rate * g;
        }
        for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
            *b -= config.learning_rate * g;
        }
    }
    Ok(TrainedModel { model, loss_trace })
}

/// Pairs labeled samples with their features, choosing hard or soft targets
/// and sample weights according to `config`.
pub fn build_examples<F>(
    labeled: &[LabeledSample],
    label_set: &LabelSet,
    reliabilities: &BTreeMap<alloc::string::String, f64>,
    config: &TrainConfig,
    mut features: F,
) -> Result<Vec<Example>>
where
    F: FnMut(&str) -> Result<FeatureVector>,
{
    labeled
        .iter()
        .map(|s| {
            if s.soft_label.len() != label_set.len() {
                return Err(Error::LengthMismatch(s.soft_label.len(), label_set.len()));
            }
            let target = match config.label_mode {
                LabelMode::Soft => s.soft_label.clone(),
                LabelMode::Hard => SoftLabel::one_hot(label_set.require(&s.hard_label)?, label_set.len()),
            };
            Ok(Example {
                features: features(&s.sample_id)?,
                target,
                weight: sample_weight(s, reliabilities, config.weighting)?,
            })
        })
        .collect()
}
