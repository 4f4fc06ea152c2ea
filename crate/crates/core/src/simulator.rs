//! Synthetic annotation campaigns with known ground truth.
//!
//! A scenario fixes the campaign parameters, the class prior and one
//! [`SyntheticAnnotator`] per ring position. Simulation plans the campaign
//! with [`allocate_samples_for`], draws a true label and a synthetic
//! claim/post text per sample, then lets every annotator label their
//! projects:
//!
//! * with probability `accuracy` the true label, otherwise a uniformly chosen
//!   wrong one;
//! * a confidence drawn from the annotator's [`ConfidenceModel`] given
//!   whether the label is correct;
//! * a secondary label, uniform over the other classes, whenever the
//!   confidence is 3 or less;
//! * on re-annotation, the first-phase label again with probability
//!   `consistency`, otherwise a fresh draw.
//!
//! Each draw has its own stream keyed by purpose, ring position and sample
//! index, so adding annotators or samples leaves existing draws unchanged.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::distribution::{allocate_samples_for, compute_sample_count, DistributionPlan, ProjectSizes};
use crate::error::{Error, Result};
use crate::labeling::SoftLabel;
use crate::model::{Annotation, AnnotationStore, CampaignParams, LabelSet, Phase, Sample};
use crate::rng::{self, StreamRng};

const STREAM_TRUTH: u64 = 10;
const STREAM_TEXT: u64 = 11;
const STREAM_FIRST: u64 = 12;
const STREAM_REANNOTATE: u64 = 13;

/// Confidences at or below this come with a secondary label.
pub const SECONDARY_MAX_CONFIDENCE: u32 = 3;

/// Accuracies of the standard scenario's six annotators, in ring order.
pub const STANDARD_ACCURACIES: [f64; 6] = [0.95, 0.90, 0.85, 0.80, 0.75, 0.60];

/// Unique samples in the standard scenario.
pub const STANDARD_SAMPLES: usize = 600;

/// Distributions over confidences `1..=max_confidence` for correct and
/// incorrect labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceModel {
    pub correct: Vec<f64>,
    pub incorrect: Vec<f64>,
}

impl ConfidenceModel {
    /// Correct labels: uniform over the top two confidences. Incorrect
    /// labels: uniform over 2 and 3.
    pub fn standard(max_confidence: u32) -> Self {
        let m = max_confidence as usize;
        let mut correct = alloc::vec![0.0; m];
        let mut incorrect = alloc::vec![0.0; m];
        correct[m - 1] = 0.5;
        correct[m.saturating_sub(2)] += 0.5;
        let low = [2.min(m), 3.min(m)];
        incorrect[low[0] - 1] += 0.5;
        incorrect[low[1] - 1] += 0.5;
        Self { correct, incorrect }
    }

    pub fn validate(&self, max_confidence: u32) -> Result<()> {
        for (name, dist) in [("correct", &self.correct), ("incorrect", &self.incorrect)] {
            if dist.len() != max_confidence as usize {
                return Err(Error::InvalidConfig(format!(
                    "{name} confidence distribution has {} entries, expected {}",
                    dist.len(),
                    max_confidence
                )));
            }
            let sum: f64 = dist.iter().sum();
            if dist.iter().any(|p| p.is_nan() || *p < 0.0) || libm::fabs(sum - 1.0) > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "{name} confidence distribution is not a probability vector"
                )));
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut StreamRng, correct: bool) -> u32 {
        let dist = if correct { &self.correct } else { &self.incorrect };
        categorical(rng, dist) as u32 + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticAnnotator {
    pub annotator_id: String,
    /// Probability of emitting the true label.
    pub accuracy: f64,
    pub confidence_model: ConfidenceModel,
    /// Probability that a re-annotation repeats the first-phase label.
    pub consistency: f64,
}

/// Synthetic texts: each post token is, with probability `signal`, one of
/// `class_vocab` words specific to the true class, otherwise one of
/// `noise_vocab` shared words. Claims are `claim_tokens` shared words.
#[derive(Debug, Clone, PartialEq)]
pub struct TextModel {
    pub post_tokens: usize,
    pub claim_tokens: usize,
    pub signal: f64,
    pub class_vocab: usize,
    pub noise_vocab: usize,
}

impl Default for TextModel {
    fn default() -> Self {
        Self {
            post_tokens: 12,
            claim_tokens: 6,
            signal: 0.25,
            class_vocab: 30,
            noise_vocab: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub campaign: CampaignParams,
    pub label_set: LabelSet,
    pub class_prior: SoftLabel,
    pub annotators: Vec<SyntheticAnnotator>,
    pub text: TextModel,
    pub seed: u64,
}

impl SimScenario {
    /// Six annotators with accuracies 0.95 down to 0.60 (consistency equal to
    /// accuracy), three uniformly likely classes, one third double-annotated,
    /// half of the singles re-annotated, and a time budget sized for 600
    /// unique samples.
    pub fn standard(seed: u64) -> Self {
        let rate = 60.0;
        let d = 1.0 / 3.0;
        let r = 0.5;
        let n = STANDARD_ACCURACIES.len();
        let hours = STANDARD_SAMPLES as f64 * (2.0 * d + (1.0 + r) * (1.0 - d)) / (rate * n as f64);
        let campaign = CampaignParams::new(n, hours, rate, d, r).expect("standard campaign is valid");
        let annotators = STANDARD_ACCURACIES
            .iter()
            .enumerate()
            .map(|(i, &accuracy)| SyntheticAnnotator {
                annotator_id: format!("a{}", i + 1),
                accuracy,
                confidence_model: ConfidenceModel::standard(campaign.max_confidence),
                consistency: accuracy,
            })
            .collect();
        Self {
            campaign,
            label_set: LabelSet::new(["misinfo", "debunk", "other"]).unwrap(),
            class_prior: SoftLabel::uniform(3),
            annotators,
            text: TextModel::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.campaign.validate()?;
        if self.annotators.len() != self.campaign.num_annotators {
            return Err(Error::InvalidConfig(format!(
                "{} synthetic annotators for a campaign of {}",
                self.annotators.len(),
                self.campaign.num_annotators
            )));
        }
        if self.class_prior.len() != self.label_set.len() {
            return Err(Error::LengthMismatch(self.class_prior.len(), self.label_set.len()));
        }
        for a in &self.annotators {
            for (name, p) in [("accuracy", a.accuracy), ("consistency", a.consistency)] {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "{} of `{}` must lie in (0, 1], got {p}",
                        name, a.annotator_id
                    )));
                }
            }
            a.confidence_model.validate(self.campaign.max_confidence)?;
        }
        if !(0.0..=1.0).contains(&self.text.signal) || self.text.class_vocab == 0 || self.text.noise_vocab == 0 {
            return Err(Error::InvalidConfig("invalid text model".into()));
        }
        Ok(())
    }

    pub fn annotator_ids(&self) -> Vec<String> {
        self.annotators.iter().map(|a| a.annotator_id.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub store: AnnotationStore,
    pub ground_truth: BTreeMap<String, String>,
    /// Every sample that received at least one annotation.
    pub samples: Vec<Sample>,
    pub plan: DistributionPlan,
}

fn categorical(rng: &mut StreamRng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding slack: last class with positive mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

fn other_class(rng: &mut StreamRng, exclude: usize, num_classes: usize) -> usize {
    let r = rng.random_range(0..num_classes - 1);
    if r >= exclude {
        r + 1
    } else {
        r
    }
}

struct Draw {
    label: usize,
    confidence: u32,
    secondary: Option<usize>,
}

fn finish_draw(rng: &mut StreamRng, annotator: &SyntheticAnnotator, label: usize, truth: usize, n: usize) -> Draw {
    let confidence = annotator.confidence_model.sample(rng, label == truth);
    let secondary = (confidence <= SECONDARY_MAX_CONFIDENCE).then(|| other_class(rng, label, n));
    Draw {
        label,
        confidence,
        secondary,
    }
}

fn fresh_draw(rng: &mut StreamRng, annotator: &SyntheticAnnotator, truth: usize, n: usize) -> Draw {
    let correct = rng.random::<f64>() < annotator.accuracy;
    let label = if correct { truth } else { other_class(rng, truth, n) };
    finish_draw(rng, annotator, label, truth, n)
}

fn synthetic_text(rng: &mut StreamRng, model: &TextModel, truth: usize) -> (String, String) {
    let claim: Vec<String> = (0..model.claim_tokens)
        .map(|_| format!("w{}", rng.random_range(0..model.noise_vocab)))
        .collect();
    let post: Vec<String> = (0..model.post_tokens)
        .map(|_| {
            if rng.random::<f64>() < model.signal {
                format!("c{}k{}", truth, rng.random_range(0..model.class_vocab))
            } else {
                format!("w{}", rng.random_range(0..model.noise_vocab))
            }
        })
        .collect();
    (claim.join(" "), post.join(" "))
}

pub fn simulate_campaign(scenario: &SimScenario) -> Result<SimOutput> {
    scenario.validate()?;
    let params = &scenario.campaign;
    let labels = &scenario.label_set;
    let n_classes = labels.len();
    let seed = scenario.seed;

    let k = compute_sample_count(params)?;
    let pool_size = k.max(ProjectSizes::for_campaign(params, k).unique_samples(params.num_annotators));
    let width = format!("{pool_size}").len().max(4);
    let pool: Vec<String> = (1..=pool_size).map(|i| format!("s{i:0width$}")).collect();
    let position: BTreeMap<&str, u64> = pool.iter().enumerate().map(|(i, s)| (s.as_str(), i as u64)).collect();

    let plan = allocate_samples_for(&pool, &scenario.annotator_ids(), params, seed)?;

    let truth: Vec<usize> = (0..pool_size as u64)
        .map(|i| categorical(&mut rng::stream(seed, &[STREAM_TRUTH, i]), scenario.class_prior.probs()))
        .collect();

    let mut store = AnnotationStore::new(labels.clone(), params.max_confidence);
    let mut annotated: BTreeSet<u64> = BTreeSet::new();
    let to_annotation = |sample: &str, annotator: &str, phase: Phase, d: &Draw| Annotation {
        sample_id: sample.to_string(),
        annotator_id: annotator.to_string(),
        phase,
        primary_label: labels.name(d.label).to_string(),
        confidence: d.confidence,
        secondary_label: d.secondary.map(|s| labels.name(s).to_string()),
    };

    for (ring, (assignment, annotator)) in plan.annotators.iter().zip(&scenario.annotators).enumerate() {
        let ring = ring as u64;
        let mut first_labels: BTreeMap<&str, usize> = BTreeMap::new();
        let projects = assignment.double.values().flatten().chain(&assignment.single);
        for sample in projects {
            let idx = position[sample.as_str()];
            let t = truth[idx as usize];
            let draw = fresh_draw(
                &mut rng::stream(seed, &[STREAM_FIRST, ring, idx]),
                annotator,
                t,
                n_classes,
            );
            first_labels.insert(sample, draw.label);
            store.push(to_annotation(sample, &annotator.annotator_id, Phase::First, &draw))?;
            annotated.insert(idx);
        }
        for sample in &assignment.reannotate {
            let idx = position[sample.as_str()];
            let t = truth[idx as usize];
            let mut rng = rng::stream(seed, &[STREAM_REANNOTATE, ring, idx]);
            let draw = if rng.random::<f64>() < annotator.consistency {
                finish_draw(&mut rng, annotator, first_labels[sample.as_str()], t, n_classes)
            } else {
                fresh_draw(&mut rng, annotator, t, n_classes)
            };
            store.push(to_annotation(
                sample,
                &annotator.annotator_id,
                Phase::Reannotation,
                &draw,
            ))?;
        }
    }

    let mut ground_truth = BTreeMap::new();
    let mut samples = Vec::new();
    for &idx in &annotated {
        let id = &pool[idx as usize];
        let t = truth[idx as usize];
        let (claim_text, post_text) = synthetic_text(&mut rng::stream(seed, &[STREAM_TEXT, idx]), &scenario.text, t);
        ground_truth.insert(id.clone(), labels.name(t).to_string());
        samples.push(Sample {
            sample_id: id.clone(),
            claim_text,
            post_text,
        });
    }

    Ok(SimOutput {
        store,
        ground_truth,
        samples,
        plan,
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. Returns 0.0 when
/// either side has no rank variance.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / libm::sqrt(vx * vy))
}

/// Spearman correlation between estimated reliabilities and the scenario's
/// true accuracies.
pub fn evaluate_recovery(reliabilities: &BTreeMap<String, f64>, scenario: &SimScenario) -> Result<f64> {
    if scenario.annotators.len() < 3 {
        return Err(Error::TooFewAnnotators {
            required: 3,
            actual: scenario.annotators.len(),
        });
    }
    let mut estimated = Vec::with_capacity(scenario.annotators.len());
    let mut truth = Vec::with_capacity(scenario.annotators.len());
    for a in &scenario.annotators {
        estimated.push(
            reliabilities
                .get(&a.annotator_id)
                .copied()
                .ok_or_else(|| Error::MissingReliability(a.annotator_id.clone()))?,
        );
        truth.push(a.accuracy);
    }
    spearman(&estimated, &truth)
}
