//! Soft labels from confidence-scored annotations.
//!
//! The primary label receives
//!
//! ```text
//! P = 1/n + (n - 1)/n * (C - 1)/(MaxC - 1)
//! ```
//!
//! for `n` classes and confidence `C`. With more than two classes a secondary
//! label receives `min(P, 1 - P)` and whatever is left is spread evenly over
//! the remaining classes. Double annotations are combined by a
//! reliability-weighted mean.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Annotation, AnnotationStore, LabelSet};

/// Tolerance on the sum of a soft label.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A later class must beat the running maximum by more than this to win
/// argmax; smaller differences count as ties and go to the lower index.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Minimum confidence both annotators need for a gold sample.
pub const GOLD_MIN_CONFIDENCE: u32 = 3;

/// Probability vector over a [`LabelSet`], indexed in label-set order.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    probs: Vec<f64>,
}

impl SoftLabel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidSoftLabel(format!(
                "needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !(**p >= -SUM_TOLERANCE && **p <= 1.0 + SUM_TOLERANCE))
        {
            return Err(Error::InvalidSoftLabel(format!("entry {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if libm::fabs(sum - 1.0) > SUM_TOLERANCE {
            return Err(Error::InvalidSoftLabel(format!("entries sum to {sum}")));
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect(),
        })
    }

    pub fn one_hot(index: usize, num_classes: usize) -> Self {
        let mut probs = vec![0.0; num_classes];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn uniform(num_classes: usize) -> Self {
        Self {
            probs: vec![1.0 / num_classes as f64; num_classes],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the largest probability, ties to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.argmax()]
    }
}

/// Argmax with ties (within [`TIE_TOLERANCE`]) going to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + TIE_TOLERANCE {
            best = i;
        }
    }
    best
}

pub fn confidence_to_probability(confidence: u32, num_classes: usize, max_confidence: u32) -> Result<f64> {
    if max_confidence < 2 {
        return Err(Error::InvalidConfig(format!(
            "max confidence must be at least 2, got {max_confidence}"
        )));
    }
    if num_classes < 2 {
        return Err(Error::TooFewLabels(num_classes));
    }
    if confidence < 1 || confidence > max_confidence {
        return Err(Error::ConfidenceOutOfRange {
            value: confidence,
            max: max_confidence,
        });
    }
    let n = num_classes as f64;
    let scale = (confidence - 1) as f64 / (max_confidence - 1) as f64;
    Ok(1.0 / n + (n - 1.0) / n * scale)
}

pub fn annotation_to_soft_label(
    annotation: &Annotation,
    label_set: &LabelSet,
    max_confidence: u32,
) -> Result<SoftLabel> {
    annotation.validate(label_set, max_confidence)?;
    let n = label_set.len();
    let primary = label_set.require(&annotation.primary_label)?;
    let p = confidence_to_probability(annotation.confidence, n, max_confidence)?;
    let mut probs = vec![0.0; n];
    probs[primary] = p;

    let secondary = match &annotation.secondary_label {
        Some(label) if n > 2 => Some(label_set.require(label)?),
        _ => None,
    };
    match secondary {
        Some(s) => {
            let secondary_mass = p.min(1.0 - p);
            probs[s] = secondary_mass;
            let rest = (1.0 - p - secondary_mass) / (n - 2) as f64;
            for (i, q) in probs.iter_mut().enumerate() {
                if i != primary && i != s {
                    *q = rest;
                }
            }
        }
        None => {
            let rest = (1.0 - p) / (n - 1) as f64;
            for (i, q) in probs.iter_mut().enumerate() {
                if i != primary {
                    *q = rest;
                }
            }
        }
    }
    SoftLabel::new(probs)
}

/// Reliability-weighted mean of one or two soft labels.
pub fn aggregate_soft_labels(labels: &[(&SoftLabel, f64)]) -> Result<SoftLabel> {
    match labels {
        [] | [_, _, _, ..] => Err(Error::AggregateArity(labels.len())),
        [(label, weight)] => {
            check_weight(*weight)?;
            Ok((*label).clone())
        }
        [(a, wa), (b, wb)] => {
            check_weight(*wa)?;
            check_weight(*wb)?;
            if a.len() != b.len() {
                return Err(Error::LengthMismatch(a.len(), b.len()));
            }
            let total = wa + wb;
            let mut probs: Vec<f64> = a
                .probs
                .iter()
                .zip(&b.probs)
                .map(|(pa, pb)| (wa * pa + wb * pb) / total)
                .collect();
            let sum: f64 = probs.iter().sum();
            for p in &mut probs {
                *p /= sum;
            }
            SoftLabel::new(probs)
        }
    }
}

fn check_weight(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWeight(w))
    }
}

pub fn soft_to_hard<'a>(label: &SoftLabel, label_set: &'a LabelSet) -> &'a str {
    label_set.name(label.argmax())
}

/// Total map from an old label set onto a new one.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMapping {
    from: LabelSet,
    to: LabelSet,
    target: Vec<usize>,
}

impl LabelMapping {
    pub fn new(from: LabelSet, to: LabelSet, mapping: &BTreeMap<String, String>) -> Result<Self> {
        let target = from
            .labels()
            .iter()
            .map(|l| {
                let t = mapping
                    .get(l)
                    .ok_or_else(|| Error::InvalidMapping(format!("no target for label `{l}`")))?;
                to.index_of(t)
                    .ok_or_else(|| Error::InvalidMapping(format!("target `{t}` is not in the new label set")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { from, to, target })
    }

    /// Folds each `source` into `target`. Unmentioned labels map to
    /// themselves; the new label set keeps the old order minus the sources.
    pub fn from_merges(from: &LabelSet, merges: &[(String, String)]) -> Result<Self> {
        let mut mapping: BTreeMap<String, String> = from.labels().iter().map(|l| (l.clone(), l.clone())).collect();
        for (source, target) in merges {
            from.require(source)?;
            from.require(target)?;
            if source == target {
                return Err(Error::InvalidMapping(format!("`{source}` merged into itself")));
            }
            mapping.insert(source.clone(), target.clone());
        }
        if let Some((s, t)) = merges.iter().find(|(_, t)| merges.iter().any(|(s, _)| s == t)) {
            return Err(Error::InvalidMapping(format!(
                "`{s}` merged into `{t}`, which is itself merged away"
            )));
        }
        let kept: Vec<String> = from
            .labels()
            .iter()
            .filter(|l| !merges.iter().any(|(s, _)| s == *l))
            .cloned()
            .collect();
        let to = LabelSet::new(kept)?;
        Self::new(from.clone(), to, &mapping)
    }

    pub fn source(&self) -> &LabelSet {
        &self.from
    }

    pub fn target(&self) -> &LabelSet {
        &self.to
    }

    pub fn map_index(&self, index: usize) -> usize {
        self.target[index]
    }

    pub fn map_label(&self, label: &str) -> Result<&str> {
        let i = self.from.require(label)?;
        Ok(self.to.name(self.target[i]))
    }

    /// Sums the probabilities of merged classes.
    pub fn merge_soft(&self, label: &SoftLabel) -> Result<SoftLabel> {
        if label.len() != self.from.len() {
            return Err(Error::LengthMismatch(label.len(), self.from.len()));
        }
        let mut probs = vec![0.0; self.to.len()];
        for (i, p) in label.probs.iter().enumerate() {
            probs[self.target[i]] += p;
        }
        SoftLabel::new(probs)
    }

    /// Remaps primary and secondary; drops the secondary when both land on
    /// the same class.
    pub fn merge_annotation(&self, annotation: &Annotation) -> Result<Annotation> {
        let primary = self.map_label(&annotation.primary_label)?.to_string();
        let secondary = match &annotation.secondary_label {
            Some(s) => {
                let mapped = self.map_label(s)?;
                (mapped != primary).then(|| mapped.to_string())
            }
            None => None,
        };
        Ok(Annotation {
            primary_label: primary,
            secondary_label: secondary,
            ..annotation.clone()
        })
    }

    pub fn merge_store(&self, store: &AnnotationStore) -> Result<AnnotationStore> {
        if store.label_set() != &self.from {
            return Err(Error::InvalidMapping(
                "store label set differs from the mapping's source".to_string(),
            ));
        }
        let merged = store
            .annotations()
            .iter()
            .map(|a| self.merge_annotation(a))
            .collect::<Result<Vec<_>>>()?;
        AnnotationStore::from_annotations(self.to.clone(), store.max_confidence(), merged)
    }

    /// Merges the soft label and takes the hard label from its argmax, so a
    /// merged minority mass can overtake the old hard label.
    pub fn merge_labeled(&self, sample: &LabeledSample) -> Result<LabeledSample> {
        self.from.require(&sample.hard_label)?;
        let soft_label = self.merge_soft(&sample.soft_label)?;
        Ok(LabeledSample {
            hard_label: soft_to_hard(&soft_label, &self.to).to_string(),
            soft_label,
            ..sample.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sample_id: String,
    pub soft_label: SoftLabel,
    pub hard_label: String,
    pub annotator_ids: Vec<String>,
    /// Training weight, set by the trainer.
    pub weight: f64,
    pub gold: bool,
}

fn is_gold(first: &[&Annotation]) -> bool {
    matches!(first, [a, b] if a.primary_label == b.primary_label
        && a.confidence >= GOLD_MIN_CONFIDENCE
        && b.confidence >= GOLD_MIN_CONFIDENCE)
}

/// One labeled sample per sample with first-phase annotations.
///
/// Re-annotations are ignored. Double annotations are aggregated with the
/// annotators' reliabilities; the hard label is the argmax of the result.
pub fn label_samples(store: &AnnotationStore, reliabilities: &BTreeMap<String, f64>) -> Result<Vec<LabeledSample>> {
    let label_set = store.label_set();
    let mut out = Vec::new();
    for sample in store.sample_ids() {
        let first = store.first_phase(sample);
        if first.is_empty() {
            continue;
        }
        let softs = first
            .iter()
            .map(|a| annotation_to_soft_label(a, label_set, store.max_confidence()))
            .collect::<Result<Vec<_>>>()?;
        let weighted = first
            .iter()
            .zip(&softs)
            .map(|(a, s)| {
                let r = reliabilities
                    .get(&a.annotator_id)
                    .copied()
                    .ok_or_else(|| Error::MissingReliability(a.annotator_id.clone()))?;
                Ok((s, r))
            })
            .collect::<Result<Vec<_>>>()?;
        let soft_label = aggregate_soft_labels(&weighted)?;
        out.push(LabeledSample {
            sample_id: sample.to_string(),
            hard_label: soft_to_hard(&soft_label, label_set).to_string(),
            soft_label,
            annotator_ids: first.iter().map(|a| a.annotator_id.clone()).collect(),
            weight: 1.0,
            gold: is_gold(&first),
        });
    }
    Ok(out)
}

/// Unit reliability for every annotator in the store.
pub fn uniform_reliabilities(store: &AnnotationStore) -> BTreeMap<String, f64> {
    store.annotators().map(|a| (a.to_string(), 1.0)).collect()
}

/// Double-annotated samples whose two first-phase annotations share the
/// primary label with confidence of at least 3 each. The soft label is the
/// equal-weight mean; the hard label is the shared primary.
pub fn extract_gold_set(store: &AnnotationStore) -> Result<Vec<LabeledSample>> {
    let label_set = store.label_set();
    let mut out = Vec::new();
    for sample in store.sample_ids() {
        let first = store.first_phase(sample);
        if !is_gold(&first) {
            continue;
        }
        let softs = first
            .iter()
            .map(|a| annotation_to_soft_label(a, label_set, store.max_confidence()))
            .collect::<Result<Vec<_>>>()?;
        let soft_label = aggregate_soft_labels(&[(&softs[0], 1.0), (&softs[1], 1.0)])?;
        out.push(LabeledSample {
            sample_id: sample.to_string(),
            soft_label,
            hard_label: first[0].primary_label.clone(),
            annotator_ids: first.iter().map(|a| a.annotator_id.clone()).collect(),
            weight: 1.0,
            gold: true,
        });
    }
    Ok(out)
}
