//! Shared data model: labels, annotations, samples and campaign parameters.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Default upper bound of the confidence scale.
pub const DEFAULT_MAX_CONFIDENCE: u32 = 5;

/// Smallest campaign the ring construction supports.
pub const MIN_ANNOTATORS: usize = 5;

/// Ordered set of class names. Index `i` of every soft label refers to
/// `labels()[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::TooFewLabels(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn require(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn name(&self, index: usize) -> &str {
        &self.labels[index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    First,
    Reannotation,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::First => "first",
            Phase::Reannotation => "re",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "first" => Some(Phase::First),
            "re" => Some(Phase::Reannotation),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        match self {
            Phase::First => 0,
            Phase::Reannotation => 1,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One annotator's judgment of one sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub sample_id: String,
    pub annotator_id: String,
    pub phase: Phase,
    pub primary_label: String,
    pub confidence: u32,
    pub secondary_label: Option<String>,
}

impl Annotation {
    pub fn new(
        sample_id: impl Into<String>,
        annotator_id: impl Into<String>,
        phase: Phase,
        primary_label: impl Into<String>,
        confidence: u32,
    ) -> Self {
        Self {
            sample_id: sample_id.into(),
            annotator_id: annotator_id.into(),
            phase,
            primary_label: primary_label.into(),
            confidence,
            secondary_label: None,
        }
    }

    pub fn with_secondary(mut self, label: impl Into<String>) -> Self {
        self.secondary_label = Some(label.into());
        self
    }

    pub fn validate(&self, label_set: &LabelSet, max_confidence: u32) -> Result<()> {
        label_set.require(&self.primary_label)?;
        if self.confidence < 1 || self.confidence > max_confidence {
            return Err(Error::ConfidenceOutOfRange {
                value: self.confidence,
                max: max_confidence,
            });
        }
        if let Some(secondary) = &self.secondary_label {
            label_set.require(secondary)?;
            if *secondary == self.primary_label {
                return Err(Error::SecondaryEqualsPrimary(secondary.clone()));
            }
        }
        Ok(())
    }
}

/// A claim-post pair. Texts are only needed for training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub sample_id: String,
    pub claim_text: String,
    pub post_text: String,
}

/// Inputs of the campaign budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignParams {
    pub num_annotators: usize,
    /// Hours available per annotator.
    pub time_per_annotator: f64,
    /// Annotations per hour.
    pub annotation_rate: f64,
    /// Proportion of unique samples that are double-annotated.
    pub double_prop: f64,
    /// Proportion of single-annotated samples that are re-annotated.
    pub reanno_prop: f64,
    pub max_confidence: u32,
}

impl CampaignParams {
    pub fn new(
        num_annotators: usize,
        time_per_annotator: f64,
        annotation_rate: f64,
        double_prop: f64,
        reanno_prop: f64,
    ) -> Result<Self> {
        let params = Self {
            num_annotators,
            time_per_annotator,
            annotation_rate,
            double_prop,
            reanno_prop,
            max_confidence: DEFAULT_MAX_CONFIDENCE,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_max_confidence(mut self, max_confidence: u32) -> Result<Self> {
        self.max_confidence = max_confidence;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_annotators < MIN_ANNOTATORS {
            return Err(Error::TooFewAnnotators {
                required: MIN_ANNOTATORS,
                actual: self.num_annotators,
            });
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.time_per_annotator) {
            return Err(Error::InvalidParams(format!(
                "time per annotator must be positive, got {}",
                self.time_per_annotator
            )));
        }
        if !positive(self.annotation_rate) {
            return Err(Error::InvalidParams(format!(
                "annotation rate must be positive, got {}",
                self.annotation_rate
            )));
        }
        for (name, v) in [("double", self.double_prop), ("re-annotation", self.reanno_prop)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!(
                    "{name} proportion must lie in [0, 1], got {v}"
                )));
            }
        }
        if self.max_confidence < 2 {
            return Err(Error::InvalidParams(format!(
                "max confidence must be at least 2, got {}",
                self.max_confidence
            )));
        }
        Ok(())
    }

    /// Annotations each annotator can complete, `rate * time`.
    pub fn budget_per_annotator(&self) -> f64 {
        self.annotation_rate * self.time_per_annotator
    }
}

type Slots = [Option<usize>; 2];

/// Validated annotations, indexed by sample and by annotator.
///
/// At most one annotation exists per (sample, annotator, phase). A sample has
/// at most two first-phase annotators, and a re-annotated sample has no
/// first-phase annotator other than the one re-annotating it.
#[derive(Debug, Clone)]
pub struct AnnotationStore {
    label_set: LabelSet,
    max_confidence: u32,
    annotations: Vec<Annotation>,
    by_sample: BTreeMap<String, BTreeMap<String, Slots>>,
    by_annotator: BTreeMap<String, BTreeMap<String, Slots>>,
}

impl PartialEq for AnnotationStore {
    fn eq(&self, other: &Self) -> bool {
        self.label_set == other.label_set
            && self.max_confidence == other.max_confidence
            && self.annotations == other.annotations
    }
}

impl AnnotationStore {
    pub fn new(label_set: LabelSet, max_confidence: u32) -> Self {
        Self {
            label_set,
            max_confidence,
            annotations: Vec::new(),
            by_sample: BTreeMap::new(),
            by_annotator: BTreeMap::new(),
        }
    }

    pub fn from_annotations<I>(label_set: LabelSet, max_confidence: u32, annotations: I) -> Result<Self>
    where
        I: IntoIterator<Item = Annotation>,
    {
        let mut store = Self::new(label_set, max_confidence);
        for a in annotations {
            store.push(a)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, annotation: Annotation) -> Result<()> {
        annotation.validate(&self.label_set, self.max_confidence)?;
        let slot = annotation.phase.slot();
        let sample = &annotation.sample_id;
        let annotator = &annotation.annotator_id;

        if let Some(per_annotator) = self.by_sample.get(sample) {
            if per_annotator.get(annotator).and_then(|s| s[slot]).is_some() {
                return Err(Error::DuplicateAnnotation {
                    sample: sample.clone(),
                    annotator: annotator.clone(),
                    phase: annotation.phase,
                });
            }
            let overlap = |reason: &str| Error::SampleOverlap {
                sample: sample.clone(),
                reason: reason.to_string(),
            };
            let others_first = per_annotator
                .iter()
                .filter(|(id, s)| *id != annotator && s[0].is_some())
                .count();
            let others_re = per_annotator.iter().any(|(id, s)| id != annotator && s[1].is_some());
            match annotation.phase {
                Phase::First => {
                    if others_first >= 2 {
                        return Err(overlap("more than two first-phase annotators"));
                    }
                    if others_re {
                        return Err(overlap("re-annotated by another annotator"));
                    }
                }
                Phase::Reannotation => {
                    if others_first > 0 || others_re {
                        return Err(overlap("re-annotated sample is also annotated by another annotator"));
                    }
                }
            }
        }

        let index = self.annotations.len();
        self.by_sample
            .entry(sample.clone())
            .or_default()
            .entry(annotator.clone())
            .or_default()[slot] = Some(index);
        self.by_annotator
            .entry(annotator.clone())
            .or_default()
            .entry(sample.clone())
            .or_default()[slot] = Some(index);
        self.annotations.push(annotation);
        Ok(())
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn max_confidence(&self) -> u32 {
        self.max_confidence
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn get(&self, sample: &str, annotator: &str, phase: Phase) -> Option<&Annotation> {
        let idx = self.by_sample.get(sample)?.get(annotator)?[phase.slot()]?;
        Some(&self.annotations[idx])
    }

    /// Annotator ids in sorted order.
    pub fn annotators(&self) -> impl Iterator<Item = &str> {
        self.by_annotator.keys().map(String::as_str)
    }

    pub fn has_annotator(&self, annotator: &str) -> bool {
        self.by_annotator.contains_key(annotator)
    }

    /// Sample ids in sorted order.
    pub fn sample_ids(&self) -> impl Iterator<Item = &str> {
        self.by_sample.keys().map(String::as_str)
    }

    /// First-phase annotations of a sample, ordered by annotator id.
    pub fn first_phase(&self, sample: &str) -> Vec<&Annotation> {
        self.by_sample
            .get(sample)
            .into_iter()
            .flat_map(|m| m.values())
            .filter_map(|s| s[0].map(|i| &self.annotations[i]))
            .collect()
    }

    /// Samples the annotator labeled in the first phase, sorted.
    pub fn samples_of(&self, annotator: &str) -> impl Iterator<Item = &str> {
        self.by_annotator
            .get(annotator)
            .into_iter()
            .flat_map(|m| m.iter())
            .filter(|(_, s)| s[0].is_some())
            .map(|(id, _)| id.as_str())
    }

    /// `(first, re)` annotation pairs of one annotator.
    pub fn reannotated_pairs(&self, annotator: &str) -> Vec<(&Annotation, &Annotation)> {
        self.by_annotator
            .get(annotator)
            .into_iter()
            .flat_map(|m| m.values())
            .filter_map(|s| match s {
                [Some(a), Some(b)] => Some((&self.annotations[*a], &self.annotations[*b])),
                _ => None,
            })
            .collect()
    }

    /// Aligned first-phase annotations of two distinct annotators.
    pub fn shared_pairs(&self, x: &str, y: &str) -> Vec<(&Annotation, &Annotation)> {
        let (Some(xs), Some(ys)) = (self.by_annotator.get(x), self.by_annotator.get(y)) else {
            return Vec::new();
        };
        xs.iter()
            .filter_map(|(sample, sx)| {
                let a = sx[0]?;
                let b = ys.get(sample)?[0]?;
                Some((&self.annotations[a], &self.annotations[b]))
            })
            .collect()
    }
}
