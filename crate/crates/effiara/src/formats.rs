//! JSON and JSONL documents exchanged between commands.
//!
//! Maps are `BTreeMap`s so every document serializes in a fixed order and
//! identical inputs give byte-identical files.

use std::collections::BTreeMap;

use effiara_core::distribution::{budget_summary, DistributionPlan};
use effiara_core::graph::{AnnotatorGraph, ReliabilityConfig, ReliabilityMode, ReliabilityOutcome};
use effiara_core::labeling::{LabeledSample, SoftLabel};
use effiara_core::metrics::EvalReport;
use effiara_core::simulator::{ConfidenceModel, SimScenario, SyntheticAnnotator, TextModel};
use effiara_core::trainer::ReliabilitySource;
use effiara_core::{CampaignParams, LabelSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub num_annotators: usize,
    pub time_per_annotator: f64,
    pub annotation_rate: f64,
    pub double_prop: f64,
    pub reanno_prop: f64,
    #[serde(default = "default_max_confidence")]
    pub max_confidence: u32,
}

fn default_max_confidence() -> u32 {
    effiara_core::model::DEFAULT_MAX_CONFIDENCE
}

impl From<&CampaignParams> for ParamsJson {
    fn from(p: &CampaignParams) -> Self {
        Self {
            num_annotators: p.num_annotators,
            time_per_annotator: p.time_per_annotator,
            annotation_rate: p.annotation_rate,
            double_prop: p.double_prop,
            reanno_prop: p.reanno_prop,
            max_confidence: p.max_confidence,
        }
    }
}

impl TryFrom<&ParamsJson> for CampaignParams {
    type Error = Error;

    fn try_from(p: &ParamsJson) -> Result<Self> {
        Ok(CampaignParams::new(
            p.num_annotators,
            p.time_per_annotator,
            p.annotation_rate,
            p.double_prop,
            p.reanno_prop,
        )?
        .with_max_confidence(p.max_confidence)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentJson {
    pub single: Vec<String>,
    pub reannotate: Vec<String>,
    pub double: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanMetadata {
    /// Annotator ids in ring order.
    pub ring: Vec<String>,
    pub double_project_formula: String,
    pub double_project_exact: f64,
    pub double_project_size: usize,
    pub single_project_size: usize,
    pub reannotate_size: usize,
    pub budget: String,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub params: ParamsJson,
    pub k: usize,
    pub seed: u64,
    pub annotators: BTreeMap<String, AssignmentJson>,
    pub metadata: PlanMetadata,
}

const DOUBLE_SIZE_NOTE: &str = "Double projects hold d*k/(2n) samples, rounded half up. \
For n=6, t=10, rate=60, d=1/3, r=1/2 this gives k=2160 and 60 samples per double project. \
A figure of 80 per double project is sometimes quoted for that campaign; it contradicts the \
formula and would raise each annotator's load to 4*80+240+120 = 680 against a budget of 600.";

const REANNOTATION_GAP_NOTE: &str = "Re-annotation sets should be labelled after a gap \
(two weeks in the reference campaign) so annotators do not recall their first answers; \
the plan does not schedule or enforce this.";

impl From<&DistributionPlan> for PlanJson {
    fn from(plan: &DistributionPlan) -> Self {
        let annotators = plan
            .annotators
            .iter()
            .map(|a| {
                (
                    a.id.clone(),
                    AssignmentJson {
                        single: a.single.clone(),
                        reannotate: a.reannotate.clone(),
                        double: a.double.clone(),
                    },
                )
            })
            .collect();
        Self {
            params: ParamsJson::from(&plan.params),
            k: plan.k,
            seed: plan.seed,
            annotators,
            metadata: PlanMetadata {
                ring: plan.annotators.iter().map(|a| a.id.clone()).collect(),
                double_project_formula: "d*k/(2n)".into(),
                double_project_exact: plan.double_size_exact(),
                double_project_size: plan.sizes.double,
                single_project_size: plan.sizes.single,
                reannotate_size: plan.sizes.reannotate,
                budget: budget_summary(plan),
                notes: vec![DOUBLE_SIZE_NOTE.into(), REANNOTATION_GAP_NOTE.into()],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeJson {
    SinglePass,
    Iterative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityConfigJson {
    pub lambda: f64,
    pub mode: ModeJson,
    pub use_weighted_inter: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl From<&ReliabilityConfig> for ReliabilityConfigJson {
    fn from(c: &ReliabilityConfig) -> Self {
        Self {
            lambda: c.lambda,
            mode: match c.mode {
                ReliabilityMode::SinglePass => ModeJson::SinglePass,
                ReliabilityMode::Iterative => ModeJson::Iterative,
            },
            use_weighted_inter: c.use_weighted_inter,
            tolerance: c.tolerance,
            max_iterations: c.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorScores {
    pub inter: f64,
    pub intra: Option<f64>,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub annotators: BTreeMap<String, AnnotatorScores>,
    pub config: ReliabilityConfigJson,
    pub iterations: usize,
    pub converged: bool,
}

impl ReliabilityReport {
    pub fn new(graph: &AnnotatorGraph, outcome: &ReliabilityOutcome, config: &ReliabilityConfig) -> Self {
        let annotators = graph
            .nodes()
            .iter()
            .map(|(id, node)| {
                (
                    id.clone(),
                    AnnotatorScores {
                        inter: outcome.inter[id],
                        intra: node.intra_agreement,
                        reliability: outcome.reliabilities[id],
                    },
                )
            })
            .collect();
        Self {
            annotators,
            config: config.into(),
            iterations: outcome.iterations,
            converged: outcome.converged,
        }
    }

    pub fn reliabilities(&self) -> BTreeMap<String, f64> {
        self.annotators
            .iter()
            .map(|(id, s)| (id.clone(), s.reliability))
            .collect()
    }

    /// Mean-one scores mixing the stored inter and intra agreement with the
    /// source's weight on intra (0, 1 or 1/2).
    pub fn reliabilities_for(&self, source: ReliabilitySource) -> Result<BTreeMap<String, f64>> {
        let lambda = source.lambda();
        let mut raw = BTreeMap::new();
        for (id, s) in &self.annotators {
            let intra = match (s.intra, lambda > 0.0) {
                (Some(v), _) => v,
                (None, false) => 0.0,
                (None, true) => return Err(effiara_core::Error::MissingIntra(id.clone()).into()),
            };
            raw.insert(id.clone(), lambda * intra + (1.0 - lambda) * s.inter);
        }
        if raw.is_empty() {
            return Err(Error::Invalid("reliability report lists no annotators".into()));
        }
        for (id, &v) in &raw {
            if v.is_nan() || v <= 0.0 {
                return Err(effiara_core::Error::NonPositiveReliability {
                    annotator: id.clone(),
                    value: v,
                }
                .into());
            }
        }
        let mean = raw.values().sum::<f64>() / raw.len() as f64;
        Ok(raw.into_iter().map(|(id, v)| (id, v / mean)).collect())
    }
}

/// One line of a labeled-dataset JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub sample_id: String,
    pub soft_label: Vec<f64>,
    pub hard_label: String,
    pub annotators: Vec<String>,
    pub gold: bool,
}

impl From<&LabeledSample> for LabeledRecord {
    fn from(s: &LabeledSample) -> Self {
        Self {
            sample_id: s.sample_id.clone(),
            soft_label: s.soft_label.probs().to_vec(),
            hard_label: s.hard_label.clone(),
            annotators: s.annotator_ids.clone(),
            gold: s.gold,
        }
    }
}

impl LabeledRecord {
    pub fn into_sample(self, label_set: &LabelSet) -> Result<LabeledSample> {
        if self.soft_label.len() != label_set.len() {
            return Err(effiara_core::Error::LengthMismatch(self.soft_label.len(), label_set.len()).into());
        }
        label_set.require(&self.hard_label)?;
        Ok(LabeledSample {
            sample_id: self.sample_id,
            soft_label: SoftLabel::new(self.soft_label)?,
            hard_label: self.hard_label,
            annotator_ids: self.annotators,
            weight: 1.0,
            gold: self.gold,
        })
    }
}

pub fn write_jsonl(samples: &[LabeledSample]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for s in samples {
        serde_json::to_writer(&mut out, &LabeledRecord::from(s))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn parse_jsonl(data: &[u8], label_set: &LabelSet) -> Result<Vec<LabeledSample>> {
    let text = std::str::from_utf8(data).map_err(|e| Error::Invalid(format!("labeled data is not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i as u64 + 1;
        let record: LabeledRecord = serde_json::from_str(line).map_err(|e| Error::record(line_no, e))?;
        out.push(record.into_sample(label_set).map_err(|e| Error::record(line_no, e))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalJson {
    pub macro_f1: f64,
    pub ece: f64,
    pub per_class_f1: BTreeMap<String, f64>,
    /// `confusion[gold][predicted]`, both indexed by `labels`.
    pub confusion: Vec<Vec<usize>>,
    pub n_test: usize,
    pub labels: Vec<String>,
}

impl EvalJson {
    pub fn new(report: &EvalReport, label_set: &LabelSet) -> Self {
        Self {
            macro_f1: report.macro_f1,
            ece: report.ece,
            per_class_f1: report.per_class_f1.clone(),
            confusion: report.confusion.clone(),
            n_test: report.n_test,
            labels: label_set.labels().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceModelJson {
    pub correct: Vec<f64>,
    pub incorrect: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAnnotatorJson {
    pub annotator_id: String,
    pub accuracy: f64,
    pub confidence_model: ConfidenceModelJson,
    pub consistency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextModelJson {
    pub post_tokens: usize,
    pub claim_tokens: usize,
    pub signal: f64,
    pub class_vocab: usize,
    pub noise_vocab: usize,
}

impl Default for TextModelJson {
    fn default() -> Self {
        (&TextModel::default()).into()
    }
}

impl From<&TextModel> for TextModelJson {
    fn from(t: &TextModel) -> Self {
        Self {
            post_tokens: t.post_tokens,
            claim_tokens: t.claim_tokens,
            signal: t.signal,
            class_vocab: t.class_vocab,
            noise_vocab: t.noise_vocab,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub campaign: ParamsJson,
    pub label_set: Vec<String>,
    pub class_prior: Vec<f64>,
    pub annotators: Vec<SyntheticAnnotatorJson>,
    #[serde(default)]
    pub text: TextModelJson,
    pub seed: u64,
}

impl From<&SimScenario> for ScenarioJson {
    fn from(s: &SimScenario) -> Self {
        Self {
            campaign: (&s.campaign).into(),
            label_set: s.label_set.labels().to_vec(),
            class_prior: s.class_prior.probs().to_vec(),
            annotators: s
                .annotators
                .iter()
                .map(|a| SyntheticAnnotatorJson {
                    annotator_id: a.annotator_id.clone(),
                    accuracy: a.accuracy,
                    confidence_model: ConfidenceModelJson {
                        correct: a.confidence_model.correct.clone(),
                        incorrect: a.confidence_model.incorrect.clone(),
                    },
                    consistency: a.consistency,
                })
                .collect(),
            text: (&s.text).into(),
            seed: s.seed,
        }
    }
}

impl TryFrom<&ScenarioJson> for SimScenario {
    type Error = Error;

    fn try_from(s: &ScenarioJson) -> Result<Self> {
        let scenario = SimScenario {
            campaign: (&s.campaign).try_into()?,
            label_set: LabelSet::new(s.label_set.iter().cloned())?,
            class_prior: SoftLabel::new(s.class_prior.clone())?,
            annotators: s
                .annotators
                .iter()
                .map(|a| SyntheticAnnotator {
                    annotator_id: a.annotator_id.clone(),
                    accuracy: a.accuracy,
                    confidence_model: ConfidenceModel {
                        correct: a.confidence_model.correct.clone(),
                        incorrect: a.confidence_model.incorrect.clone(),
                    },
                    consistency: a.consistency,
                })
                .collect(),
            text: TextModel {
                post_tokens: s.text.post_tokens,
                claim_tokens: s.text.claim_tokens,
                signal: s.text.signal,
                class_vocab: s.text.class_vocab,
                noise_vocab: s.text.noise_vocab,
            },
            seed: s.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryJson {
    pub seed: u64,
    pub rho: f64,
    pub accuracies: BTreeMap<String, f64>,
    pub reliabilities: BTreeMap<String, f64>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(data: &[u8]) -> Result<T> {
    Ok(serde_json::from_slice(data)?)
}
