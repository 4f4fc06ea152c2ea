//! Multi-step workflows shared by the CLI and the test suites.

use std::collections::BTreeMap;

use effiara_core::features::{FeatureHasher, FeatureVector};
use effiara_core::graph::{build_graph, compute_reliability, AnnotatorGraph, ReliabilityConfig};
use effiara_core::labeling::LabeledSample;
use effiara_core::metrics::{evaluate, EvalReport};
use effiara_core::simulator::{evaluate_recovery, simulate_campaign, SimScenario};
use effiara_core::trainer::{build_examples, train_classifier, TrainConfig, TrainedModel};
use effiara_core::{AnnotationStore, LabelSet, Sample};

use crate::error::{Error, Result};
use crate::formats::{RecoveryJson, ReliabilityReport};

/// Builds the annotator graph and scores it.
pub fn assess(store: &AnnotationStore, config: &ReliabilityConfig) -> Result<(AnnotatorGraph, ReliabilityReport)> {
    let mut graph = build_graph(store)?;
    let outcome = compute_reliability(&mut graph, config)?;
    let report = ReliabilityReport::new(&graph, &outcome, config);
    Ok((graph, report))
}

pub fn hash_samples(samples: &[Sample], hasher: &FeatureHasher) -> BTreeMap<String, FeatureVector> {
    samples
        .iter()
        .map(|s| (s.sample_id.clone(), hasher.transform(&s.claim_text, &s.post_text)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trained: TrainedModel,
    pub report: EvalReport,
    pub n_train: usize,
}

/// Trains on the non-gold samples and evaluates on the gold ones, whose
/// hard labels serve as ground truth.
pub fn train_and_evaluate(
    labeled: &[LabeledSample],
    label_set: &LabelSet,
    features: &BTreeMap<String, FeatureVector>,
    reliabilities: &BTreeMap<String, f64>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let (test, train): (Vec<_>, Vec<_>) = labeled.iter().cloned().partition(|s| s.gold);
    if test.is_empty() {
        return Err(Error::Invalid("no gold samples to evaluate on".into()));
    }
    let dim = features
        .values()
        .next()
        .map(FeatureVector::dim)
        .ok_or_else(|| Error::Invalid("no sample texts".into()))?;
    let lookup = |id: &str| {
        features
            .get(id)
            .cloned()
            .ok_or_else(|| effiara_core::Error::InvalidConfig(format!("no text for sample `{id}`")))
    };
    let examples = build_examples(&train, label_set, reliabilities, config, lookup)?;
    let trained = train_classifier(&examples, label_set.len(), dim, config)?;

    let mut predictions = Vec::with_capacity(test.len());
    let mut gold = Vec::with_capacity(test.len());
    for s in &test {
        predictions.push(trained.model.predict_proba(&lookup(&s.sample_id)?));
        gold.push(label_set.require(&s.hard_label)?);
    }
    let report = evaluate(&predictions, &gold, label_set.labels())?;
    Ok(TrainOutcome {
        trained,
        report,
        n_train: train.len(),
    })
}

/// Simulates the scenario, scores the annotators and correlates the scores
/// with the true accuracies.
pub fn recover(scenario: &SimScenario, config: &ReliabilityConfig) -> Result<RecoveryJson> {
    let out = simulate_campaign(scenario)?;
    let (_, report) = assess(&out.store, config)?;
    recovery_from_report(scenario, &report)
}

pub fn recovery_from_report(scenario: &SimScenario, report: &ReliabilityReport) -> Result<RecoveryJson> {
    let reliabilities = report.reliabilities();
    let rho = evaluate_recovery(&reliabilities, scenario)?;
    Ok(RecoveryJson {
        seed: scenario.seed,
        rho,
        accuracies: scenario
            .annotators
            .iter()
            .map(|a| (a.annotator_id.clone(), a.accuracy))
            .collect(),
        reliabilities,
    })
}
