//! Classification and calibration metrics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::labeling::{argmax, SoftLabel};

pub const DEFAULT_ECE_BINS: usize = 10;

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// F1 for every class present in `gold`.
pub fn per_class_f1<T: Ord + Clone>(predictions: &[T], gold: &[T]) -> Result<BTreeMap<T, f64>> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch(predictions.len(), gold.len()));
    }
    if gold.is_empty() {
        return Err(Error::EmptyInput);
    }
    let classes: BTreeSet<&T> = gold.iter().collect();
    Ok(classes
        .into_iter()
        .map(|c| {
            let mut tp = 0;
            let mut fp = 0;
            let mut fn_ = 0;
            for (p, g) in predictions.iter().zip(gold) {
                match (p == c, g == c) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            (c.clone(), f1(tp, fp, fn_))
        })
        .collect())
}

/// Unweighted mean of per-class F1 over the classes present in `gold`.
pub fn macro_f1<T: Ord + Clone>(predictions: &[T], gold: &[T]) -> Result<f64> {
    let scores = per_class_f1(predictions, gold)?;
    Ok(scores.values().sum::<f64>() / scores.len() as f64)
}

/// `matrix[gold][predicted]` counts.
pub fn confusion_matrix(predictions: &[usize], gold: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch(predictions.len(), gold.len()));
    }
    let mut m = vec![vec![0; num_classes]; num_classes];
    for (&p, &g) in predictions.iter().zip(gold) {
        m[g][p] += 1;
    }
    Ok(m)
}

/// Top-label expected calibration error over `num_bins` equal-width bins.
/// A confidence of exactly 1.0 falls into the last bin.
pub fn expected_calibration_error(pred_probs: &[SoftLabel], gold: &[usize], num_bins: usize) -> Result<f64> {
    if num_bins == 0 {
        return Err(Error::InvalidConfig("num_bins must be at least 1".into()));
    }
    if pred_probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if pred_probs.len() != gold.len() {
        return Err(Error::LengthMismatch(pred_probs.len(), gold.len()));
    }
    let mut count = vec![0usize; num_bins];
    let mut confidence = vec![0.0; num_bins];
    let mut correct = vec![0.0; num_bins];
    for (p, &g) in pred_probs.iter().zip(gold) {
        let predicted = argmax(p.probs());
        let conf = p.probs()[predicted];
        let bin = ((conf * num_bins as f64) as usize).min(num_bins - 1);
        count[bin] += 1;
        confidence[bin] += conf;
        if predicted == g {
            correct[bin] += 1.0;
        }
    }
    let n = pred_probs.len() as f64;
    Ok((0..num_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let c = count[b] as f64;
            (c / n) * libm::fabs(correct[b] / c - confidence[b] / c)
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub macro_f1: f64,
    pub ece: f64,
    pub per_class_f1: BTreeMap<String, f64>,
    /// `confusion[gold][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub n_test: usize,
}

/// Scores predicted distributions against gold class indices.
pub fn evaluate(pred_probs: &[SoftLabel], gold: &[usize], labels: &[String]) -> Result<EvalReport> {
    let predicted: Vec<usize> = pred_probs.iter().map(SoftLabel::argmax).collect();
    let per_class = per_class_f1(&predicted, gold)?;
    Ok(EvalReport {
        macro_f1: per_class.values().sum::<f64>() / per_class.len() as f64,
        ece: expected_calibration_error(pred_probs, gold, DEFAULT_ECE_BINS)?,
        per_class_f1: per_class.into_iter().map(|(c, f)| (labels[c].clone(), f)).collect(),
        confusion: confusion_matrix(&predicted, gold, labels.len())?,
        n_test: gold.len(),
    })
}
