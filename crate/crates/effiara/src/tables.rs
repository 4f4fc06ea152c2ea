//! CSV formats: annotations, samples, ground truth and training traces.
//!
//! All readers expect a header row, accept extra columns, and report
//! problems with the line number of the offending record.

use std::collections::{BTreeMap, BTreeSet};

use csv::{ReaderBuilder, StringRecord, WriterBuilder};
use effiara_core::{Annotation, AnnotationStore, LabelSet, Phase, Sample};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ANNOTATION_COLUMNS: [&str; 6] = [
    "sample_id",
    "annotator_id",
    "phase",
    "primary_label",
    "confidence",
    "secondary_label",
];
pub const SAMPLE_COLUMNS: [&str; 3] = ["sample_id", "claim_text", "post_text"];
pub const TRUTH_COLUMNS: [&str; 2] = ["sample_id", "label"];

#[derive(Debug, Deserialize)]
struct AnnotationRow {
    sample_id: String,
    annotator_id: String,
    phase: String,
    primary_label: String,
    confidence: String,
    secondary_label: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    sample_id: String,
    claim_text: String,
    post_text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthRow {
    sample_id: String,
    label: String,
}

fn check_header(header: &StringRecord, required: &[&str]) -> Result<()> {
    for column in required {
        if !header.iter().any(|h| h == *column) {
            return Err(Error::record(1, format!("missing column `{column}`")));
        }
    }
    Ok(())
}

/// Reads every record after the header, deserialized into `T`, with its line.
fn records<T>(data: &[u8], required: &[&str]) -> Result<Vec<(u64, T)>>
where
    T: for<'de> Deserialize<'de>,
{
    let mut reader = ReaderBuilder::new().from_reader(data);
    let header = reader.headers()?.clone();
    check_header(&header, required)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record.deserialize(Some(&header)).map_err(|e| Error::record(line, e))?;
        out.push((line, row));
    }
    Ok(out)
}

fn parse_row(row: AnnotationRow) -> std::result::Result<Annotation, String> {
    let phase =
        Phase::parse(&row.phase).ok_or_else(|| format!("phase must be `first` or `re`, got `{}`", row.phase))?;
    let confidence: u32 = row
        .confidence
        .trim()
        .parse()
        .map_err(|_| format!("confidence must be an integer, got `{}`", row.confidence))?;
    Ok(Annotation {
        sample_id: row.sample_id,
        annotator_id: row.annotator_id,
        phase,
        primary_label: row.primary_label,
        confidence,
        secondary_label: row.secondary_label.filter(|s| !s.is_empty()),
    })
}

/// Parses an annotation CSV into a validated store.
///
/// Rows with a confidence of 3 or less but no secondary label are accepted;
/// their count is logged as a warning.
pub fn parse_annotations(data: &[u8], label_set: LabelSet, max_confidence: u32) -> Result<AnnotationStore> {
    let mut store = AnnotationStore::new(label_set, max_confidence);
    let mut missing_secondary = 0usize;
    for (line, row) in records::<AnnotationRow>(data, &ANNOTATION_COLUMNS)? {
        let annotation = parse_row(row).map_err(|m| Error::record(line, m))?;
        if annotation.confidence <= 3 && annotation.secondary_label.is_none() {
            missing_secondary += 1;
        }
        store.push(annotation).map_err(|e| Error::record(line, e))?;
    }
    if missing_secondary > 0 {
        log::warn!("{missing_secondary} annotations with confidence <= 3 have no secondary label");
    }
    Ok(store)
}

pub fn write_annotations(store: &AnnotationStore) -> Result<Vec<u8>> {
    let mut writer = WriterBuilder::new().from_writer(Vec::new());
    writer.write_record(ANNOTATION_COLUMNS)?;
    for a in store.annotations() {
        writer.write_record([
            a.sample_id.as_str(),
            a.annotator_id.as_str(),
            a.phase.as_str(),
            a.primary_label.as_str(),
            &a.confidence.to_string(),
            a.secondary_label.as_deref().unwrap_or(""),
        ])?;
    }
    finish(writer)
}

pub fn parse_samples(data: &[u8]) -> Result<Vec<Sample>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, row) in records::<SampleRow>(data, &SAMPLE_COLUMNS)? {
        if !seen.insert(row.sample_id.clone()) {
            return Err(Error::record(line, effiara_core::Error::DuplicateSample(row.sample_id)));
        }
        out.push(Sample {
            sample_id: row.sample_id,
            claim_text: row.claim_text,
            post_text: row.post_text,
        });
    }
    Ok(out)
}

pub fn write_samples(samples: &[Sample]) -> Result<Vec<u8>> {
    let mut writer = WriterBuilder::new().from_writer(Vec::new());
    for s in samples {
        writer.serialize(SampleRow {
            sample_id: s.sample_id.clone(),
            claim_text: s.claim_text.clone(),
            post_text: s.post_text.clone(),
        })?;
    }
    if samples.is_empty() {
        writer.write_record(SAMPLE_COLUMNS)?;
    }
    finish(writer)
}

pub fn parse_ground_truth(data: &[u8]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (line, row) in records::<TruthRow>(data, &TRUTH_COLUMNS)? {
        if out.insert(row.sample_id.clone(), row.label).is_some() {
            return Err(Error::record(line, effiara_core::Error::DuplicateSample(row.sample_id)));
        }
    }
    Ok(out)
}

pub fn write_ground_truth(truth: &BTreeMap<String, String>) -> Result<Vec<u8>> {
    let mut writer = WriterBuilder::new().from_writer(Vec::new());
    writer.write_record(TRUTH_COLUMNS)?;
    for (sample_id, label) in truth {
        writer.write_record([sample_id, label])?;
    }
    finish(writer)
}

/// `epoch,loss` rows; the loss of epoch `e` is the objective before its
/// update, epochs counted from 1.
pub fn write_trace(loss_trace: &[f64]) -> Result<Vec<u8>> {
    let mut writer = WriterBuilder::new().from_writer(Vec::new());
    writer.write_record(["epoch", "loss"])?;
    for (i, loss) in loss_trace.iter().enumerate() {
        writer.write_record([(i + 1).to_string(), loss.to_string()])?;
    }
    finish(writer)
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    writer
        .into_inner()
        .map_err(|e| Error::Invalid(format!("csv flush failed: {e}")))
}
