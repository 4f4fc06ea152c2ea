//! Annotation campaign planning and annotator reliability.
//!
//! The crate covers the whole offline pipeline for pairwise-annotated
//! datasets:
//!
//! * [`distribution`] plans a campaign: how many unique samples fit the
//!   annotators' time budget and which annotator gets which single, double
//!   and re-annotation project.
//! * [`agreement`] computes nominal Krippendorff's alpha between two aligned
//!   label sequences.
//! * [`graph`] builds the annotator graph (one edge per double-annotation
//!   project) and derives mean-one reliability scores from inter- and
//!   intra-annotator agreement.
//! * [`labeling`] turns confidence-scored annotations into soft labels and
//!   aggregates double annotations by reliability.
//! * [`trainer`] and [`metrics`] train and evaluate a hashed-feature softmax
//!   classifier with reliability-weighted cross-entropy.
//! * [`simulator`] generates synthetic campaigns with known annotator
//!   quality.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line front end live in the `effiara` crate.
#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agreement;
pub mod distribution;
pub mod error;
pub mod features;
pub mod graph;
pub mod labeling;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{Annotation, AnnotationStore, CampaignParams, LabelSet, Phase, Sample};
