//! File formats, multi-step pipelines and the `effiara` command-line tool,
//! built on [`effiara_core`].
//!
//! Tabular inputs and outputs are CSV ([`tables`]); reports, plans and
//! scenarios are JSON and labeled samples are JSON Lines ([`formats`]).
//! Every output file is written atomically.

#![warn(missing_debug_implementations, rust_2018_idioms)]

pub mod cli;
pub mod error;
pub mod files;
pub mod formats;
pub mod pipeline;
pub mod tables;

pub use error::{Error, Result};
