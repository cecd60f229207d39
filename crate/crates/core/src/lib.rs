//! Predicting daily perceived stress from smartphone app usage.
//!
//! The pipeline runs in stages, each a module:
//!
//! - [`ingest`] parses usage, screen and stress-response logs and clips
//!   usage to screen-on time.
//! - [`taxonomy`] maps apps to the five usage categories.
//! - [`features`] builds the 11-component daily usage vector and the daily
//!   stress label.
//! - [`svm`] trains soft-margin SVMs with SMO, one-vs-one for multiclass.
//! - [`model_selection`] runs stratified k-fold grid search.
//! - [`evaluation`] scores per-user and pooled models.
//! - [`synth`] generates synthetic cohorts with a planted usage/stress link.
//! - [`pipeline`] wires the stages to files.
//!
//! The guide under `book/` explains each stage; its code samples are
//! compiled and run as doctests of this crate.

pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod model_selection;
pub mod pipeline;
pub mod report;
pub mod svm;
pub mod synth;
pub mod taxonomy;
pub mod time;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/svm.md")]
    mod svm {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/synth.md")]
    mod synth {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
