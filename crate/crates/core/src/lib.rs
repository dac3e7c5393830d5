//! Fix-ingredient analysis for program repair corpora.
//!
//! The crate covers the non-neural side of ingredient-augmented repair:
//!
//! - [`corpus`]: ingest, validate, dedup and split buggy/fixed file pairs;
//!   compute the local context window around a bug.
//! - [`lexing`]: lexical identifier extraction for Python and Java.
//! - [`ingredients`]: the ingredient-set algebra, cover, signed distance,
//!   training-set frequency and uncovered-ingredient classification.
//! - [`scanning`]: scanner sample generation, built-in and external
//!   scanners, thresholding, union aggregation and precision/recall/F1.
//! - [`repairprep`]: repair-model inputs with bug markers and ingredient
//!   prefixes, plus every baseline input variant.
//! - [`evaluation`]: exact-match scoring and breakdown reports.
//!
//! Batch entry points take an [`Exec`] so callers can pick sequential or
//! rayon-backed execution.

pub mod analysis;
pub mod corpus;
pub mod evaluation;
pub mod exec;
pub mod ingredients;
pub mod lexing;
pub mod protocol;
pub mod repairprep;
pub mod scanning;
pub mod synth;
pub mod text;

pub use corpus::{BugCorpus, BugSample, ContextWindow, Language};
pub use exec::Exec;
pub use ingredients::IngredientSets;
pub use text::LineRange;
