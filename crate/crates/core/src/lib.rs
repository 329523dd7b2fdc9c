//! Reduction of controlled English to ACE-subset statements through
//! Discourse Representation Structures.
//!
//! The pipeline runs in stages, each a module of this crate:
//!
//! * [`frontend`] normalizes raw text, parses a small English fragment and
//!   composes a [`Drs`], then resolves pronouns by accessibility.
//! * [`classifier`] predicts which reduction types a sentence needs with
//!   one-vs-rest linear SVMs.
//! * [`rewrite`] applies label-gated pattern rules to the DRS.
//! * [`ace`] verbalizes the reduced DRS and checks the ACE subset.
//! * [`logic`] translates DRSs to first-order logic, checks finite models,
//!   answers questions and solves finite-domain CSPs.
//! * [`pipeline`] wires the stages together and evaluates corpora.
//!
//! [`text`] holds the textual DRS notation used by every file format.
//!
//! ```
//! use nl2cnl::pipeline::{Pipeline, PipelineConfig};
//!
//! let pipeline = Pipeline::load(&PipelineConfig::shipped()).unwrap();
//! let report = pipeline.run_sentence("s1", "Harris can teach linguistics on Tuesdays.");
//! assert_eq!(
//!     report.ace.as_deref(),
//!     Some("Harris can teach a linguistic class on Tuesday.")
//! );
//! ```

pub mod ace;
pub mod classifier;
pub mod drs;
pub mod frontend;
pub mod logic;
pub mod pipeline;
pub mod rewrite;
pub mod text;

pub use drs::{Condition, Drs, DrsError, EntityClass, Lemma, Pos, Referent};
