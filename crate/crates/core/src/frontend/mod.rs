//! Text normalization, fragment parsing and DRS composition.
//!
//! ```
//! use nl2cnl::frontend::{analyze, normalize, Lexicon};
//! use nl2cnl::text::serialize_drs;
//!
//! let lex = Lexicon::shipped();
//! let (tokens, _trace) = normalize("A dog barks.", &lex).unwrap();
//! let (drs, _flags) = analyze(&tokens, &lex).unwrap();
//! assert_eq!(
//!     serialize_drs(&drs),
//!     "drs([x1,e1],[pred(x1,dog,n,0),pred(e1,bark,v,0),rel(e1,x1,agent)])"
//! );
//! ```

mod anaphora;
mod compose;
pub mod grammar;
pub mod lexicon;
mod normalize;

use serde::Serialize;
use thiserror::Error;

use crate::drs::Drs;

pub use anaphora::resolve_anaphora;
pub use grammar::{parse_discourse, Sentence};
pub use lexicon::{Agreement, Category, LexEntry, Lexicon, LexiconError, Valency};
pub use normalize::{normalize, NormalizationReason, NormalizationStep, NormalizationTrace};

pub(crate) use anaphora::introduction_order;
pub(crate) use normalize::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("empty input")]
    EmptyInput,
    #[error("parse failure at token {position}: expected {expected}")]
    ParseFailure { position: usize, expected: String },
    #[error("verb `{verb}` takes {expected} object(s), got {got}")]
    ValencyMismatch {
        verb: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("no accessible antecedent for pronoun `{0}`")]
    NoAntecedent(String),
}

/// Ambiguity and vocabulary signals gathered during analysis.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct AnalysisFlags {
    pub ambiguous_anaphora: bool,
    pub oov_count: usize,
    pub multiple_attachments: bool,
    /// One list per pronoun, most recent candidate first.
    pub candidate_antecedents: Vec<Vec<String>>,
}

/// Parses normalized tokens and composes their DRS. Sentences separated by
/// `.` are merged into one discourse box with continuous numbering.
pub fn analyze(tokens: &[String], lex: &Lexicon) -> Result<(Drs, AnalysisFlags), FrontendError> {
    let sentences = parse_discourse(tokens, lex)?;
    let mut composer = compose::Composer::default();
    let mut drs = Drs::empty();
    let mut flags = AnalysisFlags::default();
    for s in &sentences {
        let part = composer.sentence(s);
        drs = drs.merge(&part).expect("numbering never repeats");
        let vp = s.vp();
        if vp.valency == Valency::Di && vp.pps.len() > 1 {
            flags.multiple_attachments = true;
        }
    }
    Ok((drs, flags))
}
