//! Pairing selection and benchmark task splits.

mod manifest;
mod pairing;
mod splits;

pub use manifest::{manifest_checksum, MANIFEST_HEADER};
pub use pairing::{
    select_pairing, AuditRule, AuditStep, Candidate, PairingCandidateSet, PairingConfig, PairingDecision, Role, Scope,
    SelectionRules,
};
pub use splits::{build_book_split, build_cv_splits, CvParams, SplitManifest, TaskKind, TaskSpec, GENERATOR_ID};

use crate::book::BookId;
use crate::versification::VerseRef;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("no {0} candidates")]
    EmptyRole(Role),
    #[error("unknown candidate {0}")]
    UnknownCandidate(String),
    #[error("no alignment scores available to choose the {0}")]
    NoScores(Role),
    #[error("every related candidate was excluded")]
    AllRelatedExcluded,
    #[error("audit replay failed: {0}")]
    AuditReplay(String),
    #[error("pairing config: {0}")]
    Config(String),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("{available} shared verses, {needed} needed")]
    InsufficientVerses { needed: usize, available: usize },
    #[error("no target text for any test book: {0:?}")]
    TestBooksMissing(Vec<BookId>),
    #[error("{translation} has {lines} lines, expected {expected}")]
    ExtractLength { translation: String, lines: usize, expected: usize },
    #[error("{verse} appears twice (again in {set})")]
    Overlap { verse: VerseRef, set: &'static str },
    #[error("{verse} has no text in {translation}")]
    NoText { verse: VerseRef, translation: String },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("manifest checksum mismatch")]
    ChecksumMismatch,
    #[error("{0}")]
    Io(String),
}
