//! Translation quality metrics: BLEU, subword BLEU, chrF3, WER and TER.

mod bleu;
mod chrf;
mod edit;
mod report;
mod subword;

pub use bleu::{bleu, sentence_bleu, BleuMode, BleuScore, MAX_ORDER};
pub use chrf::{chrf3, chrf_stats, ChrfScore, ChrfStats, CHRF_BETA, CHRF_ORDER};
pub use edit::{corpus_ter, corpus_wer, levenshtein, ter, wer, EditStats, MAX_SHIFT_DISTANCE};
pub use report::{score_hypotheses, Cdf, CorpusScores, ScoreConfig, ScoreReport, VerseScore, TOKENIZER_ID};
pub use subword::{spbleu, train_subword, SubwordModel, SubwordOptions, WORD_MARKER};

use crate::versification::VerseRef;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("{hyps} hypotheses for {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("reference {0} is empty")]
    EmptyReference(usize),
    #[error("nothing to score")]
    EmptyInput,
    #[error("vocabulary size {requested} is below the {needed} distinct characters")]
    VocabTooSmall { needed: usize, requested: usize },
    #[error("{0} has no reference text")]
    NoReferenceText(VerseRef),
    #[error("subword model line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

pub(crate) fn check_lengths<A, B>(hyps: &[A], refs: &[B]) -> Result<(), MetricError> {
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    if refs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(())
}
