//! Word alignment: tokenization, IBM1, HMM and diagonal IBM2 models,
//! posterior link matrices, corpus alignment scores, and a word-greedy
//! decoder built on the learned lexical table.

mod corpus;
mod hmm;
mod ibm1;
mod ibm2;
mod lexicon;
mod score;

pub use corpus::{tokenize, SentencePair, TokenizedCorpus, Vocab};
pub use hmm::{jump_bucket, train_hmm, HmmAlignModel, HmmOptions, JUMP_BUCKETS, MAX_JUMP};
pub use ibm1::{train_ibm1, Ibm1Model};
pub use ibm2::{train_fast_align, Ibm2DiagModel, Ibm2Options, NullPrior};
pub use lexicon::{lexical_table, smt_decode, LexicalEntry, LexicalTable, Lexicon, TTable, NULL_TOKEN, OOV_PROB};
pub use score::{
    corpus_alignment_score, pharaoh, score_pair, symmetrize, AlignModel, AlignmentMatrix, AnyModel, Symmetrization,
    SymmetricScore,
};

/// Sentence pairs per E-step work unit. Fixed so that results do not depend
/// on the thread count.
pub(crate) const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlignError {
    #[error("corpus has no sentence pairs")]
    EmptyCorpus,
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("initial model was trained on a different vocabulary")]
    VocabMismatch,
    #[error("sentence pair has an empty side")]
    EmptySentence,
    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

/// Log-likelihood trace alongside a trained model. `log_likelihood[k]` is the
/// corpus log-likelihood under the parameters after `k` iterations.
#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    pub log_likelihood: Vec<f64>,
}

pub(crate) type SlotCounts = std::collections::HashMap<usize, f64>;

/// Run `f` over fixed-size chunks in parallel, returning results in corpus
/// order.
pub(crate) fn map_chunks<R, F>(pairs: &[SentencePair], f: F) -> Vec<R>
where
    R: Send,
    F: Fn(&[SentencePair]) -> R + Sync,
{
    use rayon::prelude::*;
    pairs.par_chunks(CHUNK).map(&f).collect()
}

/// Fold per-chunk expected counts into a dense vector, chunk by chunk.
pub(crate) fn add_counts(dense: &mut [f64], chunk: &SlotCounts) {
    for (&slot, &c) in chunk {
        dense[slot] += c;
    }
}

pub(crate) fn check_corpus(corpus: &TokenizedCorpus, iterations: usize) -> Result<(), AlignError> {
    if corpus.is_empty() {
        return Err(AlignError::EmptyCorpus);
    }
    if iterations == 0 {
        return Err(AlignError::NoIterations);
    }
    if corpus.pairs.iter().any(|p| p.src.is_empty() || p.tgt.is_empty()) {
        return Err(AlignError::EmptySentence);
    }
    Ok(())
}
