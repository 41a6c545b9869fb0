//! Verse-aligned Bible corpus tooling.

pub mod align;
pub mod book;
pub mod extract;
pub mod metrics;
pub mod synth;
pub mod tasks;
pub mod textclean;
pub mod usfm;
pub mod versification;

pub use book::{BookId, CanonSection};
pub use versification::{
    builtin_index, builtin_table, canonical_index, infer_scheme, load_versification_table, map_ref,
    CanonicalIndex, MapDirection, VerseRef, VersificationScheme, VersificationTable,
};
pub use extract::{build_extract, extract_verses, ExtractFile, ExtractLine};
pub use usfm::{parse_usfm, split_books, UsfmDocument};
pub use textclean::{analyze_text, clean_extract, clean_text, normalize_order, CleanContext, CleanReport, CleanRule, RuleSet};
pub use align::{tokenize, TokenizedCorpus};
pub use metrics::{bleu, chrf3, score_hypotheses, spbleu, ter, train_subword, wer, BleuMode, BleuScore, ChrfScore, EditStats, ScoreReport, SubwordModel};
pub use tasks::{build_book_split, build_cv_splits, select_pairing, PairingCandidateSet, PairingDecision, SplitManifest, TaskKind, TaskSpec};
