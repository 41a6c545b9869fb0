use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bleu::{bleu, sentence_bleu, BleuMode, BleuScore, MAX_ORDER};
use super::chrf::{chrf3, chrf_stats, ChrfScore, CHRF_BETA, CHRF_ORDER};
use super::edit::{corpus_ter, corpus_wer, EditStats, MAX_SHIFT_DISTANCE};
use super::subword::{spbleu, SubwordModel};
use super::MetricError;
use crate::align::tokenize;
use crate::extract::ExtractFile;
use crate::versification::{CanonicalIndex, VerseRef};

/// Identity of the word tokenizer used for BLEU, WER and TER.
pub const TOKENIZER_ID: &str = "versekit-rule-v1(lowercase,punct-split)";

#[derive(Debug, Clone)]
pub struct ScoreConfig {
    pub subword: SubwordModel,
    /// Spacing of the BLEU distribution samples.
    pub cdf_step: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { subword: SubwordModel::whitespace(), cdf_step: 5.0 }
    }
}

impl ScoreConfig {
    pub fn fingerprint(&self) -> String {
        let desc = format!(
            "tokenizer={TOKENIZER_ID};subword={};bleu=order{MAX_ORDER},pooled,smoothed-per-verse;chrf=n{CHRF_ORDER},beta{CHRF_BETA},nospace;ter=greedy,cap{MAX_SHIFT_DISTANCE};cdf={:?}",
            self.subword.hash(),
            self.cdf_step
        );
        hex::encode(&Sha256::digest(desc.as_bytes())[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerseScore {
    pub verse: VerseRef,
    pub bleu: f64,
    pub chrf3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub bleu: BleuScore,
    pub spbleu: BleuScore,
    pub chrf3: ChrfScore,
    pub wer: EditStats,
    pub ter: EditStats,
}

/// Share of verses scoring at or below each threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cdf {
    pub points: Vec<(f64, f64)>,
}

impl Cdf {
    pub fn from_scores(scores: &[f64], step: f64) -> Cdf {
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len().max(1) as f64;
        let steps = (100.0 / step).round() as usize;
        let points = (0..=steps)
            .map(|k| {
                let x = (k as f64 * step).min(100.0);
                let below = sorted.partition_point(|&s| s <= x);
                (x, below as f64 / n)
            })
            .collect();
        Cdf { points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub tokenizer: String,
    pub subword_model: String,
    pub fingerprint: String,
    pub corpus: CorpusScores,
    pub per_verse: Vec<VerseScore>,
    pub cdf: Cdf,
}

impl ScoreReport {
    pub fn corpus_tsv(&self) -> String {
        let c = &self.corpus;
        let mut s = String::from("metric\tscore\n");
        for (k, v) in [
            ("bleu", c.bleu.score),
            ("spbleu", c.spbleu.score),
            ("chrf3", c.chrf3.score),
            ("wer", c.wer.rate),
            ("ter", c.ter.rate),
        ] {
            let _ = writeln!(s, "{k}\t{v:.4}");
        }
        s
    }

    pub fn per_verse_tsv(&self) -> String {
        let mut s = String::from("verse\tbleu\tchrf3\n");
        for v in &self.per_verse {
            let _ = writeln!(s, "{}\t{:.4}\t{:.4}", v.verse, v.bleu, v.chrf3);
        }
        s
    }

    pub fn cdf_tsv(&self) -> String {
        let mut s = String::from("bleu_at_most\tshare_of_verses\n");
        for (x, f) in &self.cdf.points {
            let _ = writeln!(s, "{x:.1}\t{f:.6}");
        }
        s
    }

    pub fn summary(&self) -> String {
        let c = &self.corpus;
        format!(
            "{} verses: BLEU {:.2}  spBLEU {:.2}  chrF3 {:.2}  WER {:.4}  TER {:.4}\ntokenizer {}  subword {}  fingerprint {}\n",
            self.per_verse.len(),
            c.bleu.score,
            c.spbleu.score,
            c.chrf3.score,
            c.wer.rate,
            c.ter.rate,
            self.tokenizer,
            self.subword_model,
            self.fingerprint
        )
    }
}

/// Score one hypothesis line per verse against the reference extract.
pub fn score_hypotheses<S: AsRef<str> + Sync>(
    hyp_lines: &[S],
    reference: &ExtractFile,
    verses: &[VerseRef],
    index: &CanonicalIndex,
    config: &ScoreConfig,
) -> Result<ScoreReport, MetricError> {
    if verses.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if hyp_lines.len() != verses.len() {
        return Err(MetricError::LengthMismatch { hyps: hyp_lines.len(), refs: verses.len() });
    }
    let mut refs: Vec<&str> = Vec::with_capacity(verses.len());
    for v in verses {
        match reference.get(index, v).and_then(|l| l.text()) {
            Some(t) => refs.push(t),
            None => return Err(MetricError::NoReferenceText(*v)),
        }
    }
    let hyps: Vec<&str> = hyp_lines.iter().map(AsRef::as_ref).collect();
    let hyp_tok: Vec<Vec<String>> = hyps.par_iter().map(|l| tokenize(l)).collect();
    let ref_tok: Vec<Vec<String>> = refs.par_iter().map(|l| tokenize(l)).collect();
    if let Some(i) = ref_tok.iter().position(Vec::is_empty) {
        return Err(MetricError::NoReferenceText(verses[i]));
    }

    let corpus = CorpusScores {
        bleu: bleu(&hyp_tok, &ref_tok, BleuMode::Corpus)?,
        spbleu: spbleu(&hyps, &refs, &config.subword)?,
        chrf3: chrf3(&hyps, &refs)?,
        wer: corpus_wer(&hyp_tok, &ref_tok)?,
        ter: corpus_ter(&hyp_tok, &ref_tok)?,
    };
    let per_verse: Vec<VerseScore> = (0..verses.len())
        .into_par_iter()
        .map(|i| VerseScore {
            verse: verses[i],
            bleu: sentence_bleu(&hyp_tok[i], &ref_tok[i]),
            chrf3: chrf_stats(hyps[i], refs[i]).score(),
        })
        .collect();
    let bleus: Vec<f64> = per_verse.iter().map(|v| v.bleu).collect();
    Ok(ScoreReport {
        tokenizer: TOKENIZER_ID.to_string(),
        subword_model: config.subword.hash(),
        fingerprint: config.fingerprint(),
        corpus,
        per_verse,
        cdf: Cdf::from_scores(&bleus, config.cdf_step),
    })
}
