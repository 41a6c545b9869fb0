use super::lexicon::Lexicon;
use super::{add_counts, check_corpus, map_chunks, AlignError, SentencePair, SlotCounts, TokenizedCorpus, Trained};

/// IBM Model 1 with an empty source word and uniform alignment prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Ibm1Model {
    pub lex: Lexicon,
}

impl Ibm1Model {
    /// Corpus log-likelihood, ignoring sentence length terms.
    pub fn log_likelihood(&self, corpus: &TokenizedCorpus) -> f64 {
        corpus
            .pairs
            .iter()
            .map(|p| {
                let z = (p.src.len() + 1) as f64;
                p.tgt
                    .iter()
                    .map(|&f| {
                        let s: f64 = self.lex.prob(None, f) + p.src.iter().map(|&e| self.lex.prob(Some(e), f)).sum::<f64>();
                        (s / z).ln()
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

fn estep(lex: &Lexicon, pairs: &[SentencePair]) -> (SlotCounts, f64) {
    let mut counts = SlotCounts::new();
    let mut ll = 0.0;
    let mut slots = Vec::new();
    for p in pairs {
        let z = (p.src.len() + 1) as f64;
        for &f in &p.tgt {
            slots.clear();
            slots.push(lex.t.slot(0, f).expect("co-occurring pair"));
            slots.extend(p.src.iter().map(|&e| lex.t.slot(e as usize + 1, f).expect("co-occurring pair")));
            let denom: f64 = slots.iter().map(|&s| lex.t.prob_at(s)).sum();
            ll += (denom / z).ln();
            for &s in &slots {
                *counts.entry(s).or_default() += lex.t.prob_at(s) / denom;
            }
        }
    }
    (counts, ll)
}

/// One EM pass: returns the log-likelihood under the current table and the
/// re-estimated table.
pub(crate) fn em_step(lex: &mut Lexicon, corpus: &TokenizedCorpus) -> f64 {
    let parts = map_chunks(&corpus.pairs, |chunk| estep(lex, chunk));
    let mut dense = vec![0.0; lex.t.len()];
    let mut ll = 0.0;
    for (c, l) in &parts {
        add_counts(&mut dense, c);
        ll += l;
    }
    lex.t.normalize_from(&dense);
    ll
}

pub fn train_ibm1(corpus: &TokenizedCorpus, iterations: usize) -> Result<Trained<Ibm1Model>, AlignError> {
    check_corpus(corpus, iterations)?;
    let mut lex = Lexicon::from_corpus(corpus);
    let mut trace = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        trace.push(em_step(&mut lex, corpus));
    }
    let model = Ibm1Model { lex };
    trace.push(model.log_likelihood(corpus));
    Ok(Trained { model, log_likelihood: trace })
}
