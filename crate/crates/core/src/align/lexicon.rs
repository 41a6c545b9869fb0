use std::collections::HashMap;

use super::corpus::{tokenize, TokenizedCorpus, Vocab};

/// Probability given to a source/target pair never seen together, so that
/// out-of-vocabulary tokens keep scores finite.
pub const OOV_PROB: f64 = 1e-12;

/// Row label of the empty source word in dumps and lexical tables.
pub const NULL_TOKEN: &str = "<NULL>";

/// Sparse t(target | source) table. Row 0 is the empty source word, row
/// `w + 1` is source word `w`. Each row lists the target ids it co-occurs
/// with in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct TTable {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    probs: Vec<f64>,
}

impl TTable {
    /// Rows for every co-occurring pair, initialised to 1 / |target vocab|.
    pub fn from_corpus(corpus: &TokenizedCorpus) -> TTable {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); corpus.source_vocab.len() + 1];
        for p in &corpus.pairs {
            rows[0].extend_from_slice(&p.tgt);
            for &s in &p.src {
                rows[s as usize + 1].extend_from_slice(&p.tgt);
            }
        }
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            targets.extend(r);
            offsets.push(targets.len());
        }
        let uniform = 1.0 / corpus.target_vocab.len().max(1) as f64;
        let probs = vec![uniform; targets.len()];
        TTable { offsets, targets, probs }
    }

    pub(crate) fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> TTable {
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (t, p) in r {
                targets.push(t);
                probs.push(p);
            }
            offsets.push(targets.len());
        }
        TTable { offsets, targets, probs }
    }

    /// Whether both tables store the same (source, target) pairs.
    pub fn same_layout(&self, other: &TTable) -> bool {
        self.offsets == other.offsets && self.targets == other.targets
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, row: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[row]..self.offsets[row + 1];
        (&self.targets[r.clone()], &self.probs[r])
    }

    pub fn slot(&self, row: usize, target: u32) -> Option<usize> {
        if row + 1 >= self.offsets.len() {
            return None;
        }
        let lo = self.offsets[row];
        let hi = self.offsets[row + 1];
        self.targets[lo..hi].binary_search(&target).ok().map(|i| lo + i)
    }

    pub fn prob_at(&self, slot: usize) -> f64 {
        self.probs[slot]
    }

    /// t(target | row), or [`OOV_PROB`] for an unseen pair.
    pub fn prob(&self, row: usize, target: u32) -> f64 {
        self.slot(row, target).map_or(OOV_PROB, |s| self.probs[s])
    }

    /// Replace every row by its normalised expected counts. A row with no
    /// mass keeps its old values.
    pub(crate) fn normalize_from(&mut self, counts: &[f64]) {
        for row in 0..self.rows() {
            let r = self.offsets[row]..self.offsets[row + 1];
            let total: f64 = counts[r.clone()].iter().sum();
            if total > 0.0 {
                for i in r {
                    self.probs[i] = counts[i] / total;
                }
            }
        }
    }

    /// Largest deviation of any row sum from 1.
    pub fn max_row_error(&self) -> f64 {
        (0..self.rows())
            .filter(|&r| self.offsets[r] < self.offsets[r + 1])
            .map(|r| (self.row(r).1.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Vocabularies plus translation table, shared by every model.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub source: Vocab,
    pub target: Vocab,
    pub t: TTable,
}

impl Lexicon {
    pub(crate) fn from_corpus(corpus: &TokenizedCorpus) -> Lexicon {
        Lexicon {
            source: corpus.source_vocab.clone(),
            target: corpus.target_vocab.clone(),
            t: TTable::from_corpus(corpus),
        }
    }

    /// t(target | source word), with `None` for the empty word.
    pub fn prob(&self, source: Option<u32>, target: u32) -> f64 {
        let row = source.map_or(0, |s| s as usize + 1);
        self.t.prob(row, target)
    }

    pub(crate) fn same_vocab(&self, corpus: &TokenizedCorpus) -> bool {
        self.source == corpus.source_vocab && self.target == corpus.target_vocab
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalEntry {
    pub target: String,
    pub prob: f64,
}

/// Source word to ranked target candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalTable {
    pub rows: HashMap<String, Vec<LexicalEntry>>,
    pub null_row: Vec<LexicalEntry>,
}

impl LexicalTable {
    pub fn get(&self, source: &str) -> Option<&[LexicalEntry]> {
        self.rows.get(source).map(Vec::as_slice)
    }

    /// Copy keeping only entries whose target word is in `vocab`; rows left
    /// empty are dropped, so their source words pass through when decoding.
    pub fn restricted_to(&self, vocab: &std::collections::HashSet<String>) -> LexicalTable {
        let keep = |row: &Vec<LexicalEntry>| row.iter().filter(|e| vocab.contains(&e.target)).cloned().collect::<Vec<_>>();
        LexicalTable {
            rows: self.rows.iter().map(|(k, r)| (k.clone(), keep(r))).filter(|(_, r)| !r.is_empty()).collect(),
            null_row: keep(&self.null_row),
        }
    }

    fn null_prob(&self, target: &str) -> f64 {
        self.null_row.iter().find(|e| e.target == target).map_or(0.0, |e| e.prob)
    }
}

/// Rows sorted by probability, ties broken by target id.
pub fn lexical_table(lex: &Lexicon) -> LexicalTable {
    let ranked = |row: usize| {
        let (ts, ps) = lex.t.row(row);
        let mut v: Vec<(u32, f64)> = ts.iter().copied().zip(ps.iter().copied()).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter()
            .map(|(t, p)| LexicalEntry { target: lex.target.word(t).to_string(), prob: p })
            .collect::<Vec<_>>()
    };
    let rows = (0..lex.source.len()).map(|s| (lex.source.word(s as u32).to_string(), ranked(s + 1))).collect();
    LexicalTable { rows, null_row: ranked(0) }
}

/// Word-by-word translation: each source token becomes its most probable
/// target word, unless the empty word explains that target at least as
/// well, in which case the token is dropped. Unknown tokens pass through.
pub fn smt_decode(source_line: &str, table: &LexicalTable) -> String {
    let mut out: Vec<&str> = Vec::new();
    let tokens = tokenize(source_line);
    for tok in &tokens {
        match table.get(tok).and_then(|r| r.first()) {
            Some(top) if table.null_prob(&top.target) >= top.prob => {}
            Some(top) => out.push(&top.target),
            None => out.push(tok),
        }
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let c = TokenizedCorpus::from_tokens(&[(vec!["a", "b"], vec!["x"]), (vec!["a"], vec!["y"])]);
        let t = TTable::from_corpus(&c);
        assert_eq!(t.rows(), 3);
        assert_eq!(t.row(0).0, &[0, 1]);
        assert_eq!(t.row(1).0, &[0, 1]);
        assert_eq!(t.row(2).0, &[0]);
        assert_eq!(t.prob(2, 1), OOV_PROB);
        assert_eq!(t.prob(9, 0), OOV_PROB);
        assert_eq!(t.prob(1, 1), 0.5);
    }

    #[test]
    fn decode_copies_oov_and_handles_empty() {
        let table = LexicalTable { rows: HashMap::new(), null_row: Vec::new() };
        assert_eq!(smt_decode("foo bar", &table), "foo bar");
        assert_eq!(smt_decode("", &table), "");
    }

    #[test]
    fn restricted_table_skips_foreign_targets() {
        let e = |t: &str, p: f64| LexicalEntry { target: t.into(), prob: p };
        let table = LexicalTable {
            rows: [("a".to_string(), vec![e("rel", 0.7), e("tgt", 0.3)]), ("b".to_string(), vec![e("rel", 1.0)])].into(),
            null_row: vec![e("rel", 0.1)],
        };
        let vocab = ["tgt".to_string()].into();
        let r = table.restricted_to(&vocab);
        assert_eq!(smt_decode("a b", &table), "rel rel");
        assert_eq!(smt_decode("a b", &r), "tgt b");
        assert!(r.null_row.is_empty());
    }
}
