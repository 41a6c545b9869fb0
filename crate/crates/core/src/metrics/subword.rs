//! Unigram-LM subword segmentation for spBLEU.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::bleu::{bleu, BleuMode, BleuScore};
use super::MetricError;
use crate::synth::SeededRng;

/// Marks the start of a word inside a piece.
pub const WORD_MARKER: char = '\u{2581}';

const HEADER: &str = "versekit-subword 1";

#[derive(Debug, Clone, PartialEq)]
pub struct SubwordOptions {
    pub vocab_size: usize,
    pub seed: u64,
    pub max_piece_chars: usize,
    /// Seed candidates kept per final piece.
    pub seed_factor: usize,
    /// Fraction of pieces kept per pruning round.
    pub shrink: f64,
    pub em_iterations: usize,
    /// Larger corpora are subsampled (seeded) down to this many lines.
    pub max_lines: usize,
}

impl Default for SubwordOptions {
    fn default() -> Self {
        Self {
            vocab_size: 2000,
            seed: 0,
            max_piece_chars: 16,
            seed_factor: 8,
            shrink: 0.75,
            em_iterations: 2,
            max_lines: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubwordModel {
    pieces: Vec<(String, f64)>,
    index: HashMap<String, usize>,
    max_chars: usize,
    whitespace: bool,
}

fn word_key(w: &str) -> String {
    let mut s = String::with_capacity(w.len() + 3);
    s.push(WORD_MARKER);
    s.push_str(w);
    s
}

fn logsumexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Char boundary byte offsets of `s`, including `s.len()`.
fn boundaries(s: &str) -> Vec<usize> {
    s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len())).collect()
}

impl SubwordModel {
    /// Pieces are whole whitespace-separated words; spBLEU then equals BLEU
    /// over whitespace tokens.
    pub fn whitespace() -> Self {
        Self { pieces: Vec::new(), index: HashMap::new(), max_chars: 0, whitespace: true }
    }

    fn from_pieces(pieces: Vec<(String, f64)>) -> Self {
        let index = pieces.iter().enumerate().map(|(i, (p, _))| (p.clone(), i)).collect();
        let max_chars = pieces.iter().map(|(p, _)| p.chars().count()).max().unwrap_or(1);
        Self { pieces, index, max_chars, whitespace: false }
    }

    pub fn is_whitespace(&self) -> bool {
        self.whitespace
    }

    pub fn pieces(&self) -> &[(String, f64)] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn log_prob(&self, piece: &str) -> Option<f64> {
        self.index.get(piece).map(|&i| self.pieces[i].1)
    }

    fn fallback_log_prob(&self) -> f64 {
        self.pieces.iter().map(|p| p.1).fold(0.0, f64::min) - 10.0
    }

    /// Viterbi-best pieces for one marked word; unknown characters become
    /// single-character pieces.
    fn segment_word(&self, word: &str, out: &mut Vec<String>) {
        let b = boundaries(word);
        let n = b.len() - 1;
        let fallback = self.fallback_log_prob();
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back = vec![0usize; n + 1];
        best[0] = 0.0;
        for end in 1..=n {
            for start in end.saturating_sub(self.max_chars)..end {
                if best[start] == f64::NEG_INFINITY {
                    continue;
                }
                let piece = &word[b[start]..b[end]];
                let lp = match self.log_prob(piece) {
                    Some(lp) => lp,
                    None if end - start == 1 => fallback,
                    None => continue,
                };
                let s = best[start] + lp;
                if s > best[end] {
                    best[end] = s;
                    back[end] = start;
                }
            }
        }
        let mut cuts = vec![n];
        let mut at = n;
        while at > 0 {
            at = back[at];
            cuts.push(at);
        }
        cuts.reverse();
        for w in cuts.windows(2) {
            out.push(word[b[w[0]]..b[w[1]]].to_string());
        }
    }

    pub fn segment(&self, line: &str) -> Vec<String> {
        let mut out = Vec::new();
        for w in line.split_whitespace() {
            if self.whitespace {
                out.push(w.to_string());
            } else {
                self.segment_word(&word_key(w), &mut out);
            }
        }
        out
    }

    /// Inverse of `segment` up to whitespace normalisation.
    pub fn detokenize<S: AsRef<str>>(&self, pieces: &[S]) -> String {
        if self.whitespace {
            return pieces.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        }
        let joined: String = pieces.iter().map(AsRef::as_ref).collect();
        joined.replace(WORD_MARKER, " ").trim_start().to_string()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER}\n");
        if self.whitespace {
            s.push_str("kind\twhitespace\n");
            return s;
        }
        s.push_str("kind\tunigram\n");
        for (p, lp) in &self.pieces {
            let _ = writeln!(s, "{p}\t{lp:?}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, MetricError> {
        let err = |line: usize, message: &str| MetricError::ModelFormat { line, message: message.to_string() };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, HEADER)) => {}
            _ => return Err(err(1, "missing header")),
        }
        let kind = match lines.next() {
            Some((_, l)) => l.strip_prefix("kind\t").ok_or_else(|| err(2, "missing kind"))?,
            None => return Err(err(2, "missing kind")),
        };
        match kind {
            "whitespace" => Ok(Self::whitespace()),
            "unigram" => {
                let mut pieces = Vec::new();
                for (i, l) in lines {
                    let (p, lp) = l.rsplit_once('\t').ok_or_else(|| err(i + 1, "expected piece<TAB>logprob"))?;
                    let lp: f64 = lp.parse().map_err(|_| err(i + 1, "bad log probability"))?;
                    if p.is_empty() || lp > 0.0 {
                        return Err(err(i + 1, "bad piece"));
                    }
                    pieces.push((p.to_string(), lp));
                }
                Ok(Self::from_pieces(pieces))
            }
            _ => Err(err(2, "unknown kind")),
        }
    }

    /// SHA-256 of the text form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Working vocabulary during training.
struct Lattice<'a> {
    logp: &'a HashMap<String, f64>,
    max_chars: usize,
}

impl Lattice<'_> {
    /// Expected piece counts for one word, scaled by its frequency.
    /// Returns the word's log marginal.
    fn expected(&self, word: &str, weight: f64, counts: &mut HashMap<String, f64>) -> f64 {
        let b = boundaries(word);
        let n = b.len() - 1;
        let mut alpha = vec![f64::NEG_INFINITY; n + 1];
        alpha[0] = 0.0;
        for end in 1..=n {
            for start in end.saturating_sub(self.max_chars)..end {
                if let Some(&lp) = self.logp.get(&word[b[start]..b[end]]) {
                    alpha[end] = logsumexp(alpha[end], alpha[start] + lp);
                }
            }
        }
        let mut beta = vec![f64::NEG_INFINITY; n + 1];
        beta[n] = 0.0;
        for start in (0..n).rev() {
            for end in start + 1..=(start + self.max_chars).min(n) {
                if let Some(&lp) = self.logp.get(&word[b[start]..b[end]]) {
                    beta[start] = logsumexp(beta[start], lp + beta[end]);
                }
            }
        }
        let z = alpha[n];
        for start in 0..n {
            for end in start + 1..=(start + self.max_chars).min(n) {
                let piece = &word[b[start]..b[end]];
                if let Some(&lp) = self.logp.get(piece) {
                    let post = (alpha[start] + lp + beta[end] - z).exp();
                    if post > 0.0 {
                        *counts.entry(piece.to_string()).or_insert(0.0) += weight * post;
                    }
                }
            }
        }
        z
    }

    /// Best log score of `piece` segmented without using itself.
    fn alternative(&self, piece: &str) -> f64 {
        let b = boundaries(piece);
        let n = b.len() - 1;
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        best[0] = 0.0;
        for end in 1..=n {
            for start in end.saturating_sub(self.max_chars)..end {
                if start == 0 && end == n {
                    continue;
                }
                if let Some(&lp) = self.logp.get(&piece[b[start]..b[end]]) {
                    best[end] = best[end].max(best[start] + lp);
                }
            }
        }
        best[n]
    }
}

const WORD_CHUNK: usize = 256;

fn em_step(words: &[(String, f64)], logp: &mut HashMap<String, f64>, max_chars: usize, chars: &BTreeSet<String>) {
    let lattice = Lattice { logp, max_chars };
    let partial: Vec<HashMap<String, f64>> = words
        .par_chunks(WORD_CHUNK)
        .map(|chunk| {
            let mut c = HashMap::new();
            for (w, n) in chunk {
                lattice.expected(w, *n, &mut c);
            }
            c
        })
        .collect();
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for p in partial {
        // BTreeMap accumulation keeps the sum order fixed per piece.
        let mut sorted: Vec<_> = p.into_iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        for (k, v) in sorted {
            *counts.entry(k).or_insert(0.0) += v;
        }
    }
    // Required characters keep a floor so they stay in the model.
    for c in chars {
        let e = counts.entry(c.clone()).or_insert(0.0);
        *e = e.max(0.5);
    }
    counts.retain(|_, v| *v > 1e-9);
    let total: f64 = counts.values().sum();
    logp.clear();
    for (k, v) in counts {
        logp.insert(k, (v / total).ln());
    }
}

pub fn train_subword(lines: &[&str], opts: &SubwordOptions) -> Result<SubwordModel, MetricError> {
    let mut picked: Vec<&str> = lines.to_vec();
    if picked.len() > opts.max_lines {
        let mut rng = SeededRng::new(opts.seed);
        rng.shuffle(&mut picked);
        picked.truncate(opts.max_lines);
    }
    let mut freq: BTreeMap<String, f64> = BTreeMap::new();
    for l in &picked {
        for w in l.split_whitespace() {
            *freq.entry(word_key(w)).or_insert(0.0) += 1.0;
        }
    }
    if freq.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let chars: BTreeSet<String> = freq.keys().flat_map(|w| w.chars()).map(String::from).collect();
    if opts.vocab_size < chars.len() {
        return Err(MetricError::VocabTooSmall { needed: chars.len(), requested: opts.vocab_size });
    }
    let max_chars = opts.max_piece_chars.max(1);

    // Seed candidates: frequent substrings, scored by frequency times length.
    let mut sub: HashMap<&str, f64> = HashMap::new();
    for (w, &n) in &freq {
        let b = boundaries(w);
        for s in 0..b.len() - 1 {
            for e in s + 2..=(s + max_chars).min(b.len() - 1) {
                *sub.entry(&w[b[s]..b[e]]).or_insert(0.0) += n;
            }
        }
    }
    let mut cands: Vec<(&str, f64)> = sub.into_iter().filter(|(_, n)| *n >= 2.0).collect();
    cands.sort_by(|a, b| {
        let sa = a.1 * a.0.chars().count() as f64;
        let sb = b.1 * b.0.chars().count() as f64;
        sb.total_cmp(&sa).then_with(|| a.0.cmp(b.0))
    });
    cands.truncate(opts.vocab_size.saturating_mul(opts.seed_factor.max(1)));
    let mut char_freq: BTreeMap<String, f64> = BTreeMap::new();
    for (w, &n) in &freq {
        for c in w.chars() {
            *char_freq.entry(c.to_string()).or_insert(0.0) += n;
        }
    }
    let total: f64 = cands.iter().map(|c| c.1).sum::<f64>() + char_freq.values().sum::<f64>();
    let mut logp: HashMap<String, f64> = HashMap::new();
    for (p, n) in cands {
        logp.insert(p.to_string(), (n / total).ln());
    }
    for (c, n) in &char_freq {
        logp.insert(c.clone(), (n / total).ln());
    }
    let words: Vec<(String, f64)> = freq.into_iter().collect();
    let tie_salt = SeededRng::new(opts.seed).next_u64();

    loop {
        for _ in 0..opts.em_iterations.max(1) {
            em_step(&words, &mut logp, max_chars, &chars);
        }
        if logp.len() <= opts.vocab_size {
            break;
        }
        // Pieces whose removal costs the least likelihood go first.
        let lattice = Lattice { logp: &logp, max_chars };
        let mut scored: Vec<(String, f64, u64)> = logp
            .iter()
            .filter(|(p, _)| !chars.contains(*p))
            .map(|(p, &lp)| {
                let alt = lattice.alternative(p);
                let loss = lp.exp() * (lp - alt);
                (p.clone(), loss, tie_key(p, tie_salt))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.cmp(&b.2)).then_with(|| a.0.cmp(&b.0)));
        let target = ((logp.len() as f64 * opts.shrink) as usize).max(opts.vocab_size);
        let keep_extra = target.saturating_sub(chars.len());
        let drop: Vec<String> = scored.into_iter().skip(keep_extra).map(|s| s.0).collect();
        for p in drop {
            logp.remove(&p);
        }
    }

    let mut pieces: Vec<(String, f64)> = logp.into_iter().collect();
    pieces.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let total: f64 = pieces.iter().map(|p| p.1.exp()).sum();
    for p in &mut pieces {
        p.1 -= total.ln();
    }
    Ok(SubwordModel::from_pieces(pieces))
}

fn tie_key(piece: &str, salt: u64) -> u64 {
    let d = Sha256::new().chain_update(salt.to_le_bytes()).chain_update(piece.as_bytes()).finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// BLEU over subword pieces of both sides.
pub fn spbleu<S: AsRef<str>>(hyps: &[S], refs: &[S], model: &SubwordModel) -> Result<BleuScore, MetricError> {
    let h: Vec<Vec<String>> = hyps.iter().map(|l| model.segment(l.as_ref())).collect();
    let r: Vec<Vec<String>> = refs.iter().map(|l| model.segment(l.as_ref())).collect();
    bleu(&h, &r, BleuMode::Corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_word_is_one_piece() {
        let lines = vec!["hello hello hello"; 20];
        let m = train_subword(&lines, &SubwordOptions { vocab_size: 10, ..Default::default() }).unwrap();
        assert_eq!(m.segment("hello"), vec!["\u{2581}hello"]);
    }

    #[test]
    fn fallback_and_lossless() {
        let lines = ["the cat sat", "the cats sat down", "a dog"];
        let m = train_subword(&lines, &SubwordOptions { vocab_size: 40, ..Default::default() }).unwrap();
        let seg = m.segment("the zebra sat");
        assert!(seg.iter().any(|p| p == "z"));
        assert_eq!(m.detokenize(&seg), "the zebra sat");
        let sum: f64 = m.pieces().iter().map(|p| p.1.exp()).sum();
        assert!(sum <= 1.0 + 1e-9);
    }

    #[test]
    fn vocab_too_small() {
        let r = train_subword(&["abcdef"], &SubwordOptions { vocab_size: 3, ..Default::default() });
        assert_eq!(r, Err(MetricError::VocabTooSmall { needed: 7, requested: 3 }));
    }

    #[test]
    fn text_round_trip() {
        let m = train_subword(&["in the beginning", "the word"], &SubwordOptions { vocab_size: 30, ..Default::default() }).unwrap();
        let back = SubwordModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back.segment("the beginning word"), m.segment("the beginning word"));
        assert_eq!(back.hash(), m.hash());
        assert!(SubwordModel::from_text(&SubwordModel::whitespace().to_text()).unwrap().is_whitespace());
    }
}
