use std::collections::BTreeSet;

use super::hmm::{train_hmm, HmmAlignModel, HmmOptions, JUMP_BUCKETS};
use super::ibm1::{train_ibm1, Ibm1Model};
use super::ibm2::{Ibm2DiagModel, NullPrior};
use super::lexicon::{Lexicon, TTable};
use super::{map_chunks, AlignError, TokenizedCorpus, Vocab};

/// Posterior link probabilities for one sentence pair. Column `j` holds the
/// empty word at index 0 followed by source positions `1..=l`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix {
    src_len: usize,
    tgt_len: usize,
    probs: Vec<f64>,
}

impl AlignmentMatrix {
    pub fn zeros(src_len: usize, tgt_len: usize) -> AlignmentMatrix {
        AlignmentMatrix { src_len, tgt_len, probs: vec![0.0; (src_len + 1) * tgt_len] }
    }

    pub fn src_len(&self) -> usize {
        self.src_len
    }

    pub fn tgt_len(&self) -> usize {
        self.tgt_len
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let w = self.src_len + 1;
        &self.probs[j * w..(j + 1) * w]
    }

    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [f64] {
        let w = self.src_len + 1;
        &mut self.probs[j * w..(j + 1) * w]
    }

    /// P(target `j` links to source `i`), `None` for the empty word.
    pub fn link(&self, i: Option<usize>, j: usize) -> f64 {
        self.column(j)[i.map_or(0, |i| i + 1)]
    }

    /// Best source position per target word, skipping words whose best
    /// link is the empty word. Pairs are (source, target), 0-based.
    pub fn argmax_links(&self) -> Vec<(usize, usize)> {
        (0..self.tgt_len)
            .filter_map(|j| {
                let col = self.column(j);
                let best = (1..col.len()).fold(0, |b, i| if col[i] > col[b] { i } else { b });
                (best > 0).then(|| (best - 1, j))
            })
            .collect()
    }

    /// Geometric mean over target words of the largest link probability to
    /// a real source word.
    pub fn confidence(&self) -> f64 {
        let total: f64 = (0..self.tgt_len)
            .map(|j| self.column(j)[1..].iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE).ln())
            .sum();
        (total / self.tgt_len as f64).exp()
    }
}

pub trait AlignModel: Sync {
    fn lexicon(&self) -> &Lexicon;
    fn posteriors(&self, src: &[u32], tgt: &[u32]) -> Result<AlignmentMatrix, AlignError>;
    /// Best alignment as (source, target) links, 0-based.
    fn viterbi(&self, src: &[u32], tgt: &[u32]) -> Vec<(usize, usize)>;
    fn log_likelihood(&self, corpus: &TokenizedCorpus) -> f64;
}

impl AlignModel for Ibm1Model {
    fn lexicon(&self) -> &Lexicon {
        &self.lex
    }

    fn posteriors(&self, src: &[u32], tgt: &[u32]) -> Result<AlignmentMatrix, AlignError> {
        if src.is_empty() || tgt.is_empty() {
            return Err(AlignError::EmptySentence);
        }
        let mut mat = AlignmentMatrix::zeros(src.len(), tgt.len());
        for (j, &f) in tgt.iter().enumerate() {
            let col = mat.column_mut(j);
            col[0] = self.lex.prob(None, f);
            for (i, &e) in src.iter().enumerate() {
                col[i + 1] = self.lex.prob(Some(e), f);
            }
            let z: f64 = col.iter().sum();
            col.iter_mut().for_each(|v| *v /= z);
        }
        Ok(mat)
    }

    fn viterbi(&self, src: &[u32], tgt: &[u32]) -> Vec<(usize, usize)> {
        self.posteriors(src, tgt).map(|m| m.argmax_links()).unwrap_or_default()
    }

    fn log_likelihood(&self, corpus: &TokenizedCorpus) -> f64 {
        Ibm1Model::log_likelihood(self, corpus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SymmetricScore {
    pub score: f64,
    /// Source-to-target and target-to-source scores.
    pub forward: f64,
    pub backward: f64,
}

fn direction_score(model: &dyn AlignModel, corpus: &TokenizedCorpus) -> f64 {
    let parts = map_chunks(&corpus.pairs, |chunk| {
        chunk
            .iter()
            .map(|p| model.posteriors(&p.src, &p.tgt).map_or(0.0, |m| m.confidence()))
            .sum::<f64>()
    });
    parts.iter().sum::<f64>() / corpus.len() as f64
}

/// Mean per-verse confidence in each direction, averaged. `backward` must be
/// trained on `corpus.reversed()`.
pub fn corpus_alignment_score(
    forward: &dyn AlignModel,
    backward: &dyn AlignModel,
    corpus: &TokenizedCorpus,
) -> Result<SymmetricScore, AlignError> {
    if corpus.is_empty() {
        return Err(AlignError::EmptyCorpus);
    }
    let f = direction_score(forward, corpus);
    let b = direction_score(backward, &corpus.reversed());
    Ok(SymmetricScore { score: (f + b) / 2.0, forward: f, backward: b })
}

/// Train IBM1 then HMM in both directions and score the pair.
pub fn score_pair(corpus: &TokenizedCorpus, ibm1_iterations: usize, hmm: HmmOptions) -> Result<SymmetricScore, AlignError> {
    let rev = corpus.reversed();
    let train = |c: &TokenizedCorpus| -> Result<HmmAlignModel, AlignError> {
        let init = train_ibm1(c, ibm1_iterations)?.model;
        Ok(train_hmm(c, &init, hmm)?.model)
    };
    let f = train(corpus)?;
    let b = train(&rev)?;
    corpus_alignment_score(&f, &b, corpus)
}

/// Links as `i-j` pairs separated by spaces.
pub fn pharaoh(links: &[(usize, usize)]) -> String {
    links.iter().map(|(i, j)| format!("{i}-{j}")).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetrization {
    Intersection,
    Union,
    GrowDiagFinalAnd,
}

/// Combine source-to-target links with links from the reverse model, whose
/// pairs are (target, source).
pub fn symmetrize(forward: &[(usize, usize)], reverse: &[(usize, usize)], how: Symmetrization) -> Vec<(usize, usize)> {
    let f: BTreeSet<(usize, usize)> = forward.iter().copied().collect();
    let r: BTreeSet<(usize, usize)> = reverse.iter().map(|&(j, i)| (i, j)).collect();
    match how {
        Symmetrization::Intersection => f.intersection(&r).copied().collect(),
        Symmetrization::Union => f.union(&r).copied().collect(),
        Symmetrization::GrowDiagFinalAnd => {
            let union: BTreeSet<_> = f.union(&r).copied().collect();
            let mut a: BTreeSet<_> = f.intersection(&r).copied().collect();
            let src_aligned = |a: &BTreeSet<(usize, usize)>, i| a.iter().any(|&(x, _)| x == i);
            let tgt_aligned = |a: &BTreeSet<(usize, usize)>, j| a.iter().any(|&(_, y)| y == j);
            loop {
                let mut added = false;
                for &(i, j) in a.clone().iter() {
                    for (di, dj) in [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)] {
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 {
                            continue;
                        }
                        let p = (ni as usize, nj as usize);
                        if union.contains(&p) && !a.contains(&p) && (!src_aligned(&a, p.0) || !tgt_aligned(&a, p.1)) {
                            a.insert(p);
                            added = true;
                        }
                    }
                }
                if !added {
                    break;
                }
            }
            for set in [&f, &r] {
                for &p in set {
                    if !a.contains(&p) && !src_aligned(&a, p.0) && !tgt_aligned(&a, p.1) {
                        a.insert(p);
                    }
                }
            }
            a.into_iter().collect()
        }
    }
}

/// Any trained model, for storage.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Ibm1(Ibm1Model),
    Hmm(HmmAlignModel),
    Ibm2(Ibm2DiagModel),
}

const MODEL_HEADER: &str = "versekit-align-model 1";

impl AnyModel {
    pub fn as_model(&self) -> &dyn AlignModel {
        match self {
            AnyModel::Ibm1(m) => m,
            AnyModel::Hmm(m) => m,
            AnyModel::Ibm2(m) => m,
        }
    }

    /// Line-oriented dump. Floats use the shortest form that parses back to
    /// the same value, so the round trip is exact.
    pub fn to_text(&self) -> String {
        let lex = self.as_model().lexicon();
        let mut out = format!("{MODEL_HEADER}\n");
        let kind = match self {
            AnyModel::Ibm1(_) => "ibm1",
            AnyModel::Hmm(_) => "hmm",
            AnyModel::Ibm2(_) => "ibm2-diag",
        };
        out.push_str(&format!("kind\t{kind}\n"));
        for (name, v) in [("source", &lex.source), ("target", &lex.target)] {
            out.push_str(&format!("{name}\t{}\n", v.len()));
            for w in v.words() {
                out.push_str(w);
                out.push('\n');
            }
        }
        out.push_str(&format!("t\t{}\n", lex.t.len()));
        for row in 0..lex.t.rows() {
            let (ts, ps) = lex.t.row(row);
            for (t, p) in ts.iter().zip(ps) {
                out.push_str(&format!("{row}\t{t}\t{p:?}\n"));
            }
        }
        match self {
            AnyModel::Ibm1(_) => {}
            AnyModel::Hmm(m) => {
                let j: Vec<String> = m.jump.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&format!("jump\t{}\n", j.join("\t")));
                out.push_str(&format!("p0\t{:?}\n", m.p0));
            }
            AnyModel::Ibm2(m) => {
                out.push_str(&format!("lambda\t{:?}\n", m.lambda));
                match m.null_prior {
                    NullPrior::Fixed(p) => out.push_str(&format!("null_prior\tfixed\t{p:?}\n")),
                    NullPrior::Uniform => out.push_str("null_prior\tuniform\n"),
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<AnyModel, AlignError> {
        let mut lines = text.lines().enumerate().peekable();
        let mut next = |what: &str| -> Result<(usize, &str), AlignError> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l))
                .ok_or(AlignError::ModelFormat { line: 0, message: format!("missing {what}") })
        };
        let bad = |line: usize, message: String| AlignError::ModelFormat { line, message };
        let (n, header) = next("header")?;
        if header != MODEL_HEADER {
            return Err(bad(n, "unrecognised header".into()));
        }
        let field = |n: usize, line: &str, name: &str| -> Result<Vec<String>, AlignError> {
            let mut parts = line.split('\t');
            if parts.next() != Some(name) {
                return Err(bad(n, format!("expected {name}")));
            }
            Ok(parts.map(String::from).collect())
        };
        let num = |n: usize, s: &str| -> Result<f64, AlignError> { s.parse().map_err(|_| bad(n, format!("bad number {s:?}"))) };
        let int = |n: usize, s: &str| -> Result<usize, AlignError> { s.parse().map_err(|_| bad(n, format!("bad count {s:?}"))) };

        let (n, l) = next("kind")?;
        let kind = field(n, l, "kind")?.into_iter().next().unwrap_or_default();
        let mut vocabs = Vec::new();
        for name in ["source", "target"] {
            let (n, l) = next(name)?;
            let count = int(n, field(n, l, name)?.first().map(String::as_str).unwrap_or(""))?;
            let mut words = Vec::with_capacity(count);
            for _ in 0..count {
                words.push(next("word")?.1.to_string());
            }
            vocabs.push(Vocab::from_words(words));
        }
        let target_vocab = vocabs.pop().expect("two vocabularies");
        let source_vocab = vocabs.pop().expect("two vocabularies");
        let (n, l) = next("t")?;
        let entries = int(n, field(n, l, "t")?.first().map(String::as_str).unwrap_or(""))?;
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); source_vocab.len() + 1];
        for _ in 0..entries {
            let (n, l) = next("t entry")?;
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() != 3 {
                return Err(bad(n, "expected row, target, probability".into()));
            }
            let row = int(n, cols[0])?;
            let t = int(n, cols[1])?;
            if row >= rows.len() || t >= target_vocab.len() {
                return Err(bad(n, "index out of range".into()));
            }
            rows[row].push((t as u32, num(n, cols[2])?));
        }
        let lex = Lexicon { source: source_vocab, target: target_vocab, t: TTable::from_rows(rows) };
        let model = match kind.as_str() {
            "ibm1" => AnyModel::Ibm1(Ibm1Model { lex }),
            "hmm" => {
                let (n, l) = next("jump")?;
                let vals = field(n, l, "jump")?;
                if vals.len() != JUMP_BUCKETS {
                    return Err(bad(n, format!("expected {JUMP_BUCKETS} jump values")));
                }
                let mut jump = [0.0; JUMP_BUCKETS];
                for (d, v) in jump.iter_mut().zip(&vals) {
                    *d = num(n, v)?;
                }
                let (n, l) = next("p0")?;
                let p0 = num(n, field(n, l, "p0")?.first().map(String::as_str).unwrap_or(""))?;
                AnyModel::Hmm(HmmAlignModel { lex, jump, p0 })
            }
            "ibm2-diag" => {
                let (n, l) = next("lambda")?;
                let lambda = num(n, field(n, l, "lambda")?.first().map(String::as_str).unwrap_or(""))?;
                let (n, l) = next("null_prior")?;
                let np = field(n, l, "null_prior")?;
                let null_prior = match np.first().map(String::as_str) {
                    Some("uniform") => NullPrior::Uniform,
                    Some("fixed") => NullPrior::Fixed(num(n, np.get(1).map(String::as_str).unwrap_or(""))?),
                    _ => return Err(bad(n, "bad null prior".into())),
                };
                AnyModel::Ibm2(Ibm2DiagModel { lex, lambda, null_prior })
            }
            other => return Err(bad(2, format!("unknown model kind {other:?}"))),
        };
        Ok(model)
    }
}
