use super::ibm1::Ibm1Model;
use super::lexicon::Lexicon;
use super::score::{AlignModel, AlignmentMatrix};
use super::{add_counts, check_corpus, map_chunks, AlignError, SentencePair, SlotCounts, TokenizedCorpus, Trained};

/// Jumps beyond this distance share the outermost bucket.
pub const MAX_JUMP: i64 = 7;
pub const JUMP_BUCKETS: usize = (2 * MAX_JUMP + 1) as usize;

/// Jump-table index for a move of `d` source positions.
pub fn jump_bucket(d: i64) -> usize {
    (d.clamp(-MAX_JUMP, MAX_JUMP) + MAX_JUMP) as usize
}

/// First-order HMM alignment model.
///
/// From source position `k` (0 is the start), the next target word is
/// generated by the empty word with probability `p0`, staying at `k`, or by
/// source word `i` with weight `(1 - p0) * jump[jump_bucket(i - k)]`, divided
/// by the number of positions sharing a tail bucket. Jumps that leave the
/// sentence lose their mass instead of being renormalised per sentence, which
/// keeps the M-step a plain normalisation of expected counts.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmAlignModel {
    pub lex: Lexicon,
    pub jump: [f64; JUMP_BUCKETS],
    pub p0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmmOptions {
    pub iterations: usize,
    /// Starting empty-word probability. Jump weights start flat, so a short
    /// sentence reaches only a few of them; a large value here lets the empty
    /// word absorb such sentences for good.
    pub p0: f64,
}

impl Default for HmmOptions {
    fn default() -> Self {
        HmmOptions { iterations: 5, p0: 0.05 }
    }
}

struct Emissions {
    null: Vec<f64>,
    /// Row-major m x l.
    real: Vec<f64>,
}

impl HmmAlignModel {
    fn emissions(&self, src: &[u32], tgt: &[u32]) -> Emissions {
        let l = src.len();
        let mut real = Vec::with_capacity(tgt.len() * l);
        for &f in tgt {
            real.extend(src.iter().map(|&e| self.lex.prob(Some(e), f)));
        }
        Emissions { null: tgt.iter().map(|&f| self.lex.prob(None, f)).collect(), real }
    }

    /// Probability of moving from position `from` (0 is the start) to real
    /// position `to` in a sentence of `l` source words. A tail bucket's
    /// weight is split evenly over the positions it covers.
    pub fn transition(&self, from: usize, to: usize, l: usize) -> f64 {
        let d = to as i64 - from as i64;
        let share = if d >= MAX_JUMP {
            (l as i64 - from as i64 - MAX_JUMP + 1) as f64
        } else if d <= -MAX_JUMP {
            (from as i64 - MAX_JUMP) as f64
        } else {
            1.0
        };
        (1.0 - self.p0) * self.jump[jump_bucket(d)] / share
    }

    /// Row-major (l + 1) x l table of `transition(k, i)`, i stored at i - 1.
    fn transitions(&self, l: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity((l + 1) * l);
        for k in 0..=l {
            t.extend((1..=l).map(|i| self.transition(k, i, l)));
        }
        t
    }

    /// Scaled forward-backward. Returns per-step posteriors over real
    /// positions (m x l, 1-based positions stored at 0..l) and over empty-word
    /// states (m x (l + 1)), plus the scale factors.
    fn forward_backward(&self, src: &[u32], tgt: &[u32]) -> FwdBwd {
        let l = src.len();
        let m = tgt.len();
        let em = self.emissions(src, tgt);
        let tr = self.transitions(l);
        let mut ar = vec![0.0; m * l];
        let mut an = vec![0.0; m * (l + 1)];
        let mut scale = vec![0.0; m];
        let mut prev = vec![0.0; l + 1];
        prev[0] = 1.0;
        for j in 0..m {
            let mut c = 0.0;
            for i in 1..=l {
                let s: f64 = (0..=l).map(|k| prev[k] * tr[k * l + i - 1]).sum();
                let v = em.real[j * l + i - 1] * s;
                ar[j * l + i - 1] = v;
                c += v;
            }
            for k in 0..=l {
                let v = em.null[j] * self.p0 * prev[k];
                an[j * (l + 1) + k] = v;
                c += v;
            }
            scale[j] = c;
            for v in &mut ar[j * l..(j + 1) * l] {
                *v /= c;
            }
            for v in &mut an[j * (l + 1)..(j + 1) * (l + 1)] {
                *v /= c;
            }
            for k in 0..=l {
                prev[k] = an[j * (l + 1) + k] + if k > 0 { ar[j * l + k - 1] } else { 0.0 };
            }
        }
        let mut beta = vec![1.0; m * (l + 1)];
        for j in (0..m.saturating_sub(1)).rev() {
            for k in 0..=l {
                let mut s = self.p0 * em.null[j + 1] * beta[(j + 1) * (l + 1) + k];
                for i in 1..=l {
                    s += tr[k * l + i - 1] * em.real[(j + 1) * l + i - 1] * beta[(j + 1) * (l + 1) + i];
                }
                beta[j * (l + 1) + k] = s / scale[j + 1];
            }
        }
        FwdBwd { l, m, em, tr, ar, an, beta, scale }
    }

    pub fn log_likelihood(&self, corpus: &TokenizedCorpus) -> f64 {
        corpus
            .pairs
            .iter()
            .map(|p| self.forward_backward(&p.src, &p.tgt).scale.iter().map(|c| c.ln()).sum::<f64>())
            .sum()
    }
}

struct FwdBwd {
    l: usize,
    m: usize,
    em: Emissions,
    tr: Vec<f64>,
    ar: Vec<f64>,
    an: Vec<f64>,
    beta: Vec<f64>,
    scale: Vec<f64>,
}

impl FwdBwd {
    fn gamma_real(&self, j: usize, i: usize) -> f64 {
        self.ar[j * self.l + i - 1] * self.beta[j * (self.l + 1) + i]
    }

    fn gamma_null(&self, j: usize, k: usize) -> f64 {
        self.an[j * (self.l + 1) + k] * self.beta[j * (self.l + 1) + k]
    }

    fn matrix(&self) -> AlignmentMatrix {
        let mut mat = AlignmentMatrix::zeros(self.l, self.m);
        for j in 0..self.m {
            let col = mat.column_mut(j);
            col[0] = (0..=self.l).map(|k| self.gamma_null(j, k)).sum();
            for i in 1..=self.l {
                col[i] = self.gamma_real(j, i);
            }
            let z: f64 = col.iter().sum();
            col.iter_mut().for_each(|v| *v /= z);
        }
        mat
    }
}

#[derive(Default)]
struct HmmStats {
    t: SlotCounts,
    ll: f64,
    jump: [f64; JUMP_BUCKETS],
    n_null: f64,
    n_real: f64,
}

fn estep(model: &HmmAlignModel, pairs: &[SentencePair]) -> HmmStats {
    let mut st = HmmStats::default();
    for p in pairs {
        let fb = model.forward_backward(&p.src, &p.tgt);
        let (l, m) = (fb.l, fb.m);
        st.ll += fb.scale.iter().map(|c| c.ln()).sum::<f64>();
        let mut prev = vec![0.0; l + 1];
        prev[0] = 1.0;
        for j in 0..m {
            let f = p.tgt[j];
            let mut null_mass = 0.0;
            for k in 0..=l {
                null_mass += fb.gamma_null(j, k);
            }
            *st.t.entry(model.lex.t.slot(0, f).expect("co-occurring pair")).or_default() += null_mass;
            st.n_null += null_mass;
            for i in 1..=l {
                let g = fb.gamma_real(j, i);
                let slot = model.lex.t.slot(p.src[i - 1] as usize + 1, f).expect("co-occurring pair");
                *st.t.entry(slot).or_default() += g;
                st.n_real += g;
                let w = fb.em.real[j * l + i - 1] * fb.beta[j * (l + 1) + i] / fb.scale[j];
                for k in 0..=l {
                    if prev[k] > 0.0 {
                        st.jump[jump_bucket(i as i64 - k as i64)] += prev[k] * fb.tr[k * l + i - 1] * w;
                    }
                }
            }
            for k in 0..=l {
                prev[k] = fb.an[j * (l + 1) + k] + if k > 0 { fb.ar[j * l + k - 1] } else { 0.0 };
            }
        }
    }
    st
}

pub fn train_hmm(corpus: &TokenizedCorpus, init: &Ibm1Model, opts: HmmOptions) -> Result<Trained<HmmAlignModel>, AlignError> {
    check_corpus(corpus, opts.iterations)?;
    if !init.lex.same_vocab(corpus) || !init.lex.t.same_layout(&super::lexicon::TTable::from_corpus(corpus)) {
        return Err(AlignError::VocabMismatch);
    }
    let mut model = HmmAlignModel { lex: init.lex.clone(), jump: [1.0 / JUMP_BUCKETS as f64; JUMP_BUCKETS], p0: opts.p0 };
    let mut trace = Vec::with_capacity(opts.iterations + 1);
    for _ in 0..opts.iterations {
        let parts = map_chunks(&corpus.pairs, |chunk| estep(&model, chunk));
        let mut dense = vec![0.0; model.lex.t.len()];
        let mut jump = [0.0; JUMP_BUCKETS];
        let (mut ll, mut n_null, mut n_real) = (0.0, 0.0, 0.0);
        for st in &parts {
            add_counts(&mut dense, &st.t);
            ll += st.ll;
            n_null += st.n_null;
            n_real += st.n_real;
            for (a, b) in jump.iter_mut().zip(&st.jump) {
                *a += b;
            }
        }
        trace.push(ll);
        model.lex.t.normalize_from(&dense);
        let total: f64 = jump.iter().sum();
        if total > 0.0 {
            for (dst, c) in model.jump.iter_mut().zip(&jump) {
                *dst = c / total;
            }
        }
        model.p0 = n_null / (n_null + n_real);
    }
    trace.push(model.log_likelihood(corpus));
    Ok(Trained { model, log_likelihood: trace })
}

impl AlignModel for HmmAlignModel {
    fn lexicon(&self) -> &Lexicon {
        &self.lex
    }

    fn posteriors(&self, src: &[u32], tgt: &[u32]) -> Result<AlignmentMatrix, AlignError> {
        if src.is_empty() || tgt.is_empty() {
            return Err(AlignError::EmptySentence);
        }
        Ok(self.forward_backward(src, tgt).matrix())
    }

    /// Most probable state sequence; links to the empty word are omitted.
    fn viterbi(&self, src: &[u32], tgt: &[u32]) -> Vec<(usize, usize)> {
        let (l, m) = (src.len(), tgt.len());
        if l == 0 || m == 0 {
            return Vec::new();
        }
        let em = self.emissions(src, tgt);
        let tr = self.transitions(l);
        let ln_p0 = self.p0.ln();
        // State ids: 0..=l empty word remembering position k, l+1..=2l real.
        let n = 2 * l + 1;
        let pos = |s: usize| if s <= l { s } else { s - l };
        let mut delta = vec![f64::NEG_INFINITY; n];
        let mut back = vec![0usize; m * n];
        delta[0] = 0.0;
        for j in 0..m {
            // Best predecessor at each position.
            let mut best = vec![(f64::NEG_INFINITY, 0usize); l + 1];
            for (s, &d) in delta.iter().enumerate() {
                let k = pos(s);
                if d > best[k].0 {
                    best[k] = (d, s);
                }
            }
            let mut next = vec![f64::NEG_INFINITY; n];
            for k in 0..=l {
                let (d, s) = best[k];
                next[k] = d + ln_p0 + em.null[j].ln();
                back[j * n + k] = s;
            }
            for i in 1..=l {
                let e = em.real[j * l + i - 1].ln();
                let mut arg = (f64::NEG_INFINITY, 0usize);
                for (k, &(d, s)) in best.iter().enumerate() {
                    let v = d + tr[k * l + i - 1].ln();
                    if v > arg.0 {
                        arg = (v, s);
                    }
                }
                next[l + i] = arg.0 + e;
                back[j * n + l + i] = arg.1;
            }
            delta = next;
        }
        let mut s = (0..n).fold(0, |b, s| if delta[s] > delta[b] { s } else { b });
        let mut links = Vec::new();
        for j in (0..m).rev() {
            if s > l {
                links.push((s - l - 1, j));
            }
            s = back[j * n + s];
        }
        links.reverse();
        links
    }

    fn log_likelihood(&self, corpus: &TokenizedCorpus) -> f64 {
        HmmAlignModel::log_likelihood(self, corpus)
    }
}
