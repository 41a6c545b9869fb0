use std::collections::BTreeMap;

use super::lexicon::Lexicon;
use super::score::{AlignModel, AlignmentMatrix};
use super::{add_counts, check_corpus, map_chunks, AlignError, SentencePair, SlotCounts, TokenizedCorpus, Trained};

pub const LAMBDA_MIN: f64 = 0.1;
pub const LAMBDA_MAX: f64 = 14.0;

/// Prior weight of the empty source word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullPrior {
    Fixed(f64),
    /// 1 / (l + 1), the same weight as each source word under a flat prior.
    Uniform,
}

impl NullPrior {
    fn weight(self, l: usize) -> f64 {
        match self {
            NullPrior::Fixed(p) => p,
            NullPrior::Uniform => 1.0 / (l + 1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ibm2Options {
    pub iterations: usize,
    pub null_prior: NullPrior,
    pub lambda: f64,
    /// Re-estimate lambda after each iteration.
    pub optimize_lambda: bool,
}

impl Default for Ibm2Options {
    fn default() -> Self {
        Ibm2Options { iterations: 5, null_prior: NullPrior::Fixed(0.08), lambda: 4.0, optimize_lambda: true }
    }
}

/// IBM Model 2 with a diagonal alignment prior: source position `i` of `l`
/// gets weight proportional to `exp(-lambda * |i/l - j/m|)` for target
/// position `j` of `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ibm2DiagModel {
    pub lex: Lexicon,
    pub lambda: f64,
    pub null_prior: NullPrior,
}

fn dist(i: usize, j: usize, l: usize, m: usize) -> f64 {
    (i as f64 / l as f64 - j as f64 / m as f64).abs()
}

/// Real-position prior weights for target position `j` (1-based).
fn diag_weights(lambda: f64, j: usize, l: usize, m: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend((1..=l).map(|i| (-lambda * dist(i, j, l, m)).exp()));
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w /= z);
}

fn log_z(lambda: f64, j: usize, l: usize, m: usize) -> f64 {
    (1..=l).map(|i| (-lambda * dist(i, j, l, m)).exp()).sum::<f64>().ln()
}

impl Ibm2DiagModel {
    /// Column-normalised link weights for one pair, NULL first.
    fn link_weights(&self, src: &[u32], tgt: &[u32]) -> (AlignmentMatrix, Vec<f64>) {
        let (l, m) = (src.len(), tgt.len());
        let p_null = self.null_prior.weight(l);
        let mut mat = AlignmentMatrix::zeros(l, m);
        let mut norms = Vec::with_capacity(m);
        let mut w = Vec::with_capacity(l);
        for (j, &f) in tgt.iter().enumerate() {
            diag_weights(self.lambda, j + 1, l, m, &mut w);
            let col = mat.column_mut(j);
            col[0] = p_null * self.lex.prob(None, f);
            for (i, &e) in src.iter().enumerate() {
                col[i + 1] = (1.0 - p_null) * w[i] * self.lex.prob(Some(e), f);
            }
            let z: f64 = col.iter().sum();
            col.iter_mut().for_each(|v| *v /= z);
            norms.push(z);
        }
        (mat, norms)
    }

    pub fn log_likelihood(&self, corpus: &TokenizedCorpus) -> f64 {
        corpus
            .pairs
            .iter()
            .map(|p| self.link_weights(&p.src, &p.tgt).1.iter().map(|z| z.ln()).sum::<f64>())
            .sum()
    }
}

#[derive(Default)]
struct DiagStats {
    t: SlotCounts,
    ll: f64,
    /// Expected distance under the posterior.
    h: f64,
    /// Posterior mass on real positions by (l, m, j).
    mass: BTreeMap<(usize, usize, usize), f64>,
}

fn estep(model: &Ibm2DiagModel, pairs: &[SentencePair]) -> DiagStats {
    let mut st = DiagStats::default();
    for p in pairs {
        let (l, m) = (p.src.len(), p.tgt.len());
        let (mat, norms) = model.link_weights(&p.src, &p.tgt);
        st.ll += norms.iter().map(|z| z.ln()).sum::<f64>();
        for (j, &f) in p.tgt.iter().enumerate() {
            let col = mat.column(j);
            *st.t.entry(model.lex.t.slot(0, f).expect("co-occurring pair")).or_default() += col[0];
            let mut real = 0.0;
            for (i, &e) in p.src.iter().enumerate() {
                let g = col[i + 1];
                *st.t.entry(model.lex.t.slot(e as usize + 1, f).expect("co-occurring pair")).or_default() += g;
                st.h += g * dist(i + 1, j + 1, l, m);
                real += g;
            }
            *st.mass.entry((l, m, j + 1)).or_default() += real;
        }
    }
    st
}

/// Expected log prior over real positions as a function of lambda. Concave.
fn q_lambda(lambda: f64, h: f64, mass: &BTreeMap<(usize, usize, usize), f64>) -> f64 {
    -lambda * h - mass.iter().map(|(&(l, m, j), g)| g * log_z(lambda, j, l, m)).sum::<f64>()
}

/// First and second derivative of `q_lambda`.
fn q_derivs(lambda: f64, h: f64, mass: &BTreeMap<(usize, usize, usize), f64>) -> (f64, f64) {
    let mut d1 = -h;
    let mut d2 = 0.0;
    let mut w = Vec::new();
    for (&(l, m, j), &g) in mass {
        diag_weights(lambda, j, l, m, &mut w);
        let mean: f64 = w.iter().enumerate().map(|(i, p)| p * dist(i + 1, j, l, m)).sum();
        let sq: f64 = w.iter().enumerate().map(|(i, p)| p * dist(i + 1, j, l, m).powi(2)).sum();
        d1 += g * mean;
        d2 -= g * (sq - mean * mean);
    }
    (d1, d2)
}

/// Damped Newton ascent on a concave objective, accepting only steps that
/// do not lower it. This is a generalised M-step: the likelihood still
/// cannot decrease.
fn update_lambda(lambda: f64, h: f64, mass: &BTreeMap<(usize, usize, usize), f64>) -> f64 {
    let mut cur = lambda.clamp(LAMBDA_MIN, LAMBDA_MAX);
    let mut q = q_lambda(cur, h, mass);
    if q_lambda(lambda, h, mass) > q {
        cur = lambda;
        q = q_lambda(lambda, h, mass);
    }
    for _ in 0..8 {
        let (d1, d2) = q_derivs(cur, h, mass);
        if d1.abs() < 1e-12 {
            break;
        }
        let mut step = if d2 < -1e-12 { -d1 / d2 } else { d1.signum() };
        let mut moved = false;
        for _ in 0..30 {
            let cand = (cur + step).clamp(LAMBDA_MIN, LAMBDA_MAX);
            let qc = q_lambda(cand, h, mass);
            if qc >= q && cand != cur {
                cur = cand;
                q = qc;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    cur
}

pub fn train_fast_align(corpus: &TokenizedCorpus, opts: Ibm2Options) -> Result<Trained<Ibm2DiagModel>, AlignError> {
    check_corpus(corpus, opts.iterations)?;
    let mut model = Ibm2DiagModel { lex: Lexicon::from_corpus(corpus), lambda: opts.lambda.max(0.0), null_prior: opts.null_prior };
    let mut trace = Vec::with_capacity(opts.iterations + 1);
    for _ in 0..opts.iterations {
        let parts = map_chunks(&corpus.pairs, |chunk| estep(&model, chunk));
        let mut dense = vec![0.0; model.lex.t.len()];
        let mut ll = 0.0;
        let mut h = 0.0;
        let mut mass: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for st in &parts {
            add_counts(&mut dense, &st.t);
            ll += st.ll;
            h += st.h;
            for (k, g) in &st.mass {
                *mass.entry(*k).or_default() += g;
            }
        }
        trace.push(ll);
        model.lex.t.normalize_from(&dense);
        if opts.optimize_lambda {
            model.lambda = update_lambda(model.lambda, h, &mass);
        }
    }
    trace.push(model.log_likelihood(corpus));
    Ok(Trained { model, log_likelihood: trace })
}

impl AlignModel for Ibm2DiagModel {
    fn lexicon(&self) -> &Lexicon {
        &self.lex
    }

    fn posteriors(&self, src: &[u32], tgt: &[u32]) -> Result<AlignmentMatrix, AlignError> {
        if src.is_empty() || tgt.is_empty() {
            return Err(AlignError::EmptySentence);
        }
        Ok(self.link_weights(src, tgt).0)
    }

    fn viterbi(&self, src: &[u32], tgt: &[u32]) -> Vec<(usize, usize)> {
        if src.is_empty() || tgt.is_empty() {
            return Vec::new();
        }
        self.link_weights(src, tgt).0.argmax_links()
    }

    fn log_likelihood(&self, corpus: &TokenizedCorpus) -> f64 {
        Ibm2DiagModel::log_likelihood(self, corpus)
    }
}
