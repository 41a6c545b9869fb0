use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_lengths, MetricError};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BleuMode {
    /// Pooled clipped counts; any zero precision gives 0. Orders the
    /// hypotheses are too short to contain are left out of the mean.
    Corpus,
    /// Add-one smoothing on orders 2..4, for per-verse distributions.
    Smoothed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
}

fn ngram_counts<'a, S: AsRef<str>>(tokens: &'a [S], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped matches and hypothesis n-gram totals per order.
fn sentence_stats<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> ([usize; MAX_ORDER], [usize; MAX_ORDER]) {
    let mut matches = [0; MAX_ORDER];
    let mut totals = [0; MAX_ORDER];
    for n in 1..=MAX_ORDER {
        let h = ngram_counts(hyp, n);
        let r = ngram_counts(reference, n);
        matches[n - 1] = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
        totals[n - 1] = hyp.len().saturating_sub(n - 1);
    }
    (matches, totals)
}

pub fn bleu<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>], mode: BleuMode) -> Result<BleuScore, MetricError> {
    check_lengths(hyps, refs)?;
    if let Some(i) = refs.iter().position(|r| r.is_empty()) {
        return Err(MetricError::EmptyReference(i));
    }
    let mut matches = [0; MAX_ORDER];
    let mut totals = [0; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (h, r) in hyps.iter().zip(refs) {
        let (m, t) = sentence_stats(h, r);
        for n in 0..MAX_ORDER {
            matches[n] += m[n];
            totals[n] += t[n];
        }
        hyp_len += h.len();
        ref_len += r.len();
    }
    let mut precisions = [0.0; MAX_ORDER];
    for n in 0..MAX_ORDER {
        precisions[n] = match mode {
            BleuMode::Smoothed if n > 0 => (matches[n] + 1) as f64 / (totals[n] + 1) as f64,
            _ if totals[n] == 0 => 0.0,
            _ => matches[n] as f64 / totals[n] as f64,
        };
    }
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    // An order with no hypothesis n-grams at all has an undefined precision.
    let used = match mode {
        BleuMode::Corpus => totals.iter().take_while(|&&t| t > 0).count(),
        BleuMode::Smoothed => MAX_ORDER,
    };
    let score = if used == 0 || precisions[..used].iter().any(|&p| p == 0.0) {
        0.0
    } else {
        let log_mean = precisions[..used].iter().map(|p| p.ln()).sum::<f64>() / used as f64;
        (100.0 * brevity_penalty * log_mean.exp()).min(100.0)
    };
    Ok(BleuScore { score, precisions, brevity_penalty, hyp_len, ref_len, matches, totals })
}

/// Smoothed BLEU of a single verse.
pub fn sentence_bleu<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> f64 {
    let h: Vec<&str> = hyp.iter().map(AsRef::as_ref).collect();
    let r: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    bleu(&[h], &[r], BleuMode::Smoothed).map_or(0.0, |b| b.score)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identity_and_clipping() {
        let r = vec![toks("the cat sat on the mat"), toks("a b c d")];
        assert_eq!(bleu(&r, &r, BleuMode::Corpus).unwrap().score, 100.0);
        let b = bleu(&[toks("the the the")], &[toks("the cat")], BleuMode::Corpus).unwrap();
        assert!((b.precisions[0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(b.precisions[1], 0.0);
        assert_eq!(b.score, 0.0);
        let short = vec![toks("the cat")];
        assert_eq!(bleu(&short, &short, BleuMode::Corpus).unwrap().score, 100.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            bleu(&[toks("a")], &[toks("a"), toks("b")], BleuMode::Corpus),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert_eq!(bleu(&[toks("a")], &[vec![]], BleuMode::Corpus), Err(MetricError::EmptyReference(0)));
        assert_eq!(bleu::<&str>(&[], &[], BleuMode::Corpus), Err(MetricError::EmptyInput));
    }
}
