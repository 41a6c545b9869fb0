use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_lengths, MetricError};

pub const CHRF_ORDER: usize = 6;
pub const CHRF_BETA: f64 = 3.0;

/// Pooled character n-gram counts per order: (hypothesis, reference, matches).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChrfStats {
    pub hyp: [usize; CHRF_ORDER],
    pub reference: [usize; CHRF_ORDER],
    pub matches: [usize; CHRF_ORDER],
}

impl ChrfStats {
    pub fn add(&mut self, other: &ChrfStats) {
        for n in 0..CHRF_ORDER {
            self.hyp[n] += other.hyp[n];
            self.reference[n] += other.reference[n];
            self.matches[n] += other.matches[n];
        }
    }

    /// Mean F-beta over orders that occur on both sides, times 100.
    pub fn score(&self) -> f64 {
        let b2 = CHRF_BETA * CHRF_BETA;
        let mut total = 0.0;
        let mut orders = 0;
        for n in 0..CHRF_ORDER {
            if self.hyp[n] == 0 || self.reference[n] == 0 {
                continue;
            }
            orders += 1;
            let p = self.matches[n] as f64 / self.hyp[n] as f64;
            let r = self.matches[n] as f64 / self.reference[n] as f64;
            if p + r > 0.0 {
                total += (1.0 + b2) * p * r / (b2 * p + r);
            }
        }
        if orders == 0 {
            0.0
        } else {
            100.0 * total / orders as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfScore {
    pub score: f64,
    pub n_max: usize,
    pub beta: f64,
    pub stats: ChrfStats,
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut m = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Counts for one pair. Whitespace is dropped before n-gram extraction.
pub fn chrf_stats(hyp: &str, reference: &str) -> ChrfStats {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let mut st = ChrfStats::default();
    for n in 1..=CHRF_ORDER {
        let hg = char_ngrams(&h, n);
        let rg = char_ngrams(&r, n);
        st.hyp[n - 1] = h.len().saturating_sub(n - 1);
        st.reference[n - 1] = r.len().saturating_sub(n - 1);
        st.matches[n - 1] = hg.iter().map(|(g, &c)| c.min(rg.get(g).copied().unwrap_or(0))).sum();
    }
    st
}

/// Corpus chrF3 from pooled counts.
pub fn chrf3<S: AsRef<str>>(hyps: &[S], refs: &[S]) -> Result<ChrfScore, MetricError> {
    check_lengths(hyps, refs)?;
    let mut stats = ChrfStats::default();
    for (i, (h, r)) in hyps.iter().zip(refs).enumerate() {
        if r.as_ref().trim().is_empty() {
            return Err(MetricError::EmptyReference(i));
        }
        stats.add(&chrf_stats(h.as_ref(), r.as_ref()));
    }
    Ok(ChrfScore { score: stats.score(), n_max: CHRF_ORDER, beta: CHRF_BETA, stats })
}
