use serde::{Deserialize, Serialize};

use super::{check_lengths, MetricError};

/// Furthest a block may move in one TER shift, in token positions.
pub const MAX_SHIFT_DISTANCE: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EditStats {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub shifts: usize,
    pub ref_len: usize,
    /// Edit operations plus shifts.
    pub edits: usize,
    /// `edits / ref_len`.
    pub rate: f64,
}

impl EditStats {
    fn finish(mut self) -> Self {
        self.edits = self.substitutions + self.insertions + self.deletions + self.shifts;
        self.rate = if self.ref_len == 0 { 0.0 } else { self.edits as f64 / self.ref_len as f64 };
        self
    }

    fn add(&mut self, o: &EditStats) {
        self.substitutions += o.substitutions;
        self.insertions += o.insertions;
        self.deletions += o.deletions;
        self.shifts += o.shifts;
        self.ref_len += o.ref_len;
    }
}

/// Token edit distance (unit costs).
pub fn levenshtein<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> usize {
    let mut prev: Vec<usize> = (0..=reference.len()).collect();
    let mut cur = vec![0; reference.len() + 1];
    for (i, h) in hyp.iter().enumerate() {
        cur[0] = i + 1;
        for (j, r) in reference.iter().enumerate() {
            let sub = prev[j] + usize::from(h.as_ref() != r.as_ref());
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[reference.len()]
}

/// Levenshtein with the operation breakdown recovered from the table.
fn edit_ops<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> EditStats {
    let (n, m) = (hyp.len(), reference.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(hyp[i - 1].as_ref() != reference[j - 1].as_ref());
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut st = EditStats { ref_len: m, ..Default::default() };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = hyp[i - 1].as_ref() == reference[j - 1].as_ref();
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                st.substitutions += usize::from(!same);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            // extra hypothesis token
            st.insertions += 1;
            i -= 1;
        } else {
            st.deletions += 1;
            j -= 1;
        }
    }
    st
}

pub fn wer<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Result<EditStats, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference(0));
    }
    Ok(edit_ops(hyp, reference).finish())
}

fn contains_block(reference: &[&str], block: &[&str]) -> bool {
    reference.windows(block.len()).any(|w| w == block)
}

/// Greedy TER shift search: apply the single block move that lowers the
/// edit distance most, until no move helps.
fn shift_greedy<'a>(hyp: &[&'a str], reference: &[&str]) -> (Vec<&'a str>, usize) {
    let mut h = hyp.to_vec();
    let mut shifts = 0;
    let mut cur = levenshtein(&h, reference);
    let mut cand = Vec::with_capacity(h.len());
    while cur > 0 {
        let n = h.len();
        let mut best: Option<(usize, usize, usize, usize)> = None;
        for s in 0..n {
            for len in 1..=n - s {
                let block = &h[s..s + len];
                if !contains_block(reference, block) {
                    break;
                }
                let lo = s.saturating_sub(MAX_SHIFT_DISTANCE);
                let hi = (s + MAX_SHIFT_DISTANCE).min(n - len);
                for p in lo..=hi {
                    if p == s {
                        continue;
                    }
                    cand.clear();
                    cand.extend_from_slice(&h[..s]);
                    cand.extend_from_slice(&h[s + len..]);
                    cand.splice(p..p, block.iter().copied());
                    let d = levenshtein(&cand, reference);
                    if d < cur && best.map_or(true, |b| d < b.0) {
                        best = Some((d, s, len, p));
                    }
                }
            }
        }
        let Some((d, s, len, p)) = best else { break };
        let block: Vec<&str> = h.drain(s..s + len).collect();
        h.splice(p..p, block);
        shifts += 1;
        cur = d;
    }
    (h, shifts)
}

pub fn ter<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Result<EditStats, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference(0));
    }
    let h: Vec<&str> = hyp.iter().map(AsRef::as_ref).collect();
    let r: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let (shifted, shifts) = shift_greedy(&h, &r);
    let mut st = edit_ops(&shifted, &r);
    st.shifts = shifts;
    Ok(st.finish())
}

fn corpus<S: AsRef<str>>(
    hyps: &[Vec<S>],
    refs: &[Vec<S>],
    one: fn(&[S], &[S]) -> Result<EditStats, MetricError>,
) -> Result<EditStats, MetricError> {
    check_lengths(hyps, refs)?;
    let mut total = EditStats::default();
    for (i, (h, r)) in hyps.iter().zip(refs).enumerate() {
        let st = one(h, r).map_err(|_| MetricError::EmptyReference(i))?;
        total.add(&st);
    }
    Ok(total.finish())
}

/// Pooled WER: total edits over total reference length.
pub fn corpus_wer<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<EditStats, MetricError> {
    corpus(hyps, refs, wer)
}

pub fn corpus_ter<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<EditStats, MetricError> {
    corpus(hyps, refs, ter)
}
