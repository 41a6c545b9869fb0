//! Brute-force reference computations. Each enumerates every alignment or
//! edit path instead of using dynamic programming.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use versekit::align::{jump_bucket, HmmAlignModel};

/// IBM1 EM by enumerating all alignments, starting from t = 1 / |target
/// vocabulary|. Keys are (source word or None, target word).
pub fn ibm1_em(pairs: &[(Vec<&str>, Vec<&str>)], iterations: usize) -> BTreeMap<(Option<String>, String), f64> {
    let targets: BTreeSet<&str> = pairs.iter().flat_map(|p| p.1.iter().copied()).collect();
    let init = 1.0 / targets.len() as f64;
    let mut t: BTreeMap<(Option<String>, String), f64> = BTreeMap::new();
    for (src, tgt) in pairs {
        for f in tgt {
            t.insert((None, f.to_string()), init);
            for e in src {
                t.insert((Some(e.to_string()), f.to_string()), init);
            }
        }
    }
    for _ in 0..iterations {
        let mut counts: BTreeMap<(Option<String>, String), f64> = BTreeMap::new();
        for (src, tgt) in pairs {
            let words: Vec<Option<String>> =
                std::iter::once(None).chain(src.iter().map(|e| Some(e.to_string()))).collect();
            let l1 = words.len();
            let m = tgt.len();
            let total = l1.pow(m as u32);
            let mut weights = Vec::with_capacity(total);
            for code in 0..total {
                let mut c = code;
                let mut w = 1.0;
                for f in tgt {
                    w *= t[&(words[c % l1].clone(), f.to_string())];
                    c /= l1;
                }
                weights.push(w);
            }
            let z: f64 = weights.iter().sum();
            for (code, w) in weights.iter().enumerate() {
                let mut c = code;
                for f in tgt {
                    *counts.entry((words[c % l1].clone(), f.to_string())).or_default() += w / z;
                    c /= l1;
                }
            }
        }
        let mut totals: BTreeMap<Option<String>, f64> = BTreeMap::new();
        for ((e, _), c) in &counts {
            *totals.entry(e.clone()).or_default() += c;
        }
        for (k, v) in t.iter_mut() {
            *v = counts.get(k).copied().unwrap_or(0.0) / totals[&k.0];
        }
    }
    t
}

/// Every alignment sequence a in {0 (empty word), 1..=l}^m with its
/// unnormalised HMM probability.
pub fn hmm_paths(model: &HmmAlignModel, src: &[u32], tgt: &[u32]) -> Vec<(Vec<usize>, f64)> {
    let l = src.len();
    let m = tgt.len();
    let total = (l + 1).pow(m as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let mut a = Vec::with_capacity(m);
        for _ in 0..m {
            a.push(c % (l + 1));
            c /= l + 1;
        }
        let mut pos = 0usize;
        let mut w = 1.0;
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0 {
                w *= model.p0 * model.lex.prob(None, tgt[j]);
            } else {
                let b = jump_bucket(aj as i64 - pos as i64);
                let sharing = (1..=l).filter(|&i| jump_bucket(i as i64 - pos as i64) == b).count() as f64;
                w *= (1.0 - model.p0) * model.jump[b] / sharing * model.lex.prob(Some(src[aj - 1]), tgt[j]);
                pos = aj;
            }
        }
        out.push((a, w));
    }
    out
}

/// Posterior link matrix by enumeration: result[j][i], i = 0 is the empty word.
pub fn hmm_posteriors(model: &HmmAlignModel, src: &[u32], tgt: &[u32]) -> Vec<Vec<f64>> {
    let paths = hmm_paths(model, src, tgt);
    let z: f64 = paths.iter().map(|p| p.1).sum();
    let mut post = vec![vec![0.0; src.len() + 1]; tgt.len()];
    for (a, w) in &paths {
        for (j, &aj) in a.iter().enumerate() {
            post[j][aj] += w / z;
        }
    }
    post
}

pub fn hmm_log_likelihood(model: &HmmAlignModel, src: &[u32], tgt: &[u32]) -> f64 {
    hmm_paths(model, src, tgt).iter().map(|p| p.1).sum::<f64>().ln()
}

fn ngram_census(tokens: &[&str], n: usize) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for i in 0..tokens.len() {
        if i + n <= tokens.len() {
            *m.entry(tokens[i..i + n].join("\u{1}")).or_insert(0) += 1;
        }
    }
    m
}

/// Corpus BLEU from pooled clipped counts, written from the textbook formula.
/// `smooth` adds one to numerator and denominator for orders above 1.
pub fn bleu(hyps: &[Vec<&str>], refs: &[Vec<&str>], smooth: bool) -> f64 {
    let mut num = [0f64; 4];
    let mut den = [0f64; 4];
    let (mut c, mut r) = (0f64, 0f64);
    for (h, rf) in hyps.iter().zip(refs) {
        c += h.len() as f64;
        r += rf.len() as f64;
        for n in 1..=4 {
            let hc = ngram_census(h, n);
            let rc = ngram_census(rf, n);
            for (g, k) in &hc {
                num[n - 1] += (*k).min(*rc.get(g).unwrap_or(&0)) as f64;
                den[n - 1] += *k as f64;
            }
        }
    }
    let mut log_sum = 0.0;
    let mut orders = 0.0;
    for n in 0..4 {
        let (a, b) = if smooth && n > 0 { (num[n] + 1.0, den[n] + 1.0) } else { (num[n], den[n]) };
        if b == 0.0 && n > 0 && !smooth {
            // no hypothesis n-grams of this order or any higher one
            break;
        }
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        log_sum += (a / b).ln();
        orders += 1.0;
    }
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    100.0 * bp * (log_sum / orders).exp()
}

/// chrF with beta 3 and orders 1..6 by listing every character substring.
pub fn chrf(hyps: &[&str], refs: &[&str]) -> f64 {
    let mut h_tot = [0usize; 6];
    let mut r_tot = [0usize; 6];
    let mut hit = [0usize; 6];
    for (h, r) in hyps.iter().zip(refs) {
        let hc: Vec<char> = h.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = r.chars().filter(|c| !c.is_whitespace()).collect();
        for n in 1..=6 {
            let census = |cs: &[char]| {
                let mut m: BTreeMap<String, usize> = BTreeMap::new();
                for i in 0..cs.len() {
                    if i + n <= cs.len() {
                        *m.entry(cs[i..i + n].iter().collect()).or_insert(0) += 1;
                    }
                }
                m
            };
            let hm = census(&hc);
            let rm = census(&rc);
            h_tot[n - 1] += hm.values().sum::<usize>();
            r_tot[n - 1] += rm.values().sum::<usize>();
            hit[n - 1] += hm.iter().map(|(g, k)| (*k).min(*rm.get(g).unwrap_or(&0))).sum::<usize>();
        }
    }
    let mut f_sum = 0.0;
    let mut orders = 0.0;
    for n in 0..6 {
        if h_tot[n] == 0 || r_tot[n] == 0 {
            continue;
        }
        orders += 1.0;
        let p = hit[n] as f64 / h_tot[n] as f64;
        let r = hit[n] as f64 / r_tot[n] as f64;
        if p > 0.0 || r > 0.0 {
            f_sum += 10.0 * p * r / (9.0 * p + r);
        }
    }
    if orders == 0.0 {
        0.0
    } else {
        100.0 * f_sum / orders
    }
}

/// Minimal edit script cost by trying every script (no memoisation).
pub fn edit_distance(h: &[&str], r: &[&str]) -> usize {
    if h.is_empty() {
        return r.len();
    }
    if r.is_empty() {
        return h.len();
    }
    let keep = edit_distance(&h[1..], &r[1..]) + usize::from(h[0] != r[0]);
    let drop_h = edit_distance(&h[1..], r) + 1;
    let drop_r = edit_distance(h, &r[1..]) + 1;
    keep.min(drop_h).min(drop_r)
}

/// Exact TER numerator: fewest shifts plus edits over every shift sequence.
/// A shift lifts a block that also occurs in the reference and reinserts it
/// at another position of the remaining tokens, at most 10 positions away.
pub fn ter_edits(h: &[&str], r: &[&str]) -> usize {
    let mut seen: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
    let mut frontier = vec![h.to_vec()];
    seen.insert(h.to_vec(), 0);
    let mut best = edit_distance(h, r);
    let mut depth = 0;
    while !frontier.is_empty() && depth < best {
        depth += 1;
        let mut next = Vec::new();
        for state in &frontier {
            let n = state.len();
            for s in 0..n {
                for len in 1..=n - s {
                    let block = &state[s..s + len];
                    if !r.windows(len).any(|w| w == block) {
                        continue;
                    }
                    let rest: Vec<&str> = state[..s].iter().chain(&state[s + len..]).copied().collect();
                    for p in 0..=rest.len() {
                        if p == s || p.abs_diff(s) > 10 {
                            continue;
                        }
                        let mut moved = rest[..p].to_vec();
                        moved.extend_from_slice(block);
                        moved.extend_from_slice(&rest[p..]);
                        if seen.get(&moved).map_or(true, |&d| d > depth) {
                            seen.insert(moved.clone(), depth);
                            best = best.min(depth + edit_distance(&moved, r));
                            next.push(moved);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    best
}
