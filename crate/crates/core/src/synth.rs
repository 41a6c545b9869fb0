//! Seeded synthetic corpora for tests and benchmarks.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic generator shared by shuffles and fixtures.
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> SeededRng {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `0..n` by widening multiply (Lemire, without rejection;
    /// bias is below 2^-64 * n).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

pub type TokenPairs = Vec<(Vec<String>, Vec<String>)>;

/// Pairs whose target is the source with every word `sK` replaced by `tK`.
pub fn bijective_pairs(pairs: usize, vocab: usize, min_len: usize, max_len: usize, seed: u64) -> TokenPairs {
    let mut rng = SeededRng::new(seed);
    (0..pairs)
        .map(|_| {
            let n = rng.range(min_len, max_len);
            let ids: Vec<usize> = (0..n).map(|_| rng.below(vocab)).collect();
            (ids.iter().map(|k| format!("s{k}")).collect(), ids.iter().map(|k| format!("t{k}")).collect())
        })
        .collect()
}

/// Pairs with independent random sides.
pub fn random_pairs(pairs: usize, vocab: usize, min_len: usize, max_len: usize, seed: u64) -> TokenPairs {
    let mut rng = SeededRng::new(seed);
    let side = |prefix: char, rng: &mut SeededRng| -> Vec<String> {
        let n = rng.range(min_len, max_len);
        (0..n).map(|_| format!("{prefix}{}", rng.below(vocab))).collect()
    };
    (0..pairs)
        .map(|_| {
            let s = side('s', &mut rng);
            let t = side('t', &mut rng);
            (s, t)
        })
        .collect()
}

/// Word pieces that exercise the cleaning rules: ligatures, mixed
/// Latin/Cyrillic lookalikes, decomposed accents, out-of-order nukta
/// clusters, stray replacement and private-use characters.
const NOISE_WORDS: &[&str] = &[
    "in", "the", "beginning", "o\u{FB03}ce", "\u{FB01}rst", "\u{FB02}ock", "e\u{0301}glise", "cafe\u{0301}",
    "в", "начале", "сотворил", "бог", "Aнна", "oн", "cел", "Mосква", "Jesus", "Pavel", "Хлеб", "xлеб",
    "कहा", "क\u{0940}\u{093C}", "ज़मीन", "ग\u{093C}", "\u{2184}k\u{2184}", "\u{FFFD}Go", "Don\u{FFFD}t",
    "\u{E001}", "1,000", "a,b", "x", "\u{00A0}", "\u{0301}", "|",
];

const NOISE_SEPARATORS: &[&str] = &[" ", " ", " ", "  ", " ,", ",", ", ", ",,", " , ", "|", " |", "\u{00A0}", "\t"];

/// `n` seeded lines of noisy multi-script text.
pub fn noisy_lines(n: usize, seed: u64) -> Vec<String> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|_| {
            let mut line = String::new();
            for k in 0..rng.range(1, 12) {
                if k > 0 {
                    line.push_str(NOISE_SEPARATORS[rng.below(NOISE_SEPARATORS.len())]);
                }
                line.push_str(NOISE_WORDS[rng.below(NOISE_WORDS.len())]);
            }
            line
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(bijective_pairs(5, 10, 1, 4, 7), bijective_pairs(5, 10, 1, 4, 7));
        assert_ne!(bijective_pairs(5, 10, 1, 4, 7), bijective_pairs(5, 10, 1, 4, 8));
        let mut r = SeededRng::new(1);
        for _ in 0..1000 {
            assert!(r.below(3) < 3);
            let u = r.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut v: Vec<u32> = (0..100).collect();
        SeededRng::new(3).shuffle(&mut v);
        let mut s = v.clone();
        s.sort();
        assert_eq!(s, (0..100).collect::<Vec<_>>());
        assert_ne!(v, s);
    }
}
