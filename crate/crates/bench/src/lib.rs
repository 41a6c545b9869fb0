//! Inputs shared by the benchmarks under benches/.

use versekit::synth::{noisy_lines, random_pairs};
use versekit::TokenizedCorpus;

/// Sentence pairs of 5 to 25 tokens over a 2,000-word vocabulary.
pub fn alignment_corpus(pairs: usize) -> TokenizedCorpus {
    TokenizedCorpus::from_tokens(&random_pairs(pairs, 2_000, 5, 25, 7))
}

/// Whitespace-joined hypothesis/reference lines where roughly every fifth
/// hypothesis token is swapped out.
pub fn scoring_lines(n: usize) -> (Vec<String>, Vec<String>) {
    let pairs = random_pairs(n, 3_000, 8, 30, 13);
    let refs: Vec<String> = pairs.iter().map(|(_, t)| t.join(" ")).collect();
    let hyps = pairs
        .iter()
        .map(|(s, t)| {
            t.iter().zip(s.iter().cycle()).enumerate().map(|(i, (a, b))| if i % 5 == 4 { b.as_str() } else { a.as_str() }).collect::<Vec<_>>().join(" ")
        })
        .collect();
    (hyps, refs)
}

pub fn cleaning_lines(n: usize) -> Vec<String> {
    noisy_lines(n, 5)
}
