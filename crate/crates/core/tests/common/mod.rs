//! Fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;

use versekit::align::TokenizedCorpus;
use versekit::book::CanonSection;
use versekit::synth::SeededRng;
use versekit::tasks::PairingConfig;
use versekit::versification::{CanonicalIndex, VerseRef};
use versekit::{ExtractFile, ExtractLine};

/// Fixture directory of the core crate; resolves from any sibling crate too.
pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn toks(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

pub fn owned(pairs: &[(Vec<String>, Vec<String>)]) -> TokenizedCorpus {
    TokenizedCorpus::from_tokens(pairs)
}

pub fn toy() -> Vec<(Vec<&'static str>, Vec<&'static str>)> {
    vec![(vec!["das", "haus"], vec!["the", "house"]), (vec!["das", "buch"], vec!["the", "book"])]
}

/// Random small corpus with sides of 1..=5 tokens over a small vocabulary.
pub fn small_random(n: usize, seed: u64) -> TokenizedCorpus {
    let mut rng = SeededRng::new(seed);
    let pairs: Vec<(Vec<String>, Vec<String>)> = (0..n)
        .map(|_| {
            let ls = rng.range(1, 5);
            let lt = rng.range(1, 5);
            (
                (0..ls).map(|_| format!("s{}", rng.below(6))).collect(),
                (0..lt).map(|_| format!("t{}", rng.below(6))).collect(),
            )
        })
        .collect();
    owned(&pairs)
}

pub fn monotone(trace: &[f64]) -> Result<(), String> {
    for w in trace.windows(2) {
        if w[1] < w[0] - 1e-9 {
            return Err(format!("log-likelihood fell: {} -> {}", w[0], w[1]));
        }
    }
    Ok(())
}

const HAND: &[(&str, &str)] = &[
    ("the cat sat on the mat", "the cat sat on the mat"),
    ("the the the", "the cat"),
    ("a b c", "a x c"),
    ("c a b", "a b c"),
    ("b a", "a b"),
    ("a b c d", "d c b a"),
    ("in the beginning god created", "in the beginning was the word"),
    ("x y z", "a b c"),
    ("a", "a b c d e f"),
    ("a b a b a b", "b a b a"),
    ("d a b c", "a b c d"),
    ("light was good", "and the light was good"),
];

/// Hand cases plus seeded random pairs over a five-word alphabet, 50 in all.
pub fn metric_cases() -> Vec<(String, String)> {
    let mut cases: Vec<(String, String)> = HAND.iter().map(|(h, r)| (h.to_string(), r.to_string())).collect();
    let words = ["a", "b", "c", "d", "e"];
    let mut rng = SeededRng::new(7);
    while cases.len() < 50 {
        let rl = rng.range(1, 6);
        let r: Vec<&str> = (0..rl).map(|_| words[rng.below(5)]).collect();
        let mut h = r.clone();
        for _ in 0..rng.below(3) {
            match rng.below(3) {
                0 if !h.is_empty() => {
                    let i = rng.below(h.len());
                    h[i] = words[rng.below(5)];
                }
                1 if h.len() > 1 => {
                    let i = rng.below(h.len());
                    h.remove(i);
                }
                _ if h.len() < 6 => {
                    let i = rng.below(h.len() + 1);
                    h.insert(i, words[rng.below(5)]);
                }
                _ => {}
            }
        }
        if rng.below(3) == 0 && h.len() > 1 {
            h.rotate_left(1);
        }
        cases.push((h.join(" "), r.join(" ")));
    }
    cases
}

pub fn load_family(name: &str) -> PairingConfig {
    let text = std::fs::read_to_string(fixture_dir().join("pairing").join(format!("{name}.toml"))).unwrap();
    PairingConfig::from_toml(&text).unwrap()
}

/// Family, source, target, related.
pub const EXPECTED_PAIRINGS: [(&str, &str, &str, &str); 8] = [
    ("afro-asiatic", "hau-hausa", "daa-daaNT", "fuh-fuhbkf"),
    ("austronesian", "ksd-ksd", "kqw-kqw", "rai-rai"),
    ("dravidian", "tam-tam2017", "mal-mal", "kan-kan2017"),
    ("indo-european", "hin-hin2017", "pan-pan", "guj-guj2017"),
    ("niger-congo", "swh-swhonen", "cwe-cwe", "vid-vid"),
    ("otomanguean", "spa-sparvg", "zat-zatNTps", "zad-zadNT"),
    ("sino-tibetan", "npi-npiulb", "taj-taj", "lif-lifNT2"),
    ("trans-new-guinea", "tpi-tpiOTNT", "yut-yut", "nca-nca"),
];

/// Extract with text on every index line accepted by `has`.
pub fn synthetic_extract(id: &str, index: &CanonicalIndex, has: impl Fn(&VerseRef) -> bool) -> ExtractFile {
    let mut f = ExtractFile::empty(id, index.len());
    for (i, v) in index.iter().enumerate() {
        if has(&v) {
            f.lines[i] = ExtractLine::Text(format!("{id} {v}"));
        }
    }
    f
}

pub fn nt_only(v: &VerseRef) -> bool {
    v.book.section() == CanonSection::NewTestament
}

pub fn protestant(v: &VerseRef) -> bool {
    v.book.section() != CanonSection::Deuterocanon
}
