use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::extract::ExtractFile;

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}|[^\s\p{P}]+").expect("valid token pattern"))
}

/// Lowercase, split on whitespace, and make every punctuation character its
/// own token.
pub fn tokenize(line: &str) -> Vec<String> {
    let lower = line.to_lowercase();
    token_re().find_iter(&lower).map(|m| m.as_str().to_string()).collect()
}

/// Token strings with dense ids in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Vocab {
        Vocab::default()
    }

    pub fn from_words(words: Vec<String>) -> Vocab {
        let ids = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Vocab { words, ids }
    }

    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub src: Vec<u32>,
    pub tgt: Vec<u32>,
}

/// Verse pairs present on both sides, as token ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenizedCorpus {
    pub pairs: Vec<SentencePair>,
    pub source_vocab: Vocab,
    pub target_vocab: Vocab,
    /// Extract line index of each pair, when built from extracts.
    pub lines: Vec<usize>,
}

impl TokenizedCorpus {
    /// Pair up pre-tokenized sentences, skipping any pair with an empty side.
    pub fn from_tokens<S: AsRef<str>>(pairs: &[(Vec<S>, Vec<S>)]) -> TokenizedCorpus {
        let mut c = TokenizedCorpus::default();
        for (i, (s, t)) in pairs.iter().enumerate() {
            c.push(i, s, t);
        }
        c
    }

    /// Tokenize the verses both extracts have text for.
    pub fn from_extracts(source: &ExtractFile, target: &ExtractFile) -> TokenizedCorpus {
        let mut c = TokenizedCorpus::default();
        for (i, (s, t)) in source.lines.iter().zip(&target.lines).enumerate() {
            if let (Some(s), Some(t)) = (s.text(), t.text()) {
                c.push(i, &tokenize(s), &tokenize(t));
            }
        }
        c
    }

    fn push<S: AsRef<str>>(&mut self, line: usize, src: &[S], tgt: &[S]) {
        if src.is_empty() || tgt.is_empty() {
            return;
        }
        let src = src.iter().map(|w| self.source_vocab.intern(w.as_ref())).collect();
        let tgt = tgt.iter().map(|w| self.target_vocab.intern(w.as_ref())).collect();
        self.pairs.push(SentencePair { src, tgt });
        self.lines.push(line);
    }

    /// The same corpus with source and target swapped.
    pub fn reversed(&self) -> TokenizedCorpus {
        TokenizedCorpus {
            pairs: self.pairs.iter().map(|p| SentencePair { src: p.tgt.clone(), tgt: p.src.clone() }).collect(),
            source_vocab: self.target_vocab.clone(),
            target_vocab: self.source_vocab.clone(),
            lines: self.lines.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("The cat, sat."), vec!["the", "cat", ",", "sat", "."]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("राम ने कहा।"), vec!["राम", "ने", "कहा", "।"]);
        assert_eq!(tokenize("«Да»"), vec!["«", "да", "»"]);
    }

    #[test]
    fn empty_sides_skipped() {
        let c = TokenizedCorpus::from_tokens(&[(vec!["a"], vec![]), (vec!["a", "b"], vec!["x"])]);
        assert_eq!(c.len(), 1);
        assert_eq!(c.lines, vec![1]);
        assert_eq!(c.source_vocab.len(), 2);
        let r = c.reversed();
        assert_eq!(r.pairs[0].src, vec![0]);
        assert_eq!(r.source_vocab.word(0), "x");
    }
}
