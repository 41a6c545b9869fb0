mod common;

use common::{metric_cases as suite, oracles, toks};
use proptest::prelude::*;
use versekit::metrics::*;
use versekit::versification::{builtin_index, VerseRef, CANONICAL_LEN};
use versekit::{ExtractFile, ExtractLine};

#[test]
fn fifty_case_suite_matches_oracles() {
    let cases = suite();
    assert_eq!(cases.len(), 50);
    for (h, r) in &cases {
        let (ht, rt) = (toks(h), toks(r));
        let b = bleu(&[ht.clone()], &[rt.clone()], BleuMode::Corpus).unwrap().score;
        assert!((b - oracles::bleu(&[ht.clone()], &[rt.clone()], false)).abs() < 1e-4, "{h} | {r}");
        let s = bleu(&[ht.clone()], &[rt.clone()], BleuMode::Smoothed).unwrap().score;
        assert!((s - oracles::bleu(&[ht.clone()], &[rt.clone()], true)).abs() < 1e-4, "{h} | {r}");
        let c = chrf3(&[h.as_str()], &[r.as_str()]).unwrap().score;
        assert!((c - oracles::chrf(&[h], &[r])).abs() < 1e-4, "{h} | {r}");
        let w = wer(&ht, &rt).unwrap();
        let brute = oracles::edit_distance(&ht, &rt);
        assert_eq!(w.edits, brute, "{h} | {r}");
        assert!((w.rate - brute as f64 / rt.len() as f64).abs() < 1e-12);
        let t = ter(&ht, &rt).unwrap();
        assert!(t.rate <= w.rate + 1e-12, "{h} | {r}");
        if ht.len() <= 4 && rt.len() <= 4 {
            assert_eq!(t.edits, oracles::ter_edits(&ht, &rt), "{h} | {r}");
        }
    }
    // Pooled over the whole suite.
    let hs: Vec<Vec<&str>> = cases.iter().map(|c| toks(&c.0)).collect();
    let rs: Vec<Vec<&str>> = cases.iter().map(|c| toks(&c.1)).collect();
    let b = bleu(&hs, &rs, BleuMode::Corpus).unwrap().score;
    assert!((b - oracles::bleu(&hs, &rs, false)).abs() < 1e-4);
    let hl: Vec<&str> = cases.iter().map(|c| c.0.as_str()).collect();
    let rl: Vec<&str> = cases.iter().map(|c| c.1.as_str()).collect();
    assert!((chrf3(&hl, &rl).unwrap().score - oracles::chrf(&hl, &rl)).abs() < 1e-4);
}

#[test]
fn three_sentence_bleu() {
    let h = vec![toks("the cat sat on the mat today"), toks("there is a cat here"), toks("hello world again")];
    let r = vec![toks("the cat sat on the mat"), toks("a cat is here"), toks("hello world")];
    let got = bleu(&h, &r, BleuMode::Corpus).unwrap();
    assert!((got.score - oracles::bleu(&h, &r, false)).abs() < 1e-4);
    assert!(got.score > 0.0 && got.score < 100.0);
    assert_eq!(got.hyp_len, 15);
    assert_eq!(got.ref_len, 12);
}

#[test]
fn hand_values() {
    let w = wer(&toks("a b c"), &toks("a x c")).unwrap();
    assert!((w.rate - 1.0 / 3.0).abs() < 1e-12);
    let t = ter(&toks("c a b"), &toks("a b c")).unwrap();
    assert!((t.rate - 1.0 / 3.0).abs() < 1e-12);
    assert!(t.rate < wer(&toks("c a b"), &toks("a b c")).unwrap().rate);
    for metric in [wer::<&str>, ter::<&str>] {
        let s = metric(&toks("a b"), &toks("a b")).unwrap();
        assert_eq!(s.rate, 0.0);
    }
    // "abc" vs "abd": orders 1..3 have 2/3, 1/2, 0/1 on both sides.
    let expect = 100.0 * (2.0 / 3.0 + 1.0 / 2.0 + 0.0) / 3.0;
    assert!((chrf3(&["abc"], &["abd"]).unwrap().score - expect).abs() < 1e-9);
}

#[test]
fn spbleu_behaviour() {
    let ws = SubwordModel::whitespace();
    let h = ["the house is big", "a small boat"];
    let r = ["the house was big", "a small boat"];
    let sp = spbleu(&h, &r, &ws).unwrap();
    let plain = bleu(
        &h.iter().map(|s| toks(s)).collect::<Vec<_>>(),
        &r.iter().map(|s| toks(s)).collect::<Vec<_>>(),
        BleuMode::Corpus,
    )
    .unwrap();
    assert_eq!(sp, plain);
    assert_eq!(spbleu(&r, &r, &ws).unwrap().score, 100.0);

    // Compounds built from shared stems: word BLEU sees only misses, pieces
    // recover the stems.
    let stems = ["haus", "boot", "tür", "garten", "wasser", "schiff", "fenster", "dach"];
    let mut train = Vec::new();
    for a in stems {
        for b in stems {
            train.push(format!("{a}{b} {a} {b}"));
        }
    }
    let lines: Vec<&str> = train.iter().map(String::as_str).collect();
    let model = train_subword(&lines, &SubwordOptions { vocab_size: 60, seed: 1, ..Default::default() }).unwrap();
    let hyp = ["hausboot gartentür wasserschiff fensterdach"];
    let reference = ["hausboot gartentür wasserschiff fensterhaus"];
    let sp = spbleu(&hyp, &reference, &model).unwrap().score;
    let word = bleu(&[toks(hyp[0])], &[toks(reference[0])], BleuMode::Corpus).unwrap().score;
    assert!(sp > word, "spBLEU {sp} vs BLEU {word}");
    assert_eq!(spbleu(&hyp, &hyp, &model).unwrap().score, 100.0);
}

/// Exhaustive unigram EM over all segmentations of one word with every
/// substring as a piece; returns the most probable segmentation.
fn exhaustive_best_split(word: &str, iterations: usize) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let splits: Vec<Vec<String>> = (0..1u32 << (n - 1))
        .map(|mask| {
            let mut out = Vec::new();
            let mut cur = String::new();
            for (i, c) in chars.iter().enumerate() {
                cur.push(*c);
                if i + 1 == n || mask & (1 << i) != 0 {
                    out.push(std::mem::take(&mut cur));
                }
            }
            out
        })
        .collect();
    let mut p: std::collections::BTreeMap<String, f64> = std::collections::BTreeMap::new();
    for s in &splits {
        for piece in s {
            p.insert(piece.clone(), 1.0);
        }
    }
    let z: f64 = p.values().sum();
    p.values_mut().for_each(|v| *v /= z);
    let score = |p: &std::collections::BTreeMap<String, f64>, s: &[String]| s.iter().map(|x| p[x]).product::<f64>();
    for _ in 0..iterations {
        let weights: Vec<f64> = splits.iter().map(|s| score(&p, s)).collect();
        let total: f64 = weights.iter().sum();
        let mut counts: std::collections::BTreeMap<String, f64> = p.keys().map(|k| (k.clone(), 0.0)).collect();
        for (s, w) in splits.iter().zip(&weights) {
            for piece in s {
                *counts.get_mut(piece).unwrap() += w / total;
            }
        }
        let z: f64 = counts.values().sum();
        p = counts.into_iter().map(|(k, v)| (k, v / z)).collect();
    }
    splits.iter().max_by(|a, b| score(&p, a).total_cmp(&score(&p, b))).unwrap().clone()
}

#[test]
fn repeated_word_matches_exhaustive_em() {
    for word in ["abab", "aab", "banana"] {
        let marked = format!("\u{2581}{word}");
        let oracle = exhaustive_best_split(&marked, 30);
        assert_eq!(oracle, vec![marked.clone()]);
        let line = format!("{word} {word} {word}");
        let lines = vec![line.as_str(); 10];
        let m = train_subword(&lines, &SubwordOptions { vocab_size: 12, ..Default::default() }).unwrap();
        assert_eq!(m.segment(word), oracle);
    }
}

#[test]
fn subword_is_seed_deterministic() {
    let lines: Vec<String> = (0..200).map(|i| format!("word{} shared stem{} tail", i % 17, i % 5)).collect();
    let l: Vec<&str> = lines.iter().map(String::as_str).collect();
    let opts = SubwordOptions { vocab_size: 50, seed: 3, ..Default::default() };
    assert_eq!(train_subword(&l, &opts).unwrap().hash(), train_subword(&l, &opts).unwrap().hash());
}

fn reference_extract(verses: &[(VerseRef, &str)]) -> ExtractFile {
    let index = builtin_index();
    let mut f = ExtractFile::empty("ref", CANONICAL_LEN);
    for (v, t) in verses {
        f.lines[index.position(v).unwrap()] = ExtractLine::Text(t.to_string());
    }
    f
}

fn gen_verses() -> Vec<(VerseRef, &'static str)> {
    let texts = [
        "In the beginning God created the heaven and the earth.",
        "And the earth was without form, and void.",
        "And God said, Let there be light: and there was light.",
        "And God saw the light, that it was good.",
        "And God called the light Day, and the darkness he called Night.",
        "And God said, Let there be a firmament in the midst of the waters.",
    ];
    texts.iter().enumerate().map(|(i, t)| (format!("GEN 1:{}", i + 1).parse().unwrap(), *t)).collect()
}

#[test]
fn score_report() {
    let verses = gen_verses();
    let reference = reference_extract(&verses);
    let set: Vec<VerseRef> = verses.iter().map(|v| v.0).collect();
    let hyps: Vec<&str> = verses.iter().map(|v| v.1).collect();
    let cfg = ScoreConfig::default();
    let rep = score_hypotheses(&hyps, &reference, &set, builtin_index(), &cfg).unwrap();
    assert_eq!(rep.corpus.bleu.score, 100.0);
    assert_eq!(rep.corpus.spbleu.score, 100.0);
    assert_eq!(rep.corpus.chrf3.score, 100.0);
    assert_eq!(rep.corpus.wer.rate, 0.0);
    assert_eq!(rep.corpus.ter.rate, 0.0);
    assert!(rep.per_verse.iter().all(|v| v.bleu == 100.0 && v.chrf3 == 100.0));
    assert_eq!(rep.cdf.points.last().unwrap(), &(100.0, 1.0));
    assert_eq!(rep.cdf.points[0], (0.0, 0.0));
    assert_eq!(rep.tokenizer, TOKENIZER_ID);
    assert_eq!(rep.fingerprint, cfg.fingerprint());
    assert!(rep.summary().contains("BLEU 100.00"));
    assert_eq!(rep.per_verse_tsv().lines().count(), 7);

    let mut shuffled = hyps.clone();
    shuffled.rotate_left(1);
    let worse = score_hypotheses(&shuffled, &reference, &set, builtin_index(), &cfg).unwrap();
    assert!(worse.corpus.bleu.score < rep.corpus.bleu.score);

    assert_eq!(score_hypotheses::<&str>(&[], &reference, &[], builtin_index(), &cfg), Err(MetricError::EmptyInput));
    assert!(matches!(
        score_hypotheses(&hyps[..2], &reference, &set, builtin_index(), &cfg),
        Err(MetricError::LengthMismatch { .. })
    ));
    let missing: VerseRef = "GEN 2:1".parse().unwrap();
    assert_eq!(
        score_hypotheses(&["x"], &reference, &[missing], builtin_index(), &cfg),
        Err(MetricError::NoReferenceText(missing))
    );
    let mut with_range = reference.clone();
    with_range.lines[builtin_index().position(&set[0]).unwrap()] = ExtractLine::Range;
    assert!(score_hypotheses(&hyps, &with_range, &set, builtin_index(), &cfg).is_err());
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 1..8)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_scores_ignore_sentence_order(pairs in prop::collection::vec((sentence(), sentence()), 1..6), rot in 0usize..6) {
        let (h, r): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let mut hp = h.clone();
        let mut rp = r.clone();
        let k = rot % h.len();
        hp.rotate_left(k);
        rp.rotate_left(k);
        let a = bleu(&h, &r, BleuMode::Corpus).unwrap();
        let b = bleu(&hp, &rp, BleuMode::Corpus).unwrap();
        prop_assert!((a.score - b.score).abs() < 1e-9);
        let hl: Vec<String> = h.iter().map(|s| s.join(" ")).collect();
        let rl: Vec<String> = r.iter().map(|s| s.join(" ")).collect();
        let hpl: Vec<String> = hp.iter().map(|s| s.join(" ")).collect();
        let rpl: Vec<String> = rp.iter().map(|s| s.join(" ")).collect();
        prop_assert!((chrf3(&hl, &rl).unwrap().score - chrf3(&hpl, &rpl).unwrap().score).abs() < 1e-9);
        prop_assert_eq!(corpus_wer(&h, &r).unwrap().edits, corpus_wer(&hp, &rp).unwrap().edits);
    }

    #[test]
    fn scores_are_bounded(h in sentence(), r in sentence()) {
        let b = bleu(&[h.clone()], &[r.clone()], BleuMode::Corpus).unwrap();
        prop_assert!((0.0..=100.0).contains(&b.score));
        prop_assert!(b.score <= 100.0 * b.brevity_penalty * b.precisions.iter().cloned().fold(0.0, f64::max) + 1e-9);
        let s = bleu(&[h.clone()], &[r.clone()], BleuMode::Smoothed).unwrap();
        prop_assert!((0.0..=100.0).contains(&s.score));
        let c = chrf3(&[h.join(" ")], &[r.join(" ")]).unwrap();
        prop_assert!((0.0..=100.0).contains(&c.score));
        let w = wer(&h, &r).unwrap();
        let t = ter(&h, &r).unwrap();
        prop_assert!(t.rate <= w.rate + 1e-12);
        prop_assert_eq!(w.edits, w.substitutions + w.insertions + w.deletions);
    }

    #[test]
    fn wer_matches_brute_force(h in prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 0..7),
                               r in prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 1..7)) {
        prop_assert_eq!(wer(&h, &r).unwrap().edits, oracles::edit_distance(&h, &r));
    }

    #[test]
    fn ter_matches_exhaustive_on_short(h in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..5),
                                       r in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 1..5)) {
        prop_assert_eq!(ter(&h, &r).unwrap().edits, oracles::ter_edits(&h, &r));
    }

    #[test]
    fn chrf_identity_only_at_equality(h in sentence(), r in sentence()) {
        let score = chrf3(&[h.join(" ")], &[r.join(" ")]).unwrap().score;
        if h.concat() == r.concat() {
            prop_assert_eq!(score, 100.0);
        } else {
            prop_assert!(score < 100.0);
        }
    }

    #[test]
    fn chrf_grows_with_correct_suffix(words in prop::collection::btree_set("[a-z]{3,6}", 4..10), wrong in "[0-9]{6}") {
        let words: Vec<String> = words.into_iter().collect();
        let reference = words.join(" ");
        let mut last = -1.0;
        for k in 1..=words.len() {
            let hyp = format!("{wrong} {}", words[..k].join(" "));
            let s = chrf3(&[hyp.as_str()], &[reference.as_str()]).unwrap().score;
            prop_assert!(s >= last - 1e-12, "{} < {}", s, last);
            last = s;
        }
    }

    #[test]
    fn whitespace_model_spbleu_equals_bleu(pairs in prop::collection::vec((sentence(), sentence()), 1..5)) {
        let ws = SubwordModel::whitespace();
        let hl: Vec<String> = pairs.iter().map(|p| p.0.join(" ")).collect();
        let rl: Vec<String> = pairs.iter().map(|p| p.1.join(" ")).collect();
        let (h, r): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        prop_assert_eq!(spbleu(&hl, &rl, &ws).unwrap(), bleu(&h, &r, BleuMode::Corpus).unwrap());
    }

    #[test]
    fn segmentation_is_lossless(lines in prop::collection::vec("[a-zé ]{1,20}", 1..8), probe in "[a-zéxq ]{0,30}") {
        let l: Vec<&str> = lines.iter().map(String::as_str).collect();
        if l.iter().all(|s| s.trim().is_empty()) {
            return Ok(());
        }
        let m = train_subword(&l, &SubwordOptions { vocab_size: 64, ..Default::default() }).unwrap();
        let norm = probe.split_whitespace().collect::<Vec<_>>().join(" ");
        prop_assert_eq!(m.detokenize(&m.segment(&probe)), norm);
        let total: f64 = m.pieces().iter().map(|p| p.1.exp()).sum();
        prop_assert!(total <= 1.0 + 1e-9);
    }
}
