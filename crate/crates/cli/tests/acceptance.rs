//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#[path = "../../core/tests/common/mod.rs"]
mod fixtures;
mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fixtures::{oracles, toks};
use versekit::align::{lexical_table, AlignModel, smt_decode, train_fast_align, train_hmm, train_ibm1, HmmOptions, Ibm2Options};
use versekit::book::{parse_book_list, BookId, CanonSection};
use versekit::extract::RANGE_MARKER;
use versekit::metrics::{bleu, chrf3, spbleu, ter, wer, BleuMode, SubwordModel};
use versekit::synth::{bijective_pairs, noisy_lines, SeededRng};
use versekit::tasks::{
    build_book_split, build_cv_splits, select_pairing, AuditRule, CvParams, Role, SplitManifest, TaskKind, TaskSpec,
};
use versekit::textclean::Cleaner;
use versekit::versification::VerseRef;
use versekit::{
    build_extract, builtin_index, builtin_table, canonical_index, clean_text, parse_usfm, split_books, CleanContext,
    RuleSet, VersificationScheme,
};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn c1_canonical_index() -> Check {
    let index = canonical_index(builtin_table(VersificationScheme::Original)).map_err(|e| e.to_string())?;
    let nt = index.section_len(CanonSection::NewTestament);
    ensure!(index.len() == 41_899, "index has {} entries", index.len());
    ensure!(nt == 7_957, "NT restriction has {nt} entries");
    ensure!(builtin_index().len() == index.len(), "bundled index differs from a rebuilt one");
    Ok(format!("{} entries, {nt} NT", index.len()))
}

fn c2_extraction_golden() -> Check {
    let dir = fixtures::fixture_dir().join("extract");
    let bytes = std::fs::read(dir.join("three_books.usfm")).map_err(|e| e.to_string())?;
    let docs = split_books(&bytes).into_iter().map(parse_usfm).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    ensure!(docs.len() == 3, "{} books in fixture", docs.len());
    let (file, _) = build_extract("fix-test", &docs, builtin_table(VersificationScheme::Original), builtin_index())
        .map_err(|e| e.to_string())?;
    let text = file.to_text();
    let golden = std::fs::read_to_string(dir.join("three_books.extract.txt")).map_err(|e| e.to_string())?;
    if text != golden {
        let line = text.lines().zip(golden.lines()).position(|(a, b)| a != b).map_or(0, |i| i + 1);
        return Err(format!("differs from golden at line {line}"));
    }
    let ranges = text.lines().filter(|l| *l == RANGE_MARKER).count();
    ensure!(ranges == 1, "{ranges} range lines");
    Ok(format!("{} bytes byte-identical, {ranges} range line", text.len()))
}

fn c3_cleaning() -> Check {
    let rules = RuleSet::builtin();
    let run = |s: &str, script: Option<&str>| clean_text(s, &script.map(CleanContext::with_script).unwrap_or_default(), rules).0;
    for (input, script, want) in [
        ("\u{FB01}", Some("Latin"), "fi"),
        ("\u{FB01}nal", None, "final"),
        ("Aнна", Some("Cyrillic"), "\u{0410}нна"),
        ("Aнна", None, "Aнна"),
        ("a ,b", None, "a, b"),
        ("one,,two", None, "one, two"),
        ("1,000", None, "1,000"),
    ] {
        let got = run(input, script);
        ensure!(got == want, "{input:?} under {script:?} gave {got:?}, expected {want:?}");
    }
    let lines = noisy_lines(10_000, 2024);
    let contexts = [None, Some("Latin"), Some("Cyrillic"), Some("Devanagari")];
    let mut changed = 0;
    for script in contexts {
        let ctx = script.map(CleanContext::with_script).unwrap_or_default();
        let cleaner = Cleaner::new(rules, &ctx);
        for line in &lines {
            let once = cleaner.clean(line).0;
            if once != *line {
                changed += 1;
            }
            let twice = cleaner.clean(&once).0;
            ensure!(once == twice, "not idempotent under {script:?}: {line:?}");
        }
    }
    Ok(format!("7 targeted cases; {} fuzz lines x {} contexts idempotent ({changed} changed)", lines.len(), contexts.len()))
}

fn c4_alignment() -> Check {
    let c = fixtures::small_random(200, 3);
    let init = train_ibm1(&c, 3).map_err(|e| e.to_string())?.model;
    let model = train_hmm(&c, &init, HmmOptions { iterations: 3, p0: 0.2 }).map_err(|e| e.to_string())?.model;
    let mut worst: f64 = 0.0;
    for p in &c.pairs {
        ensure!(p.src.len() <= 5 && p.tgt.len() <= 5, "pair longer than 5");
        let fast = model.posteriors(&p.src, &p.tgt).map_err(|e| e.to_string())?;
        for (j, col) in oracles::hmm_posteriors(&model, &p.src, &p.tgt).iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                worst = worst.max((fast.link(i.checked_sub(1), j) - v).abs());
            }
        }
    }
    ensure!(worst <= 1e-9, "HMM posterior error {worst:e}");

    let toy = fixtures::toy();
    let tc = versekit::TokenizedCorpus::from_tokens(&toy);
    let mut ibm1_err: f64 = 0.0;
    for iters in 1..=5 {
        let m = train_ibm1(&tc, iters).map_err(|e| e.to_string())?.model;
        for ((e, f), p) in oracles::ibm1_em(&toy, iters) {
            let fid = tc.target_vocab.id(&f).ok_or("target word missing")?;
            let eid = e.map(|e| tc.source_vocab.id(&e).expect("source word"));
            ibm1_err = ibm1_err.max((m.lex.prob(eid, fid) - p).abs());
        }
    }
    ensure!(ibm1_err <= 1e-6, "IBM1 error {ibm1_err:e}");

    let lc = fixtures::small_random(60, 11);
    let ibm1 = train_ibm1(&lc, 10).map_err(|e| e.to_string())?;
    let hmm = train_hmm(&lc, &ibm1.model, HmmOptions { iterations: 10, p0: 0.2 }).map_err(|e| e.to_string())?;
    let ibm2 = train_fast_align(&lc, Ibm2Options { iterations: 10, ..Default::default() }).map_err(|e| e.to_string())?;
    for (name, trace) in [("IBM1", &ibm1.log_likelihood), ("HMM", &hmm.log_likelihood), ("IBM2-diag", &ibm2.log_likelihood)] {
        fixtures::monotone(trace).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("HMM max error {worst:.1e} over 200 pairs; IBM1 max error {ibm1_err:.1e}; 3 models monotone over 10 iterations"))
}

fn c5_pairing() -> Check {
    for (family, source, target, related) in fixtures::EXPECTED_PAIRINGS {
        let cfg = fixtures::load_family(family);
        let d = select_pairing(&cfg.candidate_set(), &cfg.rules).map_err(|e| format!("{family}: {e}"))?;
        let got = (d.source.as_str(), d.target.as_str(), d.related.as_str());
        ensure!(got == (source, target, related), "{family}: got {got:?}");
        let replayed = d.replay().map_err(|e| format!("{family}: {e}"))?;
        ensure!(replayed == (d.source.clone(), d.target.clone(), d.related.clone()), "{family}: replay disagrees");
        for role in [Role::Source, Role::Target, Role::Related] {
            ensure!(d.audit.iter().any(|s| s.role == role), "{family}: no audit step for {role:?}");
        }
    }
    let dropped_by = |family: &str, rule: AuditRule, id: &str| {
        let cfg = fixtures::load_family(family);
        let d = select_pairing(&cfg.candidate_set(), &cfg.rules).expect("selected above");
        d.audit.iter().any(|s| s.role == Role::Related && s.rule == rule && s.dropped.iter().any(|x| x == id))
    };
    ensure!(dropped_by("otomanguean", AuditRule::AdaptationOutlier, "zty-ztyNTps"), "Otomanguean exclusion missing");
    ensure!(dropped_by("sino-tibetan", AuditRule::ScriptMatch, "lif-lifNT"), "Sino-Tibetan script preference missing");
    Ok("8/8 families reproduced and replayed; exclusion and script preference audited".into())
}

fn books(list: &str) -> BTreeSet<BookId> {
    parse_book_list(list).expect("book list").into_iter().collect()
}

fn c6_splits() -> Check {
    let index = builtin_index();
    let nt: BTreeSet<BookId> = BookId::new_testament().collect();
    let minor = books("HOS JOL AMO OBA MIC NAH HAB ZEP HAG ZEC MAL");
    let bible: BTreeSet<BookId> = BookId::old_testament().chain(BookId::new_testament()).collect();
    let expected: [(TaskKind, BTreeSet<BookId>, BTreeSet<BookId>); 5] = [
        (TaskKind::GospelTranslation, books("MRK"), books("MAT")),
        (TaskKind::EpistleTranslation, books("MAT MRK LUK JHN ACT"), books("1TH 2TH 1TI 2TI TIT")),
        (TaskKind::NtCompletion, nt.difference(&books("ROM REV")).copied().collect(), books("ROM REV")),
        (TaskKind::EarlyOt, nt.clone(), books("GEN EXO LEV NUM DEU RUT PSA JON")),
        (TaskKind::LateOt, bible.difference(&minor).copied().collect(), minor.clone()),
    ];
    let mut rng = SeededRng::new(99);
    let corpora = 6;
    for round in 0..corpora {
        // Random coverage: the target drops a random share of verses.
        let drop = rng.range(0, 30);
        let salt = rng.next_u64();
        let keep = move |v: &VerseRef| {
            let h = (v.chapter as u64 * 1_000 + v.verse as u64).wrapping_mul(salt | 1) >> 40;
            (h % 100) as usize >= drop
        };
        let src = fixtures::synthetic_extract("src", index, fixtures::protestant);
        let tgt = fixtures::synthetic_extract("tgt", index, |v| fixtures::protestant(v) && keep(v));
        let rel = fixtures::synthetic_extract("rel", index, |v| fixtures::protestant(v) && v.verse % 2 == round as u16 % 2);
        let seed = rng.next_u64();
        let folds = build_cv_splits(&src, &tgt, index, CvParams::new(seed)).map_err(|e| e.to_string())?;
        ensure!(folds.len() == 5, "{} folds", folds.len());
        let mut tests = BTreeSet::new();
        for m in &folds {
            m.validate().map_err(|e| e.to_string())?;
            ensure!(m.test.len() == 250 && m.validation.len() == 250, "fold sizes {} / {}", m.test.len(), m.validation.len());
            for v in &m.test {
                ensure!(tests.insert(*v), "{v} in two test folds (seed {seed})");
            }
            let back = SplitManifest::parse(&m.to_text()).map_err(|e| e.to_string())?;
            ensure!(back == *m, "manifest does not round trip");
        }
        for (kind, train, test) in &expected {
            let spec = TaskSpec::book_task(kind.clone()).map_err(|e| e.to_string())?;
            ensure!(spec.train_books == *train && spec.test_books == *test, "{kind}: book sets differ");
            let m = build_book_split(&spec, &src, &tgt, None, index).map_err(|e| format!("{kind}: {e}"))?;
            m.validate().map_err(|e| e.to_string())?;
            ensure!(m.test.iter().all(|v| test.contains(&v.book)), "{kind}: test verse outside test books");
            ensure!(m.train.iter().all(|v| train.contains(&v.book)), "{kind}: train verse outside train books");

            let related_kind = TaskKind::RelatedLanguage(Box::new(kind.clone()));
            let spec = TaskSpec::book_task(related_kind.clone()).map_err(|e| e.to_string())?;
            let m = build_book_split(&spec, &src, &tgt, Some(&rel), index).map_err(|e| format!("{related_kind}: {e}"))?;
            m.check_against(&src, &tgt, Some(&rel), index).map_err(|e| e.to_string())?;
            let base: BTreeSet<VerseRef> = m.train.iter().chain(&m.test).copied().collect();
            let related = m.related_train.as_ref().ok_or("no related verses")?;
            ensure!(!related.is_empty(), "{related_kind}: empty related set");
            ensure!(related.iter().all(|v| base.contains(v)), "{related_kind}: related verse outside the task");
            ensure!(m.test.iter().any(|v| related.contains(v)), "{related_kind}: test-set verses not included");
        }
    }
    Ok(format!("{corpora} randomized corpora: 5 disjoint 250/250 folds, 5 book tasks exact, related containment holds"))
}

fn c7_metrics() -> Check {
    let cases = fixtures::metric_cases();
    ensure!(cases.len() == 50, "{} cases", cases.len());
    let mut worst: f64 = 0.0;
    for (h, r) in &cases {
        let (ht, rt) = (toks(h), toks(r));
        let b = bleu(&[ht.clone()], &[rt.clone()], BleuMode::Corpus).map_err(|e| e.to_string())?.score;
        worst = worst.max((b - oracles::bleu(&[ht.clone()], &[rt.clone()], false)).abs());
        let c = chrf3(&[h.as_str()], &[r.as_str()]).map_err(|e| e.to_string())?.score;
        worst = worst.max((c - oracles::chrf(&[h], &[r])).abs());
        let w = wer(&ht, &rt).map_err(|e| e.to_string())?;
        worst = worst.max((w.rate - oracles::edit_distance(&ht, &rt) as f64 / rt.len() as f64).abs());
        let t = ter(&ht, &rt).map_err(|e| e.to_string())?;
        ensure!(t.rate <= w.rate + 1e-12, "TER > WER on {h:?} / {r:?}");
        if ht.len() <= 4 && rt.len() <= 4 {
            ensure!(t.edits == oracles::ter_edits(&ht, &rt), "TER differs from exhaustive oracle on {h:?} / {r:?}");
        }
        let id = bleu(&[rt.clone()], &[rt.clone()], BleuMode::Corpus).map_err(|e| e.to_string())?.score;
        let idc = chrf3(&[r.as_str()], &[r.as_str()]).map_err(|e| e.to_string())?.score;
        let idw = wer(&rt, &rt).map_err(|e| e.to_string())?.rate;
        ensure!(id == 100.0 && idc == 100.0 && idw == 0.0, "identity scores {id}/{idc}/{idw} on {r:?}");
    }
    ensure!(worst <= 1e-4, "max deviation {worst:e}");
    let hs: Vec<&str> = cases.iter().map(|c| c.0.as_str()).collect();
    let rs: Vec<&str> = cases.iter().map(|c| c.1.as_str()).collect();
    let sp = spbleu(&hs, &rs, &SubwordModel::whitespace()).map_err(|e| e.to_string())?;
    let plain = bleu(
        &hs.iter().map(|s| toks(s)).collect::<Vec<_>>(),
        &rs.iter().map(|s| toks(s)).collect::<Vec<_>>(),
        BleuMode::Corpus,
    )
    .map_err(|e| e.to_string())?;
    ensure!(sp == plain, "spBLEU {} vs BLEU {}", sp.score, plain.score);
    Ok(format!("50 cases, max deviation {worst:.1e}; identity 100/100/0; spBLEU = BLEU ({:.4})", plain.score))
}

fn c8_smt() -> Check {
    let pairs = bijective_pairs(500, 40, 3, 12, 99);
    let corpus = versekit::TokenizedCorpus::from_tokens(&pairs);
    let model = train_fast_align(&corpus, Ibm2Options::default()).map_err(|e| e.to_string())?.model;
    let table = lexical_table(&model.lex);
    let hyps: Vec<String> = pairs.iter().map(|(s, _)| smt_decode(&s.join(" "), &table)).collect();
    let h: Vec<Vec<&str>> = hyps.iter().map(|s| toks(s)).collect();
    let r: Vec<Vec<&str>> = pairs.iter().map(|(_, t)| t.iter().map(String::as_str).collect()).collect();
    let b = bleu(&h, &r, BleuMode::Corpus).map_err(|e| e.to_string())?.score;
    ensure!(b == 100.0, "corpus BLEU {b}");
    Ok(format!("500 pairs, corpus BLEU {b:.1}"))
}

fn c9_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // Each run starts from its own fresh fixture, so fetch state is not shared.
    let run = |name: &str, extra: &[&str]| -> Result<_, String> {
        let root = dir.path().join(name);
        let config = common::write_fixture(&root);
        let out = root.join("out");
        let mut args = vec!["run"];
        args.extend_from_slice(extra);
        let o = common::versekit(&config, &out, &args);
        ensure!(common::code(&o) == 0, "run {extra:?} exited {}: {}", common::code(&o), common::stderr(&o));
        Ok(common::tree(&out))
    };
    let a = run("a", &[])?;
    let b = run("b", &[])?;
    let same = common::differing(&a, &b);
    ensure!(same.is_empty(), "same-seed runs differ in {same:?}");
    let c = run("c", &["--seed", "12"])?;
    let diff = common::differing(&a, &c);
    let stray: Vec<&String> = diff.iter().filter(|p| !common::seed_dependent(p)).collect();
    ensure!(stray.is_empty(), "seed change touched {stray:?}");
    let cv_changed = diff.iter().filter(|p| p.starts_with("splits/") && p.ends_with(".manifest")).count();
    ensure!(cv_changed == 5, "{cv_changed} CV manifests changed, expected 5");
    ensure!(diff.iter().any(|p| p.starts_with("subword/")), "subword models ignore the seed");
    Ok(format!("{} files identical across same-seed runs; seed change touched {} seed-dependent files", a.len(), diff.len()))
}

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    check: fn() -> Check,
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, name: "canonical index", limit: Duration::from_secs(1), check: c1_canonical_index },
    Criterion { id: 2, name: "extraction format", limit: Duration::from_secs(1), check: c2_extraction_golden },
    Criterion { id: 3, name: "cleaning", limit: Duration::from_secs(10), check: c3_cleaning },
    Criterion { id: 4, name: "alignment correctness", limit: Duration::from_secs(60), check: c4_alignment },
    Criterion { id: 5, name: "pairing replay", limit: Duration::from_secs(1), check: c5_pairing },
    Criterion { id: 6, name: "split contracts", limit: Duration::from_secs(10), check: c6_splits },
    Criterion { id: 7, name: "metric oracles", limit: Duration::from_secs(30), check: c7_metrics },
    Criterion { id: 8, name: "SMT baseline sanity", limit: Duration::from_secs(30), check: c8_smt },
    Criterion { id: 9, name: "end-to-end determinism", limit: Duration::from_secs(120), check: c9_determinism },
];

fn main() {
    let mut failed = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or("panicked".into()))
        });
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; took longer than {:?}", c.limit)),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "{} criterion {}: {} ({:.2}s, limit {}s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
