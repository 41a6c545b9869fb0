use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use versekit::align::{train_fast_align, train_hmm, train_ibm1, HmmOptions, Ibm2Options};
use versekit::metrics::{chrf3, SubwordOptions};
use versekit::textclean::Cleaner;
use versekit::{bleu, builtin_table, canonical_index, spbleu, ter, train_subword, BleuMode, CleanContext, RuleSet, VersificationScheme};
use versekit_bench::{alignment_corpus, cleaning_lines, scoring_lines};

fn index(c: &mut Criterion) {
    let table = builtin_table(VersificationScheme::Original);
    c.bench_function("canonical_index", |b| b.iter(|| canonical_index(black_box(table)).unwrap()));
}

fn cleaning(c: &mut Criterion) {
    let lines = cleaning_lines(2_000);
    let ctx = CleanContext::with_script("Latin");
    let cleaner = Cleaner::new(RuleSet::builtin(), &ctx);
    c.bench_function("clean_2k_lines", |b| b.iter(|| lines.iter().map(|l| cleaner.clean(l).0.len()).sum::<usize>()));
}

fn alignment(c: &mut Criterion) {
    let corpus = alignment_corpus(2_000);
    let mut g = c.benchmark_group("align_2k_pairs");
    g.sample_size(10);
    g.bench_function("ibm1_5_iters", |b| b.iter(|| train_ibm1(&corpus, 5).unwrap()));
    let init = train_ibm1(&corpus, 5).unwrap().model;
    g.bench_function("hmm_5_iters", |b| b.iter(|| train_hmm(&corpus, &init, HmmOptions::default()).unwrap()));
    g.bench_function("ibm2_diag", |b| b.iter(|| train_fast_align(&corpus, Ibm2Options::default()).unwrap()));
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let (hyps, refs) = scoring_lines(2_000);
    let ht: Vec<Vec<&str>> = hyps.iter().map(|s| s.split(' ').collect()).collect();
    let rt: Vec<Vec<&str>> = refs.iter().map(|s| s.split(' ').collect()).collect();
    let hs: Vec<&str> = hyps.iter().map(String::as_str).collect();
    let rs: Vec<&str> = refs.iter().map(String::as_str).collect();
    let mut g = c.benchmark_group("metrics_2k_lines");
    g.bench_function("bleu", |b| b.iter(|| bleu(&ht, &rt, BleuMode::Corpus).unwrap()));
    g.bench_function("chrf3", |b| b.iter(|| chrf3(&hs, &rs).unwrap()));
    g.bench_function("ter", |b| b.iter(|| ht.iter().zip(&rt).map(|(h, r)| ter(h, r).unwrap().edits).sum::<usize>()));
    let model = train_subword(&rs, &SubwordOptions { vocab_size: 500, ..Default::default() }).unwrap();
    g.bench_function("spbleu", |b| b.iter(|| spbleu(&hs, &rs, &model).unwrap()));
    g.finish();
}

criterion_group!(benches, index, cleaning, alignment, metrics);
criterion_main!(benches);
