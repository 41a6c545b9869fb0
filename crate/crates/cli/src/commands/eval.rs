//! pairs, split, align and score.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use versekit::align::{lexical_table, score_pair, smt_decode, train_fast_align, AnyModel, HmmOptions, Ibm2Options, TokenizedCorpus};
use versekit::metrics::{score_hypotheses, train_subword, MetricError, ScoreConfig, ScoreReport, SubwordModel, SubwordOptions};
use versekit::tasks::{build_book_split, build_cv_splits, select_pairing, SplitManifest, TaskKind, TaskSpec};
use versekit::{tokenize, ExtractFile, VerseRef};

use crate::artifact::{sha256_hex, Fingerprint, Meta, Provenance};
use crate::error::{CliError, Result};
use crate::pipeline::{Ctx, Outcome, Pairing, PlannedSplit};

use super::corpus::load_clean;

fn family_pairs(ctx: &Ctx, path: &Path, out: &mut Outcome) -> Result<()> {
    let (family, hash) = ctx.load_family(path)?;
    let name = Ctx::family_name(path);
    let fp = ctx.fp_pairs(&family, &hash)?;
    let mut set = family.candidate_set();
    let absent: Vec<String> = set.candidates.iter().filter(|c| !ctx.has_translation(&c.id)).map(|c| c.id.clone()).collect();
    if !absent.is_empty() {
        out.warn(format!("{name}: candidates not in the corpus: {}", absent.join(", ")));
    }
    set.candidates.retain(|c| ctx.has_translation(&c.id));
    let mut extracts: BTreeMap<String, ExtractFile> = BTreeMap::new();
    let mut inputs = String::new();
    for c in &set.candidates {
        let (f, m) = load_clean(ctx, &c.id)?;
        inputs.push_str(&m.sha256);
        extracts.insert(c.id.clone(), f);
    }
    let inputs = sha256_hex(inputs.as_bytes());
    let rels = [Ctx::pairs_rel(&name), format!("pairs/{name}.scores.tsv"), format!("pairs/{name}.audit.tsv")];
    if rels.iter().all(|r| ctx.store.is_fresh(r, &fp, &inputs)) {
        ctx.store.mark_cached(&rels);
        return Ok(());
    }

    let ids: Vec<&String> = extracts.keys().collect();
    let mut todo = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            if set.score(a, b).is_none() {
                todo.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    let hmm = HmmOptions { iterations: ctx.config.raw.pairs.hmm_iterations, ..HmmOptions::default() };
    let ibm1 = ctx.config.raw.pairs.ibm1_iterations;
    let computed: Vec<Option<versekit::align::SymmetricScore>> = todo
        .par_iter()
        .map(|(a, b)| {
            let corpus = TokenizedCorpus::from_extracts(&extracts[a], &extracts[b]);
            if corpus.is_empty() {
                None
            } else {
                score_pair(&corpus, ibm1, hmm).ok()
            }
        })
        .collect();
    let mut tsv = String::from("a\tb\tscore\tforward\tbackward\torigin\n");
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            if let Some(s) = set.score(a, b) {
                tsv.push_str(&format!("{a}\t{b}\t{s:.4}\t-\t-\tgiven\n"));
            }
        }
    }
    for ((a, b), s) in todo.iter().zip(&computed) {
        match s {
            Some(s) => {
                tsv.push_str(&format!("{a}\t{b}\t{:.4}\t{:.4}\t{:.4}\tcomputed\n", s.score, s.forward, s.backward));
                set.set_score(a, b, s.score);
            }
            None => tsv.push_str(&format!("{a}\t{b}\t-\t-\t-\tno shared verses\n")),
        }
    }
    let decision = select_pairing(&set, &family.rules).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
    let replayed = decision.replay().map_err(|e| CliError::Internal(format!("{name}: {e}")))?;
    if replayed != (decision.source.clone(), decision.target.clone(), decision.related.clone()) {
        return Err(CliError::Internal(format!("{name}: audit replay disagrees with the decision")));
    }
    let toml_text = toml::to_string(&decision).map_err(|e| CliError::Internal(e.to_string()))?;
    let prov = Provenance::new("pairs", &fp, &inputs);
    ctx.store.write(&rels[0], toml_text.as_bytes(), &prov)?;
    ctx.store.write(&rels[1], tsv.as_bytes(), &prov)?;
    ctx.store.write(&rels[2], decision.audit_text().as_bytes(), &prov)?;
    log::info!(
        "event=pairs family={name} source={} target={} related={} computed_scores={}",
        decision.source,
        decision.target,
        decision.related,
        todo.len()
    );
    Ok(())
}

pub fn pairs(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    for path in &ctx.config.families {
        let r = family_pairs(ctx, path, out);
        if let Err(e) = r {
            ctx.store.mark_failed(&Ctx::pairs_rel(&Ctx::family_name(path)));
            out.fail(e);
        }
    }
    Ok(())
}

struct PairTexts {
    source: (ExtractFile, Meta),
    target: (ExtractFile, Meta),
    related: Option<(ExtractFile, Meta)>,
}

fn pair_texts(ctx: &Ctx, p: &Pairing, with_related: bool) -> Result<PairTexts> {
    let related = match (&p.related, with_related) {
        (Some(r), true) => Some(load_clean(ctx, r)?),
        _ => None,
    };
    Ok(PairTexts { source: load_clean(ctx, &p.source)?, target: load_clean(ctx, &p.target)?, related })
}

impl PairTexts {
    fn inputs(&self) -> String {
        let mut s = format!("{}{}", self.source.1.sha256, self.target.1.sha256);
        if let Some(r) = &self.related {
            s.push_str(&r.1.sha256);
        }
        sha256_hex(s.as_bytes())
    }
}

fn split_group(ctx: &Ctx, group: &[&PlannedSplit], out: &mut Outcome) -> Result<()> {
    let first = group[0];
    let texts = pair_texts(ctx, &first.pairing, first.task.is_related())?;
    let inputs = texts.inputs();
    let rels: Vec<String> = group.iter().map(|s| s.rel.clone()).collect();
    if rels.iter().all(|r| ctx.store.is_fresh(r, &first.fingerprint, &inputs)) {
        ctx.store.mark_cached(&rels);
        return Ok(());
    }
    let index = &ctx.versification()?.index;
    let data = |e: versekit::tasks::TaskError| CliError::Data(format!("{} {}: {e}", first.pairing.name, first.task));
    let manifests = if first.task == TaskKind::Cv {
        build_cv_splits(&texts.source.0, &texts.target.0, index, ctx.config.cv_params()).map_err(data)?
    } else {
        let spec = TaskSpec::book_task(first.task.clone()).map_err(data)?;
        vec![build_book_split(&spec, &texts.source.0, &texts.target.0, texts.related.as_ref().map(|r| &r.0), index).map_err(data)?]
    };
    if manifests.len() != group.len() {
        return Err(CliError::Internal(format!("{} {}: planned {} manifests, built {}", first.pairing.name, first.task, group.len(), manifests.len())));
    }
    for (mut m, planned) in manifests.into_iter().zip(group) {
        m.fingerprint = Some(planned.fingerprint.clone());
        let inv = |e: versekit::tasks::TaskError| CliError::Internal(format!("{}: {e}", planned.rel));
        m.validate().map_err(inv)?;
        m.check_against(&texts.source.0, &texts.target.0, texts.related.as_ref().map(|r| &r.0), index).map_err(inv)?;
        if !m.missing_test_books.is_empty() {
            let books: Vec<String> = m.missing_test_books.iter().map(|b| b.to_string()).collect();
            out.warn(format!("{}: no target text for test books {}", planned.rel, books.join(" ")));
        }
        let mut prov = Provenance::new("split", &planned.fingerprint, &inputs)
            .info("train", m.train.len())
            .info("validation", m.validation.len())
            .info("test", m.test.len());
        if planned.task == TaskKind::Cv {
            prov = prov.seed(ctx.config.seed());
        }
        ctx.store.write(&planned.rel, m.to_text().as_bytes(), &prov)?;
        log::info!("event=split manifest={} train={} test={}", planned.rel, m.train.len(), m.test.len());
    }
    Ok(())
}

fn planned(ctx: &Ctx, out: &mut Outcome) -> Result<Vec<PlannedSplit>> {
    let pairings = ctx.pairings()?;
    let (plan, skipped) = ctx.plan(&pairings)?;
    for s in skipped {
        out.warn(s);
    }
    Ok(plan)
}

pub fn split(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let plan = planned(ctx, out)?;
    let mut groups: Vec<Vec<&PlannedSplit>> = Vec::new();
    for p in &plan {
        match groups.last_mut() {
            Some(g) if g[0].pairing.name == p.pairing.name && g[0].task == p.task => g.push(p),
            _ => groups.push(vec![p]),
        }
    }
    for g in groups {
        if let Err(e) = split_group(ctx, &g, out) {
            for s in &g {
                ctx.store.mark_failed(&s.rel);
            }
            out.fail(e);
        }
    }
    Ok(())
}

fn load_manifest(ctx: &Ctx, s: &PlannedSplit) -> Result<(SplitManifest, Meta)> {
    let (text, meta) = ctx.store.read_checked_text(&s.rel, &s.fingerprint, "split")?;
    let m = SplitManifest::parse(&text).map_err(|e| CliError::Data(format!("{}: {e}", s.rel)))?;
    if m.fingerprint.as_deref() != Some(s.fingerprint.as_str()) {
        return Err(CliError::FingerprintMismatch {
            path: s.rel.clone(),
            found: m.fingerprint.unwrap_or_default(),
            expected: s.fingerprint.clone(),
            command: "split",
        });
    }
    Ok((m, meta))
}

fn text_at<'a>(f: &'a ExtractFile, index: &versekit::CanonicalIndex, v: &VerseRef) -> Result<&'a str> {
    f.get(index, v)
        .and_then(|l| l.text())
        .ok_or_else(|| CliError::Data(format!("{v} has no text in {}", f.translation_id)))
}

fn align_rels(s: &PlannedSplit) -> [String; 2] {
    let base = format!("align/{}/{}", s.pairing.name, s.stem());
    [format!("{base}.hyp.txt"), format!("{base}.model")]
}

/// Train the diagonal IBM2 baseline on a split's training verses and decode
/// its test verses word by word.
fn align_one(ctx: &Ctx, s: &PlannedSplit) -> Result<()> {
    let (m, mmeta) = load_manifest(ctx, s)?;
    let texts = pair_texts(ctx, &s.pairing, s.task.is_related())?;
    let fp = ctx.fp_align(s);
    let inputs = sha256_hex(format!("{}{}", mmeta.sha256, texts.inputs()).as_bytes());
    let rels = align_rels(s);
    if rels.iter().all(|r| ctx.store.is_fresh(r, &fp, &inputs)) {
        ctx.store.mark_cached(&rels);
        return Ok(());
    }
    let index = &ctx.versification()?.index;
    let (src, tgt) = (&texts.source.0, &texts.target.0);
    let mut pairs: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for v in &m.train {
        pairs.push((tokenize(text_at(src, index, v)?), tokenize(text_at(tgt, index, v)?)));
    }
    if let (Some(list), Some((rel, _))) = (&m.related_train, &texts.related) {
        for v in list {
            pairs.push((tokenize(text_at(src, index, v)?), tokenize(text_at(rel, index, v)?)));
        }
    }
    // Related-language pairs inform alignment but must not supply output words.
    let target_vocab: HashSet<String> = pairs[..m.train.len()].iter().flat_map(|p| p.1.iter().cloned()).collect();
    let corpus = TokenizedCorpus::from_tokens(&pairs);
    let opts = Ibm2Options { iterations: ctx.config.raw.align.iterations, ..Ibm2Options::default() };
    let trained = train_fast_align(&corpus, opts).map_err(|e| CliError::Data(format!("{}: {e}", s.rel)))?;
    let mut table = lexical_table(&trained.model.lex);
    if m.related_train.is_some() {
        table = table.restricted_to(&target_vocab);
    }
    let mut hyp = String::new();
    for v in &m.test {
        hyp.push_str(&smt_decode(text_at(src, index, v)?, &table));
        hyp.push('\n');
    }
    let prov = Provenance::new("align", &fp, &inputs).info("train_pairs", corpus.len()).info("test", m.test.len());
    ctx.store.write(&rels[0], hyp.as_bytes(), &prov)?;
    ctx.store.write(&rels[1], AnyModel::Ibm2(trained.model).to_text().as_bytes(), &prov)?;
    log::info!("event=align manifest={} train_pairs={} test={}", s.rel, corpus.len(), m.test.len());
    Ok(())
}

pub fn align(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let plan = planned(ctx, out)?;
    for s in &plan {
        if let Err(e) = align_one(ctx, s) {
            ctx.store.mark_failed(&align_rels(s)[0]);
            out.fail(e);
        }
    }
    Ok(())
}

/// The subword model for a target translation, trained on its cleaned text.
pub fn subword_model(ctx: &Ctx, target: &str) -> Result<SubwordModel> {
    let rel = format!("subword/{target}.model");
    let fp = ctx.fp_subword(target)?;
    let (clean, cmeta) = load_clean(ctx, target)?;
    if ctx.store.is_fresh(&rel, &fp, &cmeta.sha256) {
        let (text, _) = ctx.store.read_checked_text(&rel, &fp, "score")?;
        ctx.store.mark_cached(&[rel.clone()]);
        return SubwordModel::from_text(&text).map_err(|e| CliError::Data(format!("{rel}: {e}")));
    }
    let lines: Vec<&str> = clean.lines.iter().filter_map(|l| l.text()).collect();
    let opts = SubwordOptions { vocab_size: ctx.config.raw.metrics.vocab_size, seed: ctx.config.seed(), ..SubwordOptions::default() };
    let model = train_subword(&lines, &opts).map_err(|e| CliError::Data(format!("{rel}: {e}")))?;
    let prov = Provenance::new("score", &fp, &cmeta.sha256).seed(ctx.config.seed()).info("pieces", model.len());
    ctx.store.write(&rel, model.to_text().as_bytes(), &prov)?;
    Ok(model)
}

fn report_files(base: &str, report: &ScoreReport) -> Vec<(String, String)> {
    vec![
        (format!("{base}/corpus.tsv"), report.corpus_tsv()),
        (format!("{base}/verses.tsv"), report.per_verse_tsv()),
        (format!("{base}/cdf.tsv"), report.cdf_tsv()),
        (format!("{base}/summary.txt"), report.summary()),
    ]
}

fn metric_error(what: &str, e: MetricError) -> CliError {
    match e {
        MetricError::LengthMismatch { hyps, refs } => {
            CliError::Data(format!("{what}: {hyps} hypothesis lines, expected {refs} (one per test verse)"))
        }
        e => CliError::Data(format!("{what}: {e}")),
    }
}

fn hyp_lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

fn score_one(ctx: &Ctx, s: &PlannedSplit, models: &BTreeMap<String, SubwordModel>) -> Result<Vec<(String, f64)>> {
    let (m, _) = load_manifest(ctx, s)?;
    let afp = ctx.fp_align(s);
    let (hyp, hmeta) = ctx.store.read_checked_text(&align_rels(s)[0], &afp, "align")?;
    let (target, tmeta) = load_clean(ctx, &s.pairing.target)?;
    let model = models.get(&s.pairing.target).ok_or_else(|| CliError::Internal("subword model not loaded".into()))?;
    let fp = ctx.fp_score(&afp, &s.pairing.target)?;
    let inputs = sha256_hex(format!("{}{}{}", hmeta.sha256, tmeta.sha256, model.hash()).as_bytes());
    let base = format!("score/{}/{}", s.pairing.name, s.stem());
    let names = ["corpus.tsv", "verses.tsv", "cdf.tsv", "summary.txt"].map(|n| format!("{base}/{n}"));
    if !names.iter().all(|r| ctx.store.is_fresh(r, &fp, &inputs)) {
        let config = ScoreConfig { subword: model.clone(), cdf_step: ctx.config.raw.metrics.cdf_step };
        let report = score_hypotheses(&hyp_lines(&hyp), &target, &m.test, &ctx.versification()?.index, &config)
            .map_err(|e| metric_error(&align_rels(s)[0], e))?;
        let prov = Provenance::new("score", &fp, &inputs).info("subword_model", model.hash());
        for (rel, body) in report_files(&base, &report) {
            ctx.store.write(&rel, body.as_bytes(), &prov)?;
        }
        log::info!("event=score manifest={} bleu={:.2} chrf3={:.2}", s.rel, report.corpus.bleu.score, report.corpus.chrf3.score);
    } else {
        ctx.store.mark_cached(&names);
    }
    let (corpus, _) = ctx.store.read_checked_text(&names[0], &fp, "score")?;
    Ok(corpus
        .lines()
        .skip(1)
        .filter_map(|l| l.split_once('\t'))
        .filter_map(|(k, v)| v.parse().ok().map(|v| (k.to_string(), v)))
        .collect())
}

pub fn score(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let plan = planned(ctx, out)?;
    let mut models = BTreeMap::new();
    for s in &plan {
        let t = &s.pairing.target;
        if !models.contains_key(t) {
            match subword_model(ctx, t) {
                Ok(m) => {
                    models.insert(t.clone(), m);
                }
                Err(e) => out.fail(e),
            }
        }
    }
    if !out.errors.is_empty() {
        return Ok(());
    }
    let mut summary = String::from("pairing\ttask\tfold\tbleu\tspbleu\tchrf3\twer\tter\n");
    let mut fp = Fingerprint::new("score-summary");
    for s in &plan {
        match score_one(ctx, s, &models) {
            Ok(vals) => {
                let get = |k: &str| vals.iter().find(|(n, _)| n == k).map_or("-".to_string(), |(_, v)| format!("{v:.4}"));
                let fold = s.fold.map_or("-".to_string(), |f| f.to_string());
                summary.push_str(&format!(
                    "{}\t{}\t{fold}\t{}\t{}\t{}\t{}\t{}\n",
                    s.pairing.name,
                    s.task,
                    get("bleu"),
                    get("spbleu"),
                    get("chrf3"),
                    get("wer"),
                    get("ter")
                ));
                fp.add(&s.rel, ctx.fp_score(&ctx.fp_align(s), &s.pairing.target)?);
            }
            Err(e) => {
                ctx.store.mark_failed(&format!("score/{}/{}", s.pairing.name, s.stem()));
                out.fail(e);
            }
        }
    }
    if out.errors.is_empty() {
        let fp = fp.finish();
        ctx.store.write("score/summary.tsv", summary.as_bytes(), &Provenance::new("score", &fp, &sha256_hex(summary.as_bytes())))?;
    }
    Ok(())
}

/// Score an external hypothesis file against a split manifest's test verses.
pub fn score_external(ctx: &Ctx, manifest: &Path, hyp: &Path) -> Result<String> {
    let m = SplitManifest::load(manifest).map_err(|e| CliError::Data(format!("{}: {e}", manifest.display())))?;
    let text = std::fs::read_to_string(hyp).map_err(|e| CliError::io(hyp, e))?;
    let lines = hyp_lines(&text);
    if lines.len() != m.test.len() {
        return Err(CliError::Data(format!(
            "{}: {} hypothesis lines, expected {} (one per test verse in {})",
            hyp.display(),
            lines.len(),
            m.test.len(),
            manifest.display()
        )));
    }
    let model = subword_model(ctx, &m.target)?;
    let (target, tmeta) = load_clean(ctx, &m.target)?;
    let config = ScoreConfig { subword: model.clone(), cdf_step: ctx.config.raw.metrics.cdf_step };
    let report = score_hypotheses(&lines, &target, &m.test, &ctx.versification()?.index, &config)
        .map_err(|e| metric_error(&hyp.display().to_string(), e))?;
    let stem = hyp.file_stem().map_or("hyp".into(), |s| s.to_string_lossy().into_owned());
    let manifest_text = std::fs::read(manifest).map_err(|e| CliError::io(manifest, e))?;
    let fp = Fingerprint::new("score-external")
        .add("manifest", sha256_hex(&manifest_text))
        .add("subword", ctx.fp_subword(&m.target)?)
        .add("cdf_step", ctx.config.raw.metrics.cdf_step)
        .finish();
    let inputs = sha256_hex(format!("{}{}", sha256_hex(text.as_bytes()), tmeta.sha256).as_bytes());
    let prov = Provenance::new("score", &fp, &inputs).info("subword_model", model.hash());
    for (rel, body) in report_files(&format!("score/external/{stem}"), &report) {
        ctx.store.write(&rel, body.as_bytes(), &prov)?;
    }
    Ok(report.summary())
}
