//! fetch, extract, clean and stats.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use rayon::prelude::*;
use versekit::extract::{corpus_stats, observed_verses, TranslationMeta};
use versekit::textclean::CLEAN_TSV_HEADER;
use versekit::versification::infer_scheme;
use versekit::{build_extract, clean_extract, parse_usfm, split_books, ExtractFile, UsfmDocument};

use crate::artifact::{sha256_hex, write_atomic, Meta, Provenance, Status};
use crate::corpus::{CorpusRow, Source};
use crate::error::{CliError, Result};
use crate::pipeline::{Ctx, Outcome, Versification};

const FETCH_ATTEMPTS: u32 = 3;

fn read_local(path: &Path) -> Result<Vec<u8>> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let mut out = Vec::new();
        for f in files {
            let mut b = std::fs::read(&f).map_err(|e| CliError::io(&f, e))?;
            if !b.ends_with(b"\n") {
                b.push(b'\n');
            }
            out.extend(b);
        }
        Ok(out)
    } else {
        std::fs::read(path).map_err(|e| CliError::io(path, e))
    }
}

/// Download with the system `curl`, retrying with doubling delays.
fn download(url: &str) -> Result<Vec<u8>> {
    let mut delay = Duration::from_millis(500);
    let mut last = String::new();
    for attempt in 1..=FETCH_ATTEMPTS {
        match Command::new("curl").args(["-fsSL", "--max-time", "120", url]).output() {
            Ok(o) if o.status.success() => return Ok(o.stdout),
            Ok(o) => last = String::from_utf8_lossy(&o.stderr).trim().to_string(),
            Err(e) => last = format!("cannot run curl: {e}"),
        }
        log::warn!("event=fetch_retry url={url} attempt={attempt} error={last:?}");
        if attempt < FETCH_ATTEMPTS {
            std::thread::sleep(delay);
            delay *= 2;
        }
    }
    Err(CliError::Data(format!("{url}: unreachable after {FETCH_ATTEMPTS} attempts ({last})")))
}

fn fetch_row(ctx: &Ctx, row: &CorpusRow) -> Result<Status> {
    let dest = ctx.bundle_path(&row.id);
    let existing = std::fs::read(&dest).ok();
    if let (Some(have), Some(want)) = (&existing, &row.sha256) {
        if sha256_hex(have) == *want {
            return Ok(Status::Cached);
        }
    }
    let bytes = match &row.source {
        Source::Path(p) => read_local(p)?,
        Source::Url(u) => {
            if existing.is_some() && row.sha256.is_none() {
                return Ok(Status::Cached);
            }
            download(u)?
        }
    };
    if let Some(want) = &row.sha256 {
        let got = sha256_hex(&bytes);
        if got != *want {
            return Err(CliError::Data(format!("{}: checksum mismatch (manifest {want}, fetched {got})", row.id)));
        }
    }
    if existing.as_deref() == Some(bytes.as_slice()) {
        return Ok(Status::Cached);
    }
    write_atomic(&dest, &bytes)?;
    Ok(Status::Written)
}

pub fn fetch(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let rows = ctx.rows();
    let results: Vec<Result<Status>> = rows.par_iter().map(|r| fetch_row(ctx, r)).collect();
    for (row, r) in rows.iter().zip(results) {
        let label = format!("corpus/{}.usfm", row.id);
        match r {
            Ok(s) => {
                log::info!("event=fetch id={} status={s:?} license={:?}", row.id, row.license.tag());
                ctx.store.record(&label, s);
            }
            Err(e) => {
                ctx.store.mark_failed(&label);
                out.fail(e);
            }
        }
    }
    Ok(())
}

/// Split a bundle at `\id` markers and parse each book.
pub fn parse_bundle(id: &str, bytes: &[u8]) -> Result<Vec<UsfmDocument>> {
    let books = split_books(bytes);
    if books.is_empty() {
        return Err(CliError::Data(format!("{id}: no \\id marker in the corpus file")));
    }
    books.into_iter().map(|b| parse_usfm(b).map_err(|e| CliError::Data(format!("{id}: {e}")))).collect()
}

fn extract_row(ctx: &Ctx, vers: &Versification, row: &CorpusRow) -> Result<usize> {
    let id = &row.id;
    let bundle = ctx.bundle_path(id);
    let bytes = std::fs::read(&bundle)
        .map_err(|_| CliError::MissingPrerequisite { path: bundle.display().to_string(), command: "fetch" })?;
    let inputs = sha256_hex(&bytes);
    let fp = ctx.fp_extract(id)?;
    let rel = format!("extract/{}", ExtractFile::file_name(id));
    let warn_rel = format!("extract/{id}.warnings.txt");
    let rels = [rel.clone(), warn_rel.clone()];
    if rels.iter().all(|r| ctx.store.is_fresh(r, &fp, &inputs)) {
        ctx.store.mark_cached(&rels);
        return Ok(0);
    }
    let docs = parse_bundle(id, &bytes)?;
    let scheme = match ctx.scheme_override(id) {
        Some(s) => s,
        None => {
            let observed: BTreeSet<_> = docs.iter().flat_map(observed_verses).collect();
            let tables: Vec<_> = vers.tables.iter().collect();
            infer_scheme(&observed, &tables).map_err(|e| CliError::Data(format!("{id}: {e}")))?.scheme
        }
    };
    let (file, warnings) = build_extract(id, &docs, vers.table(scheme), &vers.index).map_err(|e| CliError::Data(format!("{id}: {e}")))?;
    let prov = Provenance::new("extract", &fp, &inputs)
        .info("scheme", scheme.name())
        .info("license", row.license)
        .info("books", docs.len())
        .info("verses", file.nonempty_count());
    ctx.store.write(&rel, file.to_text().as_bytes(), &prov)?;
    let wtext: String = warnings.iter().map(|w| format!("{w}\n")).collect();
    ctx.store.write(&warn_rel, wtext.as_bytes(), &prov)?;
    log::info!("event=extract id={id} scheme={} verses={} warnings={}", scheme.name(), file.nonempty_count(), warnings.len());
    Ok(warnings.len())
}

fn vref_text(vers: &Versification) -> String {
    vers.index.iter().map(|v| format!("{v}\n")).collect()
}

pub fn extract(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let vers = ctx.versification()?;
    let vfp = crate::artifact::Fingerprint::new("vref").add("versification", &vers.hash).finish();
    ctx.store.write("extract/vref.txt", vref_text(vers).as_bytes(), &Provenance::new("extract", &vfp, &vers.hash))?;
    let rows = ctx.rows();
    let results: Vec<Result<usize>> = rows.par_iter().map(|r| extract_row(ctx, vers, r)).collect();
    for (row, r) in rows.iter().zip(results) {
        match r {
            Ok(n) if n > 0 => out.warn(format!("{}: {n} extraction warnings (see extract/{}.warnings.txt)", row.id, row.id)),
            Ok(_) => {}
            Err(e) => {
                ctx.store.mark_failed(&format!("extract/{}.txt", row.id));
                out.fail(e);
            }
        }
    }
    Ok(())
}

/// A cleaned extract, checked against the current config.
pub fn load_clean(ctx: &Ctx, id: &str) -> Result<(ExtractFile, Meta)> {
    let rel = format!("clean/{}", ExtractFile::file_name(id));
    let (text, meta) = ctx.store.read_checked_text(&rel, &ctx.fp_clean(id)?, "clean")?;
    let len = ctx.versification()?.index.len();
    let f = ExtractFile::parse(id, &text, len).map_err(|e| CliError::Data(format!("{rel}: {e}")))?;
    Ok((f, meta))
}

fn clean_row(ctx: &Ctx, vers: &Versification, id: &str) -> Result<()> {
    let src_rel = format!("extract/{}", ExtractFile::file_name(id));
    let (text, meta) = ctx.store.read_checked_text(&src_rel, &ctx.fp_extract(id)?, "extract")?;
    let fp = ctx.fp_clean(id)?;
    let rel = format!("clean/{}", ExtractFile::file_name(id));
    let rep_rel = format!("clean/{id}.report.tsv");
    let rels = [rel.clone(), rep_rel.clone()];
    if rels.iter().all(|r| ctx.store.is_fresh(r, &fp, &meta.sha256)) {
        ctx.store.mark_cached(&rels);
        return Ok(());
    }
    let ex = ExtractFile::parse(id, &text, vers.index.len()).map_err(|e| CliError::Data(format!("{src_rel}: {e}")))?;
    let opt_in: BTreeSet<String> = ctx.opt_in(id).into_iter().collect();
    for r in &opt_in {
        if ctx.rules.get(r).is_none() {
            return Err(CliError::Config(format!("clean.opt_in.{id}: unknown rule {r}")));
        }
    }
    let (cleaned, report) = clean_extract(&ex, &ctx.rules, &opt_in);
    if cleaned.lines.len() != ex.lines.len() {
        return Err(CliError::Internal(format!("{id}: cleaning changed the line count")));
    }
    let prov = Provenance::new("clean", &fp, &meta.sha256)
        .info("script", report.dominant_script.as_deref().unwrap_or("mixed"))
        .info("changes", report.total_changes());
    ctx.store.write(&rel, cleaned.to_text().as_bytes(), &prov)?;
    let mut tsv = String::from(CLEAN_TSV_HEADER);
    tsv.push_str(&report.tsv_rows(&ctx.rules));
    ctx.store.write(&rep_rel, tsv.as_bytes(), &prov)?;
    log::info!("event=clean id={id} summary={:?}", report.summary());
    Ok(())
}

pub fn clean(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let vers = ctx.versification()?;
    let rows = ctx.rows();
    let results: Vec<Result<()>> = rows.par_iter().map(|r| clean_row(ctx, vers, &r.id)).collect();
    for (row, r) in rows.iter().zip(results) {
        if let Err(e) = r {
            ctx.store.mark_failed(&format!("clean/{}.txt", row.id));
            out.fail(e);
        }
    }
    Ok(())
}

fn tally_tsv(header: &str, m: &BTreeMap<String, usize>) -> String {
    let mut s = format!("{header}\ttranslations\n");
    for (k, v) in m {
        s.push_str(&format!("{k}\t{v}\n"));
    }
    s
}

/// Verse coverage per translation and tallies by family, country and license.
pub fn stats(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let vers = ctx.versification()?;
    let rows = ctx.rows();
    let mut extracts = Vec::new();
    let mut input_hashes = String::new();
    for r in &rows {
        match load_clean(ctx, &r.id) {
            Ok((f, m)) => {
                input_hashes.push_str(&m.sha256);
                extracts.push(f);
            }
            Err(e) => out.fail(e),
        }
    }
    if !out.errors.is_empty() {
        return Ok(());
    }
    let fp = ctx.fp_stats()?;
    let inputs = sha256_hex(input_hashes.as_bytes());
    let rels = ["stats/sections.tsv", "stats/families.tsv", "stats/countries.tsv", "stats/licenses.tsv"].map(String::from);
    if rels.iter().all(|r| ctx.store.is_fresh(r, &fp, &inputs)) {
        ctx.store.mark_cached(&rels);
        return Ok(());
    }
    let meta: BTreeMap<String, TranslationMeta> = rows
        .iter()
        .filter(|r| !r.family.is_empty() || !r.country.is_empty())
        .map(|r| (r.id.clone(), TranslationMeta { id: r.id.clone(), family: r.family.clone(), country: r.country.clone() }))
        .collect();
    let refs: Vec<&ExtractFile> = extracts.iter().collect();
    let st = corpus_stats(&refs, &meta, &vers.index);
    let mut sections = String::from("translation\tlicense\tot\tnt\tdt\ttotal\n");
    for r in &rows {
        let c = st.per_translation.get(&r.id).copied().unwrap_or_default();
        sections.push_str(&format!("{}\t{}\t{}\t{}\t{}\t{}\n", r.id, r.license, c.ot, c.nt, c.dt, c.total()));
    }
    let mut licenses: BTreeMap<String, usize> = BTreeMap::new();
    for r in &rows {
        *licenses.entry(r.license.tag().to_string()).or_default() += 1;
    }
    let prov = Provenance::new("stats", &fp, &inputs);
    ctx.store.write(&rels[0], sections.as_bytes(), &prov)?;
    ctx.store.write(&rels[1], tally_tsv("family", &st.by_family).as_bytes(), &prov)?;
    ctx.store.write(&rels[2], tally_tsv("country", &st.by_country).as_bytes(), &prov)?;
    ctx.store.write(&rels[3], tally_tsv("license", &licenses).as_bytes(), &prov)?;
    log::info!("event=stats translations={}", rows.len());
    Ok(())
}
