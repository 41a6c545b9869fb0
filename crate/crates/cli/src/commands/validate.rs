//! Report-only configuration and data checks.

use std::path::Path;

use versekit::book::CanonSection;
use versekit::tasks::PairingConfig;
use versekit::textclean::RuleSet;
use versekit::versification::MappingPolicy;
use versekit::{builtin_index, canonical_index, VersificationScheme, VersificationTable};

use crate::config::PipelineConfig;
use crate::corpus::{CorpusManifest, License, Source};

/// Lines the canonical index must have, and its New Testament share.
pub const INDEX_LINES: usize = 41_899;
pub const NT_LINES: usize = 7_957;

#[derive(Debug, Default)]
pub struct ValidationReport {
    pub checks: Vec<(bool, String, String)>,
}

impl ValidationReport {
    fn ok(&mut self, name: &str, detail: impl Into<String>) {
        self.checks.push((true, name.to_string(), detail.into()));
    }

    fn fail(&mut self, name: &str, detail: impl Into<String>) {
        self.checks.push((false, name.to_string(), detail.into()));
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.0).count()
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for (ok, name, detail) in &self.checks {
            s.push_str(&format!("{}\t{name}\t{detail}\n", if *ok { "ok" } else { "FAIL" }));
        }
        s.push_str(&format!("{} check(s), {} failure(s)\n", self.checks.len(), self.failures()));
        s
    }
}

/// Check an Original table builds the full canonical index.
pub fn check_versification_dir(dir: &Path, report: &mut ValidationReport) {
    let mut org = None;
    for s in VersificationScheme::PRIORITY {
        let path = dir.join(format!("{}.vrs", s.file_stem()));
        let name = format!("versification:{}", s.file_stem());
        match std::fs::read_to_string(&path) {
            Err(e) => report.fail(&name, format!("{}: {e}", path.display())),
            Ok(text) => match VersificationTable::parse(&text, s, MappingPolicy::FirstClaim) {
                Err(e) => report.fail(&name, format!("{}: {e}", path.display())),
                Ok(t) => {
                    report.ok(&name, path.display().to_string());
                    if s == VersificationScheme::Original {
                        org = Some(t);
                    }
                }
            },
        }
    }
    if let Some(t) = org {
        match canonical_index(&t) {
            Ok(index) => {
                let nt = index.section_len(CanonSection::NewTestament);
                if nt == NT_LINES {
                    report.ok("canonical-index", format!("{} lines, {nt} NT", index.len()));
                } else {
                    report.fail("canonical-index", format!("{} lines but {nt} NT lines, expected {NT_LINES}", index.len()));
                }
            }
            Err(e) => report.fail("canonical-index", e.to_string()),
        }
    }
}

pub fn validate(config: &PipelineConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    report.ok("config", format!("{} (config_version {})", config.path.display(), config.raw.config_version));

    match &config.versification_dir {
        Some(dir) => check_versification_dir(dir, &mut report),
        None => {
            let index = builtin_index();
            let nt = index.section_len(CanonSection::NewTestament);
            if index.len() == INDEX_LINES && nt == NT_LINES {
                report.ok("canonical-index", format!("bundled tables: {} lines, {nt} NT", index.len()));
            } else {
                report.fail("canonical-index", format!("bundled tables: {} lines, {nt} NT", index.len()));
            }
        }
    }

    match CorpusManifest::load(&config.corpus_manifest) {
        Err(e) => report.fail("corpus-manifest", e.to_string()),
        Ok(m) => {
            report.ok("corpus-manifest", format!("{} translation(s)", m.rows.len()));
            for r in &m.rows {
                if let Source::Path(p) = &r.source {
                    if !p.exists() && !config.corpus_dir.join(format!("{}.usfm", r.id)).exists() {
                        report.fail("corpus-source", format!("{}: {} does not exist", r.id, p.display()));
                    }
                }
            }
            for id in config.raw.clean.opt_in.keys().chain(config.raw.extract.versification.keys()) {
                if m.get(id).is_none() {
                    report.fail("config-translation", format!("{id} is configured but not in the corpus manifest"));
                }
            }
        }
    }
    for tag in &config.raw.license_allow {
        if let Err(e) = License::parse(tag) {
            report.fail("license-allow", e);
        }
    }

    let rules = match &config.rules {
        None => {
            report.ok("clean-rules", "bundled rules");
            Some(RuleSet::builtin().clone())
        }
        Some(p) => match std::fs::read_to_string(p).map_err(|e| e.to_string()).and_then(|t| RuleSet::parse(&t).map_err(|e| e.to_string())) {
            Ok(r) => {
                report.ok("clean-rules", format!("{}: {} rule(s)", p.display(), r.rules().len()));
                Some(r)
            }
            Err(e) => {
                report.fail("clean-rules", format!("{}: {e}", p.display()));
                None
            }
        },
    };
    if let Some(rules) = rules {
        for (id, list) in &config.raw.clean.opt_in {
            for r in list {
                if rules.get(r).is_none() {
                    report.fail("clean-opt-in", format!("{id}: unknown rule {r}"));
                }
            }
        }
    }

    for f in &config.families {
        match std::fs::read_to_string(f).map_err(|e| e.to_string()).and_then(|t| PairingConfig::from_toml(&t).map_err(|e| e.to_string())) {
            Ok(c) => report.ok("pairing-family", format!("{}: {} candidate(s)", f.display(), c.candidates.len())),
            Err(e) => report.fail("pairing-family", format!("{}: {e}", f.display())),
        }
    }
    let tasks: Vec<String> = config.tasks.iter().map(|t| t.to_string()).collect();
    report.ok("tasks", tasks.join(" "));
    report
}
