//! Shared state for the commands: loaded config, corpus rows, versification
//! data, and the fingerprint of every artifact the config implies.

use std::path::PathBuf;

use versekit::tasks::{PairingConfig, PairingDecision, SplitManifest, TaskKind, TaskSpec};
use versekit::textclean::RuleSet;
use versekit::versification::MappingPolicy;
use versekit::{builtin_index, builtin_table, canonical_index, CanonicalIndex, VersificationScheme, VersificationTable};

use crate::artifact::{sha256_hex, Fingerprint, Store};
use crate::config::{parse_scheme, PipelineConfig};
use crate::corpus::{CorpusManifest, CorpusRow, License};
use crate::error::{CliError, Result};

pub struct Versification {
    pub tables: Vec<VersificationTable>,
    pub index: CanonicalIndex,
    /// Hash of the table texts, or "builtin".
    pub hash: String,
}

impl Versification {
    pub fn load(dir: Option<&std::path::Path>) -> Result<Versification> {
        let Some(dir) = dir else {
            return Ok(Versification {
                tables: VersificationScheme::PRIORITY.iter().map(|s| builtin_table(*s).clone()).collect(),
                index: builtin_index().clone(),
                hash: "builtin".into(),
            });
        };
        let mut tables = Vec::new();
        let mut all = String::new();
        for s in VersificationScheme::PRIORITY {
            let path = dir.join(format!("{}.vrs", s.file_stem()));
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let t = VersificationTable::parse(&text, s, MappingPolicy::FirstClaim).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            all.push_str(&sha256_hex(text.as_bytes()));
            tables.push(t);
        }
        let org = tables.iter().find(|t| t.scheme() == VersificationScheme::Original).expect("Original is loaded");
        let index = canonical_index(org).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        Ok(Versification { tables, index, hash: sha256_hex(all.as_bytes())[..16].to_string() })
    }

    pub fn table(&self, scheme: VersificationScheme) -> &VersificationTable {
        self.tables.iter().find(|t| t.scheme() == scheme).expect("every scheme is loaded")
    }
}

/// One source/target(/related) pairing to split, align and score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    /// Family file stem or explicit pair name; names the output directories.
    pub name: String,
    pub source: String,
    pub target: String,
    pub related: Option<String>,
    /// Fingerprint of the pairing decision, or "explicit".
    pub origin: String,
}

/// A split manifest the config asks for.
#[derive(Debug, Clone)]
pub struct PlannedSplit {
    pub pairing: Pairing,
    pub task: TaskKind,
    pub fold: Option<usize>,
    pub fingerprint: String,
    /// Path relative to the output root.
    pub rel: String,
}

impl PlannedSplit {
    pub fn stem(&self) -> String {
        let f = self.rel.rsplit('/').next().expect("file name");
        f.trim_end_matches(".manifest").to_string()
    }
}

pub struct Ctx {
    pub config: PipelineConfig,
    pub store: Store,
    pub manifest: CorpusManifest,
    pub allow: Vec<License>,
    pub rules: RuleSet,
    rules_hash: String,
    vers: std::sync::OnceLock<Versification>,
}

impl Ctx {
    pub fn new(config: PipelineConfig, license_allow: &[String]) -> Result<Ctx> {
        let manifest = CorpusManifest::load(&config.corpus_manifest)?;
        let mut allow = Vec::new();
        for t in config.raw.license_allow.iter().chain(license_allow) {
            allow.push(License::parse(t).map_err(CliError::Config)?);
        }
        allow.sort();
        allow.dedup();
        let (rules, rules_hash) = match &config.rules {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                let rules = RuleSet::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                (rules, sha256_hex(text.as_bytes())[..16].to_string())
            }
            None => (RuleSet::builtin().clone(), "builtin".to_string()),
        };
        let store = Store::new(&config.output_dir);
        Ok(Ctx { config, store, manifest, allow, rules, rules_hash, vers: std::sync::OnceLock::new() })
    }

    pub fn versification(&self) -> Result<&Versification> {
        if let Some(v) = self.vers.get() {
            return Ok(v);
        }
        let v = Versification::load(self.config.versification_dir.as_deref())?;
        Ok(self.vers.get_or_init(|| v))
    }

    /// Hash of the versification data without loading the tables.
    fn versification_hash(&self) -> Result<String> {
        match &self.config.versification_dir {
            None => Ok("builtin".into()),
            Some(_) => Ok(self.versification()?.hash.clone()),
        }
    }

    pub fn rows(&self) -> Vec<&CorpusRow> {
        self.manifest.filtered(&self.allow)
    }

    pub fn has_translation(&self, id: &str) -> bool {
        self.rows().iter().any(|r| r.id == id)
    }

    pub fn bundle_path(&self, id: &str) -> PathBuf {
        self.config.corpus_dir.join(format!("{id}.usfm"))
    }

    pub fn scheme_override(&self, id: &str) -> Option<VersificationScheme> {
        self.config.raw.extract.versification.get(id).and_then(|s| parse_scheme(s))
    }

    // Fingerprints. Each covers the config that shapes the artifact and the
    // fingerprints of the artifacts it reads, and nothing else, so a change
    // only invalidates what actually depends on it.

    pub fn fp_extract(&self, id: &str) -> Result<String> {
        let scheme = self.scheme_override(id).map_or("infer".to_string(), |s| s.name().to_string());
        Ok(Fingerprint::new("extract").add("versification", self.versification_hash()?).add("scheme", scheme).finish())
    }

    pub fn opt_in(&self, id: &str) -> Vec<String> {
        let mut v = self.config.raw.clean.opt_in.get(id).cloned().unwrap_or_default();
        v.sort();
        v.dedup();
        v
    }

    pub fn fp_clean(&self, id: &str) -> Result<String> {
        Ok(Fingerprint::new("clean")
            .add("extract", self.fp_extract(id)?)
            .add("rules", &self.rules_hash)
            .add("opt_in", self.opt_in(id).join(","))
            .finish())
    }

    pub fn fp_stats(&self) -> Result<String> {
        let mut f = Fingerprint::new("stats");
        for r in self.rows() {
            f.add(&r.id, format!("{}|{}|{}|{}", self.fp_clean(&r.id)?, r.license, r.family, r.country));
        }
        Ok(f.finish())
    }

    pub fn family_name(path: &std::path::Path) -> String {
        path.file_stem().map_or("family".into(), |s| s.to_string_lossy().into_owned())
    }

    pub fn load_family(&self, path: &std::path::Path) -> Result<(PairingConfig, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg = PairingConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok((cfg, sha256_hex(text.as_bytes())[..16].to_string()))
    }

    pub fn fp_pairs(&self, family: &PairingConfig, file_hash: &str) -> Result<String> {
        let mut f = Fingerprint::new("pairs");
        f.add("family", file_hash)
            .add("ibm1_iterations", self.config.raw.pairs.ibm1_iterations)
            .add("hmm_iterations", self.config.raw.pairs.hmm_iterations);
        for c in &family.candidates {
            if self.has_translation(&c.id) {
                f.add(&c.id, self.fp_clean(&c.id)?);
            }
        }
        Ok(f.finish())
    }

    pub fn pairs_rel(name: &str) -> String {
        format!("pairs/{name}.decision.toml")
    }

    /// Pairings to split: one per family (read from the pairs output) plus
    /// the explicit ones in the config.
    pub fn pairings(&self) -> Result<Vec<Pairing>> {
        let mut out = Vec::new();
        for path in &self.config.families {
            let (family, hash) = self.load_family(path)?;
            let name = Ctx::family_name(path);
            let fp = self.fp_pairs(&family, &hash)?;
            let (text, _) = self.store.read_checked_text(&Ctx::pairs_rel(&name), &fp, "pairs")?;
            let d: PairingDecision = toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", Ctx::pairs_rel(&name))))?;
            out.push(Pairing { name, source: d.source, target: d.target, related: Some(d.related), origin: fp });
        }
        for p in &self.config.raw.split.pairs {
            out.push(Pairing {
                name: p.name.clone(),
                source: p.source.clone(),
                target: p.target.clone(),
                related: p.related.clone(),
                origin: "explicit".into(),
            });
        }
        let mut names: Vec<&str> = out.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("pairing names must be unique".into()));
        }
        Ok(out)
    }

    fn fp_split(&self, p: &Pairing, task: &TaskKind, with_related: bool) -> Result<String> {
        let mut f = Fingerprint::new("split");
        f.add("pairing", &p.origin)
            .add("source", format!("{}:{}", p.source, self.fp_clean(&p.source)?))
            .add("target", format!("{}:{}", p.target, self.fp_clean(&p.target)?))
            .add("task", task);
        if with_related {
            let r = p.related.as_deref().expect("related pairing");
            f.add("related", format!("{r}:{}", self.fp_clean(r)?));
        }
        if *task == TaskKind::Cv {
            let cv = self.config.cv_params();
            f.add("cv", format!("{}/{}/{}/{}", cv.test_size, cv.val_size, cv.folds, cv.seed));
        }
        Ok(f.finish())
    }

    /// Every manifest the config asks for, in a fixed order.
    pub fn plan(&self, pairings: &[Pairing]) -> Result<(Vec<PlannedSplit>, Vec<String>)> {
        let mut out = Vec::new();
        let mut skipped = Vec::new();
        for p in pairings {
            for task in &self.config.tasks {
                if task.is_related() && p.related.is_none() {
                    skipped.push(format!("{}: {task} needs a related translation", p.name));
                    continue;
                }
                let fp = self.fp_split(p, task, task.is_related())?;
                let probe = SplitManifest {
                    task: if *task == TaskKind::Cv {
                        TaskSpec::cv(self.config.cv_params())
                    } else {
                        TaskSpec::book_task(task.clone()).map_err(|e| CliError::Config(e.to_string()))?
                    },
                    source: p.source.clone(),
                    target: p.target.clone(),
                    related: None,
                    fold: None,
                    generator: String::new(),
                    fingerprint: None,
                    train: Vec::new(),
                    validation: Vec::new(),
                    test: Vec::new(),
                    related_train: None,
                    missing_test_books: Vec::new(),
                };
                let folds: Vec<Option<usize>> =
                    if *task == TaskKind::Cv { (0..self.config.cv_params().folds).map(Some).collect() } else { vec![None] };
                for fold in folds {
                    let mut m = probe.clone();
                    m.fold = fold;
                    out.push(PlannedSplit {
                        pairing: p.clone(),
                        task: task.clone(),
                        fold,
                        fingerprint: fp.clone(),
                        rel: format!("splits/{}/{}", p.name, m.file_name()),
                    });
                }
            }
        }
        Ok((out, skipped))
    }

    pub fn fp_align(&self, split: &PlannedSplit) -> String {
        Fingerprint::new("align")
            .add("manifest", &split.fingerprint)
            .add("fold", split.fold.map_or("-".into(), |f| f.to_string()))
            .add("iterations", self.config.raw.align.iterations)
            .finish()
    }

    pub fn fp_subword(&self, target: &str) -> Result<String> {
        Ok(Fingerprint::new("subword")
            .add("clean", self.fp_clean(target)?)
            .add("vocab_size", self.config.raw.metrics.vocab_size)
            .add("seed", self.config.seed())
            .finish())
    }

    pub fn fp_score(&self, align_fp: &str, target: &str) -> Result<String> {
        Ok(Fingerprint::new("score")
            .add("hypotheses", align_fp)
            .add("subword", self.fp_subword(target)?)
            .add("cdf_step", self.config.raw.metrics.cdf_step)
            .finish())
    }

    /// Whole-config fingerprint for run reports.
    pub fn config_fingerprint(&self) -> String {
        let raw = toml::to_string(&self.config.raw).unwrap_or_default();
        let mut f = Fingerprint::new("config");
        f.add("raw", sha256_hex(raw.as_bytes())).add("license_allow", self.allow.iter().map(|l| l.tag()).collect::<Vec<_>>().join(","));
        f.finish()
    }
}

/// Outcome of a command: the errors collected while processing independent
/// rows, and warnings.
#[derive(Debug, Default)]
pub struct Outcome {
    pub errors: Vec<CliError>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn warn(&mut self, w: String) {
        log::warn!("event=warning msg={w:?}");
        self.warnings.push(w);
    }

    pub fn fail(&mut self, e: CliError) {
        log::error!("event=error msg={:?}", e.to_string());
        self.errors.push(e);
    }
}
