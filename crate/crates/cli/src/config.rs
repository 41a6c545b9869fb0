//! Pipeline configuration file (TOML, `config_version = 1`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use versekit::tasks::{CvParams, TaskKind};
use versekit::VersificationScheme;

use crate::error::{CliError, Result};

pub const CONFIG_VERSION: u32 = 1;
/// Overrides `output_dir` when set.
pub const OUTPUT_ENV: &str = "VERSEKIT_OUTPUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub config_version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    pub corpus_manifest: PathBuf,
    pub corpus_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Directory holding `org.vrs`, `eng.vrs`, ...; the bundled tables are
    /// used when absent.
    #[serde(default)]
    pub versification_dir: Option<PathBuf>,
    #[serde(default)]
    pub license_allow: Vec<String>,
    #[serde(default)]
    pub extract: ExtractConfig,
    #[serde(default)]
    pub clean: CleanConfig,
    #[serde(default)]
    pub pairs: PairsConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub align: AlignConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    /// Translation id to versification scheme name; others are inferred.
    #[serde(default)]
    pub versification: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanConfig {
    #[serde(default)]
    pub rules: Option<PathBuf>,
    /// Translation id to opt-in rule ids.
    #[serde(default)]
    pub opt_in: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsConfig {
    #[serde(default)]
    pub families: Vec<PathBuf>,
    #[serde(default = "five")]
    pub ibm1_iterations: usize,
    #[serde(default = "five")]
    pub hmm_iterations: usize,
}

impl Default for PairsConfig {
    fn default() -> Self {
        PairsConfig { families: Vec::new(), ibm1_iterations: 5, hmm_iterations: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPair {
    pub name: String,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub related: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_tasks")]
    pub tasks: Vec<String>,
    #[serde(default = "n250")]
    pub cv_test_size: usize,
    #[serde(default = "n250")]
    pub cv_val_size: usize,
    #[serde(default = "five")]
    pub cv_folds: usize,
    /// Pairs to split in addition to the selected family pairings.
    #[serde(default)]
    pub pairs: Vec<ExplicitPair>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { tasks: default_tasks(), cv_test_size: 250, cv_val_size: 250, cv_folds: 5, pairs: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignConfig {
    #[serde(default = "five")]
    pub iterations: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig { iterations: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default = "vocab")]
    pub vocab_size: usize,
    #[serde(default = "cdf_step")]
    pub cdf_step: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { vocab_size: vocab(), cdf_step: cdf_step() }
    }
}

fn five() -> usize {
    5
}
fn n250() -> usize {
    250
}
fn vocab() -> usize {
    2000
}
fn cdf_step() -> f64 {
    5.0
}
fn default_tasks() -> Vec<String> {
    ["cv", "gospel", "epistles", "nt-completion", "early-ot", "late-ot"].map(String::from).to_vec()
}

/// A loaded config with every path made absolute.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub raw: RawConfig,
    pub path: PathBuf,
    pub corpus_manifest: PathBuf,
    pub corpus_dir: PathBuf,
    pub output_dir: PathBuf,
    pub versification_dir: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub families: Vec<PathBuf>,
    pub tasks: Vec<TaskKind>,
}

pub fn parse_scheme(name: &str) -> Option<VersificationScheme> {
    VersificationScheme::PRIORITY
        .into_iter()
        .find(|s| s.name().eq_ignore_ascii_case(name) || s.file_stem().eq_ignore_ascii_case(name))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let raw: RawConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        PipelineConfig::from_raw(raw, path, &base_dir, std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
    }

    pub fn from_raw(raw: RawConfig, path: &Path, base_dir: &Path, output_override: Option<PathBuf>) -> Result<PipelineConfig> {
        if raw.config_version != CONFIG_VERSION {
            return Err(CliError::Config(format!("config_version {} is not supported (expected {CONFIG_VERSION})", raw.config_version)));
        }
        let abs = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let mut tasks = Vec::new();
        for t in &raw.split.tasks {
            tasks.push(t.parse::<TaskKind>().map_err(|e| CliError::Config(format!("split.tasks: {e}")))?);
        }
        for (id, s) in &raw.extract.versification {
            if parse_scheme(s).is_none() {
                return Err(CliError::Config(format!("extract.versification.{id}: unknown scheme {s:?}")));
            }
        }
        for tag in &raw.license_allow {
            crate::corpus::License::parse(tag).map_err(CliError::Config)?;
        }
        if raw.metrics.cdf_step <= 0.0 {
            return Err(CliError::Config("metrics.cdf_step must be positive".into()));
        }
        Ok(PipelineConfig {
            path: path.to_path_buf(),
            corpus_manifest: abs(&raw.corpus_manifest),
            corpus_dir: abs(&raw.corpus_dir),
            output_dir: output_override.unwrap_or_else(|| abs(&raw.output_dir)),
            versification_dir: raw.versification_dir.as_deref().map(abs),
            rules: raw.clean.rules.as_deref().map(abs),
            families: raw.pairs.families.iter().map(|p| abs(p)).collect(),
            tasks,
            raw,
        })
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    pub fn cv_params(&self) -> CvParams {
        CvParams {
            test_size: self.raw.split.cv_test_size,
            val_size: self.raw.split.cv_val_size,
            folds: self.raw.split.cv_folds,
            seed: self.raw.seed,
        }
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.output_dir.join(rel)
    }
}
