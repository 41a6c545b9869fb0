mod artifact;
mod commands;
mod config;
mod corpus;
mod error;
mod pipeline;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::artifact::{RunReport, Status};
use crate::config::PipelineConfig;
use crate::error::{CliError, ExitKind};
use crate::pipeline::{Ctx, Outcome};

#[derive(Parser, Debug)]
#[command(name = "versekit", version, about = "Verse-aligned corpus pipeline: fetch, extract, clean, pair, split, align, score")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[arg(long, global = true, env = "VERSEKIT_CONFIG", default_value = "versekit.toml")]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides `jobs`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Comma-separated license tags to keep, e.g. "CC BY-SA,Public Domain".
    #[arg(long, global = true, value_delimiter = ',')]
    license_allow: Vec<String>,
    /// Run report path; defaults to `<output>/reports/<command>.json`.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone)]
enum Cmd {
    /// Copy or download corpus files listed in the corpus manifest.
    Fetch,
    /// Build one-verse-per-line extracts.
    Extract,
    /// Apply the cleaning rules to the extracts.
    Clean,
    /// Verse coverage and translation tallies.
    Stats,
    /// Score candidate pairs and select source, target and related translations.
    Pairs,
    /// Write train/validation/test manifests.
    Split,
    /// Train the word-alignment baseline and decode the test verses.
    Align,
    /// Score hypotheses; without --hyp, scores the baseline output of every split.
    Score {
        #[arg(long, requires = "hyp")]
        manifest: Option<PathBuf>,
        #[arg(long, requires = "manifest")]
        hyp: Option<PathBuf>,
    },
    /// Check config, versification data, rule files and pairing files.
    Validate,
    /// fetch, extract, clean, stats, pairs, split, align and score in order.
    Run,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Fetch => "fetch",
            Cmd::Extract => "extract",
            Cmd::Clean => "clean",
            Cmd::Stats => "stats",
            Cmd::Pairs => "pairs",
            Cmd::Split => "split",
            Cmd::Align => "align",
            Cmd::Score { .. } => "score",
            Cmd::Validate => "validate",
            Cmd::Run => "run",
        }
    }
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("VERSEKIT_LOG", "info"))
        .format(|buf, rec| writeln!(buf, "level={} {}", rec.level().as_str().to_ascii_lowercase(), rec.args()))
        .init();
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.raw.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.raw.jobs = j;
    }
    Ok(cfg)
}

fn stage(ctx: &Ctx, name: &str, out: &mut Outcome) -> Result<(), CliError> {
    log::info!("event=start command={name}");
    match name {
        "fetch" => commands::fetch(ctx, out),
        "extract" => commands::extract(ctx, out),
        "clean" => commands::clean(ctx, out),
        "stats" => commands::stats(ctx, out),
        "pairs" => commands::pairs(ctx, out),
        "split" => commands::split(ctx, out),
        "align" => commands::align(ctx, out),
        "score" => commands::score(ctx, out),
        other => Err(CliError::Internal(format!("unknown stage {other}"))),
    }
}

const RUN_ORDER: [&str; 8] = ["fetch", "extract", "clean", "stats", "pairs", "split", "align", "score"];

fn execute(cli: &Cli, ctx: &Ctx, out: &mut Outcome) -> Result<(), CliError> {
    match &cli.command {
        Cmd::Run => {
            for name in RUN_ORDER {
                stage(ctx, name, out)?;
                if !out.errors.is_empty() {
                    break;
                }
            }
            Ok(())
        }
        Cmd::Score { manifest: Some(m), hyp: Some(h) } => {
            let summary = commands::score_external(ctx, m, h)?;
            print!("{summary}");
            Ok(())
        }
        c => stage(ctx, c.name(), out),
    }
}

fn exit_for(errors: &[CliError]) -> ExitKind {
    errors.iter().map(CliError::kind).max_by_key(|k| *k as i32).unwrap_or(ExitKind::Ok)
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let name = cli.command.name();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            log::error!("event=error msg={:?}", e.to_string());
            if matches!(cli.command, Cmd::Validate) {
                println!("FAIL\tconfig\t{e}\n1 check(s), 1 failure(s)");
            }
            return ExitCode::from(e.kind() as u8);
        }
    };
    if config.raw.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(config.raw.jobs).build_global() {
            log::warn!("event=warning msg={:?}", e.to_string());
        }
    }
    if matches!(cli.command, Cmd::Validate) {
        let report = commands::validate(&config);
        print!("{}", report.text());
        return ExitCode::from(if report.failures() == 0 { 0 } else { ExitKind::Validation as u8 });
    }

    let ctx = match Ctx::new(config, &cli.license_allow) {
        Ok(c) => c,
        Err(e) => {
            log::error!("event=error msg={:?}", e.to_string());
            return ExitCode::from(e.kind() as u8);
        }
    };
    let mut out = Outcome::default();
    if let Err(e) = execute(&cli, &ctx, &mut out) {
        out.fail(e);
    }
    let code = exit_for(&out.errors) as i32;
    let events = ctx.store.events();
    let count = |s: Status| events.iter().filter(|e| e.status == s).count();
    let report = RunReport {
        tool: format!("versekit {}", env!("CARGO_PKG_VERSION")),
        command: name.to_string(),
        seed: ctx.config.seed(),
        config_fingerprint: ctx.config_fingerprint(),
        written: count(Status::Written),
        cached: count(Status::Cached),
        failed: count(Status::Failed),
        artifacts: events,
        warnings: out.warnings.clone(),
        errors: out.errors.iter().map(ToString::to_string).collect(),
        exit_code: code,
    };
    let path = cli.report.clone().unwrap_or_else(|| ctx.config.out(&format!("reports/{name}.json")));
    if let Err(e) = report.write(&path) {
        log::error!("event=error msg={:?}", e.to_string());
    }
    log::info!(
        "event=done command={name} written={} cached={} failed={} exit={code}",
        report.written,
        report.cached,
        report.failed
    );
    ExitCode::from(code as u8)
}
