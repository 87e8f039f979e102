mod commands;
mod config;
mod error;
mod record;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand, ValueEnum};
use genmetrics_core::distribution::{KernelGamma, Regularization};
use genmetrics_core::leaderboard::{Direction, ReportFormat};
use genmetrics_core::privacy::AverageOver;

use crate::commands::Subcommand;
use crate::config::{RunConfig, Threads};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "genmetrics", version, about = "Evaluate synthetic radiograph sets from precomputed embeddings and scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// FID and KID between real and synthetic embeddings.
    Fidelity(FidelityArgs),
    /// Precision, recall, density and coverage.
    Prdc(PrdcArgs),
    /// Re-identification risk summary from a score file.
    Privacy(PrivacyArgs),
    /// Per-pathology FID, KID and PRDC.
    Conditional(ConditionalArgs),
    /// Rank aggregation over a metric table, with optional correlation
    /// against a second table.
    Rank(RankArgs),
    /// Combined Markdown/CSV/JSON report over every configured input.
    Report(ReportArgs),
    /// Schema and format checks only.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run config; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
    /// Worker count or "auto" (falls back to GENMETRICS_THREADS).
    #[arg(long)]
    threads: Option<Threads>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output formats; repeat for several.
    #[arg(long = "format", value_enum)]
    formats: Vec<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AverageArg {
    PromptExtrema,
    RawPairs,
}

#[derive(Args, Debug, Default)]
struct EmbeddingArgs {
    /// Real embeddings (CXGB).
    #[arg(long)]
    real: Option<PathBuf>,
    /// Synthetic embeddings (CXGB).
    #[arg(long)]
    fake: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct ManifestArgs {
    #[arg(long)]
    real_manifest: Option<PathBuf>,
    #[arg(long)]
    fake_manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct KidArgs {
    #[arg(long)]
    kid_subsets: Option<usize>,
    #[arg(long)]
    kid_subset_size: Option<usize>,
    #[arg(long)]
    kid_degree: Option<u32>,
    /// Kernel gamma, a number or "auto" (1/d).
    #[arg(long)]
    kid_gamma: Option<String>,
    /// Fixed covariance ridge, or "auto".
    #[arg(long)]
    epsilon: Option<String>,
}

#[derive(Args, Debug)]
struct FidelityArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[command(flatten)]
    kid: KidArgs,
    /// Per-sample alignment scores; their mean is reported.
    #[arg(long)]
    alignment_scores: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PrdcArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct PrivacyFlags {
    /// Score CSV (prompt_id, seed, reid_score[, pixel_distance, latent_distance]).
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seeds_per_prompt: Option<usize>,
    #[arg(long)]
    num_prompts: Option<usize>,
    #[arg(long, value_enum)]
    average_over: Option<AverageArg>,
    /// Directory image paths in manifests are relative to.
    #[arg(long)]
    images_root: Option<PathBuf>,
    #[arg(long)]
    image_side: Option<u32>,
}

#[derive(Args, Debug)]
struct PrivacyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    privacy: PrivacyFlags,
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[command(flatten)]
    man: ManifestArgs,
}

#[derive(Args, Debug)]
struct ConditionalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[command(flatten)]
    man: ManifestArgs,
    #[command(flatten)]
    kid: KidArgs,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_stratum: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct RankFlags {
    /// Metric table CSV (model_id + one column per metric).
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    compare_table: Option<PathBuf>,
    /// Column of --table to correlate instead of its average rank.
    #[arg(long)]
    table_column: Option<String>,
    /// Column of --compare-table to correlate instead of its average rank.
    #[arg(long)]
    compare_column: Option<String>,
    /// Metric direction as NAME=lower|higher; repeatable.
    #[arg(long = "direction", value_parser = parse_direction)]
    directions: Vec<(String, Direction)>,
    /// Drop a column before ranking; repeatable.
    #[arg(long = "exclude")]
    exclude: Vec<String>,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    rank: RankFlags,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    rank: RankFlags,
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[command(flatten)]
    man: ManifestArgs,
    #[command(flatten)]
    privacy: PrivacyFlags,
    #[arg(long)]
    alignment_scores: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[command(flatten)]
    man: ManifestArgs,
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    alignment_scores: Option<PathBuf>,
    #[arg(long)]
    table: Option<PathBuf>,
}

fn parse_direction(s: &str) -> Result<(String, Direction), String> {
    let (name, dir) = s
        .rsplit_once('=')
        .ok_or_else(|| format!("expected NAME=lower|higher, got `{s}`"))?;
    let dir = match dir {
        "lower" | "lower_better" => Direction::LowerBetter,
        "higher" | "higher_better" => Direction::HigherBetter,
        other => return Err(format!("unknown direction `{other}`")),
    };
    Ok((name.to_string(), dir))
}

fn parse_regularization(s: &str) -> Result<Regularization, CliError> {
    if s == "auto" {
        return Ok(Regularization::Auto);
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v >= 0.0)
        .map(Regularization::Fixed)
        .ok_or_else(|| CliError::Config(format!("--epsilon must be \"auto\" or a non-negative number, got `{s}`")))
}

fn parse_gamma(s: &str) -> Result<KernelGamma, CliError> {
    if s == "auto" {
        return Ok(KernelGamma::Auto);
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v > 0.0)
        .map(KernelGamma::Fixed)
        .ok_or_else(|| CliError::Config(format!("--kid-gamma must be \"auto\" or a positive number, got `{s}`")))
}

/// Makes config-relative paths absolute against the config file's directory.
fn rebase(cfg: &mut RunConfig, base: &Path) {
    let p = &mut cfg.paths;
    for path in [
        &mut p.real_embeddings,
        &mut p.fake_embeddings,
        &mut p.real_manifest,
        &mut p.fake_manifest,
        &mut p.images_root,
        &mut p.scores,
        &mut p.alignment_scores,
        &mut p.metric_table,
        &mut p.compare_table,
    ]
    .into_iter()
    .flatten()
    {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, v: Option<PathBuf>) {
    if v.is_some() {
        *slot = v;
    }
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let mut c = RunConfig::load(path)?;
                rebase(&mut c, path.parent().unwrap_or(Path::new("")));
                c
            }
            None => RunConfig::default(),
        };
        set(&mut cfg.output_dir, self.output_dir.clone());
        set(&mut cfg.threads, self.threads);
        set(&mut cfg.rng_seed, self.seed);
        if !self.formats.is_empty() {
            cfg.formats = self
                .formats
                .iter()
                .map(|f| match f {
                    FormatArg::Markdown => ReportFormat::Markdown,
                    FormatArg::Csv => ReportFormat::Csv,
                    FormatArg::Json => ReportFormat::Json,
                })
                .collect();
        }
        Ok(cfg)
    }
}

impl EmbeddingArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set_path(&mut cfg.paths.real_embeddings, self.real);
        set_path(&mut cfg.paths.fake_embeddings, self.fake);
    }
}

impl ManifestArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set_path(&mut cfg.paths.real_manifest, self.real_manifest);
        set_path(&mut cfg.paths.fake_manifest, self.fake_manifest);
    }
}

impl KidArgs {
    fn apply(self, cfg: &mut RunConfig) -> Result<(), CliError> {
        set(&mut cfg.kid.num_subsets, self.kid_subsets);
        if self.kid_subset_size.is_some() {
            cfg.kid.subset_size = self.kid_subset_size;
        }
        set(&mut cfg.kid.kernel_degree, self.kid_degree);
        if let Some(g) = &self.kid_gamma {
            cfg.kid.kernel_gamma = parse_gamma(g)?;
        }
        if let Some(e) = &self.epsilon {
            cfg.regularization = parse_regularization(e)?;
        }
        Ok(())
    }
}

impl PrivacyFlags {
    fn apply(self, cfg: &mut RunConfig) {
        set_path(&mut cfg.paths.scores, self.scores);
        set_path(&mut cfg.paths.images_root, self.images_root);
        set(&mut cfg.privacy.delta, self.delta);
        set(&mut cfg.privacy.seeds_per_prompt, self.seeds_per_prompt);
        set(&mut cfg.privacy.num_prompts, self.num_prompts);
        set(&mut cfg.image_side, self.image_side);
        if let Some(a) = self.average_over {
            cfg.privacy.average_over = match a {
                AverageArg::PromptExtrema => AverageOver::PromptExtrema,
                AverageArg::RawPairs => AverageOver::RawPairs,
            };
        }
    }
}

impl RankFlags {
    fn apply(self, cfg: &mut RunConfig) {
        set_path(&mut cfg.paths.metric_table, self.table);
        set_path(&mut cfg.paths.compare_table, self.compare_table);
        if self.table_column.is_some() {
            cfg.rank.table_column = self.table_column;
        }
        if self.compare_column.is_some() {
            cfg.rank.compare_column = self.compare_column;
        }
        cfg.directions.extend(self.directions);
        cfg.rank.exclude_columns.extend(self.exclude);
    }
}

fn resolve(command: Command) -> Result<(Subcommand, RunConfig), CliError> {
    Ok(match command {
        Command::Fidelity(a) => {
            let mut cfg = a.common.load()?;
            a.emb.apply(&mut cfg);
            a.kid.apply(&mut cfg)?;
            set_path(&mut cfg.paths.alignment_scores, a.alignment_scores);
            (Subcommand::Fidelity, cfg)
        }
        Command::Prdc(a) => {
            let mut cfg = a.common.load()?;
            a.emb.apply(&mut cfg);
            set(&mut cfg.prdc.k, a.k);
            (Subcommand::Prdc, cfg)
        }
        Command::Privacy(a) => {
            let mut cfg = a.common.load()?;
            a.privacy.apply(&mut cfg);
            a.emb.apply(&mut cfg);
            a.man.apply(&mut cfg);
            (Subcommand::Privacy, cfg)
        }
        Command::Conditional(a) => {
            let mut cfg = a.common.load()?;
            a.emb.apply(&mut cfg);
            a.man.apply(&mut cfg);
            a.kid.apply(&mut cfg)?;
            set(&mut cfg.prdc.k, a.k);
            if a.min_stratum.is_some() {
                cfg.conditional.min_stratum = a.min_stratum;
            }
            (Subcommand::Conditional, cfg)
        }
        Command::Rank(a) => {
            let mut cfg = a.common.load()?;
            a.rank.apply(&mut cfg);
            (Subcommand::Rank, cfg)
        }
        Command::Report(a) => {
            let mut cfg = a.common.load()?;
            a.rank.apply(&mut cfg);
            a.emb.apply(&mut cfg);
            a.man.apply(&mut cfg);
            a.privacy.apply(&mut cfg);
            set_path(&mut cfg.paths.alignment_scores, a.alignment_scores);
            (Subcommand::Report, cfg)
        }
        Command::Validate(a) => {
            let mut cfg = a.common.load()?;
            a.emb.apply(&mut cfg);
            a.man.apply(&mut cfg);
            set_path(&mut cfg.paths.scores, a.scores);
            set_path(&mut cfg.paths.alignment_scores, a.alignment_scores);
            set_path(&mut cfg.paths.metric_table, a.table);
            (Subcommand::Validate, cfg)
        }
    })
}

fn execute(command: Command) -> Result<Vec<PathBuf>, CliError> {
    let (sub, cfg) = resolve(command)?;
    let workers = cfg.worker_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    log::info!("{} with {workers} worker(s)", sub.name());
    pool.install(|| commands::run(sub, &cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            let body = serde_json::json!({
                "error": {
                    "category": e.category(),
                    "exit_code": code,
                    "message": e.to_string(),
                }
            });
            eprintln!("{body}");
            ExitCode::from(code as u8)
        }
    }
}
