//! Command-line surface. Flags override the matching [`RunConfig`] fields.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ingredient_core::analysis::ProjectScope;
use ingredient_core::evaluation::MatchMode;
use ingredient_core::scanning::{ScannerKind, SweepFilter, Variant};
use ingredient_core::Language;

use crate::config::{RunConfig, Seeds};

#[derive(Debug, Parser)]
#[command(name = "ingr", version, about = "Fix-ingredient analysis, scanner evaluation and repair-prompt pipeline")]
pub struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random step (split, scanner, prompts, undersampling).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log more (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate raw JSONL records into a corpus and a rejects report.
    Ingest(IngestArgs),
    /// Drop bugs whose buggy/fixed content repeats an earlier bug.
    Dedup(InOut),
    /// Seeded disjoint splits written as one corpus file per split.
    Split(SplitArgs),
    /// Ingredient sets, covers, distances and uncovered kinds per bug.
    Extract(ExtractArgs),
    /// Scanner samples with per-occurrence labels.
    Scan(ScanArgs),
    /// Threshold sweep of a scanner: precision, recall and F1 per threshold.
    ScanEval(ScanEvalArgs),
    /// Repair-model inputs for one or more prompt modes.
    Prompts(PromptsArgs),
    /// Exact-match scoring of repair candidates with summary and breakdowns.
    RepairEval(RepairEvalArgs),
    /// Cover distribution and breakdowns from stored outcomes.
    Report(ReportArgs),
    /// Dump identifier occurrences of a source file as JSON lines.
    Lex(LexArgs),
}

#[derive(Debug, Args)]
pub struct InOut {
    /// Corpus JSONL (defaults to the first `corpus` entry of the config).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw JSONL files, read as one stream (defaults to the config `corpus`).
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Rejects report; defaults to `<out>.rejects.jsonl`.
    #[arg(long)]
    pub rejects: Option<PathBuf>,
    /// Keep only bugs of this language.
    #[arg(long)]
    pub language: Option<Language>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// `name=ratio`, repeatable; replaces the configured split table.
    #[arg(long = "fraction", value_parser = parse_fraction)]
    pub fractions: Vec<(String, f64)>,
}

fn parse_fraction(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=ratio, got `{s}`"))?;
    let value: f64 = value.parse().map_err(|e| format!("`{value}`: {e}"))?;
    Ok((name.to_string(), value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Project,
    File,
}

impl From<ScopeArg> for ProjectScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Project => ProjectScope::Project,
            ScopeArg::File => ProjectScope::File,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct WindowArgs {
    /// Context lines before the first hunk.
    #[arg(long)]
    pub before: Option<usize>,
    /// Context lines after the last hunk.
    #[arg(long)]
    pub after: Option<usize>,
    #[arg(long, value_enum)]
    pub scope: Option<ScopeArg>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub io: InOut,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Also write the per-scope cover distribution here.
    #[arg(long)]
    pub cover_report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    All,
    Oow,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::All => Variant::All,
            VariantArg::Oow => Variant::Oow,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub io: InOut,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Byte budget of one rendered sample.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Keep every positive sample and as many negative-only samples.
    #[arg(long)]
    pub undersample: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScannerArg {
    Oracle,
    NaiveRandom,
    LexicalSimilarity,
    FrequencyPrior,
    External,
}

impl From<ScannerArg> for ScannerKind {
    fn from(s: ScannerArg) -> Self {
        match s {
            ScannerArg::Oracle => ScannerKind::Oracle,
            ScannerArg::NaiveRandom => ScannerKind::NaiveRandom,
            ScannerArg::LexicalSimilarity => ScannerKind::LexicalSimilarity,
            ScannerArg::FrequencyPrior => ScannerKind::FrequencyPrior,
            ScannerArg::External => ScannerKind::External,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct ScannerArgs {
    #[arg(long, value_enum)]
    pub scanner: Option<ScannerArg>,
    /// Command line or http(s) URL of an external scanner.
    #[arg(long)]
    pub scanner_endpoint: Option<String>,
    /// Training corpus for the frequency-prior scanner.
    #[arg(long)]
    pub train: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    All,
    TruthInFile,
}

impl From<FilterArg> for SweepFilter {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::All => SweepFilter::All,
            FilterArg::TruthInFile => SweepFilter::TruthInFile,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScanEvalArgs {
    #[command(flatten)]
    pub io: InOut,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub scanner: ScannerArgs,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, value_enum, default_value = "all")]
    pub filter: FilterArg,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Also write the sweep as CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PromptsArgs {
    #[command(flatten)]
    pub io: InOut,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub scanner: ScannerArgs,
    /// Prompt modes, comma-separated, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "none")]
    pub mode: Vec<String>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Score threshold of the scanner mode.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    Strict,
    LineTrimmed,
}

impl From<MatchArg> for MatchMode {
    fn from(m: MatchArg) -> Self {
        match m {
            MatchArg::Strict => MatchMode::Strict,
            MatchArg::LineTrimmed => MatchMode::LineTrimmed,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct BreakdownArgs {
    /// Training corpus for the frequency breakdown.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Directory for per-breakdown CSV files.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RepairEvalArgs {
    /// Corpus the prompts were built from.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub prompts: PathBuf,
    /// JSONL of `{bug_id, candidates[, mode]}`.
    #[arg(long, conflicts_with = "endpoint")]
    pub candidates: Option<PathBuf>,
    /// Repair model command line or http(s) URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Summary JSON (per mode summary plus breakdowns).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-bug outcomes JSONL; defaults to `<out>.outcomes.jsonl`.
    #[arg(long)]
    pub outcomes: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "match", value_enum, default_value = "strict")]
    pub match_mode: MatchArg,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub breakdown: BreakdownArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Outcomes JSONL written by `repair-eval`.
    #[arg(long)]
    pub outcomes: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub breakdown: BreakdownArgs,
}

#[derive(Debug, Args)]
pub struct LexArgs {
    pub file: PathBuf,
    /// Guessed from the extension when absent.
    #[arg(long)]
    pub language: Option<Language>,
}

impl Cli {
    /// Config file, then global flags.
    pub fn base_config(&self) -> Result<RunConfig, crate::error::CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seeds = Seeds::all(seed);
            config.scanner.seed = seed;
        }
        Ok(config)
    }
}

impl WindowArgs {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(b) = self.before {
            config.window.before = b;
        }
        if let Some(a) = self.after {
            config.window.after = a;
        }
        if let Some(s) = self.scope {
            config.scope = s.into();
        }
    }
}

impl ScannerArgs {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(s) = self.scanner {
            config.scanner.kind = s.into();
        }
        if let Some(e) = &self.scanner_endpoint {
            config.scanner.endpoint = Some(e.clone());
        }
    }
}
