//! Subcommand bodies. Each one reads its inputs, calls into
//! `ingredient_core`, writes its artifacts and then a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ingredient_core::analysis::{analyze_corpus, BugAnalysis, ExtractionRecord};
use ingredient_core::corpus::{self, BugCorpus};
use ingredient_core::evaluation::{
    cover_report, distance_points, exact_match, repair_summary, success_by_distance, success_by_frequency,
    success_by_ingredient_count, success_by_scope_cover, success_by_window_coverage, BreakdownReport,
    EvalOptions, MatchMode, RepairOutcome, WindowFilter, DEFAULT_COUNT_CAP, DEFAULT_DISTANCE_BINS,
};
use ingredient_core::ingredients::{frequency_table, FrequencyTable, IngredientSets};
use ingredient_core::lexing::lex_identifiers_bytes;
use ingredient_core::protocol::{Client, Endpoint, RepairRequest, RepairResponse};
use ingredient_core::repairprep::{
    build_baseline_input_with, scanner_pipeline, PrepError, PromptMode, PromptRecord, RepairPrompt,
};
use ingredient_core::scanning::{
    build_scanner, scan_samples_for, threshold_sweep, undersample, ScanError, ScanOptions, Scanner, ScannerKind,
    SweepReport,
};
use ingredient_core::{Exec, Language};
use serde::{Deserialize, Serialize};

use crate::cli::{
    BreakdownArgs, Cli, Command, ExtractArgs, InOut, IngestArgs, LexArgs, PromptsArgs, RepairEvalArgs, ReportArgs,
    ScanArgs, ScanEvalArgs, SplitArgs,
};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{self, sibling, ManifestBuilder};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = cli.base_config()?;
    let exec = executor(cli.threads)?;
    match cli.command {
        Command::Ingest(a) => ingest(a, &mut config),
        Command::Dedup(a) => dedup(a, &mut config),
        Command::Split(a) => split(a, &mut config),
        Command::Extract(a) => extract(a, &mut config, exec),
        Command::Scan(a) => scan(a, &mut config, exec),
        Command::ScanEval(a) => scan_eval(a, &mut config, exec),
        Command::Prompts(a) => prompts(a, &mut config, exec),
        Command::RepairEval(a) => repair_eval(a, &mut config, exec),
        Command::Report(a) => report(a, &mut config, exec),
        Command::Lex(a) => lex(a),
    }
}

fn executor(threads: Option<usize>) -> Result<Exec, CliError> {
    match threads {
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        Some(1) => Ok(Exec::Sequential),
        Some(_n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(_n)
                .build_global()
                .map_err(|e| CliError::usage(e.to_string()))?;
            Ok(Exec::default())
        }
        None => Ok(Exec::default()),
    }
}

fn input_path(input: &Option<PathBuf>, config: &RunConfig) -> Result<PathBuf, CliError> {
    input
        .clone()
        .or_else(|| config.corpus.first().cloned())
        .ok_or_else(|| CliError::usage("no --input given and the config lists no corpus"))
}

fn finish(manifest: &ManifestBuilder, out: &Path) -> Result<(), CliError> {
    manifest.write(&sibling(out, ".manifest.json"))
}

/// Analyses in corpus order. Bugs that fail normalization are logged and
/// returned separately.
fn analyses(corpus: &BugCorpus, config: &RunConfig, exec: Exec) -> (Vec<BugAnalysis>, Vec<(String, String)>) {
    let mut ok = Vec::with_capacity(corpus.len());
    let mut failed = Vec::new();
    for r in analyze_corpus(corpus, &config.analysis_options(), exec) {
        match r {
            Ok(a) => ok.push(a),
            Err((id, e)) => {
                log::warn!("skipping bug {id}: {e}");
                failed.push((id, e.to_string()));
            }
        }
    }
    (ok, failed)
}

fn load_analyses(
    path: &Path,
    config: &RunConfig,
    exec: Exec,
    manifest: &mut ManifestBuilder,
) -> Result<Vec<BugAnalysis>, CliError> {
    let corpus = io::read_corpus(path)?;
    manifest.input(path);
    let (all, failed) = analyses(&corpus, config, exec);
    manifest.stat("bugs", corpus.len()).stat("analysis_failures", failed);
    Ok(all)
}

fn frequency(train: &Option<PathBuf>, exec: Exec, manifest: &mut ManifestBuilder) -> Result<Option<FrequencyTable>, CliError> {
    let Some(path) = train else { return Ok(None) };
    let corpus = io::read_corpus(path)?;
    manifest.input(path);
    Ok(Some(frequency_table(&corpus, exec)))
}

fn scanner_for(config: &RunConfig, freq: Option<&FrequencyTable>) -> Result<Box<dyn Scanner>, CliError> {
    build_scanner(&config.scanner, freq).map_err(|e| match e {
        ScanError::Endpoint(p) => CliError::endpoint(p.to_string()),
        other => CliError::usage(other.to_string()),
    })
}

fn ingest(args: IngestArgs, config: &mut RunConfig) -> Result<(), CliError> {
    if !args.input.is_empty() {
        config.corpus = args.input.clone();
    }
    if args.language.is_some() {
        config.language = args.language;
    }
    if config.corpus.is_empty() {
        return Err(CliError::usage("no --input given and the config lists no corpus"));
    }
    let mut text = String::new();
    for path in &config.corpus {
        let chunk = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        text.push_str(&chunk);
        if !chunk.is_empty() && !chunk.ends_with('\n') {
            text.push('\n');
        }
    }
    let report = corpus::ingest(text.as_bytes()).map_err(|e| CliError::data(e.to_string()))?;
    let total = report.corpus.len();
    let kept: Vec<_> = report
        .corpus
        .samples
        .into_iter()
        .filter(|b| config.language.map_or(true, |l| l == b.language))
        .collect();
    let filtered = total - kept.len();
    let out = config.resolve_output(&args.out);
    let rejects = config.resolve_output(&args.rejects.clone().unwrap_or_else(|| sibling(&args.out, ".rejects.jsonl")));
    io::write_text(&out, &BugCorpus::new(kept).to_jsonl())?;
    io::write_jsonl(&rejects, &report.rejects)?;
    if !report.rejects.is_empty() {
        log::warn!("{} record(s) rejected, see {}", report.rejects.len(), rejects.display());
    }
    let mut m = ManifestBuilder::new("ingest", config);
    for p in &config.corpus {
        m.input(p);
    }
    m.output(&out)
        .output(&rejects)
        .stat("accepted", total - filtered)
        .stat("rejected", report.rejects.len())
        .stat("filtered_language", filtered);
    finish(&m, &out)
}

fn dedup(args: InOut, config: &mut RunConfig) -> Result<(), CliError> {
    let input = input_path(&args.input, config)?;
    let corpus = io::read_corpus(&input)?;
    let unique = corpus::dedup(&corpus);
    let out = config.resolve_output(&args.out);
    io::write_text(&out, &unique.to_jsonl())?;
    let mut m = ManifestBuilder::new("dedup", config);
    m.input(&input)
        .output(&out)
        .stat("kept", unique.len())
        .stat("removed", corpus.len() - unique.len());
    finish(&m, &out)
}

fn split(args: SplitArgs, config: &mut RunConfig) -> Result<(), CliError> {
    if !args.fractions.is_empty() {
        config.splits = args.fractions.iter().cloned().collect();
    }
    let input = input_path(&args.input, config)?;
    let corpus = io::read_corpus(&input)?;
    let splits = corpus::split(&corpus, &config.splits, config.seeds.split).map_err(|e| CliError::usage(e.to_string()))?;
    let dir = config.resolve_output(&args.out_dir);
    let mut m = ManifestBuilder::new("split", config);
    m.input(&input);
    for s in &splits {
        let path = dir.join(format!("{}.jsonl", s.name));
        io::write_text(&path, &corpus.subset(s).to_jsonl())?;
        m.output(&path).stat(&s.name, s.ids.len());
    }
    let index = dir.join("splits.json");
    io::write_json(&index, &splits)?;
    m.output(&index);
    m.write(&dir.join("manifest.json"))
}

fn extract(args: ExtractArgs, config: &mut RunConfig, exec: Exec) -> Result<(), CliError> {
    args.window.apply(config);
    let input = input_path(&args.io.input, config)?;
    let mut m = ManifestBuilder::new("extract", config);
    let all = load_analyses(&input, config, exec, &mut m)?;
    let records = exec.map(&all, ExtractionRecord::from_analysis);
    let out = config.resolve_output(&args.io.out);
    io::write_jsonl(&out, &records)?;
    m.output(&out);
    if let Some(path) = &args.cover_report {
        let path = config.resolve_output(path);
        io::write_json(&path, &cover_report(all.iter().map(|a| &a.sets)))?;
        m.output(&path);
    }
    finish(&m, &out)
}

fn scan(args: ScanArgs, config: &mut RunConfig, exec: Exec) -> Result<(), CliError> {
    args.window.apply(config);
    if let Some(v) = args.variant {
        config.variant = v.into();
    }
    if let Some(b) = args.budget {
        config.budget_bytes = b;
    }
    config.validate()?;
    let input = input_path(&args.io.input, config)?;
    let mut m = ManifestBuilder::new("scan", config);
    let all = load_analyses(&input, config, exec, &mut m)?;
    let opts = ScanOptions {
        budget_bytes: config.budget_bytes,
        variant: config.variant,
    };
    let mut samples = Vec::new();
    let mut errors = Vec::new();
    for (a, r) in all.iter().zip(exec.map(&all, |a| scan_samples_for(a, &opts))) {
        match r {
            Ok(s) => samples.extend(s),
            Err(e) => {
                log::warn!("no samples for bug {}: {e}", a.bug.id);
                errors.push((a.bug.id.clone(), e.to_string()));
            }
        }
    }
    if args.undersample {
        samples = undersample(samples, config.seeds.undersample);
    }
    let out = config.resolve_output(&args.io.out);
    io::write_jsonl(&out, &samples)?;
    m.output(&out)
        .stat("samples", samples.len())
        .stat("positive_samples", samples.iter().filter(|s| s.has_positive()).count())
        .stat("errors", errors);
    finish(&m, &out)
}

fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("threshold,precision,recall,f1,n_bugs\n");
    for r in &report.rows {
        out.push_str(&format!("{},{:.6},{:.6},{:.6},{}\n", r.threshold, r.precision, r.recall, r.f1, r.n_bugs));
    }
    out
}

fn scan_eval(args: ScanEvalArgs, config: &mut RunConfig, exec: Exec) -> Result<(), CliError> {
    args.window.apply(config);
    args.scanner.apply(config);
    if let Some(v) = args.variant {
        config.variant = v.into();
    }
    if let Some(b) = args.budget {
        config.budget_bytes = b;
    }
    if !args.thresholds.is_empty() {
        config.thresholds = args.thresholds.clone();
    }
    config.validate()?;
    let input = input_path(&args.io.input, config)?;
    let mut m = ManifestBuilder::new("scan-eval", config);
    let freq = frequency(&args.scanner.train, exec, &mut m)?;
    let scanner = scanner_for(config, freq.as_ref())?;
    let all = load_analyses(&input, config, exec, &mut m)?;
    let opts = ScanOptions {
        budget_bytes: config.budget_bytes,
        variant: config.variant,
    };
    let report = threshold_sweep(scanner.as_ref(), &all, &opts, &config.thresholds, args.filter.into(), exec);
    let out = config.resolve_output(&args.io.out);
    io::write_json(&out, &report)?;
    m.output(&out);
    if let Some(t) = &args.table {
        let t = config.resolve_output(t);
        io::write_text(&t, &sweep_csv(&report))?;
        m.output(&t);
    }
    finish(&m, &out)?;
    if config.scanner.kind == ScannerKind::External && !report.errors.is_empty() {
        return Err(CliError::endpoint(format!(
            "external scanner failed on {} bug(s); first: {}",
            report.errors.len(),
            report.errors[0].1
        )));
    }
    Ok(())
}

fn parse_modes(names: &[String]) -> Result<Vec<PromptMode>, CliError> {
    if names.iter().any(|n| n == "all") {
        return Ok(PromptMode::ALL.to_vec());
    }
    let mut modes = Vec::new();
    for n in names {
        let m: PromptMode = n.parse().map_err(CliError::usage)?;
        if !modes.contains(&m) {
            modes.push(m);
        }
    }
    Ok(modes)
}

fn prompts(args: PromptsArgs, config: &mut RunConfig, exec: Exec) -> Result<(), CliError> {
    args.window.apply(config);
    args.scanner.apply(config);
    if let Some(b) = args.budget {
        config.budget_bytes = b;
    }
    if let Some(t) = args.threshold {
        config.scanner_threshold = t;
    }
    config.validate()?;
    let modes = parse_modes(&args.mode)?;
    let input = input_path(&args.io.input, config)?;
    let mut m = ManifestBuilder::new("prompts", config);
    let freq = frequency(&args.scanner.train, exec, &mut m)?;
    let scanner = if modes.contains(&PromptMode::Scanner) {
        Some(scanner_for(config, freq.as_ref())?)
    } else {
        None
    };
    let all = load_analyses(&input, config, exec, &mut m)?;
    let scan_opts = ScanOptions {
        budget_bytes: config.budget_bytes,
        variant: config.variant,
    };
    let build = |a: &BugAnalysis, mode: PromptMode| -> Result<RepairPrompt, PrepError> {
        match (mode, &scanner) {
            (PromptMode::Scanner, Some(s)) => {
                scanner_pipeline(a, s.as_ref(), &scan_opts, config.scanner_threshold, config.budget_bytes)
            }
            _ => build_baseline_input_with(a, mode, config.seeds.prompts, config.budget_bytes, config.large_budget_multiplier),
        }
    };
    let mut records = Vec::new();
    let mut failures: Vec<(String, String, String)> = Vec::new();
    for &mode in &modes {
        for (a, r) in all.iter().zip(exec.map(&all, |a| build(a, mode))) {
            match r {
                Ok(p) => records.push(PromptRecord::new(&p, &a.bug)),
                Err(PrepError::Scan(ScanError::Endpoint(e))) => return Err(e.into()),
                Err(e) => {
                    log::warn!("no {} prompt for bug {}: {e}", mode.as_str(), a.bug.id);
                    failures.push((mode.as_str().to_string(), a.bug.id.clone(), e.to_string()));
                }
            }
        }
    }
    let out = config.resolve_output(&args.io.out);
    io::write_jsonl(&out, &records)?;
    m.output(&out)
        .stat("modes", modes.iter().map(|m| m.as_str()).collect::<Vec<_>>())
        .stat("prompts", records.len())
        .stat("failures", failures);
    finish(&m, &out)
}

#[derive(Debug, Clone, Deserialize)]
struct CandidateRecord {
    bug_id: String,
    #[serde(default)]
    mode: Option<PromptMode>,
    candidates: Vec<String>,
}

/// One line of the outcomes file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub mode: PromptMode,
    #[serde(flatten)]
    pub outcome: RepairOutcome,
}

#[derive(Debug, Serialize)]
struct NamedReport {
    name: String,
    #[serde(flatten)]
    report: BreakdownReport,
}

fn breakdowns(
    outcomes: &[RepairOutcome],
    by_id: &BTreeMap<String, BugAnalysis>,
    sets: &BTreeMap<String, IngredientSets>,
    freq: Option<&FrequencyTable>,
    opts: &EvalOptions,
) -> Vec<NamedReport> {
    let named = |name: &str, report| NamedReport {
        name: name.to_string(),
        report,
    };
    let mut out = vec![
        named("count_any", success_by_ingredient_count(outcomes, sets, WindowFilter::Any, DEFAULT_COUNT_CAP, opts)),
        named(
            "count_all_in_window",
            success_by_ingredient_count(outcomes, sets, WindowFilter::AllInWindow, DEFAULT_COUNT_CAP, opts),
        ),
        named(
            "count_any_out_of_window",
            success_by_ingredient_count(outcomes, sets, WindowFilter::AnyOutOfWindow, DEFAULT_COUNT_CAP, opts),
        ),
        named(
            "distance",
            success_by_distance(&distance_points(outcomes, by_id, opts.k), DEFAULT_DISTANCE_BINS, true, opts),
        ),
        named("window_coverage", success_by_window_coverage(outcomes, sets, opts)),
        named("scope_cover", success_by_scope_cover(outcomes, sets, opts)),
    ];
    if let Some(table) = freq {
        out.push(named("frequency", success_by_frequency(outcomes, sets, table, opts)));
    }
    out
}

fn write_plot_data(
    dir: &Path,
    mode: PromptMode,
    reports: &[NamedReport],
    m: &mut ManifestBuilder,
) -> Result<(), CliError> {
    for r in reports {
        let path = dir.join(format!("{}.{}.csv", mode.as_str(), r.name));
        io::write_text(&path, &r.report.to_csv())?;
        m.output(&path);
    }
    Ok(())
}

/// Modes in first-seen order with their records.
fn group_by_mode<T>(items: Vec<T>, mode: impl Fn(&T) -> PromptMode) -> Vec<(PromptMode, Vec<T>)> {
    let mut groups: Vec<(PromptMode, Vec<T>)> = Vec::new();
    for item in items {
        let m = mode(&item);
        match groups.iter_mut().find(|(g, _)| *g == m) {
            Some((_, v)) => v.push(item),
            None => groups.push((m, vec![item])),
        }
    }
    groups
}

fn index_analyses(all: Vec<BugAnalysis>) -> (BTreeMap<String, BugAnalysis>, BTreeMap<String, IngredientSets>) {
    let sets = all.iter().map(|a| (a.bug.id.clone(), a.sets.clone())).collect();
    let by_id = all.into_iter().map(|a| (a.bug.id.clone(), a)).collect();
    (by_id, sets)
}

#[derive(Debug, Serialize)]
struct ModeReport {
    mode: PromptMode,
    summary: ingredient_core::evaluation::RepairSummary,
    breakdowns: Vec<NamedReport>,
}

fn repair_eval(args: RepairEvalArgs, config: &mut RunConfig, exec: Exec) -> Result<(), CliError> {
    args.window.apply(config);
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(e) = &args.endpoint {
        config.repair_endpoint = Some(e.clone());
    }
    config.validate()?;
    let input = input_path(&args.input, config)?;
    let mut m = ManifestBuilder::new("repair-eval", config);
    let freq = frequency(&args.breakdown.train, exec, &mut m)?;
    let (by_id, sets) = index_analyses(load_analyses(&input, config, exec, &mut m)?);
    let prompt_records: Vec<PromptRecord> = io::read_jsonl(&args.prompts)?;
    m.input(&args.prompts);
    let groups = group_by_mode(prompt_records, |r| r.mode);

    let mut candidates: BTreeMap<(Option<PromptMode>, String), Vec<String>> = BTreeMap::new();
    if let Some(path) = &args.candidates {
        for c in io::read_jsonl::<CandidateRecord>(path)? {
            candidates.insert((c.mode, c.bug_id), c.candidates);
        }
        m.input(path);
    } else if let Some(endpoint) = &config.repair_endpoint {
        let endpoint: Endpoint = endpoint.parse()?;
        let client = Client::new(endpoint, config.repair_in_flight);
        for (mode, records) in &groups {
            let requests: Vec<RepairRequest> = records
                .iter()
                .map(|r| RepairRequest {
                    id: r.bug_id.clone(),
                    text: r.text.clone(),
                    k: config.k,
                })
                .collect();
            let responses: Vec<RepairResponse> = client.call(&requests)?;
            for r in responses {
                candidates.insert((Some(*mode), r.id), r.candidates);
            }
        }
    } else {
        return Err(CliError::usage("repair-eval needs --candidates or a repair endpoint"));
    }

    let opts = EvalOptions {
        k: config.k,
        ..EvalOptions::default()
    };
    let match_mode: MatchMode = args.match_mode.into();
    let mut outcome_lines = Vec::new();
    let mut reports = Vec::new();
    for (mode, records) in &groups {
        let mut outcomes = Vec::new();
        let mut unevaluated = Vec::new();
        for r in records {
            let found = candidates
                .get(&(Some(*mode), r.bug_id.clone()))
                .or_else(|| candidates.get(&(None, r.bug_id.clone())));
            match found {
                Some(c) => outcomes.push(exact_match(&r.bug_id, c, &r.target, match_mode)),
                None => {
                    log::warn!("no candidates for bug {} ({}); reported as unevaluated", r.bug_id, mode.as_str());
                    unevaluated.push(r.bug_id.clone());
                }
            }
        }
        let summary = repair_summary(mode.as_str(), &outcomes, &sets, unevaluated, config.k);
        let named = breakdowns(&outcomes, &by_id, &sets, freq.as_ref(), &opts);
        if let Some(dir) = &args.breakdown.plot_data {
            write_plot_data(&config.resolve_output(dir), *mode, &named, &mut m)?;
        }
        outcome_lines.extend(outcomes.into_iter().map(|o| OutcomeRecord { mode: *mode, outcome: o }));
        reports.push(ModeReport {
            mode: *mode,
            summary,
            breakdowns: named,
        });
    }
    let out = config.resolve_output(&args.out);
    let outcomes_path = config.resolve_output(&args.outcomes.clone().unwrap_or_else(|| sibling(&args.out, ".outcomes.jsonl")));
    io::write_json(&out, &reports)?;
    io::write_jsonl(&outcomes_path, &outcome_lines)?;
    m.output(&out).output(&outcomes_path);
    finish(&m, &out)
}

#[derive(Debug, Serialize)]
struct FullReport {
    cover: ingredient_core::evaluation::CoverReport,
    modes: Vec<ModeBreakdowns>,
}

#[derive(Debug, Serialize)]
struct ModeBreakdowns {
    mode: PromptMode,
    breakdowns: Vec<NamedReport>,
}

fn report(args: ReportArgs, config: &mut RunConfig, exec: Exec) -> Result<(), CliError> {
    args.window.apply(config);
    if let Some(k) = args.k {
        config.k = k;
    }
    config.validate()?;
    let input = input_path(&args.input, config)?;
    let mut m = ManifestBuilder::new("report", config);
    let BreakdownArgs { train, plot_data } = &args.breakdown;
    let freq = frequency(train, exec, &mut m)?;
    let (by_id, sets) = index_analyses(load_analyses(&input, config, exec, &mut m)?);
    let outcomes: Vec<OutcomeRecord> = io::read_jsonl(&args.outcomes)?;
    m.input(&args.outcomes);
    let opts = EvalOptions {
        k: config.k,
        ..EvalOptions::default()
    };
    let mut modes = Vec::new();
    for (mode, records) in group_by_mode(outcomes, |o| o.mode) {
        let outcomes: Vec<RepairOutcome> = records.into_iter().map(|r| r.outcome).collect();
        let named = breakdowns(&outcomes, &by_id, &sets, freq.as_ref(), &opts);
        if let Some(dir) = plot_data {
            write_plot_data(&config.resolve_output(dir), mode, &named, &mut m)?;
        }
        modes.push(ModeBreakdowns { mode, breakdowns: named });
    }
    let full = FullReport {
        cover: cover_report(sets.values()),
        modes,
    };
    let out = config.resolve_output(&args.out);
    io::write_json(&out, &full)?;
    m.output(&out);
    finish(&m, &out)
}

fn lex(args: LexArgs) -> Result<(), CliError> {
    let language = match args.language {
        Some(l) => l,
        None => match args.file.extension().and_then(|e| e.to_str()) {
            Some("py") => Language::Python,
            Some("java") => Language::Java,
            _ => return Err(CliError::usage("cannot guess the language; pass --language")),
        },
    };
    let bytes = std::fs::read(&args.file).map_err(|e| CliError::data(format!("{}: {e}", args.file.display())))?;
    let occurrences = lex_identifiers_bytes(&bytes, language).map_err(|e| CliError::data(e.to_string()))?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for o in &occurrences {
        serde_json::to_writer(&mut lock, o).map_err(|e| CliError::data(e.to_string()))?;
        std::io::Write::write_all(&mut lock, b"\n")?;
    }
    Ok(())
}
