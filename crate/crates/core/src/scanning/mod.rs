//! Scanner samples and scanner evaluation.
//!
//! A scan sample pairs the marked bug with one chunk of its file, separated
//! by a `<SCAN>` line. Chunks are whole lines packed into the bytes the
//! budget leaves after the prefix. The `all` variant tiles the file with
//! disjoint chunks; `oow` steps by 70% of each chunk so neighbours overlap
//! by 30%.
//!
//! A bug whose window already covers its whole file has nothing left to
//! scan and yields no samples.

mod scanners;

use std::collections::BTreeMap;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::BugAnalysis;
use crate::exec::Exec;
use crate::ingredients::{IngredientSets, NameSet};
use crate::lexing::lex_identifiers;
use crate::protocol::ProtocolError;
use crate::repairprep::{render_marked_window, DEFAULT_BUDGET_BYTES};
use crate::text::{LineIndex, LineRange};

pub use scanners::{build_scanner, ExternalScanner, ScannerKind, ScannerSpec};

pub const SCAN_DIVIDER: &str = "<SCAN>";
/// Alpha of the weighted harmonic mean; 0.5 gives plain F1.
pub const F1_ALPHA: f64 = 0.5;
pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("prefix of {prefix} bytes leaves no room in a {budget}-byte budget")]
    BudgetTooSmall { prefix: usize, budget: usize },
    #[error("line {line} ({bytes} bytes) does not fit the {room} bytes left for scan code")]
    LineTooLong { line: usize, bytes: usize, room: usize },
    #[error("samples mix variants or bugs")]
    VariantMismatch,
    #[error("truth set is empty")]
    EmptyTruth,
    #[error("scanner `{0}` needs a frequency table")]
    MissingFrequencyTable(String),
    #[error("scanner `external` needs an endpoint")]
    MissingEndpoint,
    #[error("external scanner: {0}")]
    Endpoint(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Every fix ingredient is a positive.
    All,
    /// Only ingredients missing from the window are positives.
    Oow,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Variant::All),
            "oow" => Ok(Variant::Oow),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

impl Variant {
    pub fn truth<'a>(&self, sets: &'a IngredientSets) -> &'a NameSet {
        match self {
            Variant::All => &sets.fix_all,
            Variant::Oow => &sets.win_out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub budget_bytes: usize,
    pub variant: Variant,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            budget_bytes: DEFAULT_BUDGET_BYTES,
            variant: Variant::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub name: String,
    /// Offset into the scan text.
    pub byte_offset: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanSample {
    pub bug_id: String,
    #[serde(rename = "prefix")]
    pub prefix_text: String,
    #[serde(rename = "scan")]
    pub scan_text: String,
    /// File lines the scan text was cut from.
    pub lines: LineRange,
    pub labels: Vec<Label>,
    pub variant: Variant,
}

impl ScanSample {
    pub fn rendered_len(&self) -> usize {
        self.prefix_text.len() + SCAN_DIVIDER.len() + 1 + self.scan_text.len()
    }

    pub fn has_positive(&self) -> bool {
        self.labels.iter().any(|l| l.positive)
    }
}

/// Stride between `oow` chunk starts: `ceil(0.7 * len)`.
pub fn oow_stride(len: usize) -> usize {
    ((7 * len).div_ceil(10)).max(1)
}

/// Fixed-size line chunks of a file of `n_lines` lines.
pub fn chunk_lines(n_lines: usize, size: usize, variant: Variant) -> Vec<LineRange> {
    assert!(size > 0, "chunk size must be positive");
    let step = match variant {
        Variant::All => size,
        Variant::Oow => oow_stride(size),
    };
    let mut out = Vec::new();
    let mut start = 1;
    while start <= n_lines {
        let end = (start + size - 1).min(n_lines);
        out.push(LineRange::new(start, end));
        if end == n_lines {
            break;
        }
        start += step;
    }
    out
}

/// Chunks packed greedily into `room` bytes per chunk.
fn chunk_by_bytes(index: &LineIndex, room: usize, variant: Variant) -> Result<Vec<LineRange>, ScanError> {
    let n = index.line_count();
    let line_bytes = |l: usize| {
        let (s, e) = index.span(l);
        e - s + 1
    };
    let mut out = Vec::new();
    let mut start = 1;
    while start <= n {
        let mut used = 0;
        let mut end = start - 1;
        while end < n && used + line_bytes(end + 1) <= room {
            end += 1;
            used += line_bytes(end);
        }
        if end < start {
            return Err(ScanError::LineTooLong {
                line: start,
                bytes: line_bytes(start),
                room,
            });
        }
        out.push(LineRange::new(start, end));
        if end == n {
            break;
        }
        start = match variant {
            Variant::All => end + 1,
            Variant::Oow => start + oow_stride(end - start + 1),
        };
    }
    Ok(out)
}

/// Unlabeled samples (every label negative) covering the buggy file.
pub fn make_scan_samples(analysis: &BugAnalysis, opts: &ScanOptions) -> Result<Vec<ScanSample>, ScanError> {
    let bug = &analysis.bug;
    let index = LineIndex::new(&bug.buggy_source);
    if analysis.window.range.start <= 1 && analysis.window.range.end >= index.line_count() {
        return Ok(Vec::new());
    }
    let prefix = render_marked_window(bug, &analysis.window);
    let fixed = prefix.len() + SCAN_DIVIDER.len() + 1;
    if fixed >= opts.budget_bytes {
        return Err(ScanError::BudgetTooSmall {
            prefix: prefix.len(),
            budget: opts.budget_bytes,
        });
    }
    let chunks = chunk_by_bytes(&index, opts.budget_bytes - fixed, opts.variant)?;
    let occurrences = lex_identifiers(&bug.buggy_source, bug.language);
    Ok(chunks
        .into_iter()
        .map(|lines| {
            let (s, e) = index.range_span(lines);
            let end = (e + 1).min(bug.buggy_source.len());
            let mut scan_text = bug.buggy_source[s..end].to_string();
            if !scan_text.ends_with('\n') {
                scan_text.push('\n');
            }
            let labels = occurrences
                .iter()
                .filter(|o| lines.contains(o.line))
                .map(|o| Label {
                    name: o.name.clone(),
                    byte_offset: o.byte_offset - s,
                    positive: false,
                })
                .collect();
            ScanSample {
                bug_id: bug.id.clone(),
                prefix_text: prefix.clone(),
                scan_text,
                lines,
                labels,
                variant: opts.variant,
            }
        })
        .collect())
}

/// Marks each occurrence positive iff its name is in the variant's truth.
pub fn label_samples(samples: &mut [ScanSample], sets: &IngredientSets) -> Result<(), ScanError> {
    let Some(first) = samples.first() else {
        return Ok(());
    };
    let (bug_id, variant) = (first.bug_id.clone(), first.variant);
    if samples.iter().any(|s| s.variant != variant || s.bug_id != bug_id) {
        return Err(ScanError::VariantMismatch);
    }
    let truth = variant.truth(sets);
    for sample in samples.iter_mut() {
        for label in &mut sample.labels {
            label.positive = truth.contains(&label.name);
        }
    }
    Ok(())
}

/// Labeled samples of one bug.
pub fn scan_samples_for(analysis: &BugAnalysis, opts: &ScanOptions) -> Result<Vec<ScanSample>, ScanError> {
    let mut samples = make_scan_samples(analysis, opts)?;
    label_samples(&mut samples, &analysis.sets)?;
    Ok(samples)
}

/// Keeps every sample with a positive label and an equal number of
/// negative-only samples drawn uniformly. Input order is preserved.
pub fn undersample(samples: Vec<ScanSample>, seed: u64) -> Vec<ScanSample> {
    let positives = samples.iter().filter(|s| s.has_positive()).count();
    let negatives: Vec<usize> = (0..samples.len()).filter(|&i| !samples[i].has_positive()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; samples.len()];
    for &i in negatives.iter().choose_multiple(&mut rng, positives.min(negatives.len())) {
        keep[i] = true;
    }
    samples
        .into_iter()
        .enumerate()
        .filter(|(i, s)| keep[*i] || s.has_positive())
        .map(|(_, s)| s)
        .collect()
}

/// Per-name maximum score over every occurrence in every chunk of a bug.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScannerPrediction {
    pub bug_id: String,
    pub scores: BTreeMap<String, f64>,
}

impl ScannerPrediction {
    pub fn new(bug_id: &str) -> Self {
        Self {
            bug_id: bug_id.to_string(),
            scores: BTreeMap::new(),
        }
    }

    pub fn observe(&mut self, name: &str, score: f64) {
        let slot = self.scores.entry(name.to_string()).or_insert(score);
        if score > *slot {
            *slot = score;
        }
    }

    /// Names scoring at least `threshold`.
    pub fn select(&self, threshold: f64) -> NameSet {
        self.scores
            .iter()
            .filter(|(_, &s)| s >= threshold)
            .map(|(n, _)| n.clone())
            .collect()
    }
}

/// Scores identifier occurrences of scan samples.
pub trait Scanner: Sync {
    fn name(&self) -> &str;

    fn score(&self, analysis: &BugAnalysis, samples: &[ScanSample]) -> Result<ScannerPrediction, ScanError>;
}

/// Predicted names of one bug at `threshold`, unioned over its chunks.
pub fn run_scanner(
    scanner: &dyn Scanner,
    analysis: &BugAnalysis,
    samples: &[ScanSample],
    threshold: f64,
) -> Result<NameSet, ScanError> {
    Ok(scanner.score(analysis, samples)?.select(threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScannerMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub alpha: f64,
}

pub fn f_measure(precision: f64, recall: f64, alpha: f64) -> f64 {
    if precision > 0.0 && recall > 0.0 {
        1.0 / (alpha / precision + (1.0 - alpha) / recall)
    } else {
        0.0
    }
}

pub fn scanner_metrics(predicted: &NameSet, truth: &NameSet) -> Result<ScannerMetrics, ScanError> {
    if truth.is_empty() {
        return Err(ScanError::EmptyTruth);
    }
    let hits = predicted.intersection(truth).count() as f64;
    let precision = if predicted.is_empty() { 0.0 } else { hits / predicted.len() as f64 };
    let recall = hits / truth.len() as f64;
    Ok(ScannerMetrics {
        precision,
        recall,
        f1: f_measure(precision, recall, F1_ALPHA),
        alpha: F1_ALPHA,
    })
}

/// Which bugs a sweep averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFilter {
    /// Every bug with a nonempty truth set.
    #[default]
    All,
    /// Only bugs whose whole truth set occurs in the buggy file.
    TruthInFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_bugs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scanner: String,
    pub variant: Variant,
    pub filter: SweepFilter,
    pub rows: Vec<SweepRow>,
    pub skipped_empty_truth: usize,
    pub skipped_no_scan: usize,
    pub skipped_filter: usize,
    /// Bugs whose samples or scanner call failed, with the reason.
    pub errors: Vec<(String, String)>,
}

enum BugOutcome {
    Scored(ScannerPrediction, NameSet),
    EmptyTruth,
    NoScan,
    Filtered,
    Failed(String, String),
}

/// Macro-averaged metrics per threshold over bugs with a nonempty truth.
pub fn threshold_sweep(
    scanner: &dyn Scanner,
    analyses: &[BugAnalysis],
    opts: &ScanOptions,
    thresholds: &[f64],
    filter: SweepFilter,
    exec: Exec,
) -> SweepReport {
    let outcomes = exec.map(analyses, |a| {
        let truth = opts.variant.truth(&a.sets);
        if truth.is_empty() {
            return BugOutcome::EmptyTruth;
        }
        if filter == SweepFilter::TruthInFile && !truth.is_subset(&a.sets.file_ids) {
            return BugOutcome::Filtered;
        }
        let samples = match scan_samples_for(a, opts) {
            Ok(s) if s.is_empty() => return BugOutcome::NoScan,
            Ok(s) => s,
            Err(e) => return BugOutcome::Failed(a.bug.id.clone(), e.to_string()),
        };
        match scanner.score(a, &samples) {
            Ok(p) => BugOutcome::Scored(p, truth.clone()),
            Err(e) => BugOutcome::Failed(a.bug.id.clone(), e.to_string()),
        }
    });
    let mut report = SweepReport {
        scanner: scanner.name().to_string(),
        variant: opts.variant,
        filter,
        rows: Vec::new(),
        skipped_empty_truth: 0,
        skipped_no_scan: 0,
        skipped_filter: 0,
        errors: Vec::new(),
    };
    let mut scored = Vec::new();
    for o in outcomes {
        match o {
            BugOutcome::Scored(p, t) => scored.push((p, t)),
            BugOutcome::EmptyTruth => report.skipped_empty_truth += 1,
            BugOutcome::NoScan => report.skipped_no_scan += 1,
            BugOutcome::Filtered => report.skipped_filter += 1,
            BugOutcome::Failed(id, why) => {
                log::warn!("bug {id} excluded from scanner metrics: {why}");
                report.errors.push((id, why));
            }
        }
    }
    for &t in thresholds {
        let n = scored.len();
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for (pred, truth) in &scored {
            let m = scanner_metrics(&pred.select(t), truth).expect("truth checked nonempty");
            p += m.precision;
            r += m.recall;
            f += m.f1;
        }
        let mean = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
        report.rows.push(SweepRow {
            threshold: t,
            precision: mean(p),
            recall: mean(r),
            f1: mean(f),
            n_bugs: n,
        });
    }
    report
}

/// Shuffles samples deterministically, for trainers that want mixed order.
pub fn shuffle_samples(samples: &mut [ScanSample], seed: u64) {
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
}
