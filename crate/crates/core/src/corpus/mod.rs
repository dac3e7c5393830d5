//! Bug corpora: ingestion from line-delimited JSON, validation, dedup,
//! seeded splits and local context windows.

mod normalize;

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use crate::lexing::Language;
use crate::text::{LineIndex, LineRange};
pub use normalize::{lines_are_self_contained, normalize_multiline, normalize_sample, NormalizeError};

/// Lines of context kept before the first buggy hunk.
pub const CONTEXT_BEFORE: usize = 18;
/// Lines of context kept after the last buggy hunk.
pub const CONTEXT_AFTER: usize = 12;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus stream: {0}")]
    Io(#[from] std::io::Error),
    #[error("split fractions sum to {0}, which exceeds 1")]
    FractionsExceedOne(f64),
    #[error("split fraction for `{name}` is invalid: {value}")]
    InvalidFraction { name: String, value: f64 },
}

/// One buggy/fixed file pair. The atomic corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugSample {
    pub id: String,
    pub language: Language,
    pub buggy_source: String,
    pub fixed_source: String,
    pub buggy_hunks: Vec<LineRange>,
    pub fixed_hunks: Vec<LineRange>,
    #[serde(default)]
    pub fix_commit: Option<String>,
    #[serde(default)]
    pub repo: Option<String>,
    #[serde(default)]
    pub path: Option<String>,
    /// `(path, text)` pairs of other project files at the buggy version.
    #[serde(default)]
    pub project_files: Option<Vec<(String, String)>>,
}

impl BugSample {
    /// Checks the record invariants, returning the reject reason on failure.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.buggy_hunks.is_empty() {
            return Err("no hunks".into());
        }
        if self.buggy_hunks.len() != self.fixed_hunks.len() {
            return Err(format!(
                "hunk count mismatch ({} buggy vs {} fixed)",
                self.buggy_hunks.len(),
                self.fixed_hunks.len()
            ));
        }
        check_hunks(&self.buggy_hunks, LineIndex::new(&self.buggy_source).line_count(), "buggy")?;
        check_hunks(&self.fixed_hunks, LineIndex::new(&self.fixed_source).line_count(), "fixed")?;
        if self.buggy_source == self.fixed_source {
            return Err("no-op change".into());
        }
        Ok(())
    }

    pub fn is_single_hunk(&self) -> bool {
        self.buggy_hunks.len() == 1
    }

    /// Key used by [`dedup`]: the fixing commit when known, else a digest
    /// of the file pair.
    pub fn dedup_key(&self) -> String {
        match &self.fix_commit {
            Some(commit) if !commit.is_empty() => format!("commit:{commit}"),
            _ => format!("digest:{}", content_digest(&self.buggy_source, &self.fixed_source)),
        }
    }
}

fn check_hunks(hunks: &[LineRange], line_count: usize, side: &str) -> Result<(), String> {
    for h in hunks {
        if h.start == 0 || h.end > line_count || h.start > h.end + 1 || h.start > line_count + 1 {
            return Err(format!("{side} hunk {h} out of range (file has {line_count} lines)"));
        }
    }
    for pair in hunks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.start < a.start {
            return Err("unsorted hunks".into());
        }
        if b.start <= a.end || (a.is_empty() && b.is_empty() && a.start == b.start) {
            return Err("overlapping hunks".into());
        }
    }
    Ok(())
}

/// SHA-256 over both sources, length-prefixed so the pair is unambiguous.
pub fn content_digest(buggy: &str, fixed: &str) -> String {
    let mut h = Sha256::new();
    h.update((buggy.len() as u64).to_le_bytes());
    h.update(buggy.as_bytes());
    h.update((fixed.len() as u64).to_le_bytes());
    h.update(fixed.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugCorpus {
    pub samples: Vec<BugSample>,
}

impl BugCorpus {
    pub fn new(samples: Vec<BugSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BugSample> {
        self.samples.iter()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.id.as_str()).collect()
    }

    /// Samples whose id is listed in `split`, in corpus order.
    pub fn subset(&self, split: &CorpusSplit) -> BugCorpus {
        let ids: HashSet<&str> = split.ids.iter().map(String::as_str).collect();
        BugCorpus::new(self.samples.iter().filter(|s| ids.contains(s.id.as_str())).cloned().collect())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("BugSample serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub corpus: BugCorpus,
    pub rejects: Vec<Reject>,
}

/// Reads one BugSample per line. Blank lines are skipped; malformed or
/// invalid records land in `rejects` with their 1-based line number.
pub fn ingest<R: BufRead>(reader: R) -> Result<IngestReport, CorpusError> {
    let mut report = IngestReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        match serde_json::from_str::<BugSample>(&line) {
            Ok(sample) => match sample.validate() {
                Ok(()) => report.corpus.samples.push(sample),
                Err(reason) => report.rejects.push(Reject { line_no, reason }),
            },
            Err(e) => report.rejects.push(Reject {
                line_no,
                reason: format!("invalid record: {e}"),
            }),
        }
    }
    Ok(report)
}

/// Keeps the first sample per dedup key, preserving input order.
pub fn dedup(corpus: &BugCorpus) -> BugCorpus {
    let mut seen = HashSet::new();
    BugCorpus::new(
        corpus
            .samples
            .iter()
            .filter(|s| seen.insert(s.dedup_key()))
            .cloned()
            .collect(),
    )
}

/// Well-known split names.
pub mod split_names {
    pub const ANALYSIS: &str = "analysis";
    pub const TRAIN_SCANNER: &str = "train_scanner";
    pub const EVAL_SCANNER: &str = "eval_scanner";
    pub const TRAIN_REPAIR: &str = "train_repair";
    pub const EVAL_REPAIR: &str = "eval_repair";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub name: String,
    pub ids: Vec<String>,
}

/// Seeded, disjoint partition of the corpus ids. Splits are carved from a
/// single shuffled order in name order, so no id lands in two splits.
pub fn split(
    corpus: &BugCorpus,
    fractions: &BTreeMap<String, f64>,
    seed: u64,
) -> Result<Vec<CorpusSplit>, CorpusError> {
    for (name, &value) in fractions {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(CorpusError::InvalidFraction { name: name.clone(), value });
        }
    }
    let total: f64 = fractions.values().sum();
    if total > 1.0 + 1e-9 {
        return Err(CorpusError::FractionsExceedOne(total));
    }
    let mut ids: Vec<&str> = corpus.ids();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n = ids.len();
    let mut cumulative = 0.0;
    let mut from = 0;
    let mut out = Vec::with_capacity(fractions.len());
    for (name, &value) in fractions {
        cumulative += value;
        let to = ((cumulative * n as f64 + 1e-9).floor() as usize).min(n).max(from);
        out.push(CorpusSplit {
            name: name.clone(),
            ids: ids[from..to].iter().map(|s| s.to_string()).collect(),
        });
        from = to;
    }
    Ok(out)
}

/// The lines around the bug a repair model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindow {
    /// Whole window, hunks included.
    pub range: LineRange,
    /// Context lines before the first hunk.
    pub pre_lines: LineRange,
    /// Context lines after the last hunk.
    pub post_lines: LineRange,
}

/// Window spanning `before` lines ahead of the first hunk through `after`
/// lines past the last one, clipped to the file.
pub fn local_context(bug: &BugSample, before: usize, after: usize) -> ContextWindow {
    let line_count = LineIndex::new(&bug.buggy_source).line_count();
    let first = bug.buggy_hunks.first().expect("validated bug has a hunk");
    let last = bug.buggy_hunks.last().expect("validated bug has a hunk");
    window_around(line_count, first.start, last.end, before, after)
}

pub(crate) fn window_around(
    line_count: usize,
    first_start: usize,
    last_end: usize,
    before: usize,
    after: usize,
) -> ContextWindow {
    let start = first_start.saturating_sub(before).max(1);
    let end = (last_end + after).min(line_count);
    ContextWindow {
        range: LineRange::new(start, end),
        pre_lines: LineRange::new(start, first_start - 1),
        post_lines: LineRange::new(last_end + 1, end),
    }
}
