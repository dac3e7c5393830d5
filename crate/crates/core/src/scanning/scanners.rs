//! Built-in scanners and the adapter for external models.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ScanError, ScanSample, Scanner, ScannerPrediction};
use crate::analysis::BugAnalysis;
use crate::ingredients::{FrequencyTable, COMMON_MIN};
use crate::protocol::{Client, Endpoint, ScanRequest, ScanResponse, WireIdentifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScannerKind {
    /// Scores 1.0 exactly on positively labeled occurrences.
    Oracle,
    /// Uniform score per (seed, bug, name).
    NaiveRandom,
    /// Best normalized Levenshtein similarity to a buggy-hunk or window name.
    LexicalSimilarity,
    /// Training-set frequency, saturating at the common-band threshold.
    FrequencyPrior,
    External,
}

impl std::str::FromStr for ScannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown scanner `{s}`"))
    }
}

impl ScannerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScannerKind::Oracle => "oracle",
            ScannerKind::NaiveRandom => "naive_random",
            ScannerKind::LexicalSimilarity => "lexical_similarity",
            ScannerKind::FrequencyPrior => "frequency_prior",
            ScannerKind::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScannerSpec {
    pub kind: ScannerKind,
    #[serde(default)]
    pub seed: u64,
    /// Lexical similarities below this are scored 0.
    #[serde(default)]
    pub similarity_floor: f64,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_in_flight")]
    pub in_flight: usize,
}

fn default_in_flight() -> usize {
    4
}

impl ScannerSpec {
    pub fn new(kind: ScannerKind) -> Self {
        Self {
            kind,
            seed: 0,
            similarity_floor: 0.0,
            endpoint: None,
            in_flight: default_in_flight(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub fn build_scanner(spec: &ScannerSpec, freq: Option<&FrequencyTable>) -> Result<Box<dyn Scanner>, ScanError> {
    Ok(match spec.kind {
        ScannerKind::Oracle => Box::new(Oracle),
        ScannerKind::NaiveRandom => Box::new(NaiveRandom { seed: spec.seed }),
        ScannerKind::LexicalSimilarity => Box::new(LexicalSimilarity {
            floor: spec.similarity_floor,
        }),
        ScannerKind::FrequencyPrior => Box::new(FrequencyPrior {
            table: freq
                .cloned()
                .ok_or_else(|| ScanError::MissingFrequencyTable(spec.kind.as_str().to_string()))?,
        }),
        ScannerKind::External => {
            let endpoint: Endpoint = spec.endpoint.as_deref().ok_or(ScanError::MissingEndpoint)?.parse()?;
            Box::new(ExternalScanner::new(endpoint, spec.in_flight))
        }
    })
}

/// Scores every occurrence of every sample with a per-name function.
fn score_by_name(bug_id: &str, samples: &[ScanSample], mut f: impl FnMut(&str) -> f64) -> ScannerPrediction {
    let mut out = ScannerPrediction::new(bug_id);
    for label in samples.iter().flat_map(|s| &s.labels) {
        if !out.scores.contains_key(&label.name) {
            let score = f(&label.name);
            out.observe(&label.name, score);
        }
    }
    out
}

struct Oracle;

impl Scanner for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn score(&self, analysis: &BugAnalysis, samples: &[ScanSample]) -> Result<ScannerPrediction, ScanError> {
        let mut out = ScannerPrediction::new(&analysis.bug.id);
        for label in samples.iter().flat_map(|s| &s.labels) {
            out.observe(&label.name, if label.positive { 1.0 } else { 0.0 });
        }
        Ok(out)
    }
}

struct NaiveRandom {
    seed: u64,
}

impl NaiveRandom {
    fn draw(&self, bug_id: &str, name: &str) -> f64 {
        let digest = Sha256::new()
            .chain_update(self.seed.to_le_bytes())
            .chain_update((bug_id.len() as u64).to_le_bytes())
            .chain_update(bug_id.as_bytes())
            .chain_update(name.as_bytes())
            .finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        (u64::from_be_bytes(head) >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl Scanner for NaiveRandom {
    fn name(&self) -> &str {
        "naive_random"
    }

    fn score(&self, analysis: &BugAnalysis, samples: &[ScanSample]) -> Result<ScannerPrediction, ScanError> {
        let id = &analysis.bug.id;
        Ok(score_by_name(id, samples, |name| self.draw(id, name)))
    }
}

struct LexicalSimilarity {
    floor: f64,
}

impl Scanner for LexicalSimilarity {
    fn name(&self) -> &str {
        "lexical_similarity"
    }

    fn score(&self, analysis: &BugAnalysis, samples: &[ScanSample]) -> Result<ScannerPrediction, ScanError> {
        let anchors: BTreeSet<&String> = analysis.sets.bug_ids.union(&analysis.sets.win_ids).collect();
        Ok(score_by_name(&analysis.bug.id, samples, |name| {
            let best = anchors
                .iter()
                .map(|a| strsim::normalized_levenshtein(name, a))
                .fold(0.0, f64::max);
            if best < self.floor {
                0.0
            } else {
                best
            }
        }))
    }
}

struct FrequencyPrior {
    table: FrequencyTable,
}

impl Scanner for FrequencyPrior {
    fn name(&self) -> &str {
        "frequency_prior"
    }

    fn score(&self, analysis: &BugAnalysis, samples: &[ScanSample]) -> Result<ScannerPrediction, ScanError> {
        Ok(score_by_name(&analysis.bug.id, samples, |name| {
            (self.table.count(name) as f64 / COMMON_MIN as f64).min(1.0)
        }))
    }
}

/// Delegates scoring to a model behind the wire protocol. Each sample is
/// one request with id `<bug_id>#<chunk index>`.
pub struct ExternalScanner {
    client: Client,
}

impl ExternalScanner {
    pub fn new(endpoint: Endpoint, in_flight: usize) -> Self {
        Self {
            client: Client::new(endpoint, in_flight),
        }
    }
}

impl Scanner for ExternalScanner {
    fn name(&self) -> &str {
        "external"
    }

    fn score(&self, analysis: &BugAnalysis, samples: &[ScanSample]) -> Result<ScannerPrediction, ScanError> {
        let requests: Vec<ScanRequest> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| ScanRequest {
                id: format!("{}#{i}", s.bug_id),
                prefix: s.prefix_text.clone(),
                scan: s.scan_text.clone(),
                identifiers: s
                    .labels
                    .iter()
                    .map(|l| WireIdentifier {
                        name: l.name.clone(),
                        byte_offset: l.byte_offset,
                    })
                    .collect(),
            })
            .collect();
        let responses: Vec<ScanResponse> = self.client.call(&requests)?;
        let mut out = ScannerPrediction::new(&analysis.bug.id);
        for (sample, resp) in samples.iter().zip(&responses) {
            for s in &resp.scores {
                let known = sample.labels.iter().any(|l| l.name == s.name && l.byte_offset == s.byte_offset);
                if !known {
                    log::warn!("{}: ignoring score for unknown occurrence {}@{}", resp.id, s.name, s.byte_offset);
                    continue;
                }
                let score = if s.score.is_nan() { 0.0 } else { s.score.clamp(0.0, 1.0) };
                if score != s.score {
                    log::warn!("{}: score {} for {} clamped to {score}", resp.id, s.score, s.name);
                }
                out.observe(&s.name, score);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze, AnalysisOptions};
    use crate::corpus::{BugSample, Language};
    use crate::scanning::{scan_samples_for, ScanOptions, Variant};
    use crate::text::LineRange;

    fn analysis() -> BugAnalysis {
        let mut src = String::from("import xml\nfrom lxml import ElementTree\n");
        for i in 0..40 {
            src.push_str(&format!("item{i} = tostr{i}\n"));
        }
        src.push_str("def f(cpu):\n    return cpu.toxml()\n");
        let fixed = src.replace("cpu.toxml()", "ElementTree.tostring(cpu)");
        let bug = BugSample {
            id: "et".into(),
            language: Language::Python,
            buggy_source: src,
            fixed_source: fixed,
            buggy_hunks: vec![LineRange::new(44, 44)],
            fixed_hunks: vec![LineRange::new(44, 44)],
            fix_commit: None,
            repo: None,
            path: None,
            project_files: None,
        };
        analyze(&bug, &AnalysisOptions::default()).unwrap()
    }

    #[test]
    fn oracle_finds_file_ingredients() {
        let a = analysis();
        let samples = scan_samples_for(&a, &ScanOptions { budget_bytes: 700, variant: Variant::All }).unwrap();
        let scanner = build_scanner(&ScannerSpec::new(ScannerKind::Oracle), None).unwrap();
        let p = scanner.score(&a, &samples).unwrap();
        assert_eq!(p.select(0.5), a.sets.file_in);
        assert_eq!(p.select(1.0), a.sets.file_in);
        assert!(a.sets.file_in.contains("ElementTree"));
    }

    #[test]
    fn naive_random_is_seeded() {
        let a = analysis();
        let samples = scan_samples_for(&a, &ScanOptions { budget_bytes: 700, variant: Variant::All }).unwrap();
        let s1 = build_scanner(&ScannerSpec::new(ScannerKind::NaiveRandom).with_seed(1), None).unwrap();
        let s2 = build_scanner(&ScannerSpec::new(ScannerKind::NaiveRandom).with_seed(2), None).unwrap();
        let p1 = s1.score(&a, &samples).unwrap();
        assert_eq!(p1, s1.score(&a, &samples).unwrap());
        assert_ne!(p1, s2.score(&a, &samples).unwrap());
        assert!(p1.scores.values().all(|s| (0.0..1.0).contains(s)));
    }

    #[test]
    fn lexical_and_frequency_scores() {
        let a = analysis();
        let samples = scan_samples_for(&a, &ScanOptions { budget_bytes: 700, variant: Variant::All }).unwrap();
        let lex = build_scanner(&ScannerSpec::new(ScannerKind::LexicalSimilarity), None).unwrap();
        let p = lex.score(&a, &samples).unwrap();
        assert_eq!(p.scores["cpu"], 1.0);
        assert!(p.scores["tostr1"] > 0.0 && p.scores["tostr1"] < 1.0);

        assert!(matches!(
            build_scanner(&ScannerSpec::new(ScannerKind::FrequencyPrior), None),
            Err(ScanError::MissingFrequencyTable(_))
        ));
        let table = FrequencyTable {
            counts: [("ElementTree".to_string(), 250), ("cpu".to_string(), 900)].into_iter().collect(),
        };
        let fp = build_scanner(&ScannerSpec::new(ScannerKind::FrequencyPrior), Some(&table)).unwrap();
        let p = fp.score(&a, &samples).unwrap();
        assert_eq!(p.scores["ElementTree"], 0.5);
        assert_eq!(p.scores["cpu"], 1.0);
        assert_eq!(p.scores["xml"], 0.0);
    }

    #[test]
    fn external_needs_endpoint() {
        assert!(matches!(
            build_scanner(&ScannerSpec::new(ScannerKind::External), None),
            Err(ScanError::MissingEndpoint)
        ));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [
            ScannerKind::Oracle,
            ScannerKind::NaiveRandom,
            ScannerKind::LexicalSimilarity,
            ScannerKind::FrequencyPrior,
            ScannerKind::External,
        ] {
            assert_eq!(k.as_str().parse::<ScannerKind>().unwrap(), k);
        }
    }
}
