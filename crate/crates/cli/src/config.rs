//! Declarative run configuration, loaded from TOML and overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ingredient_core::analysis::{AnalysisOptions, ProjectScope};
use ingredient_core::corpus::{split_names, CONTEXT_AFTER, CONTEXT_BEFORE};
use ingredient_core::evaluation::DEFAULT_K;
use ingredient_core::repairprep::{DEFAULT_BUDGET_BYTES, LARGE_CONTEXT_MULTIPLIER};
use ingredient_core::scanning::{ScannerKind, ScannerSpec, Variant, DEFAULT_THRESHOLDS};
use ingredient_core::Language;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub before: usize,
    pub after: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            before: CONTEXT_BEFORE,
            after: CONTEXT_AFTER,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub split: u64,
    pub scanner: u64,
    pub prompts: u64,
    pub undersample: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self {
            split: seed,
            scanner: seed,
            prompts: seed,
            undersample: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus files read when a command gets no `--input`.
    pub corpus: Vec<PathBuf>,
    /// Keep only bugs in this language at ingest.
    pub language: Option<Language>,
    pub window: WindowConfig,
    pub budget_bytes: usize,
    pub large_budget_multiplier: usize,
    /// Recorded for reference: budgets are bytes, sized as tokens times this.
    pub bytes_per_token: usize,
    pub thresholds: Vec<f64>,
    /// Threshold the scanner prompt mode selects ingredients with.
    pub scanner_threshold: f64,
    pub seeds: Seeds,
    pub scanner: ScannerSpec,
    pub variant: Variant,
    pub scope: ProjectScope,
    pub repair_endpoint: Option<String>,
    pub repair_in_flight: usize,
    pub k: usize,
    pub splits: BTreeMap<String, f64>,
    /// Relative output paths are resolved against this directory.
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let splits = [
            (split_names::TRAIN_SCANNER, 0.25),
            (split_names::EVAL_SCANNER, 0.25),
            (split_names::TRAIN_REPAIR, 0.25),
            (split_names::EVAL_REPAIR, 0.25),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self {
            corpus: Vec::new(),
            language: None,
            window: WindowConfig::default(),
            budget_bytes: DEFAULT_BUDGET_BYTES,
            large_budget_multiplier: LARGE_CONTEXT_MULTIPLIER,
            bytes_per_token: 4,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            scanner_threshold: 0.5,
            seeds: Seeds::default(),
            scanner: ScannerSpec::new(ScannerKind::Oracle),
            variant: Variant::All,
            scope: ProjectScope::Project,
            repair_endpoint: None,
            repair_in_flight: 4,
            k: DEFAULT_K,
            splits,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            before: self.window.before,
            after: self.window.after,
            scope: self.scope,
        }
    }

    pub fn resolve_output(&self, path: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.budget_bytes == 0 || self.large_budget_multiplier == 0 || self.k == 0 {
            return Err(CliError::usage("budget_bytes, large_budget_multiplier and k must be positive"));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(CliError::usage(format!("threshold {t} is outside [0, 1]")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), c);
        assert_eq!((c.window.before, c.window.after, c.budget_bytes, c.large_budget_multiplier), (18, 12, 4096, 5));
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c: RunConfig = toml::from_str("budget_bytes = 2048\n[scanner]\nkind = \"naive_random\"\nseed = 3\n").unwrap();
        assert_eq!(c.budget_bytes, 2048);
        assert_eq!(c.scanner.kind, ScannerKind::NaiveRandom);
        assert_eq!(c.scanner.seed, 3);
        assert_eq!(c.k, 5);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("budget = 1").is_err());
    }
}
