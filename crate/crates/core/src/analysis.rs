//! Per-bug preparation shared by extraction, scanning and prompting:
//! normalize sources, compute the context window and the ingredient sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, local_context, BugCorpus, BugSample, ContextWindow, NormalizeError};
use crate::exec::Exec;
use crate::ingredients::{
    classify_uncovered, cover, ingredient_distances, ingredient_sets, IngredientDistance,
    IngredientSets, NameSet, Scope, UncoveredKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectScope {
    /// Use `project_files` when present.
    Project,
    /// Ignore `project_files`; project sets fall back to the file.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub before: usize,
    pub after: usize,
    pub scope: ProjectScope,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            before: corpus::CONTEXT_BEFORE,
            after: corpus::CONTEXT_AFTER,
            scope: ProjectScope::Project,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// A normalized bug with its window and ingredient sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BugAnalysis {
    pub bug: BugSample,
    pub window: ContextWindow,
    pub sets: IngredientSets,
}

pub fn analyze(bug: &BugSample, opts: &AnalysisOptions) -> Result<BugAnalysis, AnalysisError> {
    let mut bug = corpus::normalize_sample(bug)?;
    if opts.scope == ProjectScope::File {
        bug.project_files = None;
    }
    let window = local_context(&bug, opts.before, opts.after);
    let sets = ingredient_sets(&bug, &window);
    Ok(BugAnalysis { bug, window, sets })
}

/// Analyses in corpus order; failures carry the bug id.
pub fn analyze_corpus(
    corpus: &BugCorpus,
    opts: &AnalysisOptions,
    exec: Exec,
) -> Vec<Result<BugAnalysis, (String, AnalysisError)>> {
    exec.map(&corpus.samples, |bug| analyze(bug, opts).map_err(|e| (bug.id.clone(), e)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covers {
    pub window: Option<f64>,
    pub method: Option<f64>,
    pub file: Option<f64>,
    pub project: Option<f64>,
}

/// One line of `extract` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub bug_id: String,
    pub bug_ids: NameSet,
    pub fix_ids: NameSet,
    pub fix_all: NameSet,
    pub win_in: NameSet,
    pub win_out: NameSet,
    pub mth_in: NameSet,
    pub mth_out: NameSet,
    pub file_in: NameSet,
    pub file_out: NameSet,
    pub proj_in: NameSet,
    pub proj_out: NameSet,
    pub project_scope: bool,
    pub has_method: bool,
    pub covers: Covers,
    /// Only filled for single-hunk bugs.
    pub distances: Vec<IngredientDistance>,
    pub uncovered: BTreeMap<String, UncoveredKind>,
}

impl ExtractionRecord {
    pub fn from_analysis(a: &BugAnalysis) -> Self {
        let s = &a.sets;
        let distances = if a.bug.is_single_hunk() {
            ingredient_distances(&a.bug, &s.file_in).into_iter().filter_map(Result::ok).collect()
        } else {
            Vec::new()
        };
        Self {
            bug_id: a.bug.id.clone(),
            bug_ids: s.bug_ids.clone(),
            fix_ids: s.fix_ids.clone(),
            fix_all: s.fix_all.clone(),
            win_in: s.win_in.clone(),
            win_out: s.win_out.clone(),
            mth_in: s.mth_in.clone(),
            mth_out: s.mth_out.clone(),
            file_in: s.file_in.clone(),
            file_out: s.file_out.clone(),
            proj_in: s.proj_in.clone(),
            proj_out: s.proj_out.clone(),
            project_scope: s.project_scope,
            has_method: s.method_range.is_some(),
            covers: Covers {
                window: cover(s, Scope::Window),
                method: cover(s, Scope::Method),
                file: cover(s, Scope::File),
                project: cover(s, Scope::Project),
            },
            distances,
            uncovered: classify_uncovered(&a.bug, s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Language;

    #[test]
    fn file_scope_drops_project_files() {
        let bug = BugSample {
            id: "p".into(),
            language: Language::Python,
            buggy_source: "x = 1\n".into(),
            fixed_source: "x = helper()\n".into(),
            buggy_hunks: vec![(1, 1).into()],
            fixed_hunks: vec![(1, 1).into()],
            fix_commit: None,
            repo: None,
            path: None,
            project_files: Some(vec![("u.py".into(), "def helper(): pass\n".into())]),
        };
        let a = analyze(&bug, &AnalysisOptions::default()).unwrap();
        assert!(a.sets.project_scope);
        let f = analyze(&bug, &AnalysisOptions { scope: ProjectScope::File, ..Default::default() }).unwrap();
        assert!(!f.sets.project_scope);
        let rec = ExtractionRecord::from_analysis(&f);
        assert_eq!(rec.covers.project, Some(0.0));
        assert!(!rec.project_scope);
    }
}
