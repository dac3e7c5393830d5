//! Identifier ingredient sets of a bug and the measures derived from them.
//!
//! A fix ingredient is an identifier occurring on the fixed hunk lines but
//! not on the buggy hunk lines. Each context scope (window, enclosing
//! method, file, project) splits the ingredients into an `in` part that
//! occurs somewhere in that scope and an `out` part that does not.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BugCorpus, BugSample, ContextWindow};
use crate::exec::Exec;
use crate::lexing::{self, callable, lex_identifiers, IdentifierOccurrence};
use crate::text::{LineIndex, LineRange};

pub type NameSet = BTreeSet<String>;

/// Occurrence count at or below which an ingredient is rare.
pub const RARE_MAX: u64 = 50;
/// Occurrence count at or above which an ingredient is common.
pub const COMMON_MIN: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Window,
    Method,
    File,
    Project,
}

impl Scope {
    pub const ALL: [Scope; 4] = [Scope::Window, Scope::Method, Scope::File, Scope::Project];
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngredientSets {
    pub bug_ids: NameSet,
    pub fix_ids: NameSet,
    pub win_ids: NameSet,
    pub mth_ids: NameSet,
    pub file_ids: NameSet,
    pub proj_ids: NameSet,
    pub fix_all: NameSet,
    pub win_in: NameSet,
    pub win_out: NameSet,
    pub mth_in: NameSet,
    pub mth_out: NameSet,
    pub file_in: NameSet,
    pub file_out: NameSet,
    pub proj_in: NameSet,
    pub proj_out: NameSet,
    /// Lines of the innermost function or method around the hunks.
    pub method_range: Option<LineRange>,
    /// False when no project files were available and `proj_ids` fell back
    /// to the file.
    pub project_scope: bool,
}

impl IngredientSets {
    /// Derives every in/out set from the raw identifier sets.
    pub fn from_parts(
        bug_ids: NameSet,
        fix_ids: NameSet,
        win_ids: NameSet,
        method: Option<(LineRange, NameSet)>,
        file_ids: NameSet,
        project: Option<NameSet>,
    ) -> Self {
        let fix_all: NameSet = fix_ids.difference(&bug_ids).cloned().collect();
        let split = |scope: &NameSet| -> (NameSet, NameSet) {
            fix_all.iter().cloned().partition(|n| scope.contains(n))
        };
        let (method_range, mth_ids) = match method {
            Some((r, ids)) => (Some(r), ids),
            None => (None, NameSet::new()),
        };
        let project_scope = project.is_some();
        let proj_ids = match project {
            Some(p) => p.union(&file_ids).cloned().collect(),
            None => file_ids.clone(),
        };
        let (win_in, win_out) = split(&win_ids);
        let (mth_in, mth_out) = split(&mth_ids);
        let (file_in, file_out) = split(&file_ids);
        let (proj_in, proj_out) = split(&proj_ids);
        Self {
            bug_ids,
            fix_ids,
            win_ids,
            mth_ids,
            file_ids,
            proj_ids,
            fix_all,
            win_in,
            win_out,
            mth_in,
            mth_out,
            file_in,
            file_out,
            proj_in,
            proj_out,
            method_range,
            project_scope,
        }
    }

    pub fn scope_in(&self, scope: Scope) -> &NameSet {
        match scope {
            Scope::Window => &self.win_in,
            Scope::Method => &self.mth_in,
            Scope::File => &self.file_in,
            Scope::Project => &self.proj_in,
        }
    }

    pub fn scope_out(&self, scope: Scope) -> &NameSet {
        match scope {
            Scope::Window => &self.win_out,
            Scope::Method => &self.mth_out,
            Scope::File => &self.file_out,
            Scope::Project => &self.proj_out,
        }
    }

    /// `file_out`, or `proj_out` when real project files were available.
    pub fn widest_out(&self) -> &NameSet {
        if self.project_scope {
            &self.proj_out
        } else {
            &self.file_out
        }
    }
}

/// Name set of occurrences that fall on any of `ranges`.
fn names_on(occ: &[IdentifierOccurrence], ranges: &[LineRange]) -> NameSet {
    occ.iter()
        .filter(|o| ranges.iter().any(|r| r.contains(o.line)))
        .map(|o| o.name.clone())
        .collect()
}

/// Innermost callable enclosing every buggy hunk of `bug`.
pub fn enclosing_method(bug: &BugSample) -> Option<LineRange> {
    let line_count = LineIndex::new(&bug.buggy_source).line_count();
    let first = bug.buggy_hunks.first()?;
    let last = bug.buggy_hunks.last()?;
    // an insertion point is anchored to the line it precedes
    let lo = first.start.min(line_count.max(1));
    let hi = if last.is_empty() { lo.max(last.start.min(line_count.max(1))) } else { last.end };
    let ranges = callable::callable_ranges(&bug.buggy_source, bug.language);
    ranges
        .iter()
        .filter(|r| r.contains(lo) && r.contains(hi))
        .max_by_key(|r| (r.start, std::cmp::Reverse(r.end)))
        .copied()
}

pub fn ingredient_sets(bug: &BugSample, window: &ContextWindow) -> IngredientSets {
    let buggy = lex_identifiers(&bug.buggy_source, bug.language);
    let fixed = lex_identifiers(&bug.fixed_source, bug.language);
    let bug_ids = names_on(&buggy, &bug.buggy_hunks);
    let fix_ids = names_on(&fixed, &bug.fixed_hunks);
    let win_ids = names_on(&buggy, &[window.range]);
    let method = enclosing_method(bug).map(|r| (r, names_on(&buggy, &[r])));
    let file_ids = lexing::name_set(&buggy);
    let project = bug.project_files.as_ref().map(|files| {
        files
            .iter()
            .flat_map(|(_, text)| lex_identifiers(text, bug.language))
            .map(|o| o.name)
            .collect::<NameSet>()
    });
    IngredientSets::from_parts(bug_ids, fix_ids, win_ids, method, file_ids, project)
}

/// Fraction of fix ingredients found in `scope`. `None` when the bug needs
/// no ingredient, or for the method scope when there is no enclosing
/// callable.
pub fn cover(sets: &IngredientSets, scope: Scope) -> Option<f64> {
    if sets.fix_all.is_empty() || (scope == Scope::Method && sets.method_range.is_none()) {
        return None;
    }
    Some(sets.scope_in(scope).len() as f64 / sets.fix_all.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngredientDistance {
    pub name: String,
    /// Negative when the closest occurrence precedes the hunk.
    pub signed_chars: i64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistanceError {
    #[error("distance is only defined for single-hunk bugs ({0} hunks)")]
    MultiHunk(usize),
    #[error("no in-file occurrence of `{0}` outside the hunk")]
    NotFound(String),
}

/// Signed byte distance between the buggy hunk and the nearest occurrence
/// of `name` outside it, measured edge to edge. Ties go to the occurrence
/// before the hunk.
pub fn ingredient_distance(bug: &BugSample, name: &str) -> Result<IngredientDistance, DistanceError> {
    let occ = lex_identifiers(&bug.buggy_source, bug.language);
    distance_from_occurrences(bug, &occ, name)
}

/// Distances for every name of `names`, lexing the file once.
pub fn ingredient_distances<'a>(
    bug: &BugSample,
    names: impl IntoIterator<Item = &'a String>,
) -> Vec<Result<IngredientDistance, DistanceError>> {
    let occ = lex_identifiers(&bug.buggy_source, bug.language);
    names.into_iter().map(|n| distance_from_occurrences(bug, &occ, n)).collect()
}

fn distance_from_occurrences(
    bug: &BugSample,
    occ: &[IdentifierOccurrence],
    name: &str,
) -> Result<IngredientDistance, DistanceError> {
    if bug.buggy_hunks.len() != 1 {
        return Err(DistanceError::MultiHunk(bug.buggy_hunks.len()));
    }
    let hunk = bug.buggy_hunks[0];
    let (hunk_start, hunk_end) = LineIndex::new(&bug.buggy_source).range_span(hunk);
    let mut best: Option<i64> = None;
    for o in occ.iter().filter(|o| o.name == name && !hunk.contains(o.line)) {
        let end = o.byte_offset + o.name.len();
        let d = if end <= hunk_start {
            end as i64 - hunk_start as i64
        } else {
            o.byte_offset as i64 - hunk_end as i64
        };
        best = Some(match best {
            None => d,
            Some(b) if d.abs() < b.abs() || (d.abs() == b.abs() && d < b) => d,
            Some(b) => b,
        });
    }
    best.map(|signed_chars| IngredientDistance {
        name: name.to_string(),
        signed_chars,
    })
    .ok_or_else(|| DistanceError::NotFound(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyBand {
    Rare,
    Mid,
    Common,
}

impl FrequencyBand {
    pub fn of(count: u64) -> Self {
        if count <= RARE_MAX {
            FrequencyBand::Rare
        } else if count >= COMMON_MIN {
            FrequencyBand::Common
        } else {
            FrequencyBand::Mid
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FrequencyBand::Rare => "rare",
            FrequencyBand::Mid => "mid",
            FrequencyBand::Common => "common",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyClass {
    pub name: String,
    pub count: u64,
    pub class: FrequencyBand,
}

/// Occurrence counts of identifiers on the fixed hunk lines of a training
/// split.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub counts: BTreeMap<String, u64>,
}

impl FrequencyTable {
    pub fn count(&self, name: &str) -> u64 {
        self.counts.get(name).copied().unwrap_or(0)
    }

    pub fn class_of(&self, name: &str) -> FrequencyClass {
        let count = self.count(name);
        FrequencyClass {
            name: name.to_string(),
            count,
            class: FrequencyBand::of(count),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn merge(mut self, other: FrequencyTable) -> FrequencyTable {
        for (name, n) in other.counts {
            *self.counts.entry(name).or_insert(0) += n;
        }
        self
    }
}

fn fixed_hunk_counts(bug: &BugSample) -> FrequencyTable {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for o in lex_identifiers(&bug.fixed_source, bug.language) {
        if bug.fixed_hunks.iter().any(|h| h.contains(o.line)) {
            *counts.entry(o.name).or_insert(0) += 1;
        }
    }
    FrequencyTable {
        counts: counts.into_iter().collect(),
    }
}

pub fn frequency_table(train: &BugCorpus, exec: Exec) -> FrequencyTable {
    exec.map_reduce(&train.samples, fixed_hunk_counts, FrequencyTable::default, FrequencyTable::merge)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncoveredKind {
    /// Only occurs inside the patch itself: declared there, not retrievable.
    PatchInternal,
    /// Standard library, third-party or dynamically created name.
    ExternalUnknown,
}

/// Classifies every name of the widest available out-set.
pub fn classify_uncovered(bug: &BugSample, sets: &IngredientSets) -> BTreeMap<String, UncoveredKind> {
    let fixed = lex_identifiers(&bug.fixed_source, bug.language);
    sets.widest_out()
        .iter()
        .map(|name| {
            let internal = fixed
                .iter()
                .filter(|o| &o.name == name)
                .all(|o| bug.fixed_hunks.iter().any(|h| h.contains(o.line)));
            let kind = if internal {
                UncoveredKind::PatchInternal
            } else {
                UncoveredKind::ExternalUnknown
            };
            (name.clone(), kind)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{local_context, Language, CONTEXT_AFTER, CONTEXT_BEFORE};

    fn set(items: &[&str]) -> NameSet {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn bug(lang: Language, buggy: &str, fixed: &str, bh: (usize, usize), fh: (usize, usize)) -> BugSample {
        BugSample {
            id: "t".into(),
            language: lang,
            buggy_source: buggy.into(),
            fixed_source: fixed.into(),
            buggy_hunks: vec![bh.into()],
            fixed_hunks: vec![fh.into()],
            fix_commit: None,
            repo: None,
            path: None,
            project_files: None,
        }
    }

    fn sets_of(b: &BugSample) -> IngredientSets {
        ingredient_sets(b, &local_context(b, CONTEXT_BEFORE, CONTEXT_AFTER))
    }

    #[test]
    fn element_tree_fix_needs_two_ingredients() {
        let buggy = "def dump(cpu):\n    return cpu.toxml()\n";
        let fixed = "def dump(cpu):\n    return ElementTree.tostring(cpu)\n";
        let s = sets_of(&bug(Language::Python, buggy, fixed, (2, 2), (2, 2)));
        assert_eq!(s.fix_all, set(&["ElementTree", "tostring"]));
        assert_eq!(s.file_out, s.fix_all);
        assert_eq!(s.method_range, Some(LineRange::new(1, 2)));
    }

    #[test]
    fn operator_fix_needs_nothing() {
        let s = sets_of(&bug(Language::Python, "if a < b:\n    go()\n", "if a <= b:\n    go()\n", (1, 1), (1, 1)));
        assert!(s.fix_all.is_empty());
        assert_eq!(cover(&s, Scope::File), None);
    }

    #[test]
    fn html_escape_wrap_in_java() {
        let buggy = "public class ImageMapUtilities {\n  public static String htmlEscape(String s) { return s; }\n}\nclass Frag {\n  String tag(String toolTipText) {\n    return \" title=\\\"\" + toolTipText;\n  }\n}\n";
        let fixed = buggy.replace(
            "return \" title=\\\"\" + toolTipText;",
            "return \" title=\\\"\" + ImageMapUtilities.htmlEscape(toolTipText);",
        );
        let s = sets_of(&bug(Language::Java, buggy, &fixed, (6, 6), (6, 6)));
        assert_eq!(s.fix_all, set(&["ImageMapUtilities", "htmlEscape"]));
        assert_eq!(s.file_in, s.fix_all);
        assert_eq!(s.method_range, Some(LineRange::new(5, 7)));
        assert_eq!(cover(&s, Scope::Method), Some(0.0));
        assert_eq!(cover(&s, Scope::File), Some(1.0));
    }

    #[test]
    fn cover_arithmetic() {
        let s = IngredientSets::from_parts(set(&[]), set(&["a", "b"]), set(&[]), None, set(&["a"]), None);
        assert_eq!(cover(&s, Scope::File), Some(0.5));
        assert_eq!(cover(&s, Scope::Method), None);
        assert!(!s.project_scope);
        assert_eq!(s.proj_ids, s.file_ids);
        let s = IngredientSets::from_parts(set(&[]), set(&["a"]), set(&["a"]), None, set(&["a"]), None);
        assert_eq!(cover(&s, Scope::Window), Some(1.0));
    }

    #[test]
    fn distance_examples() {
        // single occurrence ending 120 bytes before the hunk
        let pad = "#".repeat(118);
        let buggy = format!("abc\n{pad}\nx = 1\n");
        let b = bug(Language::Python, &buggy, "y\n", (3, 3), (1, 1));
        assert_eq!(ingredient_distance(&b, "abc").unwrap().signed_chars, -120);

        // occurrences at -300 and +50 -> +50
        let far = "#".repeat(298);
        let near = "#".repeat(48);
        let buggy = format!("q\n{far}\nx = 1\n{near}\nq\n");
        let b = bug(Language::Python, &buggy, "y\n", (3, 3), (1, 1));
        assert_eq!(ingredient_distance(&b, "q").unwrap().signed_chars, 50);

        // -50 and +50 tie -> -50
        let buggy = format!("q\n{near}\nx = 1\n{near}\nq\n");
        let b = bug(Language::Python, &buggy, "y\n", (3, 3), (1, 1));
        assert_eq!(ingredient_distance(&b, "q").unwrap().signed_chars, -50);
    }

    #[test]
    fn distance_errors() {
        let b = bug(Language::Python, "a = 1\nb = 2\n", "a = 2\nb = 2\n", (1, 1), (1, 1));
        assert_eq!(ingredient_distance(&b, "zz"), Err(DistanceError::NotFound("zz".into())));
        let mut m = b.clone();
        m.buggy_hunks.push((2, 2).into());
        assert_eq!(ingredient_distance(&m, "b"), Err(DistanceError::MultiHunk(2)));
    }

    #[test]
    fn frequency_bands() {
        assert_eq!(FrequencyBand::of(50), FrequencyBand::Rare);
        assert_eq!(FrequencyBand::of(51), FrequencyBand::Mid);
        assert_eq!(FrequencyBand::of(200), FrequencyBand::Mid);
        assert_eq!(FrequencyBand::of(499), FrequencyBand::Mid);
        assert_eq!(FrequencyBand::of(500), FrequencyBand::Common);
    }

    #[test]
    fn frequency_counts_fixed_hunk_multiset() {
        let a = bug(Language::Python, "x = 1\nz = 0\n", "x = f(f(y))\nz = 0\n", (1, 1), (1, 1));
        let corpus = BugCorpus::new(vec![a.clone(), a]);
        let t = frequency_table(&corpus, Exec::Sequential);
        assert_eq!(t.count("f"), 4);
        assert_eq!(t.count("x"), 2);
        assert_eq!(t.count("z"), 0);
        assert_eq!(t.total(), 8);
        assert_eq!(t, frequency_table(&corpus, Exec::Parallel));
    }

    #[test]
    fn loop_variable_is_patch_internal() {
        let buggy = "def f(items):\n    total = 0\n    return total\n";
        let fixed = "def f(items):\n    total = sum(item for item in items)\n    return total\n";
        let b = bug(Language::Python, buggy, fixed, (2, 2), (2, 2));
        let got = classify_uncovered(&b, &sets_of(&b));
        assert_eq!(got.get("item"), Some(&UncoveredKind::PatchInternal));
        // covered names are not reported
        assert!(!got.contains_key("items"));
    }

    #[test]
    fn imported_dependency_is_external() {
        let buggy = "class A {\n  String t(String s) {\n    return s;\n  }\n}\n";
        let fixed = "import org.apache.commons.lang.StringEscapeUtils;\nclass A {\n  String t(String s) {\n    return StringEscapeUtils.escapeHtml(s);\n  }\n}\n";
        let b = bug(Language::Java, buggy, fixed, (3, 3), (4, 4));
        let got = classify_uncovered(&b, &sets_of(&b));
        assert_eq!(got.get("StringEscapeUtils"), Some(&UncoveredKind::ExternalUnknown));
        assert_eq!(got.get("escapeHtml"), Some(&UncoveredKind::PatchInternal));
    }

    #[test]
    fn project_files_extend_scope() {
        let mut b = bug(Language::Python, "x = 1\n", "x = helper()\n", (1, 1), (1, 1));
        b.project_files = Some(vec![("util.py".into(), "def helper():\n    pass\n".into())]);
        let s = sets_of(&b);
        assert!(s.project_scope);
        assert_eq!(s.proj_in, set(&["helper"]));
        assert_eq!(s.file_out, set(&["helper"]));
        assert_eq!(cover(&s, Scope::Project), Some(1.0));
    }
}
