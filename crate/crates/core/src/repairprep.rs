//! Repair-model inputs.
//!
//! Layout of a rendered prompt:
//!
//! ```text
//! name1 name2 ... <INGRE>        (only when ingredients are given)
//! ...context before...
//! <BUGSTART>
//! ...buggy hunk lines...
//! <BUGEND>
//! ...context after...
//! ```
//!
//! Lines between two hunks of a multi-hunk bug are kept verbatim. When the
//! prompt exceeds its byte budget, context lines go first, farthest from
//! the bug first, alternating tail and head and starting with the tail.
//! Then the ingredient list is cut from its end. Hunk lines and markers are
//! never dropped.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::BugAnalysis;
use crate::corpus::{window_around, BugSample, ContextWindow};
use crate::lexing::lex_identifiers;
use crate::scanning::{self, ScanError, ScanOptions, Scanner};
use crate::text::{LineIndex, LineRange};

pub const BUG_START: &str = "<BUGSTART>";
pub const BUG_END: &str = "<BUGEND>";
pub const INGREDIENT_SEPARATOR: &str = "<INGRE>";
/// 1024 model tokens at 4 bytes per token.
pub const DEFAULT_BUDGET_BYTES: usize = 4096;
/// Budget multiplier of the large-context baseline (5120 vs 1024 tokens).
pub const LARGE_CONTEXT_MULTIPLIER: usize = 5;
/// Distractors added per true ingredient in the low-precision baseline.
pub const DISTRACTORS_PER_INGREDIENT: usize = 20;

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("budget of {budget} bytes is below the {needed} bytes of hunks and markers")]
    BudgetTooSmall { needed: usize, budget: usize },
    #[error("mode `scanner` needs a scanner; use scanner_pipeline")]
    ModeNeedsScanner,
    #[error(transparent)]
    Scan(#[from] ScanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    /// Ingredients predicted by a scanner.
    Scanner,
    /// Ground-truth `fix_all`.
    Perfect,
    /// Ground-truth `file_in`.
    PerfectFile,
    /// `file_in` plus random distractors from the file.
    PerfectLowPrecision,
    /// File identifiers filling the leftover budget.
    Naive,
    None,
    /// No ingredients, five times the budget spent on context.
    LargeContext,
}

impl PromptMode {
    pub const ALL: [PromptMode; 7] = [
        PromptMode::Scanner,
        PromptMode::Perfect,
        PromptMode::PerfectFile,
        PromptMode::PerfectLowPrecision,
        PromptMode::Naive,
        PromptMode::None,
        PromptMode::LargeContext,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptMode::Scanner => "scanner",
            PromptMode::Perfect => "perfect",
            PromptMode::PerfectFile => "perfect_file",
            PromptMode::PerfectLowPrecision => "perfect_low_precision",
            PromptMode::Naive => "naive",
            PromptMode::None => "none",
            PromptMode::LargeContext => "large_context",
        }
    }
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown prompt mode `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairPrompt {
    pub bug_id: String,
    pub text: String,
    pub ingredient_list: Vec<String>,
    pub mode: PromptMode,
    pub budget_bytes: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearningTarget {
    pub bug_id: String,
    pub text: String,
}

/// Fixed hunk lines, newline-joined across hunks in order.
pub fn learning_target(bug: &BugSample) -> LearningTarget {
    let index = LineIndex::new(&bug.fixed_source);
    let lines: Vec<&str> = bug
        .fixed_hunks
        .iter()
        .filter(|h| !h.is_empty())
        .flat_map(|h| h.lines())
        .map(|l| index.line(&bug.fixed_source, l))
        .collect();
    LearningTarget {
        bug_id: bug.id.clone(),
        text: lines.join("\n"),
    }
}

/// Pieces of a prompt that trimming works on.
struct Layout<'a> {
    pre: VecDeque<&'a str>,
    core: String,
    post: VecDeque<&'a str>,
    ingredients: Vec<String>,
}

fn ingredient_prefix_len(ingredients: &[String]) -> usize {
    if ingredients.is_empty() {
        return 0;
    }
    ingredients.iter().map(String::len).sum::<usize>() + ingredients.len() + INGREDIENT_SEPARATOR.len() + 1
}

impl<'a> Layout<'a> {
    fn new(bug: &'a BugSample, index: &LineIndex, range: LineRange, ingredients: Vec<String>) -> Self {
        let src = bug.buggy_source.as_str();
        let first = bug.buggy_hunks[0];
        let last = *bug.buggy_hunks.last().expect("validated bug has a hunk");
        let line = |l: usize| index.line(src, l);
        let pre = (range.start..first.start).map(line).collect();
        let post = (last.end + 1..=range.end).map(line).collect();
        let mut core = String::new();
        let mut next = first.start;
        for hunk in &bug.buggy_hunks {
            for l in next..hunk.start {
                core.push_str(line(l));
                core.push('\n');
            }
            core.push_str(BUG_START);
            core.push('\n');
            for l in hunk.lines() {
                core.push_str(line(l));
                core.push('\n');
            }
            core.push_str(BUG_END);
            core.push('\n');
            next = hunk.end + 1;
        }
        Self { pre, core, post, ingredients }
    }

    fn context_len(lines: &VecDeque<&str>) -> usize {
        lines.iter().map(|l| l.len() + 1).sum()
    }

    fn len(&self) -> usize {
        ingredient_prefix_len(&self.ingredients)
            + Self::context_len(&self.pre)
            + self.core.len()
            + Self::context_len(&self.post)
    }

    fn fit(&mut self, budget: usize) -> Result<(), PrepError> {
        let mut total = self.len();
        let mut tail_turn = true;
        while total > budget && !(self.pre.is_empty() && self.post.is_empty()) {
            let from_tail = (tail_turn && !self.post.is_empty()) || self.pre.is_empty();
            let dropped = if from_tail { self.post.pop_back() } else { self.pre.pop_front() };
            total -= dropped.map_or(0, |l| l.len() + 1);
            tail_turn = !tail_turn;
        }
        while total > budget && !self.ingredients.is_empty() {
            self.ingredients.pop();
            total = self.len();
        }
        if total > budget {
            return Err(PrepError::BudgetTooSmall {
                needed: total,
                budget,
            });
        }
        Ok(())
    }

    fn render(&self) -> String {
        let mut out = String::with_capacity(self.len());
        if !self.ingredients.is_empty() {
            out.push_str(&self.ingredients.join(" "));
            out.push(' ');
            out.push_str(INGREDIENT_SEPARATOR);
            out.push('\n');
        }
        for l in &self.pre {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str(&self.core);
        for l in &self.post {
            out.push_str(l);
            out.push('\n');
        }
        out
    }
}

/// The marked bug with its full window and no ingredient prefix.
pub fn render_marked_window(bug: &BugSample, window: &ContextWindow) -> String {
    let index = LineIndex::new(&bug.buggy_source);
    Layout::new(bug, &index, window.range, Vec::new()).render()
}

pub fn build_repair_input(
    bug: &BugSample,
    window: &ContextWindow,
    ingredients: &[String],
    budget: usize,
) -> Result<RepairPrompt, PrepError> {
    let index = LineIndex::new(&bug.buggy_source);
    let mut layout = Layout::new(bug, &index, window.range, ingredients.to_vec());
    layout.fit(budget)?;
    Ok(RepairPrompt {
        bug_id: bug.id.clone(),
        text: layout.render(),
        ingredient_list: layout.ingredients.clone(),
        mode: PromptMode::None,
        budget_bytes: budget,
        notes: Vec::new(),
    })
}

/// Texts found between `<BUGSTART>` and `<BUGEND>` marker lines.
pub fn extract_marked_hunks(text: &str) -> Vec<String> {
    let open = format!("{BUG_START}\n");
    let close = format!("{BUG_END}\n");
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(s) = rest.find(&open) {
        let body = &rest[s + open.len()..];
        let Some(e) = body.find(&close) else { break };
        out.push(body[..e].to_string());
        rest = &body[e + close.len()..];
    }
    out
}

/// Buggy hunk lines as they appear between markers.
pub fn buggy_hunk_texts(bug: &BugSample) -> Vec<String> {
    let index = LineIndex::new(&bug.buggy_source);
    bug.buggy_hunks
        .iter()
        .map(|h| crate::text::render_lines(&bug.buggy_source, &index, *h))
        .collect()
}

fn bug_seed(seed: u64, bug_id: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(bug_id.as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Every baseline input. `seed` only matters for the low-precision mode.
pub fn build_baseline_input(
    analysis: &BugAnalysis,
    mode: PromptMode,
    seed: u64,
    budget: usize,
) -> Result<RepairPrompt, PrepError> {
    build_baseline_input_with(analysis, mode, seed, budget, LARGE_CONTEXT_MULTIPLIER)
}

/// [`build_baseline_input`] with an explicit large-context budget multiplier.
pub fn build_baseline_input_with(
    analysis: &BugAnalysis,
    mode: PromptMode,
    seed: u64,
    budget: usize,
    large_multiplier: usize,
) -> Result<RepairPrompt, PrepError> {
    let BugAnalysis { bug, window, sets } = analysis;
    let mut notes = Vec::new();
    let mut prompt = match mode {
        PromptMode::Scanner => return Err(PrepError::ModeNeedsScanner),
        PromptMode::None => build_repair_input(bug, window, &[], budget)?,
        PromptMode::Perfect => {
            build_repair_input(bug, window, &sets.fix_all.iter().cloned().collect::<Vec<_>>(), budget)?
        }
        PromptMode::PerfectFile => {
            build_repair_input(bug, window, &sets.file_in.iter().cloned().collect::<Vec<_>>(), budget)?
        }
        PromptMode::PerfectLowPrecision => {
            let mut rng = ChaCha8Rng::seed_from_u64(bug_seed(seed, &bug.id));
            let pool: Vec<&String> = sets.file_ids.difference(&sets.fix_all).collect();
            let need = DISTRACTORS_PER_INGREDIENT * sets.file_in.len();
            if pool.len() < need {
                notes.push(format!("distractor shortfall: needed {need}, pool has {}", pool.len()));
            }
            let mut list: Vec<String> = sets.file_in.iter().cloned().collect();
            list.extend(pool.choose_multiple(&mut rng, need.min(pool.len())).map(|s| (*s).clone()));
            list.shuffle(&mut rng);
            build_repair_input(bug, window, &list, budget)?
        }
        PromptMode::Naive => naive_prompt(bug, window, budget)?,
        PromptMode::LargeContext => {
            let budget = budget * large_multiplier;
            let expanded = expand_window(bug, window, budget);
            build_repair_input(bug, &expanded, &[], budget)?
        }
    };
    prompt.mode = mode;
    prompt.notes.extend(notes);
    Ok(prompt)
}

/// First-occurrence-ordered file identifiers packed into whatever budget
/// the bug and its context leave over.
fn naive_prompt(bug: &BugSample, window: &ContextWindow, budget: usize) -> Result<RepairPrompt, PrepError> {
    let base = build_repair_input(bug, window, &[], budget)?;
    let mut seen = BTreeSet::new();
    let mut free = budget - base.text.len();
    let mut list = Vec::new();
    for occ in lex_identifiers(&bug.buggy_source, bug.language) {
        if !seen.insert(occ.name.clone()) {
            continue;
        }
        let cost = if list.is_empty() {
            occ.name.len() + 1 + INGREDIENT_SEPARATOR.len() + 1
        } else {
            occ.name.len() + 1
        };
        if cost <= free {
            free -= cost;
            list.push(occ.name);
        }
    }
    build_repair_input(bug, window, &list, budget)
}

/// Grows the window a line at a time, head first then tail, while the
/// marked rendering stays within `budget`.
fn expand_window(bug: &BugSample, window: &ContextWindow, budget: usize) -> ContextWindow {
    let index = LineIndex::new(&bug.buggy_source);
    let n = index.line_count();
    let first = bug.buggy_hunks[0];
    let last = *bug.buggy_hunks.last().expect("validated bug has a hunk");
    let mut range = window.range;
    let mut used = render_marked_window(bug, window).len();
    let mut head_open = true;
    let mut tail_open = true;
    while head_open || tail_open {
        if head_open {
            if range.start > 1 && used + index.span(range.start - 1).1 - index.span(range.start - 1).0 < budget {
                range.start -= 1;
                let (s, e) = index.span(range.start);
                used += e - s + 1;
            } else {
                head_open = false;
            }
        }
        if tail_open {
            if range.end < n && used + index.span(range.end + 1).1 - index.span(range.end + 1).0 < budget {
                range.end += 1;
                let (s, e) = index.span(range.end);
                used += e - s + 1;
            } else {
                tail_open = false;
            }
        }
    }
    let before = first.start - range.start;
    let after = range.end.saturating_sub(last.end);
    window_around(n, first.start, last.end, before, after)
}

/// Scanner-predicted ingredients, highest score first, ties by name.
pub fn scanner_pipeline(
    analysis: &BugAnalysis,
    scanner: &dyn Scanner,
    scan: &ScanOptions,
    threshold: f64,
    budget: usize,
) -> Result<RepairPrompt, PrepError> {
    let samples = scanning::scan_samples_for(analysis, scan)?;
    let prediction = scanner.score(analysis, &samples)?;
    let mut ranked: Vec<(&String, f64)> = prediction
        .scores
        .iter()
        .filter(|(_, &s)| s >= threshold)
        .map(|(n, &s)| (n, s))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let list: Vec<String> = ranked.into_iter().map(|(n, _)| n.clone()).collect();
    let mut prompt = build_repair_input(&analysis.bug, &analysis.window, &list, budget)?;
    prompt.mode = PromptMode::Scanner;
    Ok(prompt)
}

/// One line of prompt-emission output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub bug_id: String,
    pub mode: PromptMode,
    pub text: String,
    pub ingredient_list: Vec<String>,
    pub target: String,
}

impl PromptRecord {
    pub fn new(prompt: &RepairPrompt, bug: &BugSample) -> Self {
        Self {
            bug_id: prompt.bug_id.clone(),
            mode: prompt.mode,
            text: prompt.text.clone(),
            ingredient_list: prompt.ingredient_list.clone(),
            target: learning_target(bug).text,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze, AnalysisOptions};
    use crate::corpus::{local_context, Language};

    fn bug(buggy: &str, fixed: &str, bh: &[(usize, usize)], fh: &[(usize, usize)]) -> BugSample {
        BugSample {
            id: "b".into(),
            language: Language::Python,
            buggy_source: buggy.into(),
            fixed_source: fixed.into(),
            buggy_hunks: bh.iter().map(|&h| h.into()).collect(),
            fixed_hunks: fh.iter().map(|&h| h.into()).collect(),
            fix_commit: None,
            repo: None,
            path: None,
            project_files: None,
        }
    }

    fn numbered(n: usize) -> String {
        (1..=n).map(|i| format!("v{i} = w{i}\n")).collect()
    }

    #[test]
    fn markers_and_ingredient_prefix() {
        let buggy = "def f(cpu):\n    x = 1\n    return cpu.toxml()\n";
        let fixed = "def f(cpu):\n    x = 1\n    return ElementTree.tostring(cpu)\n";
        let b = bug(buggy, fixed, &[(3, 3)], &[(3, 3)]);
        let w = local_context(&b, 18, 12);
        let ingr: Vec<String> = ["to_str", "six", "tostring", "ElementTree", "xmlutil"].iter().map(|s| s.to_string()).collect();
        let p = build_repair_input(&b, &w, &ingr, 4096).unwrap();
        assert_eq!(
            p.text,
            "to_str six tostring ElementTree xmlutil <INGRE>\ndef f(cpu):\n    x = 1\n<BUGSTART>\n    return cpu.toxml()\n<BUGEND>\n"
        );
        let none = build_repair_input(&b, &w, &[], 4096).unwrap();
        assert!(!none.text.contains(INGREDIENT_SEPARATOR));
        assert_eq!(learning_target(&b).text, "    return ElementTree.tostring(cpu)");
    }

    #[test]
    fn tight_budget_drops_farthest_post_line_first() {
        let b = bug(&numbered(10), &numbered(10).replace("v5 = w5", "v5 = z"), &[(5, 5)], &[(5, 5)]);
        let w = local_context(&b, 18, 12);
        let full = build_repair_input(&b, &w, &[], 4096).unwrap();
        let p = build_repair_input(&b, &w, &[], full.text.len() - 1).unwrap();
        assert!(!p.text.contains("v10 = w10"));
        assert!(p.text.contains("v1 = w1"));
        let p = build_repair_input(&b, &w, &[], full.text.len() - 11).unwrap();
        assert!(!p.text.contains("v10 = w10"));
        assert!(!p.text.contains("v1 = w1\n"));
        assert!(p.text.contains("v9 = w9"));
        assert_eq!(extract_marked_hunks(&p.text), vec!["v5 = w5\n".to_string()]);
    }

    #[test]
    fn ingredients_cut_after_context() {
        let b = bug(&numbered(3), "v1 = w1\nv2 = q\nv3 = w3\n", &[(2, 2)], &[(2, 2)]);
        let w = local_context(&b, 18, 12);
        let ingr = vec!["aaaa".to_string(), "bbbb".to_string()];
        let core = "<BUGSTART>\nv2 = w2\n<BUGEND>\n".len();
        let p = build_repair_input(&b, &w, &ingr, core + "aaaa <INGRE>\n".len()).unwrap();
        assert_eq!(p.ingredient_list, vec!["aaaa"]);
        assert_eq!(p.text, "aaaa <INGRE>\n<BUGSTART>\nv2 = w2\n<BUGEND>\n");
        let err = build_repair_input(&b, &w, &ingr, core - 1).unwrap_err();
        assert!(matches!(err, PrepError::BudgetTooSmall { needed, budget } if needed == core && budget == core - 1));
    }

    #[test]
    fn multi_hunk_and_deletion_targets() {
        let b = bug(&numbered(6), "v1 = w1\nA\nv3 = w3\nv4 = w4\nB\nv6 = w6\n", &[(2, 2), (5, 5)], &[(2, 2), (5, 5)]);
        assert_eq!(learning_target(&b).text, "A\nB");
        let w = local_context(&b, 18, 12);
        let p = build_repair_input(&b, &w, &[], 4096).unwrap();
        assert_eq!(p.text.matches(BUG_START).count(), 2);
        assert_eq!(extract_marked_hunks(&p.text), buggy_hunk_texts(&b));
        let del = bug(&numbered(3), "v1 = w1\nv3 = w3\n", &[(2, 2)], &[(2, 1)]);
        assert_eq!(learning_target(&del).text, "");
        let ins = bug("a = 1\nc = 3\n", "a = 1\nb = 2\nc = 3\n", &[(2, 1)], &[(2, 2)]);
        let p = build_repair_input(&ins, &local_context(&ins, 18, 12), &[], 4096).unwrap();
        assert_eq!(p.text, "a = 1\n<BUGSTART>\n<BUGEND>\nc = 3\n");
    }

    fn analysis_for(n: usize) -> BugAnalysis {
        let src: String = (1..=n).map(|i| format!("name{i} = other{i}(arg)\n")).collect();
        let fixed = src.replace("name60 = other60(arg)", "name60 = other3(name7, fresh)");
        let b = bug(&src, &fixed, &[(60, 60)], &[(60, 60)]);
        analyze(&b, &AnalysisOptions::default()).unwrap()
    }

    #[test]
    fn baseline_modes() {
        let a = analysis_for(120);
        assert_eq!(a.sets.fix_all.len(), 3);
        assert_eq!(a.sets.file_in.len(), 2);
        let none = build_baseline_input(&a, PromptMode::None, 1, 4096).unwrap();
        let plain = build_repair_input(&a.bug, &a.window, &[], 4096).unwrap();
        assert_eq!(none, plain);

        let perfect = build_baseline_input(&a, PromptMode::Perfect, 1, 4096).unwrap();
        assert_eq!(perfect.ingredient_list, ["fresh", "name7", "other3"]);

        let pf = build_baseline_input(&a, PromptMode::PerfectFile, 1, 4096).unwrap();
        assert_eq!(pf.ingredient_list.len(), a.sets.file_in.len());

        let lp = build_baseline_input(&a, PromptMode::PerfectLowPrecision, 1, 100_000).unwrap();
        assert_eq!(lp.ingredient_list.len(), 21 * a.sets.file_in.len());
        let again = build_baseline_input(&a, PromptMode::PerfectLowPrecision, 1, 100_000).unwrap();
        assert_eq!(lp, again);
        let uniq: BTreeSet<_> = lp.ingredient_list.iter().collect();
        assert_eq!(uniq.len(), lp.ingredient_list.len());

        let naive = build_baseline_input(&a, PromptMode::Naive, 1, 4096).unwrap();
        assert!(naive.text.len() <= 4096);
        assert!(naive.ingredient_list.iter().all(|n| a.sets.file_ids.contains(n)));
        assert_eq!(naive.ingredient_list[..3], ["name1", "other1", "arg"]);

        let large = build_baseline_input(&a, PromptMode::LargeContext, 1, 4096).unwrap();
        assert_eq!(large.budget_bytes, 5 * 4096);
        assert!(large.text.len() > none.text.len());
        assert!(large.text.len() <= 5 * 4096);
        assert!(large.ingredient_list.is_empty());
        assert!(matches!(build_baseline_input(&a, PromptMode::Scanner, 1, 4096), Err(PrepError::ModeNeedsScanner)));
    }

    #[test]
    fn large_context_takes_whole_small_file() {
        let a = analysis_for(70);
        let large = build_baseline_input(&a, PromptMode::LargeContext, 1, 4096).unwrap();
        assert!(large.text.starts_with("name1 = other1(arg)\n"));
        assert!(large.text.ends_with("name70 = other70(arg)\n"));
    }

    #[test]
    fn distractor_shortfall_is_noted() {
        let a = analysis_for(62);
        let lp = build_baseline_input(&a, PromptMode::PerfectLowPrecision, 3, 100_000).unwrap();
        assert!(lp.notes.iter().any(|n| n.contains("shortfall")) || lp.ingredient_list.len() == 21 * a.sets.file_in.len());
    }

    #[test]
    fn mode_names() {
        assert_eq!("perfect_low_precision".parse::<PromptMode>().unwrap(), PromptMode::PerfectLowPrecision);
        assert_eq!(serde_json::to_string(&PromptMode::LargeContext).unwrap(), "\"large_context\"");
        assert!("bogus".parse::<PromptMode>().is_err());
        for m in PromptMode::ALL {
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.as_str()));
            assert_eq!(m.as_str().parse::<PromptMode>().unwrap(), m);
        }
    }
}
