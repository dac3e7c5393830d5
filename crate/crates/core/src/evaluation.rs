//! Exact-match scoring of repair candidates and success-rate breakdowns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::inv_beta_reg;

use crate::analysis::BugAnalysis;
use crate::ingredients::{cover, ingredient_distance, FrequencyBand, FrequencyTable, IngredientSets, Scope};
use crate::text::LineIndex;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_DISTANCE_BINS: usize = 20;
pub const DEFAULT_COUNT_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Byte equality.
    #[default]
    Strict,
    /// Equality after stripping trailing whitespace from every line.
    LineTrimmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub bug_id: String,
    pub candidates: Vec<String>,
    pub success: bool,
    /// 1-based rank of the first matching candidate.
    pub first_hit_rank: Option<usize>,
}

impl RepairOutcome {
    /// Success when only the first `k` candidates count.
    pub fn success_at(&self, k: usize) -> bool {
        self.first_hit_rank.is_some_and(|r| r <= k)
    }
}

fn trim_lines(s: &str) -> String {
    s.split('\n').map(str::trim_end).collect::<Vec<_>>().join("\n")
}

pub fn exact_match(bug_id: &str, candidates: &[String], target: &str, mode: MatchMode) -> RepairOutcome {
    let target_norm = match mode {
        MatchMode::Strict => target.to_string(),
        MatchMode::LineTrimmed => trim_lines(target),
    };
    let first_hit_rank = candidates
        .iter()
        .position(|c| match mode {
            MatchMode::Strict => c == target,
            MatchMode::LineTrimmed => trim_lines(c) == target_norm,
        })
        .map(|i| i + 1);
    RepairOutcome {
        bug_id: bug_id.to_string(),
        candidates: candidates.to_vec(),
        success: first_hit_rank.is_some(),
        first_hit_rank,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Wald interval clipped to [0, 1].
    #[default]
    Normal,
    /// Exact binomial interval.
    ClopperPearson,
}

/// 95% confidence interval of a success proportion; `None` when `n == 0`.
pub fn proportion_ci(successes: usize, n: usize, method: CiMethod) -> Option<(f64, f64)> {
    if n == 0 {
        return None;
    }
    let p = successes as f64 / n as f64;
    Some(match method {
        CiMethod::Normal => {
            let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.975);
            let half = z * (p * (1.0 - p) / n as f64).sqrt();
            ((p - half).max(0.0), (p + half).min(1.0))
        }
        CiMethod::ClopperPearson => {
            let (x, n) = (successes as f64, n as f64);
            let lo = if successes == 0 {
                0.0
            } else {
                inv_beta_reg(x, n - x + 1.0, 0.025)
            };
            let hi = if x == n {
                1.0
            } else {
                inv_beta_reg(x + 1.0, n - x, 0.975)
            };
            (lo, hi)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Candidates that count towards success.
    pub k: usize,
    pub ci: CiMethod,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            ci: CiMethod::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    IngredientCount,
    Distance,
    FrequencyClass,
    WindowCoverage,
    ScopeCover,
}

impl Dimension {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::IngredientCount => "ingredient_count",
            Dimension::Distance => "distance",
            Dimension::FrequencyClass => "frequency_class",
            Dimension::WindowCoverage => "window_coverage",
            Dimension::ScopeCover => "scope_cover",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub successes: usize,
    pub rate: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

impl Bin {
    fn new(label: impl Into<String>, lo: f64, hi: f64, successes: usize, n: usize, ci: CiMethod) -> Self {
        Self {
            label: label.into(),
            lo,
            hi,
            n,
            successes,
            rate: (n > 0).then(|| successes as f64 / n as f64),
            ci95: proportion_ci(successes, n, ci),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub dimension: Dimension,
    pub bins: Vec<Bin>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_pre_context_bytes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_post_context_bytes: Option<f64>,
}

impl BreakdownReport {
    fn new(dimension: Dimension, bins: Vec<Bin>) -> Self {
        Self {
            dimension,
            bins,
            notes: Vec::new(),
            median_pre_context_bytes: None,
            median_post_context_bytes: None,
        }
    }

    pub fn population(&self) -> usize {
        self.bins.iter().map(|b| b.n).sum()
    }

    pub const CSV_HEADER: &'static str = "dimension,lo,hi,n,rate,ci_lo,ci_hi";

    /// CSV rows without header; empty bins leave rate and CI blank.
    pub fn csv_rows(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        self.bins
            .iter()
            .map(|b| {
                format!(
                    "{},{},{},{},{},{},{}",
                    self.dimension.as_str(),
                    b.lo,
                    b.hi,
                    b.n,
                    opt(b.rate),
                    opt(b.ci95.map(|c| c.0)),
                    opt(b.ci95.map(|c| c.1))
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in self.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowFilter {
    #[default]
    Any,
    /// Bugs with every ingredient inside the window.
    AllInWindow,
    /// Bugs with at least one ingredient outside the window.
    AnyOutOfWindow,
}

impl WindowFilter {
    pub fn keeps(&self, sets: &IngredientSets) -> bool {
        match self {
            WindowFilter::Any => true,
            WindowFilter::AllInWindow => sets.win_out.is_empty(),
            WindowFilter::AnyOutOfWindow => !sets.win_out.is_empty(),
        }
    }
}

fn tally(points: impl Iterator<Item = bool>) -> (usize, usize) {
    points.fold((0, 0), |(s, n), ok| (s + ok as usize, n + 1))
}

/// Outcomes paired with the sets of their bug; outcomes without sets are
/// dropped.
fn joined<'a>(
    outcomes: &'a [RepairOutcome],
    sets: &'a BTreeMap<String, IngredientSets>,
) -> impl Iterator<Item = (&'a RepairOutcome, &'a IngredientSets)> {
    outcomes.iter().filter_map(|o| sets.get(&o.bug_id).map(|s| (o, s)))
}

/// Success by `|fix_all|`, one bin per count from 0 to `cap`; the last
/// bin takes every count at or above `cap`.
pub fn success_by_ingredient_count(
    outcomes: &[RepairOutcome],
    sets: &BTreeMap<String, IngredientSets>,
    filter: WindowFilter,
    cap: usize,
    opts: &EvalOptions,
) -> BreakdownReport {
    let mut counts = vec![(0usize, 0usize); cap + 1];
    for (o, s) in joined(outcomes, sets).filter(|(_, s)| filter.keeps(s)) {
        let slot = &mut counts[s.fix_all.len().min(cap)];
        slot.0 += o.success_at(opts.k) as usize;
        slot.1 += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(c, (ok, n))| {
            let label = if c == cap { format!("{c}+") } else { c.to_string() };
            let hi = if c == cap { f64::INFINITY } else { c as f64 };
            Bin::new(label, c as f64, hi, ok, n, opts.ci)
        })
        .collect();
    let mut report = BreakdownReport::new(Dimension::IngredientCount, bins);
    if filter != WindowFilter::Any {
        report.notes.push(format!("filter: {filter:?}"));
    }
    report
}

/// One single-hunk, single-ingredient bug placed on the distance axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistancePoint {
    pub bug_id: String,
    pub success: bool,
    pub distance: i64,
    pub pre_context_bytes: usize,
    pub post_context_bytes: usize,
}

/// Distance points for the outcomes whose bug has one hunk and exactly one
/// fix ingredient found in the file.
pub fn distance_points(outcomes: &[RepairOutcome], analyses: &BTreeMap<String, BugAnalysis>, k: usize) -> Vec<DistancePoint> {
    outcomes
        .iter()
        .filter_map(|o| {
            let a = analyses.get(&o.bug_id)?;
            if !a.bug.is_single_hunk() || a.sets.fix_all.len() != 1 {
                return None;
            }
            let name = a.sets.fix_all.iter().next()?;
            let d = ingredient_distance(&a.bug, name).ok()?;
            let index = LineIndex::new(&a.bug.buggy_source);
            let bytes = |r| {
                let (s, e) = index.range_span(r);
                if r.is_empty() {
                    0
                } else {
                    e - s + 1
                }
            };
            Some(DistancePoint {
                bug_id: o.bug_id.clone(),
                success: o.success_at(k),
                distance: d.signed_chars,
                pre_context_bytes: bytes(a.window.pre_lines),
                post_context_bytes: bytes(a.window.post_lines),
            })
        })
        .collect()
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    Some(percentile(&xs, 0.5))
}

/// Sizes of `bins` consecutive groups over `n` items differing by at most 1.
pub fn equal_count_sizes(n: usize, bins: usize) -> Vec<usize> {
    (0..bins).map(|i| n / bins + usize::from(i < n % bins)).collect()
}

/// Success by signed distance in equal-count bins, optionally keeping only
/// the 10th to 90th percentile.
pub fn success_by_distance(points: &[DistancePoint], n_bins: usize, trim: bool, opts: &EvalOptions) -> BreakdownReport {
    let mut pts: Vec<&DistancePoint> = points.iter().collect();
    pts.sort_by_key(|p| p.distance);
    let mut notes = Vec::new();
    if trim && !pts.is_empty() {
        let sorted: Vec<f64> = pts.iter().map(|p| p.distance as f64).collect();
        let (lo, hi) = (percentile(&sorted, 0.1), percentile(&sorted, 0.9));
        let before = pts.len();
        pts.retain(|p| (p.distance as f64) >= lo && (p.distance as f64) <= hi);
        notes.push(format!("trimmed to [{lo}, {hi}]: kept {} of {before}", pts.len()));
    }
    let mut bins = Vec::new();
    if !pts.is_empty() {
        let degenerate = pts.first().map(|p| p.distance) == pts.last().map(|p| p.distance);
        let n_bins = if degenerate {
            notes.push("all distances equal: single bin".into());
            1
        } else if pts.len() < n_bins.max(1) {
            notes.push(format!("{} points for {n_bins} bins: using {} bins", pts.len(), pts.len()));
            pts.len()
        } else {
            n_bins.max(1)
        };
        let mut rest = pts.as_slice();
        for size in equal_count_sizes(rest.len(), n_bins) {
            let (chunk, tail) = rest.split_at(size);
            rest = tail;
            let (ok, n) = tally(chunk.iter().map(|p| p.success));
            let lo = chunk.first().map_or(0, |p| p.distance) as f64;
            let hi = chunk.last().map_or(0, |p| p.distance) as f64;
            bins.push(Bin::new(format!("[{lo}, {hi}]"), lo, hi, ok, n, opts.ci));
        }
    }
    let mut report = BreakdownReport::new(Dimension::Distance, bins);
    report.median_pre_context_bytes = median(pts.iter().map(|p| p.pre_context_bytes as f64).collect());
    report.median_post_context_bytes = median(pts.iter().map(|p| p.post_context_bytes as f64).collect());
    report.notes = notes;
    report
}

/// Success of single-ingredient bugs by the training frequency band of
/// their ingredient.
pub fn success_by_frequency(
    outcomes: &[RepairOutcome],
    sets: &BTreeMap<String, IngredientSets>,
    table: &FrequencyTable,
    opts: &EvalOptions,
) -> BreakdownReport {
    let mut by_band: BTreeMap<FrequencyBand, (usize, usize)> = BTreeMap::new();
    for (o, s) in joined(outcomes, sets).filter(|(_, s)| s.fix_all.len() == 1) {
        let name = s.fix_all.iter().next().expect("one ingredient");
        let slot = by_band.entry(FrequencyBand::of(table.count(name))).or_default();
        slot.0 += o.success_at(opts.k) as usize;
        slot.1 += 1;
    }
    let bins = [
        (FrequencyBand::Rare, 0.0, crate::ingredients::RARE_MAX as f64),
        (FrequencyBand::Mid, (crate::ingredients::RARE_MAX + 1) as f64, (crate::ingredients::COMMON_MIN - 1) as f64),
        (FrequencyBand::Common, crate::ingredients::COMMON_MIN as f64, f64::INFINITY),
    ]
    .into_iter()
    .map(|(band, lo, hi)| {
        let (ok, n) = by_band.get(&band).copied().unwrap_or((0, 0));
        Bin::new(band.as_str(), lo, hi, ok, n, opts.ci)
    })
    .collect();
    BreakdownReport::new(Dimension::FrequencyClass, bins)
}

/// Success by the fraction of ingredients inside the window, over bugs
/// that need ingredients: none, under half, half or more, all.
pub fn success_by_window_coverage(
    outcomes: &[RepairOutcome],
    sets: &BTreeMap<String, IngredientSets>,
    opts: &EvalOptions,
) -> BreakdownReport {
    let edges = [(0.0, 0.0, "0"), (0.0, 0.5, "(0, 0.5)"), (0.5, 1.0, "[0.5, 1)"), (1.0, 1.0, "1")];
    let mut counts = [(0usize, 0usize); 4];
    for (o, s) in joined(outcomes, sets) {
        let Some(c) = cover(s, Scope::Window) else { continue };
        let slot = if c == 0.0 {
            0
        } else if c < 0.5 {
            1
        } else if c < 1.0 {
            2
        } else {
            3
        };
        counts[slot].0 += o.success_at(opts.k) as usize;
        counts[slot].1 += 1;
    }
    let bins = edges
        .iter()
        .zip(counts)
        .map(|(&(lo, hi, label), (ok, n))| Bin::new(label, lo, hi, ok, n, opts.ci))
        .collect();
    BreakdownReport::new(Dimension::WindowCoverage, bins)
}

/// Success by the narrowest scope holding every ingredient of the bug.
pub fn success_by_scope_cover(
    outcomes: &[RepairOutcome],
    sets: &BTreeMap<String, IngredientSets>,
    opts: &EvalOptions,
) -> BreakdownReport {
    let labels = ["window", "method", "file", "project", "beyond_project"];
    let mut counts = [(0usize, 0usize); 5];
    for (o, s) in joined(outcomes, sets).filter(|(_, s)| !s.fix_all.is_empty()) {
        let slot = Scope::ALL
            .iter()
            .position(|&scope| cover(s, scope) == Some(1.0))
            .unwrap_or(4);
        counts[slot].0 += o.success_at(opts.k) as usize;
        counts[slot].1 += 1;
    }
    let bins = labels
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (label, (ok, n)))| Bin::new(*label, i as f64, i as f64, ok, n, opts.ci))
        .collect();
    BreakdownReport::new(Dimension::ScopeCover, bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub n_bugs: usize,
    pub n_with_ingredients: usize,
    pub no_ingredient_fraction: Option<f64>,
    /// Mean cover per scope over bugs that need ingredients; the method
    /// mean only counts bugs inside a callable.
    pub mean_cover: BTreeMap<Scope, Option<f64>>,
}

pub fn cover_report<'a>(sets: impl IntoIterator<Item = &'a IngredientSets>) -> CoverReport {
    let mut n_bugs = 0;
    let mut n_with = 0;
    let mut sums: BTreeMap<Scope, (f64, usize)> = Scope::ALL.iter().map(|&s| (s, (0.0, 0))).collect();
    for s in sets {
        n_bugs += 1;
        if s.fix_all.is_empty() {
            continue;
        }
        n_with += 1;
        for scope in Scope::ALL {
            if let Some(c) = cover(s, scope) {
                let slot = sums.get_mut(&scope).expect("every scope");
                slot.0 += c;
                slot.1 += 1;
            }
        }
    }
    CoverReport {
        n_bugs,
        n_with_ingredients: n_with,
        no_ingredient_fraction: (n_bugs > 0).then(|| (n_bugs - n_with) as f64 / n_bugs as f64),
        mean_cover: sums
            .into_iter()
            .map(|(scope, (sum, n))| (scope, (n > 0).then(|| sum / n as f64)))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub n: usize,
    pub successes: usize,
    pub rate: Option<f64>,
}

impl Rate {
    fn of(points: impl Iterator<Item = bool>) -> Self {
        let (successes, n) = tally(points);
        Self {
            n,
            successes,
            rate: (n > 0).then(|| successes as f64 / n as f64),
        }
    }
}

/// Success over all bugs, bugs with fix ingredients and bugs with
/// ingredients outside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairSummary {
    pub mode: String,
    pub k: usize,
    pub all: Rate,
    pub with_fix_ingredients: Rate,
    pub with_out_of_window: Rate,
    pub unevaluated: Vec<String>,
}

pub fn repair_summary(
    mode: &str,
    outcomes: &[RepairOutcome],
    sets: &BTreeMap<String, IngredientSets>,
    unevaluated: Vec<String>,
    k: usize,
) -> RepairSummary {
    let pairs: Vec<_> = joined(outcomes, sets).collect();
    RepairSummary {
        mode: mode.to_string(),
        k,
        all: Rate::of(pairs.iter().map(|(o, _)| o.success_at(k))),
        with_fix_ingredients: Rate::of(pairs.iter().filter(|(_, s)| !s.fix_all.is_empty()).map(|(o, _)| o.success_at(k))),
        with_out_of_window: Rate::of(pairs.iter().filter(|(_, s)| !s.win_out.is_empty()).map(|(o, _)| o.success_at(k))),
        unevaluated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingredients::NameSet;

    fn cands(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_match_ranks() {
        let o = exact_match("b", &cands(&["a", "b", "c", "t", "e"]), "t", MatchMode::Strict);
        assert!(o.success);
        assert_eq!(o.first_hit_rank, Some(4));
        assert!(!o.success_at(3));
        assert!(o.success_at(4));
        let o = exact_match("b", &cands(&["t"]), "t", MatchMode::Strict);
        assert_eq!(o.first_hit_rank, Some(1));
        let o = exact_match("b", &cands(&["x  = 1"]), "x = 1", MatchMode::Strict);
        assert!(!o.success);
        let o = exact_match("b", &cands(&["x = 1  \ny = 2"]), "x = 1\ny = 2 ", MatchMode::LineTrimmed);
        assert!(o.success);
        let o = exact_match("b", &cands(&["x = 1  \ny = 2"]), "x = 1\ny = 2 ", MatchMode::Strict);
        assert!(!o.success);
    }

    #[test]
    fn confidence_intervals() {
        assert_eq!(proportion_ci(0, 0, CiMethod::Normal), None);
        let (lo, hi) = proportion_ci(50, 100, CiMethod::Normal).unwrap();
        assert!((lo - 0.402).abs() < 1e-3 && (hi - 0.598).abs() < 1e-3);
        assert_eq!(proportion_ci(10, 10, CiMethod::Normal).unwrap(), (1.0, 1.0));
        let (lo, hi) = proportion_ci(0, 10, CiMethod::ClopperPearson).unwrap();
        assert_eq!(lo, 0.0);
        // exact upper bound for 0/10 is 1 - 0.025^(1/10)
        assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9, "{hi}");
    }

    #[test]
    fn equal_count_binning() {
        assert_eq!(equal_count_sizes(200, 20), vec![10; 20]);
        let s = equal_count_sizes(23, 5);
        assert_eq!(s.iter().sum::<usize>(), 23);
        assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
    }

    fn point(d: i64, ok: bool) -> DistancePoint {
        DistancePoint {
            bug_id: format!("b{d}"),
            success: ok,
            distance: d,
            pre_context_bytes: 100,
            post_context_bytes: 50,
        }
    }

    #[test]
    fn distance_bins() {
        let pts: Vec<_> = (0..200).map(|d| point(d - 100, d % 2 == 0)).collect();
        let r = success_by_distance(&pts, 20, false, &EvalOptions::default());
        assert_eq!(r.bins.len(), 20);
        assert!(r.bins.iter().all(|b| b.n == 10 && b.rate == Some(0.5)));
        assert_eq!(r.median_pre_context_bytes, Some(100.0));
        let r = success_by_distance(&pts, 20, true, &EvalOptions::default());
        assert_eq!(r.population(), 160);
        let same: Vec<_> = (0..7).map(|_| point(5, true)).collect();
        let r = success_by_distance(&same, 20, false, &EvalOptions::default());
        assert_eq!(r.bins.len(), 1);
        assert!(!r.notes.is_empty());
        let few: Vec<_> = (0..7).map(|d| point(d, true)).collect();
        let r = success_by_distance(&few, 20, false, &EvalOptions::default());
        assert_eq!(r.bins.len(), 7);
        assert!(r.notes[0].contains("7 bins"));
    }

    fn sets_with(fix: &[&str], win_out: &[&str]) -> IngredientSets {
        let n = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<NameSet>();
        let fix_all = n(fix);
        let win_ids: NameSet = fix_all.difference(&n(win_out)).cloned().collect();
        IngredientSets::from_parts(NameSet::new(), fix_all.clone(), win_ids, None, fix_all, None)
    }

    #[test]
    fn count_bins_and_summary() {
        let mut sets = BTreeMap::new();
        sets.insert("a".to_string(), sets_with(&[], &[]));
        sets.insert("b".to_string(), sets_with(&["x"], &[]));
        sets.insert("c".to_string(), sets_with(&["x", "y"], &["y"]));
        let outcomes = vec![
            exact_match("a", &cands(&["t"]), "t", MatchMode::Strict),
            exact_match("b", &cands(&["t"]), "t", MatchMode::Strict),
            exact_match("c", &cands(&["u"]), "t", MatchMode::Strict),
            exact_match("zz", &cands(&["t"]), "t", MatchMode::Strict),
        ];
        let r = success_by_ingredient_count(&outcomes, &sets, WindowFilter::Any, 3, &EvalOptions::default());
        assert_eq!(r.population(), 3);
        assert_eq!(r.bins[0].rate, Some(1.0));
        assert_eq!(r.bins[2].rate, Some(0.0));
        assert_eq!(r.bins[3].rate, None);
        let r = success_by_ingredient_count(&outcomes, &sets, WindowFilter::AllInWindow, 3, &EvalOptions::default());
        assert_eq!(r.population(), 2);
        let s = repair_summary("perfect", &outcomes, &sets, vec![], 5);
        assert_eq!((s.all.successes, s.all.n), (2, 3));
        assert_eq!((s.with_fix_ingredients.successes, s.with_fix_ingredients.n), (1, 2));
        assert_eq!((s.with_out_of_window.successes, s.with_out_of_window.n), (0, 1));
        let csv = r.to_csv();
        assert!(csv.starts_with("dimension,lo,hi,n,rate,ci_lo,ci_hi\ningredient_count,0,0,1,1,"));
        let w = success_by_window_coverage(&outcomes, &sets, &EvalOptions::default());
        assert_eq!(w.bins[3].n, 1);
        assert_eq!(w.bins[2].n, 1);
        let sc = success_by_scope_cover(&outcomes, &sets, &EvalOptions::default());
        assert_eq!(sc.bins[0].n, 1);
        assert_eq!(sc.bins[2].n, 1);
    }

    #[test]
    fn frequency_bands() {
        let mut sets = BTreeMap::new();
        sets.insert("a".to_string(), sets_with(&["rare"], &[]));
        sets.insert("b".to_string(), sets_with(&["common"], &[]));
        let table = FrequencyTable {
            counts: [("rare".to_string(), 50), ("common".to_string(), 500)].into_iter().collect(),
        };
        let outcomes = vec![
            exact_match("a", &cands(&["t"]), "t", MatchMode::Strict),
            exact_match("b", &cands(&["u"]), "t", MatchMode::Strict),
        ];
        let r = success_by_frequency(&outcomes, &sets, &table, &EvalOptions::default());
        assert_eq!(r.bins[0].label, "rare");
        assert_eq!((r.bins[0].n, r.bins[0].rate), (1, Some(1.0)));
        assert_eq!((r.bins[1].n, r.bins[1].rate), (0, None));
        assert_eq!((r.bins[2].n, r.bins[2].rate), (1, Some(0.0)));
    }

    #[test]
    fn cover_report_means() {
        let all = vec![sets_with(&[], &[]), sets_with(&["a", "b"], &["b"]), sets_with(&["c"], &[])];
        let r = cover_report(&all);
        assert_eq!(r.n_bugs, 3);
        assert!((r.no_ingredient_fraction.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.mean_cover[&Scope::Window], Some(0.75));
        assert_eq!(r.mean_cover[&Scope::File], Some(1.0));
        assert_eq!(r.mean_cover[&Scope::Method], None);
        let ops = vec![sets_with(&[], &[]); 4];
        let r = cover_report(&ops);
        assert_eq!(r.no_ingredient_fraction, Some(1.0));
        assert!(r.mean_cover.values().all(Option::is_none));
    }
}
