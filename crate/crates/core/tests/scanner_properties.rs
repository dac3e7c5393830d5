use ingredient_core::analysis::{analyze, AnalysisOptions, BugAnalysis};
use ingredient_core::ingredients::NameSet;
use ingredient_core::scanning::{
    build_scanner, ScanError, ScanSample, chunk_lines, oow_stride, scan_samples_for, scanner_metrics, threshold_sweep, undersample,
    ScanOptions, ScannerKind, ScannerSpec, SweepFilter, Variant,
};
use ingredient_core::{synth, Exec};
use proptest::prelude::*;

fn analyses(seed: u64, n: usize) -> Vec<BugAnalysis> {
    analyses_with(seed, n, &synth::SynthOptions::default())
}

fn analyses_with(seed: u64, n: usize, opts: &synth::SynthOptions) -> Vec<BugAnalysis> {
    synth::corpus(seed, n, opts)
        .iter()
        .map(|b| analyze(b, &AnalysisOptions::default()).unwrap())
        .collect()
}

/// Samples for a bug, or `None` when the budget cannot hold its window.
fn samples_or_skip(a: &BugAnalysis, opts: &ScanOptions) -> Option<Vec<ScanSample>> {
    match scan_samples_for(a, opts) {
        Ok(s) => Some(s),
        Err(ScanError::BudgetTooSmall { .. } | ScanError::LineTooLong { .. }) => None,
        Err(e) => panic!("{}: {e}", a.bug.id),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn chunks_cover_every_line(n in 1usize..=10_000, size in 5usize..=500) {
        for variant in [Variant::All, Variant::Oow] {
            let chunks = chunk_lines(n, size, variant);
            let mut covered = vec![false; n];
            for c in &chunks {
                prop_assert!(c.len() <= size);
                for l in c.lines() {
                    covered[l - 1] = true;
                }
            }
            prop_assert!(covered.iter().all(|&c| c));
            for w in chunks.windows(2) {
                let overlap = (w[0].end + 1).saturating_sub(w[1].start);
                match variant {
                    Variant::All => prop_assert_eq!(overlap, 0),
                    Variant::Oow => prop_assert!(overlap >= size * 3 / 10),
                }
            }
        }
    }

    #[test]
    fn stride_is_ceiling_of_seventy_percent(size in 1usize..100_000) {
        let exact = (size as f64 * 0.7).ceil() as usize;
        prop_assert_eq!(oow_stride(size), exact);
    }

    #[test]
    fn f1_between_precision_and_recall(pred in proptest::collection::btree_set(0u8..20, 0..15), truth in proptest::collection::btree_set(0u8..20, 1..15)) {
        let p: NameSet = pred.iter().map(|x| x.to_string()).collect();
        let t: NameSet = truth.iter().map(|x| x.to_string()).collect();
        let m = scanner_metrics(&p, &t).unwrap();
        if m.precision > 0.0 && m.recall > 0.0 {
            prop_assert!(m.f1 >= m.precision.min(m.recall) - 1e-12);
            prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
            let h = 1.0 / (0.5 / m.precision + 0.5 / m.recall);
            prop_assert!((m.f1 - h).abs() < 1e-12);
        } else {
            prop_assert_eq!(m.f1, 0.0);
        }
        if m.precision == m.recall {
            prop_assert!((m.f1 - m.precision).abs() < 1e-12);
        }
    }
}

#[test]
fn sample_budget_labels_and_coverage() {
    let mut skipped = 0;
    for a in analyses(3, 150) {
        for variant in [Variant::All, Variant::Oow] {
            let opts = ScanOptions { budget_bytes: 2048, variant };
            let Some(samples) = samples_or_skip(&a, &opts) else {
                skipped += 1;
                continue;
            };
            let n = a.bug.buggy_source.lines().count();
            let mut covered = vec![false; n];
            let truth = variant.truth(&a.sets);
            for s in &samples {
                assert!(s.rendered_len() <= 2048);
                for l in s.lines.lines() {
                    covered[l - 1] = true;
                }
                let lexed = ingredient_core::lexing::lex_identifiers(&s.scan_text, a.bug.language);
                assert_eq!(lexed.len(), s.labels.len(), "{}", a.bug.id);
                for (o, l) in lexed.iter().zip(&s.labels) {
                    assert_eq!((&o.name, o.byte_offset), (&l.name, l.byte_offset));
                    assert_eq!(l.positive, truth.contains(&l.name));
                }
            }
            if !samples.is_empty() {
                assert!(covered.iter().all(|&c| c), "{}", a.bug.id);
            }
        }
    }
    assert!(skipped < 60, "{skipped}");
}

#[test]
fn recall_non_increasing_in_threshold() {
    let all = analyses(17, 200);
    let thresholds: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    for kind in [ScannerKind::NaiveRandom, ScannerKind::LexicalSimilarity, ScannerKind::Oracle] {
        let scanner = build_scanner(&ScannerSpec::new(kind).with_seed(5), None).unwrap();
        let r = threshold_sweep(scanner.as_ref(), &all, &ScanOptions::default(), &thresholds, SweepFilter::All, Exec::default());
        for w in r.rows.windows(2) {
            assert!(w[1].recall <= w[0].recall + 1e-12, "{kind:?}: {:?}", r.rows);
        }
    }
}

#[test]
fn oracle_is_perfect_when_truth_is_in_file() {
    let all = analyses(19, 1000);
    let thresholds = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 1.0];
    let oracle = build_scanner(&ScannerSpec::new(ScannerKind::Oracle), None).unwrap();
    for variant in [Variant::All, Variant::Oow] {
        let opts = ScanOptions { budget_bytes: 4096, variant };
        let r = threshold_sweep(oracle.as_ref(), &all, &opts, &thresholds, SweepFilter::TruthInFile, Exec::default());
        assert!(r.rows[0].n_bugs > 30, "{variant:?} {}", r.rows[0].n_bugs);
        for row in &r.rows {
            assert_eq!((row.precision, row.recall, row.f1), (1.0, 1.0, 1.0), "{variant:?} {row:?}");
        }
    }
}

#[test]
fn union_never_loses_names() {
    let scanner = build_scanner(&ScannerSpec::new(ScannerKind::NaiveRandom).with_seed(2), None).unwrap();
    for a in analyses(23, 80) {
        let Some(samples) = samples_or_skip(&a, &ScanOptions { budget_bytes: 2500, variant: Variant::Oow }) else {
            continue;
        };
        let mut previous = NameSet::new();
        for k in 1..=samples.len() {
            let got = scanner.score(&a, &samples[..k]).unwrap().select(0.5);
            assert!(previous.is_subset(&got));
            previous = got;
        }
    }
}

#[test]
fn undersample_keeps_positives() {
    let mut samples = Vec::new();
    let big = synth::SynthOptions { max_functions: 30, vocabulary: 300, ..Default::default() };
    for a in analyses_with(29, 120, &big) {
        samples.extend(samples_or_skip(&a, &ScanOptions { budget_bytes: 2500, variant: Variant::Oow }).unwrap_or_default());
    }
    let positives = samples.iter().filter(|s| s.has_positive()).count();
    let negatives = samples.len() - positives;
    assert!(positives > 0 && negatives > positives);
    let kept = undersample(samples.clone(), 11);
    assert_eq!(kept.iter().filter(|s| s.has_positive()).count(), positives);
    assert_eq!(kept.len(), 2 * positives);
    assert_eq!(kept, undersample(samples, 11));
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let all = analyses(31, 120);
    let scanner = build_scanner(&ScannerSpec::new(ScannerKind::NaiveRandom).with_seed(9), None).unwrap();
    let t = [0.05, 0.5, 0.95];
    let a = threshold_sweep(scanner.as_ref(), &all, &ScanOptions::default(), &t, SweepFilter::All, Exec::Sequential);
    let b = threshold_sweep(scanner.as_ref(), &all, &ScanOptions::default(), &t, SweepFilter::All, Exec::Parallel);
    assert_eq!(a, b);
}
