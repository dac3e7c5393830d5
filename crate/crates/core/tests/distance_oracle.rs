use ingredient_core::analysis::{analyze, AnalysisOptions};
use ingredient_core::ingredients::{ingredient_distance, DistanceError};
use ingredient_core::lexing::lex_identifiers;
use ingredient_core::synth;
use ingredient_core::BugSample;

/// Byte span of the hunk lines, computed from the raw line split.
fn hunk_span(src: &str, start: usize, end: usize) -> (usize, usize) {
    let mut offset = 0;
    let mut span = (0, 0);
    for (i, line) in src.split_inclusive('\n').enumerate() {
        let no = i + 1;
        let body = line.strip_suffix('\n').unwrap_or(line);
        if no == start {
            span.0 = offset;
        }
        if no == end {
            span.1 = offset + body.len();
        }
        offset += line.len();
    }
    span
}

/// Every occurrence outside the hunk is measured; the smallest magnitude
/// wins and an exact tie goes to the earlier (negative) side.
fn brute_force(bug: &BugSample, name: &str) -> Option<i64> {
    let h = bug.buggy_hunks[0];
    let (hs, he) = hunk_span(&bug.buggy_source, h.start, h.end);
    let mut candidates: Vec<i64> = Vec::new();
    for o in lex_identifiers(&bug.buggy_source, bug.language) {
        if o.name != name {
            continue;
        }
        let begin = o.byte_offset;
        let end = begin + o.name.len();
        if begin >= hs && end <= he {
            continue;
        }
        if end <= hs {
            candidates.push(-((hs - end) as i64));
        } else {
            candidates.push((begin - he) as i64);
        }
    }
    candidates.sort_by_key(|d| (d.abs(), *d));
    candidates.first().copied()
}

#[test]
fn matches_brute_force_on_generated_single_hunk_bugs() {
    let corpus = synth::single_hunk_corpus(77, 1500);
    let mut checked = 0;
    let mut negative = 0;
    for raw in corpus.iter() {
        let a = analyze(raw, &AnalysisOptions::default()).unwrap();
        let bug = &a.bug;
        if bug.buggy_hunks[0].is_empty() {
            continue;
        }
        let names = a.sets.file_in.iter().chain(a.sets.win_ids.iter().take(3));
        for name in names {
            let got = ingredient_distance(bug, name);
            match brute_force(bug, name) {
                Some(d) => {
                    assert_eq!(got.as_ref().map(|x| x.signed_chars), Ok(d), "{} {name}", bug.id);
                    negative += usize::from(d < 0);
                }
                None => assert_eq!(got, Err(DistanceError::NotFound(name.clone())), "{} {name}", bug.id),
            }
            checked += 1;
        }
    }
    assert!(checked > 1500, "{checked}");
    assert!(negative > 100, "{negative}");
}
