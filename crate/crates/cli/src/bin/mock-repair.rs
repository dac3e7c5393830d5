//! Test double for a repair model. It looks up the learning target of each
//! request in a prompts file and places it among dummy candidates.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use ingredient_core::analysis::ExtractionRecord;
use ingredient_core::protocol::{RepairRequest, RepairResponse};
use ingredient_core::repairprep::PromptRecord;
use serde::de::DeserializeOwned;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Behavior {
    /// Target as the first candidate.
    Echo,
    /// Target as the fourth of five candidates.
    Rank4,
    /// Target first, but only when every fix ingredient occurs somewhere in
    /// the prompt, either listed or in the context.
    RequireIngredients,
}

#[derive(Parser)]
struct Args {
    #[arg(long, value_enum, default_value = "echo")]
    behavior: Behavior,
    #[arg(long)]
    prompts: PathBuf,
    /// Extraction records; needed by `require-ingredients`.
    #[arg(long)]
    extraction: Option<PathBuf>,
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Vec<T> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("jsonl record"))
        .collect()
}

fn words(text: &str) -> BTreeSet<&str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
        .filter(|w| !w.is_empty())
        .collect()
}

fn main() {
    let args = Args::parse();
    let targets: BTreeMap<String, String> = read_jsonl::<PromptRecord>(&args.prompts)
        .into_iter()
        .map(|p| (p.bug_id, p.target))
        .collect();
    let needed: BTreeMap<String, Vec<String>> = match &args.extraction {
        Some(p) => read_jsonl::<ExtractionRecord>(p)
            .into_iter()
            .map(|r| (r.bug_id, r.fix_all.into_iter().collect()))
            .collect(),
        None => BTreeMap::new(),
    };
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line.expect("stdin");
        if line.trim().is_empty() {
            continue;
        }
        let req: RepairRequest = serde_json::from_str(&line).expect("repair request");
        let mut candidates: Vec<String> = (1..=req.k.max(5)).map(|i| format!("pass  # dummy {i}")).collect();
        let target = targets.get(&req.id).cloned().unwrap_or_default();
        let hit = match args.behavior {
            Behavior::Echo => Some(0),
            Behavior::Rank4 => Some(3),
            Behavior::RequireIngredients => {
                let have = words(&req.text);
                let all = needed.get(&req.id).map_or(true, |n| n.iter().all(|x| have.contains(x.as_str())));
                all.then_some(0)
            }
        };
        if let Some(i) = hit {
            candidates[i] = target;
        }
        candidates.truncate(req.k);
        let resp = RepairResponse { id: req.id, candidates };
        serde_json::to_writer(&mut out, &resp).expect("stdout");
        out.write_all(b"\n").expect("stdout");
        out.flush().expect("stdout");
    }
}
