//! Random but well-formed bug samples for property tests, benchmarks and
//! demos.
//!
//! Files are built from statement templates over a per-file name pool, with
//! functions or methods, nested blocks, comments, string literals and the
//! occasional multi-line docstring or block comment. Hunks only ever cover
//! plain statement lines, and replacement lines reuse file names, hunk names
//! and a few fresh names, so every ingredient scope gets exercised.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BugCorpus, BugSample, Language};
use crate::text::LineRange;

const SYLLABLES: &[&str] = &[
    "data", "node", "item", "count", "value", "buf", "key", "size", "path", "conf", "user", "row", "col", "idx",
    "acc", "tmp", "res", "req", "obj", "elem", "parse", "load", "store", "fetch", "render", "flag", "name", "text",
    "cache", "frame",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    /// Probability that a bug is Python rather than Java.
    pub python_share: f64,
    pub max_hunks: usize,
    /// Probability that a bug ships sibling project files.
    pub project_prob: f64,
    pub max_functions: usize,
    /// Upper bound on the size of a file's identifier pool.
    pub vocabulary: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            python_share: 0.5,
            max_hunks: 3,
            project_prob: 0.3,
            max_functions: 6,
            vocabulary: 24,
        }
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    lang: Language,
    pool: Vec<String>,
    types: Vec<String>,
    max_functions: usize,
    lines: Vec<String>,
    /// Indentation of lines a hunk may cover.
    eligible: Vec<Option<usize>>,
}

fn word(rng: &mut impl Rng) -> &'static str {
    SYLLABLES.choose(rng).expect("syllables")
}

fn ident(rng: &mut impl Rng, lang: Language) -> String {
    let n = rng.gen_range(1..=2);
    let parts: Vec<&str> = (0..n).map(|_| word(rng)).collect();
    match lang {
        Language::Python => parts.join("_"),
        Language::Java => {
            let mut out = parts[0].to_string();
            for p in &parts[1..] {
                out.push_str(&capitalize(p));
            }
            out
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
}

fn fresh(rng: &mut impl Rng, lang: Language) -> String {
    format!("{}{}", ident(rng, lang), rng.gen_range(10..100))
}

impl<'a> Gen<'a> {
    fn new(rng: &'a mut ChaCha8Rng, lang: Language, max_functions: usize, vocabulary: usize) -> Self {
        let n = rng.gen_range(6..vocabulary.max(7));
        let mut pool: Vec<String> = (0..n).map(|_| ident(rng, lang)).collect();
        pool.sort();
        pool.dedup();
        let types = (0..rng.gen_range(2..5)).map(|_| capitalize(&ident(rng, lang))).collect();
        Self {
            rng,
            lang,
            pool,
            types,
            max_functions: max_functions.max(1),
            lines: Vec::new(),
            eligible: Vec::new(),
        }
    }

    fn name(&mut self) -> String {
        self.pool.choose(self.rng).expect("nonempty pool").clone()
    }

    fn ty(&mut self) -> String {
        self.types.choose(self.rng).expect("nonempty types").clone()
    }

    fn push(&mut self, indent: usize, text: String, eligible: bool) {
        self.lines.push(format!("{}{}", " ".repeat(indent), text));
        self.eligible.push(eligible.then_some(indent));
    }

    fn statement_with(&mut self, names: &mut dyn FnMut(&mut Self) -> String) -> String {
        let (a, b, c, d) = (names(self), names(self), names(self), names(self));
        let n = self.rng.gen_range(0..100);
        let w = word(self.rng);
        match (self.lang, self.rng.gen_range(0..7)) {
            (Language::Python, 0) => format!("{a} = {b}({c}, {d})"),
            (Language::Python, 1) => format!("{a} = {b}.{c}"),
            (Language::Python, 2) => format!("{a}.{b}({c}, {d}={n})"),
            (Language::Python, 3) => format!("{a} = '{w} {w}' + {b}"),
            (Language::Python, 4) => format!("{a} += {n}  # {w} {w}"),
            (Language::Python, 5) => format!("{a} = {b} < {c}"),
            (Language::Python, _) => format!("{a}[{n}] = {b}.{c}({d})"),
            (Language::Java, 0) => format!("{a} = {b}.{c}({d});"),
            (Language::Java, 1) => format!("{a} = {b} + {n};"),
            (Language::Java, 2) => format!("{a}.{b}(\"{w} {w}\", {c});"),
            (Language::Java, 3) => format!("{a} = {b} < {c}; // {w}"),
            (Language::Java, 4) => format!("{a} = new {}({b});", self.ty()),
            (Language::Java, 5) => format!("{a} = {b}[{n}];"),
            (Language::Java, _) => format!("{a} = {b}.{c};"),
        }
    }

    fn statement(&mut self) -> String {
        self.statement_with(&mut |g: &mut Self| g.name())
    }

    fn body(&mut self, indent: usize, depth: usize) {
        let n = self.rng.gen_range(2..10);
        for _ in 0..n {
            let roll = self.rng.gen_range(0..10);
            if roll == 0 && depth < 2 {
                let (a, b) = (self.name(), self.name());
                match self.lang {
                    Language::Python => {
                        let head = if self.rng.gen_bool(0.5) {
                            format!("if {a} < {b}:")
                        } else {
                            format!("for {a} in {b}:")
                        };
                        self.push(indent, head, false);
                        self.body(indent + 4, depth + 1);
                    }
                    Language::Java => {
                        self.push(indent, format!("if ({a} < {b}) {{"), false);
                        self.body(indent + 4, depth + 1);
                        self.push(indent, "}".into(), false);
                    }
                }
            } else if roll == 1 {
                let text = match self.lang {
                    Language::Python => format!("# {} {}", word(self.rng), self.name()),
                    Language::Java => format!("// {} {}", word(self.rng), self.name()),
                };
                self.push(indent, text, false);
            } else {
                let s = self.statement();
                self.push(indent, s, true);
            }
        }
        if self.lang == Language::Java || self.rng.gen_bool(0.5) {
            let r = self.name();
            let text = match self.lang {
                Language::Python => format!("return {r}"),
                Language::Java => format!("return {r};"),
            };
            self.push(indent, text, true);
        }
    }

    fn python_file(&mut self) {
        for _ in 0..self.rng.gen_range(0..3) {
            let m = self.name();
            self.push(0, format!("import {m}"), true);
        }
        let in_class = self.rng.gen_bool(0.3);
        let base = if in_class {
            let c = self.ty();
            self.push(0, format!("class {c}:"), false);
            4
        } else {
            0
        };
        for _ in 0..self.rng.gen_range(1..=self.max_functions) {
            let f = self.name();
            let mut params: Vec<String> = (0..self.rng.gen_range(0..3)).map(|_| self.name()).collect();
            params.dedup();
            if in_class {
                params.insert(0, "self".into());
            }
            self.push(base, format!("def {f}({}):", params.join(", ")), false);
            if self.rng.gen_bool(0.3) {
                let w = word(self.rng);
                self.push(base + 4, format!("\"\"\"{} {w}.", capitalize(w)), false);
                let n = self.name();
                self.push(base + 4, format!("uses {n} and 'quotes'"), false);
                self.push(base + 4, "\"\"\"".into(), false);
            }
            self.body(base + 4, 0);
            self.push(0, String::new(), false);
            if !in_class && self.rng.gen_bool(0.5) {
                let s = self.statement();
                self.push(0, s, true);
            }
        }
    }

    fn java_file(&mut self) {
        let (a, b) = (self.name(), self.ty());
        self.push(0, format!("import {a}.{b};"), false);
        let class = self.ty();
        self.push(0, format!("public class {class} {{"), false);
        let field = self.name();
        self.push(4, format!("private int {field};"), true);
        for _ in 0..self.rng.gen_range(1..=self.max_functions) {
            if self.rng.gen_bool(0.3) {
                let w = word(self.rng);
                self.push(4, "/**".into(), false);
                let n = self.name();
                self.push(4, format!(" * {w} {n}"), false);
                self.push(4, " */".into(), false);
            }
            let (ret, m) = (self.ty(), self.name());
            let params: Vec<String> = (0..self.rng.gen_range(0..3))
                .map(|_| format!("{} {}", self.ty(), self.name()))
                .collect();
            self.push(4, format!("public {ret} {m}({}) {{", params.join(", ")), false);
            self.body(8, 0);
            self.push(4, "}".into(), false);
        }
        self.push(0, "}".into(), false);
    }
}

/// Chosen hunk: buggy start line, buggy length, replacement lines.
struct Edit {
    start: usize,
    len: usize,
    replacement: Vec<String>,
}

fn pick_edits(g: &mut Gen<'_>, max_hunks: usize) -> Vec<Edit> {
    let eligible: Vec<usize> = (0..g.lines.len()).filter(|&i| g.eligible[i].is_some()).collect();
    if eligible.is_empty() {
        return Vec::new();
    }
    let want = if g.rng.gen_bool(0.7) { 1 } else { g.rng.gen_range(1..=max_hunks.max(1)) };
    let mut starts: Vec<usize> = eligible.choose_multiple(g.rng, want.min(eligible.len())).copied().collect();
    starts.sort_unstable();
    let mut edits = Vec::new();
    let mut next_free = 0;
    for (k, &s) in starts.iter().enumerate() {
        if s < next_free {
            continue;
        }
        let indent = g.eligible[s].expect("eligible");
        let limit = starts.get(k + 1).map_or(g.lines.len(), |&n| n.saturating_sub(1));
        let insertion = g.rng.gen_bool(0.1);
        let mut len = if insertion { 0 } else { g.rng.gen_range(1..=3) };
        let mut end = s;
        while end - s < len && end < limit && g.eligible[end] == Some(indent) {
            end += 1;
        }
        if !insertion {
            len = (end - s).max(1);
        }
        let m = if len > 0 && g.rng.gen_bool(0.1) { 0 } else { g.rng.gen_range(1..=2) };
        let bug_names: Vec<String> = (s..s + len)
            .flat_map(|i| crate::lexing::lex_identifiers(&g.lines[i], g.lang))
            .map(|o| o.name)
            .collect();
        let replacement = (0..m)
            .map(|_| {
                let lang = g.lang;
                let stmt = g.statement_with(&mut |g: &mut Gen<'_>| {
                    let roll = g.rng.gen_range(0..10);
                    if roll < 2 && !bug_names.is_empty() {
                        bug_names.choose(g.rng).expect("nonempty").clone()
                    } else if roll < 3 {
                        fresh(g.rng, lang)
                    } else {
                        g.name()
                    }
                });
                format!("{}{stmt}", " ".repeat(indent))
            })
            .collect();
        edits.push(Edit { start: s + 1, len, replacement });
        next_free = s + len + 1;
    }
    edits
}

fn join_lines(lines: &[String]) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}

fn apply(lines: &[String], edits: &[Edit]) -> (String, Vec<LineRange>, Vec<LineRange>) {
    let mut fixed = Vec::new();
    let mut buggy_hunks = Vec::new();
    let mut fixed_hunks = Vec::new();
    let mut i = 1;
    for e in edits {
        while i < e.start {
            fixed.push(lines[i - 1].clone());
            i += 1;
        }
        let fs = fixed.len() + 1;
        fixed.extend(e.replacement.iter().cloned());
        buggy_hunks.push(LineRange::new(e.start, e.start + e.len - 1));
        fixed_hunks.push(LineRange::new(fs, fs + e.replacement.len() - 1));
        i += e.len;
    }
    while i <= lines.len() {
        fixed.push(lines[i - 1].clone());
        i += 1;
    }
    (join_lines(&fixed), buggy_hunks, fixed_hunks)
}

fn project_files(rng: &mut ChaCha8Rng, lang: Language, pool: &[String]) -> Vec<(String, String)> {
    (0..rng.gen_range(1..3))
        .map(|k| {
            let mut g = Gen::new(rng, lang, 3, 24);
            g.pool.extend(pool.iter().take(4).cloned());
            match lang {
                Language::Python => g.python_file(),
                Language::Java => g.java_file(),
            }
            let ext = if lang == Language::Python { "py" } else { "java" };
            (format!("lib/mod{k}.{ext}"), join_lines(&g.lines))
        })
        .collect()
}

/// One generated bug; always passes [`BugSample::validate`].
pub fn bug(rng: &mut ChaCha8Rng, opts: &SynthOptions, id: &str) -> BugSample {
    loop {
        let lang = if rng.gen_bool(opts.python_share) { Language::Python } else { Language::Java };
        let with_project = rng.gen_bool(opts.project_prob);
        let mut g = Gen::new(rng, lang, opts.max_functions, opts.vocabulary);
        match lang {
            Language::Python => g.python_file(),
            Language::Java => g.java_file(),
        }
        let edits = pick_edits(&mut g, opts.max_hunks);
        if edits.is_empty() {
            continue;
        }
        let buggy = join_lines(&g.lines);
        let (fixed, buggy_hunks, fixed_hunks) = apply(&g.lines, &edits);
        let pool = g.pool.clone();
        if fixed == buggy {
            continue;
        }
        let project_files = with_project.then(|| project_files(rng, lang, &pool));
        let sample = BugSample {
            id: id.to_string(),
            language: lang,
            buggy_source: buggy,
            fixed_source: fixed,
            buggy_hunks,
            fixed_hunks,
            fix_commit: Some(format!("{:040x}", rng.gen::<u128>())),
            repo: None,
            path: Some(format!("src/file.{}", if lang == Language::Python { "py" } else { "java" })),
            project_files,
        };
        debug_assert_eq!(sample.validate(), Ok(()));
        return sample;
    }
}

pub fn corpus(seed: u64, n: usize, opts: &SynthOptions) -> BugCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BugCorpus::new((0..n).map(|i| bug(&mut rng, opts, &format!("synth-{i}"))).collect())
}

/// Only single-hunk bugs.
pub fn single_hunk_corpus(seed: u64, n: usize) -> BugCorpus {
    let opts = SynthOptions {
        max_hunks: 1,
        ..SynthOptions::default()
    };
    corpus(seed, n, &opts)
}
