//! Line bookkeeping shared by every module that addresses source by line.
//!
//! Lines are separated by `\n` only. A trailing newline does not open an
//! extra empty line, and the empty string has zero lines. Carriage returns
//! stay part of the line content so slices round-trip byte-exactly.

use serde::{Deserialize, Serialize};

/// A 1-based inclusive range of lines. `end == start - 1` encodes an empty
/// range positioned before line `start` (an insertion point).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct LineRange {
    pub start: usize,
    pub end: usize,
}

impl LineRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    /// Empty range sitting right before line `at`.
    pub fn empty_at(at: usize) -> Self {
        Self {
            start: at,
            end: at.saturating_sub(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.end - self.start + 1
        }
    }

    pub fn contains(&self, line: usize) -> bool {
        line >= self.start && line <= self.end
    }

    pub fn contains_range(&self, other: &LineRange) -> bool {
        other.is_empty() || (self.start <= other.start && other.end <= self.end)
    }

    pub fn lines(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }
}

impl From<(usize, usize)> for LineRange {
    fn from((start, end): (usize, usize)) -> Self {
        Self { start, end }
    }
}

impl From<LineRange> for (usize, usize) {
    fn from(r: LineRange) -> Self {
        (r.start, r.end)
    }
}

impl std::fmt::Display for LineRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// Byte spans of every line in a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIndex {
    /// `(start, end)` per line, `end` exclusive and before the `\n`.
    spans: Vec<(usize, usize)>,
    len: usize,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut spans = Vec::new();
        let mut start = 0;
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                spans.push((start, i));
                start = i + 1;
            }
        }
        if start < text.len() {
            spans.push((start, text.len()));
        }
        Self {
            spans,
            len: text.len(),
        }
    }

    pub fn line_count(&self) -> usize {
        self.spans.len()
    }

    /// Byte span of 1-based `line`, excluding the newline.
    pub fn span(&self, line: usize) -> (usize, usize) {
        self.spans[line - 1]
    }

    /// Byte offset where `line` starts; one past the last line maps to the
    /// end of the text.
    pub fn line_start(&self, line: usize) -> usize {
        if line > self.spans.len() {
            self.len
        } else {
            self.spans[line - 1].0
        }
    }

    /// 1-based line holding byte `offset`. A newline byte belongs to the
    /// line it terminates.
    pub fn line_of(&self, offset: usize) -> usize {
        match self.spans.binary_search_by(|&(s, _)| s.cmp(&offset)) {
            Ok(i) => i + 1,
            Err(i) => i.max(1),
        }
    }

    pub fn line<'a>(&self, text: &'a str, line: usize) -> &'a str {
        let (s, e) = self.span(line);
        &text[s..e]
    }

    /// Byte span covering a non-empty range of lines, newline of the last
    /// line excluded.
    pub fn range_span(&self, range: LineRange) -> (usize, usize) {
        if range.is_empty() {
            let at = self.line_start(range.start);
            return (at, at);
        }
        (self.span(range.start).0, self.span(range.end).1)
    }

    pub fn within(&self, range: &LineRange) -> bool {
        range.start >= 1 && range.end <= self.line_count() && range.start <= range.end + 1
    }
}

/// Lines of `range` each followed by `\n`.
pub fn render_lines(text: &str, index: &LineIndex, range: LineRange) -> String {
    let mut out = String::new();
    if range.is_empty() {
        return out;
    }
    for line in range.lines() {
        out.push_str(index.line(text, line));
        out.push('\n');
    }
    out
}
