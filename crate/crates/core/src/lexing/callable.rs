//! Function and method extents, recovered from tokens alone.
//!
//! Python bodies are delimited by indentation of logical lines; Java bodies
//! by brace matching after a method or constructor signature.

use super::{java, tokenize, Language, Token, TokenKind};
use crate::text::{LineIndex, LineRange};

/// Line ranges of every function/method definition in `source`, in order
/// of their first line.
pub fn callable_ranges(source: &str, language: Language) -> Vec<LineRange> {
    let tokens = tokenize(source, language);
    let index = LineIndex::new(source);
    let mut ranges = match language {
        Language::Python => python_ranges(source, &tokens, &index),
        Language::Java => java_ranges(source, &tokens, &index),
    };
    ranges.sort();
    ranges
}

/// Innermost function/method containing `line`, or `None` for top-level
/// code.
pub fn enclosing_callable(source: &str, language: Language, line: usize) -> Option<LineRange> {
    innermost(&callable_ranges(source, language), line)
}

pub(crate) fn innermost(ranges: &[LineRange], line: usize) -> Option<LineRange> {
    ranges
        .iter()
        .filter(|r| r.contains(line))
        .max_by_key(|r| (r.start, std::cmp::Reverse(r.end)))
        .copied()
}

struct LogicalLine {
    first_token: usize,
    line: usize,
    indent: usize,
}

fn python_ranges(src: &str, tokens: &[Token], index: &LineIndex) -> Vec<LineRange> {
    let code: Vec<&Token> = tokens.iter().filter(|t| t.kind != TokenKind::Comment).collect();
    // Starts of logical lines: first code token on a physical line, outside
    // brackets and not following a backslash continuation.
    let mut logical = Vec::new();
    let mut depth = 0usize;
    let mut prev_end_line = 0usize;
    let mut continued = false;
    for (k, t) in code.iter().enumerate() {
        let line = index.line_of(t.start);
        if line > prev_end_line && depth == 0 && !continued {
            let (ls, _) = index.span(line);
            let indent = src[ls..t.start].chars().count();
            logical.push(LogicalLine { first_token: k, line, indent });
        }
        continued = false;
        if t.kind == TokenKind::Punct {
            match t.text(src) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                "\\" => continued = true,
                _ => {}
            }
        }
        prev_end_line = index.line_of(t.end.saturating_sub(1).max(t.start));
    }
    let last_line_of = |k: usize| index.line_of(code[k].end.saturating_sub(1).max(code[k].start));

    let mut ranges = Vec::new();
    for (li, ll) in logical.iter().enumerate() {
        let mut k = ll.first_token;
        if code[k].is_keyword(src, "async") && k + 1 < code.len() {
            k += 1;
        }
        if !code[k].is_keyword(src, "def") {
            continue;
        }
        // body runs until the next logical line indented at or left of the def
        let stop = logical[li + 1..]
            .iter()
            .find(|next| next.indent <= ll.indent)
            .map_or(code.len(), |next| next.first_token);
        if stop == 0 {
            continue;
        }
        ranges.push(LineRange::new(ll.line, last_line_of(stop - 1)));
    }
    ranges
}

fn java_ranges(src: &str, tokens: &[Token], index: &LineIndex) -> Vec<LineRange> {
    let code: Vec<usize> = (0..tokens.len())
        .filter(|&k| tokens[k].kind != TokenKind::Comment)
        .collect();
    let mut ranges = Vec::new();
    for (name_pos, open_pos) in java::method_declarations(src, tokens, &code) {
        let mut depth = 0usize;
        let mut close = None;
        for &k in &code[open_pos..] {
            let t = tokens[k];
            if t.is_punct(src, "{") {
                depth += 1;
            } else if t.is_punct(src, "}") {
                depth -= 1;
                if depth == 0 {
                    close = Some(t);
                    break;
                }
            }
        }
        let start = index.line_of(tokens[code[name_pos]].start);
        let end = match close {
            Some(t) => index.line_of(t.start),
            None => index.line_count(),
        };
        ranges.push(LineRange::new(start, end));
    }
    ranges
}

#[cfg(test)]
mod tests {
    use super::*;

    const PY: &str = "\
import os

def outer(a):
    x = 1

    def inner(b):
        return b + 1
    # trailing comment
    return inner(
        x)

class K:
    def method(self):
        return self.v

async def coro():
    await go()
top = outer(1)
";

    #[test]
    fn python_nested_function_is_innermost() {
        assert_eq!(enclosing_callable(PY, Language::Python, 7), Some(LineRange::new(6, 7)));
        assert_eq!(enclosing_callable(PY, Language::Python, 4), Some(LineRange::new(3, 10)));
        assert_eq!(enclosing_callable(PY, Language::Python, 10), Some(LineRange::new(3, 10)));
    }

    #[test]
    fn python_module_level_is_absent() {
        assert_eq!(enclosing_callable(PY, Language::Python, 1), None);
        assert_eq!(enclosing_callable(PY, Language::Python, 18), None);
    }

    #[test]
    fn python_method_not_class_body() {
        assert_eq!(enclosing_callable(PY, Language::Python, 14), Some(LineRange::new(13, 14)));
        assert_eq!(enclosing_callable(PY, Language::Python, 12), None);
        assert_eq!(enclosing_callable(PY, Language::Python, 17), Some(LineRange::new(16, 17)));
    }

    #[test]
    fn python_docstring_body_with_dedented_lines() {
        let src = "def f():\n    s = '''\nnot code\n'''\n    return s\nx = 1\n";
        assert_eq!(enclosing_callable(src, Language::Python, 3), Some(LineRange::new(1, 5)));
    }

    #[test]
    fn java_method_inside_class() {
        let src = "\
public class A {
    private int n;

    public int get(int k) throws Exception {
        if (k > 0) {
            return n;
        }
        return Runnable r = new Runnable() {
            public void run() {
                go();
            }
        };
    }
}
";
        assert_eq!(enclosing_callable(src, Language::Java, 6), Some(LineRange::new(4, 13)));
        assert_eq!(enclosing_callable(src, Language::Java, 10), Some(LineRange::new(9, 11)));
        assert_eq!(enclosing_callable(src, Language::Java, 2), None);
    }
}
