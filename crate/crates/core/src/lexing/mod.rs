//! Lexical scanning of Python and Java source into identifier occurrences.
//!
//! The lexers work at token level only: no parsing, no scope analysis.
//! Strings, comments, numbers, keywords and operators never yield
//! identifiers. Declarations and uses are not told apart.

pub mod callable;
mod java;
mod python;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{LineIndex, LineRange};

pub use callable::enclosing_callable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Java,
}

impl std::str::FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "python" | "py" => Ok(Language::Python),
            "java" => Ok(Language::Java),
            other => Err(format!("unknown language `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
    #[error("line range {range} outside file with {line_count} lines")]
    RangeOutOfBounds { range: LineRange, line_count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Variable,
    FunctionOrMethod,
    ClassOrType,
    Parameter,
    AttributeOrField,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierOccurrence {
    pub name: String,
    pub byte_offset: usize,
    pub line: usize,
    pub category: Category,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Ident,
    Keyword,
    Str,
    Comment,
    Number,
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    /// False for a string or comment that ran into end of line/file
    /// without its closing delimiter.
    pub terminated: bool,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_punct(&self, src: &str, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text(src) == p
    }

    pub fn is_keyword(&self, src: &str, k: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text(src) == k
    }
}

pub(crate) fn tokenize(source: &str, language: Language) -> Vec<Token> {
    match language {
        Language::Python => python::tokenize(source),
        Language::Java => java::tokenize(source),
    }
}

/// All identifier occurrences of `source`, in document order.
pub fn lex_identifiers(source: &str, language: Language) -> Vec<IdentifierOccurrence> {
    let tokens = tokenize(source, language);
    let categories = match language {
        Language::Python => python::categorize(source, &tokens),
        Language::Java => java::categorize(source, &tokens),
    };
    let index = LineIndex::new(source);
    tokens
        .iter()
        .zip(categories)
        .filter(|(t, _)| t.kind == TokenKind::Ident)
        .map(|(t, category)| IdentifierOccurrence {
            name: t.text(source).to_string(),
            byte_offset: t.start,
            line: index.line_of(t.start),
            category,
        })
        .collect()
}

/// Same as [`lex_identifiers`] for raw bytes, rejecting invalid UTF-8.
pub fn lex_identifiers_bytes(
    bytes: &[u8],
    language: Language,
) -> Result<Vec<IdentifierOccurrence>, LexError> {
    let source = std::str::from_utf8(bytes).map_err(|e| LexError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(lex_identifiers(source, language))
}

/// Name set of the identifiers occurring on the lines of `range`.
pub fn identifiers_in_lines(
    source: &str,
    language: Language,
    range: LineRange,
) -> Result<BTreeSet<String>, LexError> {
    let index = LineIndex::new(source);
    if !index.within(&range) {
        return Err(LexError::RangeOutOfBounds {
            range,
            line_count: index.line_count(),
        });
    }
    Ok(names_in_range(&lex_identifiers(source, language), range))
}

pub fn names_in_range(occurrences: &[IdentifierOccurrence], range: LineRange) -> BTreeSet<String> {
    occurrences
        .iter()
        .filter(|o| range.contains(o.line))
        .map(|o| o.name.clone())
        .collect()
}

pub fn name_set(occurrences: &[IdentifierOccurrence]) -> BTreeSet<String> {
    occurrences.iter().map(|o| o.name.clone()).collect()
}

pub(crate) fn is_ident_start(c: char, language: Language) -> bool {
    c == '_' || c.is_alphabetic() || (language == Language::Java && c == '$')
}

pub(crate) fn is_ident_continue(c: char, language: Language) -> bool {
    c == '_' || c.is_alphanumeric() || (language == Language::Java && c == '$')
}

/// Consumes a numeric literal starting at `i`, returning its end.
pub(crate) fn scan_number(src: &str, i: usize) -> usize {
    let bytes = src.as_bytes();
    let hex = bytes.len() > i + 1 && bytes[i] == b'0' && matches!(bytes[i + 1], b'x' | b'X');
    let mut j = i;
    while j < bytes.len() {
        let b = bytes[j];
        let exponent_sign = (b == b'+' || b == b'-') && !hex && j > i && matches!(bytes[j - 1], b'e' | b'E');
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || exponent_sign {
            j += 1;
        } else {
            break;
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(src: &str, lang: Language) -> BTreeSet<String> {
        name_set(&lex_identifiers(src, lang))
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn attribute_access_yields_both_sides() {
        assert_eq!(
            names("db_cluster = self.cluster_find(context, identity)\n", Language::Python),
            set(&["db_cluster", "self", "cluster_find", "context", "identity"])
        );
        assert_eq!(
            names("return ElementTree.tostring(cpu)", Language::Python),
            set(&["ElementTree", "tostring", "cpu"])
        );
    }

    #[test]
    fn literals_excluded() {
        assert_eq!(names("x = 1 + 2", Language::Python), set(&["x"]));
        assert_eq!(names("y = 'abc' + \"q\" # comment z\n", Language::Python), set(&["y"]));
        assert_eq!(names("x = 0x1F + 1e-5 + 3j", Language::Python), set(&["x"]));
        assert_eq!(
            names("int x = 1; // z\n/* w */ String s = \"k\";", Language::Java),
            set(&["x", "String", "s"])
        );
    }

    #[test]
    fn byte_offsets_point_at_names() {
        let src = "a = b.c\nfoo(bar)\n";
        for occ in lex_identifiers(src, Language::Python) {
            assert_eq!(&src[occ.byte_offset..occ.byte_offset + occ.name.len()], occ.name);
        }
        let occ = lex_identifiers(src, Language::Python);
        assert_eq!(occ[3].name, "foo");
        assert_eq!(occ[3].line, 2);
    }

    #[test]
    fn comment_only_range_is_empty() {
        let src = "x = 1\n# just talk about y\nz = 2\n";
        let got = identifiers_in_lines(src, Language::Python, LineRange::new(2, 2)).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn fig4_marked_line() {
        let src = "def cluster_update(self, context, identity, profile_id):\n    \
                   # Get database representation of the existing cluster\n    \
                   db_cluster = self.cluster_find(context, identity)\n    \
                   db_profile = self.profile_fine(context, profile_id)\n";
        let got = identifiers_in_lines(src, Language::Python, LineRange::new(4, 4)).unwrap();
        assert_eq!(got, set(&["db_profile", "self", "profile_fine", "context", "profile_id"]));
    }

    #[test]
    fn whole_file_range_equals_all_names() {
        let src = "import os\ndef f(a):\n    return os.path.join(a, 'x')\n";
        let got = identifiers_in_lines(src, Language::Python, LineRange::new(1, 3)).unwrap();
        assert_eq!(got, names(src, Language::Python));
    }

    #[test]
    fn out_of_range_is_an_error() {
        let err = identifiers_in_lines("a\nb\n", Language::Python, LineRange::new(2, 3)).unwrap_err();
        assert_eq!(
            err,
            LexError::RangeOutOfBounds {
                range: LineRange::new(2, 3),
                line_count: 2
            }
        );
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let err = lex_identifiers_bytes(b"abc = \xff\n", Language::Python).unwrap_err();
        assert_eq!(err, LexError::InvalidUtf8 { offset: 6 });
    }

    #[test]
    fn python_keywords_and_soft_keywords() {
        assert_eq!(
            names("if not x and y is None: pass", Language::Python),
            set(&["x", "y"])
        );
        assert_eq!(names("match = type(case)", Language::Python), set(&["match", "type", "case"]));
        assert_eq!(names("f(x=1, key=val)", Language::Python), set(&["f", "x", "key", "val"]));
    }

    #[test]
    fn python_string_prefixes() {
        assert_eq!(names("a = rb'x' + f\"{b}\" + u'q'", Language::Python), set(&["a"]));
        assert_eq!(names("rb = 1; f = rb", Language::Python), set(&["rb", "f"]));
        assert_eq!(names("s = '''x\ny''' + z", Language::Python), set(&["s", "z"]));
    }

    #[test]
    fn java_generics_annotations_primitives() {
        assert_eq!(
            names("@Override public List<String> get(int i) { return this.items; }", Language::Java),
            set(&["Override", "List", "String", "get", "i", "items"])
        );
        assert_eq!(names("char c = 'x'; boolean b = true;", Language::Java), set(&["c", "b"]));
        assert_eq!(
            names("String t = \"\"\"\n  a \"q\" b\n  \"\"\"; var v = t;", Language::Java),
            set(&["String", "t", "var", "v"])
        );
    }

    #[test]
    fn categories_are_informative() {
        let occ = lex_identifiers(
            "class Foo:\n    def bar(self, n):\n        return self.baz(n).qux\n",
            Language::Python,
        );
        let cat = |name: &str| occ.iter().find(|o| o.name == name).unwrap().category;
        assert_eq!(cat("Foo"), Category::ClassOrType);
        assert_eq!(cat("bar"), Category::FunctionOrMethod);
        assert_eq!(cat("n"), Category::Parameter);
        assert_eq!(cat("baz"), Category::FunctionOrMethod);
        assert_eq!(cat("qux"), Category::AttributeOrField);

        let occ = lex_identifiers(
            "class A { int f(String s) { return s.length() + this.n; } }",
            Language::Java,
        );
        let cat = |name: &str| occ.iter().find(|o| o.name == name).unwrap().category;
        assert_eq!(cat("A"), Category::ClassOrType);
        assert_eq!(cat("f"), Category::FunctionOrMethod);
        assert_eq!(cat("length"), Category::FunctionOrMethod);
        assert_eq!(cat("n"), Category::AttributeOrField);
        assert_eq!(cat("s"), Category::Parameter);
    }
}
