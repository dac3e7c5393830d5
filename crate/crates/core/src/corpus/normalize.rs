//! Splits string literals and comments that span lines into per-line
//! pieces so every line of a file can be lexed on its own.
//!
//! Python pieces become adjacent literals joined with backslash
//! continuations; Java text blocks become `+`-concatenated string literals
//! and block comments become one block comment per line. Line counts are
//! preserved, so hunk line ranges stay valid after normalization.

use thiserror::Error;

use super::BugSample;
use crate::lexing::{tokenize, Language, Token, TokenKind};
use crate::text::LineIndex;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("unterminated literal starting on line {line}")]
    UnterminatedLiteral { line: usize },
}

pub fn normalize_multiline(source: &str, language: Language) -> Result<String, NormalizeError> {
    let tokens = tokenize(source, language);
    let index = LineIndex::new(source);
    let mut out = String::with_capacity(source.len() + 64);
    let mut copied = 0;
    for tok in tokens.iter().filter(|t| matches!(t.kind, TokenKind::Str | TokenKind::Comment)) {
        if !tok.terminated {
            return Err(NormalizeError::UnterminatedLiteral {
                line: index.line_of(tok.start),
            });
        }
        let text = tok.text(source);
        if !text.contains('\n') {
            continue;
        }
        out.push_str(&source[copied..tok.start]);
        let rewritten = match (language, tok.kind) {
            (Language::Python, _) => split_python_string(text),
            (Language::Java, TokenKind::Comment) => split_block_comment(text),
            (Language::Java, _) => split_text_block(text),
        };
        debug_assert_eq!(rewritten.matches('\n').count(), text.matches('\n').count());
        out.push_str(&rewritten);
        copied = tok.end;
    }
    out.push_str(&source[copied..]);
    Ok(out)
}

/// Normalizes both sources and all project files of a bug.
pub fn normalize_sample(bug: &BugSample) -> Result<BugSample, NormalizeError> {
    let mut out = bug.clone();
    out.buggy_source = normalize_multiline(&bug.buggy_source, bug.language)?;
    out.fixed_source = normalize_multiline(&bug.fixed_source, bug.language)?;
    if let Some(files) = &bug.project_files {
        out.project_files = Some(
            files
                .iter()
                .map(|(p, t)| Ok((p.clone(), normalize_multiline(t, bug.language)?)))
                .collect::<Result<_, NormalizeError>>()?,
        );
    }
    Ok(out)
}

/// Strips a backslash that escaped the line break.
fn drop_continuation(piece: &str) -> &str {
    let trailing = piece.len() - piece.trim_end_matches('\\').len();
    if trailing % 2 == 1 {
        &piece[..piece.len() - 1]
    } else {
        piece
    }
}

/// Escapes trailing quote characters so they cannot merge with the
/// closing delimiter.
fn guard_tail(piece: &str, quote: char) -> String {
    let body = piece.trim_end_matches(quote);
    let mut out = body.to_string();
    for _ in 0..piece.len() - body.len() {
        out.push('\\');
        out.push(quote);
    }
    out
}

fn split_python_string(text: &str) -> String {
    let quote_at = text.find(['\'', '"']).expect("string token has a quote");
    let prefix = &text[..quote_at];
    let quote = text[quote_at..].chars().next().expect("quote");
    let triple: String = std::iter::repeat(quote).take(3).collect();
    let delim = if text[quote_at..].starts_with(&triple) && text.len() >= quote_at + 6 {
        triple
    } else {
        quote.to_string()
    };
    let content = &text[quote_at + delim.len()..text.len() - delim.len()];
    let pieces: Vec<&str> = content.split('\n').collect();
    let last = pieces.len() - 1;
    let mut out = String::new();
    for (i, piece) in pieces.iter().enumerate() {
        let piece = if i < last { drop_continuation(piece) } else { piece };
        out.push_str(prefix);
        out.push_str(&delim);
        out.push_str(&guard_tail(piece, quote));
        out.push_str(&delim);
        if i < last {
            out.push_str(" \\\n");
        }
    }
    out
}

fn split_block_comment(text: &str) -> String {
    let pieces: Vec<&str> = text.split('\n').collect();
    let last = pieces.len() - 1;
    let mut out = String::new();
    for (i, piece) in pieces.iter().enumerate() {
        if i > 0 {
            out.push_str("/* ");
        }
        out.push_str(piece);
        if i < last {
            out.push_str(" */\n");
        }
    }
    out
}

fn split_text_block(text: &str) -> String {
    let content = &text[3..text.len() - 3];
    let pieces: Vec<&str> = content.split('\n').collect();
    let last = pieces.len() - 1;
    let mut out = String::new();
    for (i, piece) in pieces.iter().enumerate() {
        // the opening line of a text block carries no content
        let piece = if i == 0 { "" } else if i < last { drop_continuation(piece) } else { piece };
        out.push('"');
        out.push_str(&escape_java_quotes(piece));
        out.push('"');
        if i < last {
            out.push_str(" +\n");
        }
    }
    out
}

fn escape_java_quotes(piece: &str) -> String {
    let mut out = String::with_capacity(piece.len());
    let mut escaped = false;
    for c in piece.chars() {
        if c == '"' && !escaped {
            out.push('\\');
        }
        escaped = c == '\\' && !escaped;
        out.push(c);
    }
    out
}

/// True when no string or comment token of `source` crosses a line break
/// and every such token is terminated.
pub fn lines_are_self_contained(source: &str, language: Language) -> bool {
    let ok = |t: &Token| t.terminated && !t.text(source).contains('\n');
    tokenize(source, language)
        .iter()
        .filter(|t| matches!(t.kind, TokenKind::Str | TokenKind::Comment))
        .all(ok)
}
