use super::{is_ident_continue, is_ident_start, scan_number, Category, Language, Token, TokenKind};

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

fn is_string_prefix(word: &str) -> bool {
    matches!(
        word.to_ascii_lowercase().as_str(),
        "r" | "u" | "b" | "f" | "rb" | "br" | "rf" | "fr"
    )
}

/// Scans a string literal whose opening quote is at `q`. Returns the end
/// offset and whether the closing quote was found.
pub(super) fn scan_string(src: &str, q: usize) -> (usize, bool) {
    let bytes = src.as_bytes();
    let quote = bytes[q];
    let triple = bytes.len() >= q + 3 && bytes[q + 1] == quote && bytes[q + 2] == quote;
    let mut j = if triple { q + 3 } else { q + 1 };
    while j < bytes.len() {
        let b = bytes[j];
        if b == b'\\' {
            j += 2;
            continue;
        }
        if triple {
            if b == quote && bytes.get(j + 1) == Some(&quote) && bytes.get(j + 2) == Some(&quote) {
                return (j + 3, true);
            }
        } else if b == quote {
            return (j + 1, true);
        } else if b == b'\n' {
            return (j, false);
        }
        j += 1;
    }
    (bytes.len(), false)
}

pub(super) fn tokenize(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'#' {
            let end = src[i..].find('\n').map_or(src.len(), |n| i + n);
            tokens.push(Token { kind: TokenKind::Comment, start: i, end, terminated: true });
            i = end;
            continue;
        }
        if b == b'\'' || b == b'"' {
            let (end, terminated) = scan_string(src, i);
            tokens.push(Token { kind: TokenKind::Str, start: i, end, terminated });
            i = end;
            continue;
        }
        if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let end = scan_number(src, i);
            tokens.push(Token { kind: TokenKind::Number, start: i, end, terminated: true });
            i = end;
            continue;
        }
        let c = src[i..].chars().next().expect("in bounds");
        if is_ident_start(c, Language::Python) {
            let mut end = i + c.len_utf8();
            for ch in src[end..].chars() {
                if !is_ident_continue(ch, Language::Python) {
                    break;
                }
                end += ch.len_utf8();
            }
            let word = &src[i..end];
            if matches!(bytes.get(end), Some(b'\'') | Some(b'"')) && is_string_prefix(word) {
                let (send, terminated) = scan_string(src, end);
                tokens.push(Token { kind: TokenKind::Str, start: i, end: send, terminated });
                i = send;
                continue;
            }
            let kind = if is_keyword(word) { TokenKind::Keyword } else { TokenKind::Ident };
            tokens.push(Token { kind, start: i, end, terminated: true });
            i = end;
            continue;
        }
        let len = c.len_utf8();
        tokens.push(Token { kind: TokenKind::Punct, start: i, end: i + len, terminated: true });
        i += len;
    }
    tokens
}

pub(super) fn categorize(src: &str, tokens: &[Token]) -> Vec<Category> {
    let code: Vec<usize> = (0..tokens.len())
        .filter(|&k| !matches!(tokens[k].kind, TokenKind::Comment))
        .collect();
    let mut cats = vec![Category::Unknown; tokens.len()];
    // Depth of the parameter list of the `def` currently being read.
    let mut param_depth: Option<usize> = None;
    let mut depth = 0usize;
    for (pos, &k) in code.iter().enumerate() {
        let tok = tokens[k];
        let prev = pos.checked_sub(1).map(|p| tokens[code[p]]);
        let next = code.get(pos + 1).map(|&n| tokens[n]);
        match tok.kind {
            TokenKind::Punct => {
                let t = tok.text(src);
                if matches!(t, "(" | "[" | "{") {
                    depth += 1;
                } else if matches!(t, ")" | "]" | "}") {
                    depth = depth.saturating_sub(1);
                    if param_depth.is_some_and(|d| depth < d) {
                        param_depth = None;
                    }
                }
            }
            TokenKind::Ident => {
                let after_def = prev.is_some_and(|p| p.is_keyword(src, "def"));
                let after_class = prev.is_some_and(|p| p.is_keyword(src, "class"));
                let after_dot = prev.is_some_and(|p| p.is_punct(src, "."));
                let before_call = next.is_some_and(|n| n.is_punct(src, "("));
                let before_assign = next.is_some_and(|n| n.is_punct(src, "="))
                    && code
                        .get(pos + 2)
                        .map_or(true, |&n| !tokens[n].is_punct(src, "="));
                let param_slot = param_depth == Some(depth)
                    && prev.is_some_and(|p| {
                        p.is_punct(src, "(") || p.is_punct(src, ",") || p.is_punct(src, "*")
                    });
                cats[k] = if after_def {
                    param_depth = Some(depth + 1);
                    Category::FunctionOrMethod
                } else if after_class {
                    Category::ClassOrType
                } else if param_slot {
                    Category::Parameter
                } else if before_call {
                    Category::FunctionOrMethod
                } else if after_dot {
                    Category::AttributeOrField
                } else if depth > 0 && before_assign {
                    // keyword argument
                    Category::Parameter
                } else if tok.text(src).starts_with(char::is_uppercase) {
                    Category::ClassOrType
                } else {
                    Category::Variable
                };
            }
            _ => {}
        }
    }
    cats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, &str)> {
        tokenize(src).into_iter().map(|t| (t.kind, t.text(src))).collect()
    }

    #[test]
    fn triple_quoted_string_spans_lines() {
        let src = "x = \"\"\"a\nb\"\"\" + y";
        let toks = kinds(src);
        assert_eq!(toks[2], (TokenKind::Str, "\"\"\"a\nb\"\"\""));
        assert_eq!(toks.last().unwrap(), &(TokenKind::Ident, "y"));
    }

    #[test]
    fn unterminated_single_quote_stops_at_newline() {
        let toks = tokenize("a = 'oops\nb = 1\n");
        let s = toks.iter().find(|t| t.kind == TokenKind::Str).unwrap();
        assert!(!s.terminated);
        assert!(toks.iter().any(|t| t.kind == TokenKind::Ident && t.start == 10));
    }

    #[test]
    fn escaped_quotes_stay_inside() {
        let src = r#"s = "a\"b" + c"#;
        let toks = kinds(src);
        assert_eq!(toks[2], (TokenKind::Str, r#""a\"b""#));
        assert_eq!(toks[4], (TokenKind::Ident, "c"));
    }

    #[test]
    fn unicode_identifiers() {
        let toks = kinds("größe = 3");
        assert_eq!(toks[0], (TokenKind::Ident, "größe"));
    }
}
