use super::{is_ident_continue, is_ident_start, scan_number, Category, Language, Token, TokenKind};

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally",
    "float", "for", "goto", "if", "implements", "import", "instanceof", "int", "interface",
    "long", "native", "new", "package", "private", "protected", "public", "return", "short",
    "static", "strictfp", "super", "switch", "synchronized", "this", "throw", "throws",
    "transient", "try", "void", "volatile", "while", "true", "false", "null",
];

const TYPE_DECL: &[&str] = &["class", "interface", "enum"];

fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Scans a `"`/`'` literal or a `"""` text block starting at `q`.
pub(super) fn scan_string(src: &str, q: usize) -> (usize, bool) {
    let bytes = src.as_bytes();
    let quote = bytes[q];
    let block = quote == b'"' && src[q..].starts_with("\"\"\"");
    let mut j = if block { q + 3 } else { q + 1 };
    while j < bytes.len() {
        let b = bytes[j];
        if b == b'\\' {
            j += 2;
            continue;
        }
        if block {
            if src[j..].starts_with("\"\"\"") {
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
        if src[i..].starts_with("//") {
            let end = src[i..].find('\n').map_or(src.len(), |n| i + n);
            tokens.push(Token { kind: TokenKind::Comment, start: i, end, terminated: true });
            i = end;
            continue;
        }
        if src[i..].starts_with("/*") {
            let (end, terminated) = match src[i + 2..].find("*/") {
                Some(n) => (i + 2 + n + 2, true),
                None => (src.len(), false),
            };
            tokens.push(Token { kind: TokenKind::Comment, start: i, end, terminated });
            i = end;
            continue;
        }
        if b == b'"' || b == b'\'' {
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
        if is_ident_start(c, Language::Java) {
            let mut end = i + c.len_utf8();
            for ch in src[end..].chars() {
                if !is_ident_continue(ch, Language::Java) {
                    break;
                }
                end += ch.len_utf8();
            }
            let kind = if is_keyword(&src[i..end]) { TokenKind::Keyword } else { TokenKind::Ident };
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

/// Positions (into `code`) of identifiers that name a method or
/// constructor declaration, paired with the index of the `{` opening the
/// body. `code` holds indices of the non-comment tokens.
pub(super) fn method_declarations(src: &str, tokens: &[Token], code: &[usize]) -> Vec<(usize, usize)> {
    let tok = |p: usize| tokens[code[p]];
    let mut out = Vec::new();
    for pos in 0..code.len() {
        if tok(pos).kind != TokenKind::Ident {
            continue;
        }
        if pos + 1 >= code.len() || !tok(pos + 1).is_punct(src, "(") {
            continue;
        }
        if pos > 0 {
            let prev = tok(pos - 1);
            if prev.is_punct(src, ".")
                || prev.is_punct(src, "@")
                || prev.is_keyword(src, "new")
                || (prev.kind == TokenKind::Ident && prev.text(src) == "record")
            {
                continue;
            }
        }
        // matching `)`
        let mut depth = 0usize;
        let mut q = pos + 1;
        let mut close = None;
        while q < code.len() {
            let t = tok(q);
            if t.is_punct(src, "(") {
                depth += 1;
            } else if t.is_punct(src, ")") {
                depth -= 1;
                if depth == 0 {
                    close = Some(q);
                    break;
                }
            }
            q += 1;
        }
        let Some(close) = close else { continue };
        let mut q = close + 1;
        if q < code.len() && tok(q).is_keyword(src, "throws") {
            q += 1;
            while q < code.len()
                && (tok(q).kind == TokenKind::Ident
                    || tok(q).is_punct(src, ".")
                    || tok(q).is_punct(src, ",")
                    || tok(q).is_punct(src, "<")
                    || tok(q).is_punct(src, ">"))
            {
                q += 1;
            }
        }
        if q < code.len() && tok(q).is_punct(src, "{") {
            out.push((pos, q));
        }
    }
    out
}

pub(super) fn categorize(src: &str, tokens: &[Token]) -> Vec<Category> {
    let code: Vec<usize> = (0..tokens.len())
        .filter(|&k| tokens[k].kind != TokenKind::Comment)
        .collect();
    let mut cats = vec![Category::Unknown; tokens.len()];
    let mut params = vec![false; code.len()];
    let mut decl_names = vec![false; code.len()];
    for (pos, _) in method_declarations(src, tokens, &code) {
        decl_names[pos] = true;
        let mut depth = 0usize;
        let mut q = pos + 1;
        while q < code.len() {
            let t = tokens[code[q]];
            if t.is_punct(src, "(") || t.is_punct(src, "<") {
                depth += 1;
            } else if t.is_punct(src, ")") || t.is_punct(src, ">") {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    break;
                }
            } else if depth == 1 && t.kind == TokenKind::Ident {
                let next = code.get(q + 1).map(|&n| tokens[n]);
                if next.is_some_and(|n| n.is_punct(src, ",") || n.is_punct(src, ")") || n.is_punct(src, "[")) {
                    params[q] = true;
                }
            }
            q += 1;
        }
    }
    for (pos, &k) in code.iter().enumerate() {
        let t = tokens[k];
        if t.kind != TokenKind::Ident {
            continue;
        }
        let prev = pos.checked_sub(1).map(|p| tokens[code[p]]);
        let next = code.get(pos + 1).map(|&n| tokens[n]);
        let after_type_decl = prev.is_some_and(|p| {
            p.kind == TokenKind::Keyword && TYPE_DECL.contains(&p.text(src))
                || (p.kind == TokenKind::Ident && p.text(src) == "record")
        });
        cats[k] = if after_type_decl {
            Category::ClassOrType
        } else if decl_names[pos] || next.is_some_and(|n| n.is_punct(src, "(")) {
            Category::FunctionOrMethod
        } else if params[pos] {
            Category::Parameter
        } else if prev.is_some_and(|p| p.is_punct(src, ".")) {
            Category::AttributeOrField
        } else if t.text(src).starts_with(char::is_uppercase) {
            Category::ClassOrType
        } else {
            Category::Variable
        };
    }
    cats
}
