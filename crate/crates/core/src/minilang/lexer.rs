//! Tokenizer for minilang source text.

use super::LangError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    True,
    False,
    Null,
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

const SYMBOLS: &[&str] = &[
    "->", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", "[", "]", ";", ":", ",", ".",
    "=", "<", ">", "+", "-", "*", "/", "%", "!",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "true" => Tok::True,
                "false" => Tok::False,
                "null" => Tok::Null,
                _ => Tok::Ident(word),
            };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let is_real = i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit();
            if is_real {
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| LangError::syntax(tl, tc, format!("bad real literal `{text}`")))?;
                out.push(Token { tok: Tok::Real(v), line: tl, col: tc });
            } else {
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse::<i64>()
                    .map_err(|_| LangError::syntax(tl, tc, format!("integer literal `{text}` out of range")))?;
                out.push(Token { tok: Tok::Int(v), line: tl, col: tc });
            }
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() {
                    return Err(LangError::syntax(tl, tc, "unterminated string literal"));
                }
                match chars[i] {
                    '"' => {
                        bump!();
                        break;
                    }
                    '\\' => {
                        bump!();
                        let esc = chars
                            .get(i)
                            .copied()
                            .ok_or_else(|| LangError::syntax(tl, tc, "unterminated escape"))?;
                        let decoded = match esc {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            '0' => '\0',
                            '\\' => '\\',
                            '"' => '"',
                            'u' => {
                                // \u{XXXX}
                                bump!();
                                if chars.get(i) != Some(&'{') {
                                    return Err(LangError::syntax(line, col, "expected `{` in unicode escape"));
                                }
                                bump!();
                                let start = i;
                                while i < chars.len() && chars[i] != '}' {
                                    bump!();
                                }
                                let hex: String = chars[start..i].iter().collect();
                                let cp = u32::from_str_radix(&hex, 16)
                                    .ok()
                                    .and_then(char::from_u32)
                                    .ok_or_else(|| LangError::syntax(line, col, "bad unicode escape"))?;
                                cp
                            }
                            other => {
                                return Err(LangError::syntax(line, col, format!("unknown escape `\\{other}`")))
                            }
                        };
                        s.push(decoded);
                        bump!();
                    }
                    ch => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS
            .iter()
            .find(|s| rest.starts_with(**s))
            .ok_or_else(|| LangError::syntax(tl, tc, format!("unexpected character `{c}`")))?;
        for _ in 0..sym.chars().count() {
            bump!();
        }
        out.push(Token { tok: Tok::Sym(sym), line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Escapes a string so that it lexes back to the same value.
pub fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c if c.is_control() => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_mixed_tokens() {
        let toks = tokenize("let x = 3.5 + 2; // c\n\"a\\\"b\" -> <= !").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("let".into()),
                Tok::Ident("x".into()),
                Tok::Sym("="),
                Tok::Real(3.5),
                Tok::Sym("+"),
                Tok::Int(2),
                Tok::Sym(";"),
                Tok::Str("a\"b".into()),
                Tok::Sym("->"),
                Tok::Sym("<="),
                Tok::Sym("!"),
                Tok::Eof,
            ]
        );
        assert_eq!(toks[7].line, 2);
    }

    #[test]
    fn unterminated_string_reports_position() {
        let err = tokenize("  \"abc").unwrap_err();
        assert!(matches!(err, LangError::Syntax { line: 1, col: 3, .. }));
    }

    #[test]
    fn quote_roundtrips() {
        for s in ["", "plain", "q\"uote", "back\\slash", "nl\nx", "\u{1}ctl", "ünï"] {
            let toks = tokenize(&quote_str(s)).unwrap();
            assert_eq!(toks[0].tok, Tok::Str(s.to_string()));
        }
    }
}
