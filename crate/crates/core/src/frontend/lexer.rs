use std::fmt;

use super::FrontendError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Num(i64),
    Ident(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

const KEYWORDS: [&str; 9] = [
    "int", "if", "else", "while", "assert", "assume", "nondet", "return", "ERROR",
];

// Longest first so that `<=` wins over `<`.
const SYMBOLS: [&str; 21] = [
    "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", ";", "=", "<", ">", "!", "+", "-",
    "*", "/", "%", ":",
];

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Kw(k) | Tok::Sym(k) => write!(f, "`{k}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            advance(&mut i, &mut line, &mut col, '/');
            advance(&mut i, &mut line, &mut col, '*');
            loop {
                if i >= chars.len() {
                    return Err(FrontendError::Syntax {
                        line: l0,
                        col: c0,
                        expected: vec!["`*/`".into()],
                        found: "end of input".into(),
                    });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    advance(&mut i, &mut line, &mut col, '*');
                    advance(&mut i, &mut line, &mut col, '/');
                    break;
                }
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| FrontendError::Syntax {
                line: tl,
                col: tc,
                expected: vec!["integer literal within 64-bit range".into()],
                found: format!("`{text}`"),
            })?;
            out.push(Token { tok: Tok::Num(n), line: tl, col: tc });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            let text: String = chars[start..i].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == text) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(text),
            };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            s.chars()
                .enumerate()
                .all(|(k, sc)| chars.get(i + k) == Some(&sc))
        });
        match sym {
            Some(s) => {
                for sc in s.chars() {
                    advance(&mut i, &mut line, &mut col, sc);
                }
                out.push(Token { tok: Tok::Sym(s), line: tl, col: tc });
            }
            None => {
                return Err(FrontendError::Syntax {
                    line: tl,
                    col: tc,
                    expected: vec!["a token".into()],
                    found: format!("character `{c}`"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("int x; // c\n/* a\n b */ x <= 10;").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Kw("int"),
                Tok::Ident("x".into()),
                Tok::Sym(";"),
                Tok::Ident("x".into()),
                Tok::Sym("<="),
                Tok::Num(10),
                Tok::Sym(";"),
                Tok::Eof,
            ]
        );
        assert_eq!((toks[3].line, toks[3].col), (3, 7));
    }

    #[test]
    fn rejects_stray_characters_and_huge_literals() {
        assert!(tokenize("x = 1 @ 2;").is_err());
        assert!(tokenize("x = 99999999999999999999;").is_err());
        assert!(tokenize("/* open").is_err());
    }
}
