//! Minimal S-expression reader for solver responses.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// Symbols, numerals, keywords. `|quoted|` symbols are stored unquoted.
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed s-expression at byte {offset}: {message}")]
pub struct SexpError {
    pub offset: usize,
    pub message: String,
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_atom(&self, s: &str) -> bool {
        self.atom() == Some(s)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut stack: Vec<(usize, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();
    let err = |offset: usize, message: &str| SexpError {
        offset,
        message: message.to_string(),
    };

    while pos < bytes.len() {
        let c = bytes[pos];
        let item = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                pos += 1;
                continue;
            }
            b';' => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            b'(' => {
                stack.push((pos, Vec::new()));
                pos += 1;
                continue;
            }
            b')' => {
                let (_, items) = stack.pop().ok_or_else(|| err(pos, "unbalanced `)`"))?;
                pos += 1;
                Sexp::List(items)
            }
            b'"' => {
                let mut s = String::new();
                pos += 1;
                loop {
                    match bytes.get(pos) {
                        None => return Err(err(pos, "unterminated string")),
                        Some(b'"') if bytes.get(pos + 1) == Some(&b'"') => {
                            s.push('"');
                            pos += 2;
                        }
                        Some(b'"') => {
                            pos += 1;
                            break;
                        }
                        Some(_) => {
                            let ch = text[pos..].chars().next().unwrap();
                            s.push(ch);
                            pos += ch.len_utf8();
                        }
                    }
                }
                Sexp::Str(s)
            }
            b'|' => {
                let start = pos + 1;
                let end = text[start..]
                    .find('|')
                    .ok_or_else(|| err(pos, "unterminated quoted symbol"))?;
                pos = start + end + 1;
                Sexp::Atom(text[start..start + end].to_string())
            }
            _ => {
                let start = pos;
                while pos < bytes.len()
                    && !matches!(bytes[pos], b' ' | b'\t' | b'\n' | b'\r' | b'(' | b')' | b'"' | b';')
                {
                    pos += 1;
                }
                Sexp::Atom(text[start..pos].to_string())
            }
        };
        match stack.last_mut() {
            Some((_, items)) => items.push(item),
            None => top.push(item),
        }
    }
    if let Some((open, _)) = stack.last() {
        return Err(err(*open, "unbalanced `(`"));
    }
    Ok(top)
}

pub fn parse_one(text: &str) -> Result<Sexp, SexpError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        n => Err(SexpError {
            offset: 0,
            message: format!("expected one expression, found {n}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_strings_and_quoted_symbols() {
        let got = parse_all("(a (b \"c \"\"d\"\"\") |x y|) ; comment\n 12").unwrap();
        assert_eq!(
            got,
            vec![
                Sexp::List(vec![
                    Sexp::Atom("a".into()),
                    Sexp::List(vec![Sexp::Atom("b".into()), Sexp::Str("c \"d\"".into())]),
                    Sexp::Atom("x y".into()),
                ]),
                Sexp::Atom("12".into()),
            ]
        );
    }

    #[test]
    fn rejects_unbalanced_input() {
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
    }
}
