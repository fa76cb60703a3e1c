use std::path::PathBuf;
use std::rc::Rc;

use super::FrontendError;
use crate::source::SourceLoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Int,
    Float,
    Char,
    Str,
    Punct,
    /// `<stdio.h>` after `#include`; only produced on request.
    HeaderName,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub text: Rc<str>,
    pub file: Rc<PathBuf>,
    pub line: u32,
    pub column: u32,
    /// First token on its logical line.
    pub bol: bool,
    /// Macros this token was produced by; doubles as the hide set during expansion.
    pub expanded_from: Rc<Vec<Rc<str>>>,
}

impl Token {
    pub fn loc(&self) -> SourceLoc {
        SourceLoc::new(self.file.as_ref().clone(), self.line, self.column)
    }

    pub fn is(&self, text: &str) -> bool {
        &*self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.kind == TokKind::Punct && &*self.text == text
    }

    pub fn hidden_by(&self, name: &str) -> bool {
        self.expanded_from.iter().any(|m| &**m == name)
    }
}

const PUNCTS: &[&str] = &[
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=",
    "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##", "[", "]", "(", ")", "{", "}", ".", "&", "*",
    "+", "-", "~", "!", "/", "%", "<", ">", "^", "|", "?", ":", ";", "=", ",", "#",
];

pub fn lex_file(src: &str, file: Rc<PathBuf>) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut bol = true;
    let no_origin: Rc<Vec<Rc<str>>> = Rc::new(Vec::new());

    let err = |line: u32, col: u32, msg: String| FrontendError::Lex {
        loc: SourceLoc::new(file.as_ref().clone(), line, col),
        message: msg,
    };

    while i < chars.len() {
        let c = chars[i];
        // line splice
        if c == '\\' && (chars.get(i + 1) == Some(&'\n') || (chars.get(i + 1) == Some(&'\r') && chars.get(i + 2) == Some(&'\n'))) {
            i += if chars[i + 1] == '\r' { 3 } else { 2 };
            line += 1;
            col = 1;
            continue;
        }
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            bol = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i >= chars.len() {
                    return Err(err(sl, sc, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }

        let (sl, sc) = (line, col);
        let start = i;
        let kind;
        if c.is_ascii_alphabetic() || c == '_' {
            // wide/unicode prefixes on literals
            let is_prefix = matches!(c, 'L' | 'u' | 'U')
                && matches!(chars.get(i + 1), Some('\'') | Some('"'));
            if is_prefix {
                i += 1;
                let q = chars[i];
                kind = quoted(&chars, &mut i, q).ok_or_else(|| err(sl, sc, "unterminated literal".into()))?;
            } else {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                kind = TokKind::Ident;
            }
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            // pp-number
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                if (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E' | 'p' | 'P') {
                    i += 1;
                } else if d.is_ascii_alphanumeric() || d == '_' || d == '.' {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let float = if is_hex_prefix(&chars[start..i]) {
                text.contains('.') || text.contains('p') || text.contains('P')
            } else {
                text.contains('.') || text.contains('e') || text.contains('E')
            };
            kind = if float { TokKind::Float } else { TokKind::Int };
        } else if c == '\'' || c == '"' {
            kind = quoted(&chars, &mut i, c).ok_or_else(|| err(sl, sc, "unterminated literal".into()))?;
        } else {
            let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
            let p = PUNCTS
                .iter()
                .find(|p| rest.starts_with(**p))
                .ok_or_else(|| err(sl, sc, format!("unexpected character `{c}`")))?;
            i += p.chars().count();
            kind = TokKind::Punct;
        }
        let text: String = chars[start..i].iter().collect();
        col += (i - start) as u32;
        toks.push(Token {
            kind,
            text: text.into(),
            file: file.clone(),
            line: sl,
            column: sc,
            bol,
            expanded_from: no_origin.clone(),
        });
        bol = false;
    }
    Ok(toks)
}

fn is_hex_prefix(s: &[char]) -> bool {
    s.len() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')
}

fn quoted(chars: &[char], i: &mut usize, q: char) -> Option<TokKind> {
    *i += 1;
    while *i < chars.len() {
        match chars[*i] {
            '\\' => *i += 2,
            '\n' => return None,
            c if c == q => {
                *i += 1;
                return Some(if q == '"' { TokKind::Str } else { TokKind::Char });
            }
            _ => *i += 1,
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        lex_file(src, Rc::new(PathBuf::from("t.c")))
            .unwrap()
            .into_iter()
            .map(|t| t.text.to_string())
            .collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            texts("int a[N]; a += 0x1fU; p->x <<= 2; /* c */ // d\n'\\n' \"s\\\"\" 1.5e-3f"),
            [
                "int", "a", "[", "N", "]", ";", "a", "+=", "0x1fU", ";", "p", "->", "x", "<<=", "2",
                ";", "'\\n'", "\"s\\\"\"", "1.5e-3f"
            ]
        );
    }

    #[test]
    fn locations_and_line_starts() {
        let toks = lex_file("a\n  b /*x\ny*/ c", Rc::new(PathBuf::from("t.c"))).unwrap();
        assert_eq!((toks[1].line, toks[1].column, toks[1].bol), (2, 3, true));
        assert_eq!((toks[2].line, toks[2].bol), (3, false));
    }

    #[test]
    fn hex_with_e_is_integer() {
        let toks = lex_file("0x1E 10", Rc::new(PathBuf::from("t.c"))).unwrap();
        assert_eq!(toks[0].kind, TokKind::Int);
        assert_eq!(toks[1].kind, TokKind::Int);
    }
}
