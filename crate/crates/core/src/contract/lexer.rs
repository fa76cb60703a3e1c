use super::ContractError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokKind {
    Ident,
    Number,
    Punct,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Tok {
    pub kind: TokKind,
    pub text: String,
    pub line: u32,
    pub column: u32,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Tok>, ContractError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
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
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc) = (line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(ContractError::Syntax {
                        line: sl,
                        column: sc,
                        message: "unterminated comment".into(),
                    });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        let (sl, sc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                text.push(chars[i]);
                bump!();
            }
            toks.push(Tok { kind: TokKind::Ident, text, line: sl, column: sc });
            continue;
        }
        if c.is_ascii_digit() {
            let mut text = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                text.push(chars[i]);
                bump!();
            }
            toks.push(Tok { kind: TokKind::Number, text, line: sl, column: sc });
            continue;
        }
        if c == '.' && chars.get(i + 1) == Some(&'.') && chars.get(i + 2) == Some(&'.') {
            bump!();
            bump!();
            bump!();
            toks.push(Tok { kind: TokKind::Punct, text: "...".into(), line: sl, column: sc });
            continue;
        }
        if "{}()[],:<>*.;".contains(c) {
            bump!();
            toks.push(Tok { kind: TokKind::Punct, text: c.to_string(), line: sl, column: sc });
            continue;
        }
        return Err(ContractError::Syntax {
            line: sl,
            column: sc,
            message: format!("unexpected character `{c}`"),
        });
    }
    toks.push(Tok { kind: TokKind::Eof, text: String::new(), line, column: col });
    Ok(toks)
}
