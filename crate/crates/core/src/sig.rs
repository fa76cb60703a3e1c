//! Function signature text shared by the contract parser and the C front-end.
//!
//! Both sides reduce a declaration to the same token-based form so that the
//! exact-match comparison between a header declaration and a contract entry
//! is a plain equality test: return type, name and parameter types, each as
//! whitespace-normalized token text with parameter names dropped.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeTextKind {
    ReturnType,
    ParameterType,
}

/// Normalized C type-and-declarator text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CTypeText {
    pub text: String,
    pub kind: TypeTextKind,
}

impl CTypeText {
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S], kind: TypeTextKind) -> Self {
        CTypeText {
            text: join_tokens(tokens),
            kind,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for CTypeText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunSignature {
    pub name: String,
    pub return_type: CTypeText,
    /// Parameter types in order; an empty list stands for `(void)`.
    pub params: Vec<CTypeText>,
}

impl FunSignature {
    pub fn arity(&self) -> usize {
        self.params.iter().filter(|p| p.text != "...").count()
    }

    pub fn is_variadic(&self) -> bool {
        self.params.iter().any(|p| p.text == "...")
    }
}

impl fmt::Display for FunSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}(", self.return_type, self.name)?;
        if self.params.is_empty() {
            f.write_str("void")?;
        }
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&p.text)?;
        }
        f.write_str(")")
    }
}

const STORAGE: &[&str] = &["static", "extern", "inline", "register", "auto", "typedef"];

const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool",
    "_Complex", "const", "volatile", "restrict", "struct", "union", "enum",
];

pub fn is_keyword(tok: &str) -> bool {
    STORAGE.contains(&tok) || TYPE_KEYWORDS.contains(&tok)
}

fn is_ident(tok: &str) -> bool {
    let mut chars = tok.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn is_c_identifier(tok: &str) -> bool {
    is_ident(tok) && !is_keyword(tok)
}

/// Join tokens with single spaces, except around brackets and before commas.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for t in tokens {
        let t = t.as_ref();
        if let Some(p) = prev {
            let tight = matches!(p, "(" | "[") || matches!(t, ")" | "]" | ",");
            if !tight {
                out.push(' ');
            }
        }
        out.push_str(t);
        prev = Some(t);
    }
    out
}

/// Split a token list on top-level commas.
fn split_top_level<'a, S: AsRef<str>>(tokens: &'a [S]) -> Vec<&'a [S]> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        match t.as_ref() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                parts.push(&tokens[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&tokens[start..]);
    parts
}

/// Index of the declared name inside a parameter's tokens, if it has one.
fn param_name_index<S: AsRef<str>>(tokens: &[S]) -> Option<usize> {
    let mut candidates = Vec::new();
    let mut after_tag = false;
    for (i, t) in tokens.iter().enumerate() {
        let t = t.as_ref();
        if matches!(t, "struct" | "union" | "enum") {
            after_tag = true;
            continue;
        }
        if is_c_identifier(t) {
            if after_tag {
                after_tag = false;
                // a tag counts as the type name
                candidates.push((i, true));
            } else {
                candidates.push((i, false));
            }
        } else {
            after_tag = false;
        }
    }
    let has_builtin = tokens.iter().any(|t| {
        let t = t.as_ref();
        TYPE_KEYWORDS.contains(&t) && !matches!(t, "const" | "volatile" | "restrict")
    });
    // The name is the last plain identifier, provided something else names the type.
    let (last_idx, last_is_tag) = *candidates.last()?;
    if last_is_tag {
        return None;
    }
    let type_named_elsewhere = has_builtin || candidates.len() >= 2;
    type_named_elsewhere.then_some(last_idx)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureError(pub String);

impl fmt::Display for SignatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Reduce the tokens of one function declaration (no trailing `;`) to a signature.
pub fn signature_from_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<FunSignature, SignatureError> {
    let texts: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
    // The name is the identifier right before the first parenthesis that opens
    // a parameter list.
    let mut name_idx = None;
    for i in 1..texts.len() {
        if texts[i] == "(" && is_c_identifier(texts[i - 1]) {
            name_idx = Some(i - 1);
            break;
        }
    }
    let name_idx = name_idx.ok_or_else(|| {
        SignatureError(format!("not a function declaration: `{}`", join_tokens(&texts)))
    })?;
    let open = name_idx + 1;
    let mut depth = 0;
    let mut close = None;
    for (i, t) in texts.iter().enumerate().skip(open) {
        match *t {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth == 0 {
                    close = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let close = close.ok_or_else(|| SignatureError("unbalanced parentheses".into()))?;

    let mut ret: Vec<&str> = texts[..name_idx]
        .iter()
        .copied()
        .filter(|t| !STORAGE.contains(t))
        .collect();
    ret.extend(texts[close + 1..].iter().copied());
    if ret.is_empty() {
        return Err(SignatureError(format!(
            "missing return type for `{}`",
            texts[name_idx]
        )));
    }

    let inner = &texts[open + 1..close];
    let mut params = Vec::new();
    let is_void = inner.is_empty() || inner == ["void"];
    if !is_void {
        for part in split_top_level(inner) {
            if part.is_empty() {
                return Err(SignatureError("empty parameter".into()));
            }
            params.push(param_type(part));
        }
    }
    Ok(FunSignature {
        name: texts[name_idx].to_string(),
        return_type: CTypeText::from_tokens(&ret, TypeTextKind::ReturnType),
        params,
    })
}

fn param_type(part: &[&str]) -> CTypeText {
    // function-pointer parameter: name sits inside `( * name )`
    if let Some(pos) = part.windows(3).position(|w| w[0] == "(" && w[1] == "*" && is_c_identifier(w[2])) {
        let mut toks = part.to_vec();
        toks.remove(pos + 2);
        return CTypeText::from_tokens(&toks, TypeTextKind::ParameterType);
    }
    let mut toks = part.to_vec();
    if let Some(idx) = param_name_index(part) {
        toks.remove(idx);
    }
    CTypeText::from_tokens(&toks, TypeTextKind::ParameterType)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(s: &str) -> FunSignature {
        let toks: Vec<String> = crude_lex(s);
        signature_from_tokens(&toks).unwrap()
    }

    fn crude_lex(s: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = String::new();
        for c in s.chars() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                cur.push(c);
            } else {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                if !c.is_whitespace() {
                    out.push(c.to_string());
                }
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }

    #[test]
    fn drops_param_names() {
        let s = sig("void tmon_warn_write(int w)");
        assert_eq!(s.name, "tmon_warn_write");
        assert_eq!(s.return_type.text, "void");
        assert_eq!(s.params[0].text, "int");
    }

    #[test]
    fn void_params_are_empty() {
        assert!(sig("int tmon_step(void)").params.is_empty());
        assert!(sig("int tmon_step()").params.is_empty());
    }

    #[test]
    fn typedef_params() {
        let s = sig("void Rtdb_LowValve_write(const tB val)");
        assert_eq!(s.params[0].text, "const tB");
        let s = sig("tB getDiagTestCond(DIAG_TEST)");
        assert_eq!(s.params[0].text, "DIAG_TEST");
        let s = sig("void Util_registerEvent( void* moduleName, tU16 __LINE__ )");
        assert_eq!(s.params[0].text, "void *");
        assert_eq!(s.params[1].text, "tU16");
    }

    #[test]
    fn storage_class_is_not_part_of_return_type() {
        let s = sig("static int update_sat(char cond, int timer, int min, int max)");
        assert_eq!(s.return_type.text, "int");
        assert_eq!(s.arity(), 4);
    }

    #[test]
    fn struct_tags_are_types() {
        let s = sig("void f(struct point p, struct point)");
        assert_eq!(s.params[0].text, "struct point");
        assert_eq!(s.params[1].text, "struct point");
    }

    #[test]
    fn pointer_return() {
        let s = sig("char *name_of(int id)");
        assert_eq!(s.return_type.text, "char *");
    }

    #[test]
    fn join_is_idempotent() {
        let t = join_tokens(&["int", "(", "*", ")", "(", "int", ",", "char", ")"]);
        let again = join_tokens(&crude_lex(&t));
        assert_eq!(t, again);
    }
}
