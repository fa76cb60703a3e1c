//! A small C preprocessor: includes, object- and function-like macros, and
//! conditional compilation. Token pasting and stringizing are rejected.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::lexer::{lex_file, TokKind, Token};
use super::FrontendError;
use crate::source::SourceLoc;

const MAX_INCLUDE_DEPTH: usize = 32;
const MAX_MACRO_DEPTH: usize = 64;

/// Headers answered without touching the filesystem when not found on the path.
const BUILTIN_HEADERS: &[(&str, &str)] = &[
    (
        "stdint.h",
        "#ifndef ISCHECK_STDINT_H\n#define ISCHECK_STDINT_H\n\
         typedef signed char int8_t; typedef short int16_t; typedef int int32_t; typedef long long int64_t;\n\
         typedef unsigned char uint8_t; typedef unsigned short uint16_t; typedef unsigned int uint32_t;\n\
         typedef unsigned long long uint64_t; typedef unsigned long uintptr_t; typedef long intptr_t;\n\
         #endif\n",
    ),
    (
        "stdbool.h",
        "#ifndef ISCHECK_STDBOOL_H\n#define ISCHECK_STDBOOL_H\n#define bool _Bool\n#define true 1\n#define false 0\n#endif\n",
    ),
    (
        "stddef.h",
        "#ifndef ISCHECK_STDDEF_H\n#define ISCHECK_STDDEF_H\n\
         typedef unsigned long size_t; typedef long ptrdiff_t;\n#define NULL ((void*)0)\n#endif\n",
    ),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncludeRecord {
    /// The token after `#include`, quotes or angle brackets included.
    pub directive_text: String,
    pub resolved_path: Option<PathBuf>,
    pub is_header_suffix: bool,
    /// False when the directive sits in a conditionally excluded region.
    pub active: bool,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, Default)]
pub struct PreprocessConfig {
    pub include_dirs: Vec<PathBuf>,
    pub defines: BTreeMap<String, String>,
    /// Skip includes that cannot be resolved instead of failing.
    pub stub_missing_includes: bool,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub tokens: Vec<Token>,
    pub includes: Vec<IncludeRecord>,
}

#[derive(Debug, Clone)]
struct Macro {
    params: Option<Vec<String>>,
    variadic: bool,
    body: Vec<Token>,
}

struct Cond {
    parent_active: bool,
    taken: bool,
    active: bool,
    seen_else: bool,
    loc: SourceLoc,
}

pub fn preprocess(entry: &Path, cfg: &PreprocessConfig) -> Result<Preprocessed, FrontendError> {
    let mut pp = Preprocessor {
        cfg,
        macros: HashMap::new(),
        includes: Vec::new(),
        once: HashSet::new(),
    };
    for (name, value) in &cfg.defines {
        let file = Rc::new(PathBuf::from("<command-line>"));
        let body = lex_file(value, file)?;
        pp.macros.insert(name.clone(), Macro { params: None, variadic: false, body });
    }
    let mut out = Vec::new();
    pp.file(entry, 0, &mut out)?;
    Ok(Preprocessed { tokens: out, includes: pp.includes })
}

struct Preprocessor<'a> {
    cfg: &'a PreprocessConfig,
    macros: HashMap<String, Macro>,
    includes: Vec<IncludeRecord>,
    once: HashSet<PathBuf>,
}

fn pp_err(tok: &Token, message: impl Into<String>) -> FrontendError {
    FrontendError::Preprocess { loc: tok.loc(), message: message.into() }
}

impl<'a> Preprocessor<'a> {
    fn read(&self, path: &Path) -> Result<String, FrontendError> {
        if let Some(name) = path.strip_prefix("<builtin>").ok().and_then(|p| p.to_str()) {
            if let Some((_, text)) = BUILTIN_HEADERS.iter().find(|(n, _)| *n == name) {
                return Ok(text.to_string());
            }
        }
        std::fs::read_to_string(path).map_err(|e| FrontendError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn file(&mut self, path: &Path, depth: usize, out: &mut Vec<Token>) -> Result<(), FrontendError> {
        if self.once.contains(path) {
            return Ok(());
        }
        let src = self.read(path)?;
        let toks = lex_file(&src, Rc::new(path.to_path_buf()))?;
        let mut conds: Vec<Cond> = Vec::new();
        let mut pending: Vec<Token> = Vec::new();
        let mut i = 0;
        while i < toks.len() {
            let t = &toks[i];
            let active = conds.last().map_or(true, |c| c.active);
            if !(t.bol && t.is_punct("#")) {
                let end = line_end(&toks, i);
                if active {
                    pending.extend_from_slice(&toks[i..end]);
                }
                i = end;
                continue;
            }
            let hash = t.clone();
            let end = line_end(&toks, i);
            let line = &toks[i + 1..end];
            i = end;
            let Some(name) = line.first() else { continue };
            let args = &line[1..];
            match &*name.text {
                "ifdef" | "ifndef" => {
                    let val = if active {
                        let id = args.first().ok_or_else(|| pp_err(name, "missing macro name"))?;
                        self.macros.contains_key(&*id.text) == (&*name.text == "ifdef")
                    } else {
                        false
                    };
                    conds.push(Cond { parent_active: active, taken: val, active: active && val, seen_else: false, loc: hash.loc() });
                }
                "if" => {
                    let val = active && self.eval_condition(name, args)?;
                    conds.push(Cond { parent_active: active, taken: val, active: val, seen_else: false, loc: hash.loc() });
                }
                "elif" => {
                    let top = conds.len();
                    if top == 0 || conds[top - 1].seen_else {
                        return Err(pp_err(name, "#elif without matching #if"));
                    }
                    let (parent, taken) = (conds[top - 1].parent_active, conds[top - 1].taken);
                    let val = parent && !taken && self.eval_condition(name, args)?;
                    let c = &mut conds[top - 1];
                    c.active = val;
                    c.taken |= val;
                }
                "else" => {
                    let c = conds.last_mut().ok_or_else(|| pp_err(name, "#else without matching #if"))?;
                    if c.seen_else {
                        return Err(pp_err(name, "duplicate #else"));
                    }
                    c.seen_else = true;
                    c.active = c.parent_active && !c.taken;
                    c.taken = true;
                }
                "endif" => {
                    conds.pop().ok_or_else(|| pp_err(name, "#endif without matching #if"))?;
                }
                "include" => {
                    let (text, is_system, header) = include_target(name, args)?;
                    if !active {
                        self.includes.push(IncludeRecord {
                            is_header_suffix: header.ends_with(".h"),
                            directive_text: text,
                            resolved_path: None,
                            active: false,
                            loc: hash.loc(),
                        });
                        continue;
                    }
                    self.flush(&mut pending, out)?;
                    let resolved = self.resolve(path, &header, is_system);
                    self.includes.push(IncludeRecord {
                        is_header_suffix: header.ends_with(".h"),
                        directive_text: text,
                        resolved_path: resolved.clone(),
                        active: true,
                        loc: hash.loc(),
                    });
                    match resolved {
                        Some(p) => {
                            if depth + 1 > MAX_INCLUDE_DEPTH {
                                return Err(pp_err(&hash, format!("include depth exceeds {MAX_INCLUDE_DEPTH}")));
                            }
                            self.file(&p, depth + 1, out)?;
                        }
                        None if self.cfg.stub_missing_includes => {}
                        None => {
                            return Err(FrontendError::UnresolvedInclude { loc: hash.loc(), name: header })
                        }
                    }
                }
                _ if !active => {}
                "define" => self.define(name, args)?,
                "undef" => {
                    if let Some(id) = args.first() {
                        self.macros.remove(&*id.text);
                    }
                }
                "pragma" => {
                    if args.first().is_some_and(|a| a.is("once")) {
                        self.once.insert(path.to_path_buf());
                    }
                }
                "error" => {
                    let msg: Vec<&str> = args.iter().map(|t| &*t.text).collect();
                    return Err(pp_err(name, format!("#error {}", msg.join(" "))));
                }
                "warning" | "line" | "ident" => {}
                other => {
                    return Err(FrontendError::Unsupported {
                        loc: name.loc(),
                        construct: format!("preprocessor directive #{other}"),
                    })
                }
            }
        }
        if let Some(c) = conds.first() {
            return Err(FrontendError::Preprocess {
                loc: c.loc.clone(),
                message: "unterminated conditional directive".into(),
            });
        }
        self.flush(&mut pending, out)
    }

    fn flush(&self, pending: &mut Vec<Token>, out: &mut Vec<Token>) -> Result<(), FrontendError> {
        if !pending.is_empty() {
            let expanded = self.expand(std::mem::take(pending))?;
            out.extend(expanded);
        }
        Ok(())
    }

    fn resolve(&self, from: &Path, header: &str, is_system: bool) -> Option<PathBuf> {
        let mut candidates = Vec::new();
        if !is_system {
            if let Some(dir) = from.parent() {
                if !from.starts_with("<builtin>") {
                    candidates.push(dir.join(header));
                }
            }
        }
        candidates.extend(self.cfg.include_dirs.iter().map(|d| d.join(header)));
        if let Some(p) = candidates.into_iter().find(|p| p.is_file()) {
            return Some(p);
        }
        BUILTIN_HEADERS
            .iter()
            .find(|(n, _)| *n == header)
            .map(|(n, _)| Path::new("<builtin>").join(n))
    }

    fn define(&mut self, directive: &Token, args: &[Token]) -> Result<(), FrontendError> {
        let name = args
            .first()
            .filter(|t| t.kind == TokKind::Ident)
            .ok_or_else(|| pp_err(directive, "#define needs a macro name"))?;
        let mut rest = &args[1..];
        let mut params = None;
        let mut variadic = false;
        let adjacent = rest.first().is_some_and(|p| {
            p.is_punct("(") && p.line == name.line && p.column == name.column + name.text.len() as u32
        });
        if adjacent {
            let mut ps = Vec::new();
            let mut j = 1;
            loop {
                let t = rest.get(j).ok_or_else(|| pp_err(name, "unterminated macro parameter list"))?;
                match &*t.text {
                    ")" => break,
                    "," => {}
                    "..." => variadic = true,
                    _ if t.kind == TokKind::Ident => ps.push(t.text.to_string()),
                    _ => return Err(pp_err(t, "bad macro parameter")),
                }
                j += 1;
            }
            rest = &rest[j + 1..];
            params = Some(ps);
        }
        if let Some(t) = rest.iter().find(|t| t.is_punct("#") || t.is_punct("##")) {
            let what = if t.is("#") { "stringizing operator `#`" } else { "token pasting operator `##`" };
            return Err(FrontendError::Unsupported { loc: t.loc(), construct: what.into() });
        }
        self.macros.insert(
            name.text.to_string(),
            Macro { params, variadic, body: rest.to_vec() },
        );
        Ok(())
    }

    fn expand(&self, input: Vec<Token>) -> Result<Vec<Token>, FrontendError> {
        let mut q: VecDeque<Token> = input.into();
        let mut out = Vec::new();
        while let Some(t) = q.pop_front() {
            if t.kind != TokKind::Ident || t.hidden_by(&t.text) {
                out.push(t);
                continue;
            }
            if t.is("__LINE__") {
                let mut n = t.clone();
                n.kind = TokKind::Int;
                n.text = t.line.to_string().into();
                out.push(n);
                continue;
            }
            let Some(m) = self.macros.get(&*t.text) else {
                out.push(t);
                continue;
            };
            if t.expanded_from.len() >= MAX_MACRO_DEPTH {
                return Err(pp_err(&t, format!("macro expansion deeper than {MAX_MACRO_DEPTH}")));
            }
            let mut hide = (*t.expanded_from).clone();
            hide.push(t.text.clone());
            let hide = Rc::new(hide);
            let Some(params) = &m.params else {
                let body: Vec<Token> = m.body.iter().map(|b| relocate(b, &t, &hide)).collect();
                for b in body.into_iter().rev() {
                    q.push_front(b);
                }
                continue;
            };
            if !q.front().is_some_and(|n| n.is_punct("(")) {
                out.push(t);
                continue;
            }
            q.pop_front();
            let mut args: Vec<Vec<Token>> = vec![Vec::new()];
            let mut depth = 0;
            loop {
                let a = q.pop_front().ok_or_else(|| pp_err(&t, "unterminated macro invocation"))?;
                if a.is_punct("(") {
                    depth += 1;
                } else if a.is_punct(")") {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                } else if a.is_punct(",") && depth == 0 && !(m.variadic && args.len() > params.len()) {
                    args.push(Vec::new());
                    continue;
                }
                args.last_mut().unwrap().push(a);
            }
            if params.is_empty() && !m.variadic && args.len() == 1 && args[0].is_empty() {
                args.clear();
            }
            let expected = params.len();
            if args.len() < expected || (!m.variadic && args.len() != expected) {
                return Err(pp_err(&t, format!("macro {} expects {expected} arguments, got {}", t.text, args.len())));
            }
            let mut expanded_args = Vec::new();
            for a in &args {
                expanded_args.push(self.expand(a.clone())?);
            }
            let mut body = Vec::new();
            for b in &m.body {
                let pos = if b.kind == TokKind::Ident {
                    params.iter().position(|p| b.is(p))
                } else {
                    None
                };
                if let Some(pi) = pos {
                    body.extend(expanded_args[pi].iter().map(|a| rehide(a, &hide)));
                } else if m.variadic && b.is("__VA_ARGS__") {
                    for (k, a) in expanded_args.iter().enumerate().skip(expected) {
                        if k > expected {
                            let mut comma = relocate(b, &t, &hide);
                            comma.kind = TokKind::Punct;
                            comma.text = ",".into();
                            body.push(comma);
                        }
                        body.extend(a.iter().map(|x| rehide(x, &hide)));
                    }
                } else {
                    body.push(relocate(b, &t, &hide));
                }
            }
            for b in body.into_iter().rev() {
                q.push_front(b);
            }
        }
        Ok(out)
    }

    fn eval_condition(&self, directive: &Token, args: &[Token]) -> Result<bool, FrontendError> {
        let mut resolved = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let t = &args[i];
            if t.is("defined") {
                let (name, skip) = if args.get(i + 1).is_some_and(|p| p.is_punct("(")) {
                    (args.get(i + 2), 4)
                } else {
                    (args.get(i + 1), 2)
                };
                let name = name.ok_or_else(|| pp_err(t, "`defined` needs a macro name"))?;
                let mut one = t.clone();
                one.kind = TokKind::Int;
                one.text = if self.macros.contains_key(&*name.text) { "1" } else { "0" }.into();
                resolved.push(one);
                i += skip;
                continue;
            }
            resolved.push(t.clone());
            i += 1;
        }
        let expanded = self.expand(resolved)?;
        let mut ev = CondEval { toks: &expanded, pos: 0, at: directive };
        let v = ev.ternary()?;
        if ev.pos != expanded.len() {
            return Err(pp_err(directive, "trailing tokens in #if expression"));
        }
        Ok(v != 0)
    }
}

fn relocate(body: &Token, site: &Token, hide: &Rc<Vec<Rc<str>>>) -> Token {
    let mut t = body.clone();
    t.file = site.file.clone();
    t.line = site.line;
    t.column = site.column;
    t.bol = false;
    t.expanded_from = hide.clone();
    t
}

fn rehide(arg: &Token, hide: &Rc<Vec<Rc<str>>>) -> Token {
    let mut t = arg.clone();
    let mut hs = (**hide).clone();
    for h in arg.expanded_from.iter() {
        if !hs.contains(h) {
            hs.push(h.clone());
        }
    }
    t.expanded_from = Rc::new(hs);
    t.bol = false;
    t
}

/// Index of the first token after `from` that starts a new line.
fn line_end(toks: &[Token], from: usize) -> usize {
    let mut j = from + 1;
    while j < toks.len() && !toks[j].bol {
        j += 1;
    }
    j
}

fn include_target(directive: &Token, args: &[Token]) -> Result<(String, bool, String), FrontendError> {
    match args.first() {
        Some(t) if t.kind == TokKind::Str => {
            let name = t.text.trim_matches('"').to_string();
            Ok((t.text.to_string(), false, name))
        }
        Some(t) if t.is_punct("<") => {
            let close = args
                .iter()
                .position(|a| a.is_punct(">"))
                .ok_or_else(|| pp_err(t, "unterminated <header> name"))?;
            let name: String = args[1..close].iter().map(|a| &*a.text).collect();
            Ok((format!("<{name}>"), true, name))
        }
        Some(t) => Err(FrontendError::Unsupported {
            loc: t.loc(),
            construct: "computed #include".into(),
        }),
        None => Err(pp_err(directive, "#include needs a file name")),
    }
}

struct CondEval<'t> {
    toks: &'t [Token],
    pos: usize,
    at: &'t Token,
}

impl CondEval<'_> {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|t| &*t.text)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.toks.get(self.pos).is_some_and(|t| t.is_punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ternary(&mut self) -> Result<i64, FrontendError> {
        let c = self.binary(0)?;
        if self.eat("?") {
            let a = self.ternary()?;
            if !self.eat(":") {
                return Err(pp_err(self.at, "expected `:` in #if expression"));
            }
            let b = self.ternary()?;
            return Ok(if c != 0 { a } else { b });
        }
        Ok(c)
    }

    fn binary(&mut self, min_prec: u8) -> Result<i64, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let Some(op) = self.peek().map(str::to_string) else { break };
            let prec = match op.as_str() {
                "||" => 1,
                "&&" => 2,
                "|" => 3,
                "^" => 4,
                "&" => 5,
                "==" | "!=" => 6,
                "<" | ">" | "<=" | ">=" => 7,
                "<<" | ">>" => 8,
                "+" | "-" => 9,
                "*" | "/" | "%" => 10,
                _ => break,
            };
            if prec < min_prec || !self.toks[self.pos].is_punct(&op) {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = match op.as_str() {
                "||" => ((lhs != 0) || (rhs != 0)) as i64,
                "&&" => ((lhs != 0) && (rhs != 0)) as i64,
                "|" => lhs | rhs,
                "^" => lhs ^ rhs,
                "&" => lhs & rhs,
                "==" => (lhs == rhs) as i64,
                "!=" => (lhs != rhs) as i64,
                "<" => (lhs < rhs) as i64,
                ">" => (lhs > rhs) as i64,
                "<=" => (lhs <= rhs) as i64,
                ">=" => (lhs >= rhs) as i64,
                "<<" => lhs.wrapping_shl(rhs as u32),
                ">>" => lhs.wrapping_shr(rhs as u32),
                "+" => lhs.wrapping_add(rhs),
                "-" => lhs.wrapping_sub(rhs),
                "*" => lhs.wrapping_mul(rhs),
                "/" | "%" if rhs == 0 => return Err(pp_err(self.at, "division by zero in #if")),
                "/" => lhs.wrapping_div(rhs),
                _ => lhs.wrapping_rem(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<i64, FrontendError> {
        if self.eat("!") {
            return Ok((self.unary()? == 0) as i64);
        }
        if self.eat("-") {
            return Ok(self.unary()?.wrapping_neg());
        }
        if self.eat("+") {
            return self.unary();
        }
        if self.eat("~") {
            return Ok(!self.unary()?);
        }
        if self.eat("(") {
            let v = self.ternary()?;
            if !self.eat(")") {
                return Err(pp_err(self.at, "expected `)` in #if expression"));
            }
            return Ok(v);
        }
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| pp_err(self.at, "incomplete #if expression"))?;
        self.pos += 1;
        match t.kind {
            TokKind::Int => parse_int(&t.text).ok_or_else(|| pp_err(t, "bad integer literal")),
            TokKind::Char => Ok(char_value(&t.text)),
            TokKind::Ident => Ok(0),
            _ => Err(pp_err(t, format!("unexpected `{}` in #if expression", t.text))),
        }
    }
}

pub(crate) fn parse_int(text: &str) -> Option<i64> {
    let t = text.trim_end_matches(['u', 'U', 'l', 'L']);
    if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(h, 16).ok().map(|v| v as i64)
    } else if t.len() > 1 && t.starts_with('0') {
        u64::from_str_radix(&t[1..], 8).ok().map(|v| v as i64)
    } else {
        t.parse::<u64>().ok().map(|v| v as i64)
    }
}

fn char_value(text: &str) -> i64 {
    let inner = text.trim_start_matches(['L', 'u', 'U']).trim_matches('\'');
    let mut chars = inner.chars();
    match (chars.next(), chars.next()) {
        (Some('\\'), Some('n')) => 10,
        (Some('\\'), Some('t')) => 9,
        (Some('\\'), Some('0')) => 0,
        (Some('\\'), Some(c)) => c as i64,
        (Some(c), _) => c as i64,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn run(files: &[(&str, &str)], entry: &str) -> Result<Preprocessed, FrontendError> {
        let dir = tempfile::tempdir().unwrap();
        for (name, text) in files {
            fs::write(dir.path().join(name), text).unwrap();
        }
        let r = preprocess(&dir.path().join(entry), &PreprocessConfig::default());
        drop(dir);
        r
    }

    fn text(p: &Preprocessed) -> String {
        p.tokens.iter().map(|t| &*t.text).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn include_is_spliced() {
        let p = run(&[("sensors.h", "int tmon_sens_read(void);"), ("a.c", "#include \"sensors.h\"\nint x;")], "a.c").unwrap();
        assert_eq!(text(&p), "int tmon_sens_read ( void ) ; int x ;");
        assert_eq!(p.includes.len(), 1);
        assert!(p.includes[0].is_header_suffix);
        assert_eq!(p.includes[0].directive_text, "\"sensors.h\"");
        assert!(p.tokens[0].file.ends_with("sensors.h"));
    }

    #[test]
    fn object_like_macro() {
        let p = run(&[("a.c", "#define N 10\nint a[N];")], "a.c").unwrap();
        assert_eq!(text(&p), "int a [ 10 ] ;");
        assert_eq!(&*p.tokens[3].expanded_from[0], "N");
    }

    #[test]
    fn non_header_include_is_recorded() {
        let p = run(&[("impl.c", "int y;"), ("a.c", "#include \"impl.c\"\n")], "a.c").unwrap();
        assert!(!p.includes[0].is_header_suffix);
    }

    #[test]
    fn excluded_includes_are_still_recorded() {
        let p = run(&[("a.c", "#if 0\n#include \"util.c\"\n#endif\nint x;")], "a.c").unwrap();
        assert_eq!(p.includes.len(), 1);
        assert!(!p.includes[0].active);
        assert!(!p.includes[0].is_header_suffix);
        assert_eq!(text(&p), "int x ;");
    }

    #[test]
    fn function_like_macros() {
        let p = run(
            &[("a.c", "#define MAX(a, b) ((a) > (b) ? (a) : (b))\n#define F() 1\nint m = MAX(x, F());\nint MAX;")],
            "a.c",
        )
        .unwrap();
        assert_eq!(text(&p), "int m = ( ( x ) > ( 1 ) ? ( x ) : ( 1 ) ) ; int MAX ;");
    }

    #[test]
    fn self_reference_does_not_loop() {
        let p = run(&[("a.c", "#define x x + 1\nint y = x;")], "a.c").unwrap();
        assert_eq!(text(&p), "int y = x + 1 ;");
    }

    #[test]
    fn conditionals() {
        let src = "#define A 2\n#if defined(A) && A > 1\nint yes;\n#elif 1\nint no1;\n#else\nint no2;\n#endif\n#ifndef B\nint b;\n#endif\n#ifdef B\nint c;\n#endif";
        let p = run(&[("a.c", src)], "a.c").unwrap();
        assert_eq!(text(&p), "int yes ; int b ;");
    }

    #[test]
    fn command_line_defines() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.c"), "#ifdef DEBUG\nint level = LEVEL;\n#endif").unwrap();
        let mut cfg = PreprocessConfig::default();
        cfg.defines.insert("DEBUG".into(), String::new());
        cfg.defines.insert("LEVEL".into(), "3".into());
        let p = preprocess(&dir.path().join("a.c"), &cfg).unwrap();
        assert_eq!(text(&p), "int level = 3 ;");
    }

    #[test]
    fn unterminated_conditional() {
        let e = run(&[("a.c", "#ifdef X\nint a;\n")], "a.c").unwrap_err();
        assert!(matches!(e, FrontendError::Preprocess { .. }), "{e}");
    }

    #[test]
    fn recursive_include_is_bounded() {
        let e = run(&[("a.h", "#include \"a.h\"\n")], "a.h").unwrap_err();
        assert!(e.to_string().contains("include depth"), "{e}");
    }

    #[test]
    fn pasting_is_unsupported() {
        let e = run(&[("a.c", "#define CAT(a,b) a##b\n")], "a.c").unwrap_err();
        assert!(matches!(e, FrontendError::Unsupported { .. }));
        let e = run(&[("a.c", "#define STR(a) #a\n")], "a.c").unwrap_err();
        assert!(matches!(e, FrontendError::Unsupported { .. }));
    }

    #[test]
    fn unresolved_include_defaults_to_error() {
        let e = run(&[("a.c", "#include \"missing.h\"\n")], "a.c").unwrap_err();
        assert!(matches!(e, FrontendError::UnresolvedInclude { .. }));
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.c"), "#include <vendor.h>\nint x;").unwrap();
        let cfg = PreprocessConfig { stub_missing_includes: true, ..Default::default() };
        let p = preprocess(&dir.path().join("a.c"), &cfg).unwrap();
        assert_eq!(p.includes[0].resolved_path, None);
        assert_eq!(p.includes[0].directive_text, "<vendor.h>");
    }

    #[test]
    fn builtin_system_headers() {
        let p = run(&[("a.c", "#include <stdint.h>\nuint8_t x;")], "a.c").unwrap();
        assert!(text(&p).ends_with("uint8_t x ;"));
        assert!(p.includes[0].resolved_path.as_ref().unwrap().starts_with("<builtin>"));
    }

    #[test]
    fn macro_depth_is_bounded() {
        let mut src = String::new();
        for i in 0..70 {
            src.push_str(&format!("#define M{i} M{}\n", i + 1));
        }
        src.push_str("int v = M0;");
        let e = run(&[("a.c", &src)], "a.c").unwrap_err();
        assert!(e.to_string().contains("deeper"), "{e}");
    }
}
