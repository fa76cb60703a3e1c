//! Recursive-descent parser for the supported C subset.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::lexer::{TokKind, Token};
use super::FrontendError;
use crate::source::SourceLoc;

const ARITH_KEYWORDS: &[&str] = &["char", "short", "int", "long", "float", "double", "signed", "unsigned"];
const TYPE_SPEC_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool", "_Complex",
    "struct", "union", "enum",
];
const QUALIFIERS: &[&str] = &["const", "volatile", "restrict"];
const STORAGE_KEYWORDS: &[&str] = &["typedef", "extern", "static", "auto", "register", "inline"];
const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "_Generic", "asm", "__asm__", "__asm", "__attribute__", "__attribute", "__extension__", "__typeof__",
    "typeof", "_Static_assert", "_Alignas", "_Atomic", "_Thread_local", "__declspec",
];

pub fn parse_translation_unit(toks: &[Token]) -> Result<TranslationUnit, FrontendError> {
    let mut p = Parser {
        toks,
        pos: 0,
        scopes: vec![HashMap::new()],
        tu: TranslationUnit::default(),
        anon: 0,
        enum_consts: HashSet::new(),
        pending_params: Vec::new(),
        block_depth: 0,
    };
    while p.pos < toks.len() {
        p.external_decl()?;
    }
    Ok(p.tu)
}

enum Suffix {
    Array(Option<Expr>),
    Func(Vec<Param>, bool),
}

struct Declarator {
    name: Option<(String, SourceLoc)>,
    pointers: usize,
    nested: Option<Box<Declarator>>,
    suffixes: Vec<Suffix>,
}

impl Declarator {
    fn name(&self) -> Option<&(String, SourceLoc)> {
        self.name.as_ref().or_else(|| self.nested.as_ref().and_then(|n| n.name()))
    }

    /// The parameters when this declarator declares a function (not a pointer to one).
    fn function_params(&self) -> Option<(&[Param], bool)> {
        match self.outer_derivation()? {
            Suffix::Func(p, v) => Some((p, *v)),
            Suffix::Array(_) => None,
        }
    }

    /// The derivation applied closest to the declared name; `None` for plain
    /// or pointer types.
    fn outer_derivation(&self) -> Option<&Suffix> {
        if let Some(n) = &self.nested {
            if n.has_derivation() {
                return n.outer_derivation();
            }
        }
        self.suffixes.first()
    }

    fn has_derivation(&self) -> bool {
        self.pointers > 0 || !self.suffixes.is_empty() || self.nested.as_ref().is_some_and(|n| n.has_derivation())
    }

    fn apply(self, base: CType) -> CType {
        let mut t = base;
        for _ in 0..self.pointers {
            t = CType::pointer_to(t);
        }
        for s in self.suffixes.into_iter().rev() {
            t = match s {
                Suffix::Array(n) => CType::Array(Box::new(t), n.map(Box::new)),
                Suffix::Func(params, variadic) => CType::Function {
                    ret: Box::new(t),
                    params: params.into_iter().map(|p| p.ty).collect(),
                    variadic,
                },
            };
        }
        match self.nested {
            Some(inner) => inner.apply(t),
            None => t,
        }
    }
}

struct PendingParam {
    keywords: Vec<String>,
    loc: SourceLoc,
    subject: String,
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    /// name -> is a typedef name
    scopes: Vec<HashMap<String, bool>>,
    tu: TranslationUnit,
    anon: usize,
    enum_consts: HashSet<String>,
    pending_params: Vec<PendingParam>,
    block_depth: usize,
}

impl<'t> Parser<'t> {
    // ---- token helpers ----

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + n)
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text) && t.kind != TokKind::Str && t.kind != TokKind::Char)
    }

    fn loc(&self) -> SourceLoc {
        match self.peek().or_else(|| self.toks.last()) {
            Some(t) => t.loc(),
            None => SourceLoc::new("<empty>", 1, 1),
        }
    }

    fn bump(&mut self) -> Result<&'t Token, FrontendError> {
        let t = self.peek().ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> Result<&'t Token, FrontendError> {
        if self.at(text) {
            self.bump()
        } else {
            let found = self.peek().map_or("end of input".to_string(), |t| format!("`{}`", t.text));
            Err(self.error(format!("expected `{text}`, found {found}")))
        }
    }

    fn error(&self, message: impl Into<String>) -> FrontendError {
        FrontendError::Parse { loc: self.loc(), message: message.into() }
    }

    fn unsupported(&self, construct: impl Into<String>) -> FrontendError {
        FrontendError::Unsupported { loc: self.loc(), construct: construct.into() }
    }

    fn ident(&mut self) -> Result<&'t Token, FrontendError> {
        match self.peek() {
            Some(t) if t.kind == TokKind::Ident => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.error("expected an identifier")),
        }
    }

    fn texts(&self, from: usize, to: usize) -> Vec<String> {
        self.toks[from..to].iter().map(|t| t.text.to_string()).collect()
    }

    // ---- scopes ----

    fn is_typedef_name(&self, name: &str) -> bool {
        for s in self.scopes.iter().rev() {
            if let Some(&td) = s.get(name) {
                return td;
            }
        }
        false
    }

    fn declare(&mut self, name: &str, is_typedef: bool) {
        self.scopes.last_mut().unwrap().insert(name.to_string(), is_typedef);
    }

    fn push_scope(&mut self) {
        self.scopes.push(HashMap::new());
    }

    fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    fn is_type_start(&self, t: &Token) -> bool {
        if t.kind != TokKind::Ident {
            return false;
        }
        TYPE_SPEC_KEYWORDS.contains(&&*t.text)
            || QUALIFIERS.contains(&&*t.text)
            || STORAGE_KEYWORDS.contains(&&*t.text)
            || self.is_typedef_name(&t.text)
    }

    fn check_unsupported_keyword(&self) -> Result<(), FrontendError> {
        if let Some(t) = self.peek() {
            if t.kind == TokKind::Ident && UNSUPPORTED_KEYWORDS.contains(&&*t.text) {
                return Err(self.unsupported(format!("`{}`", t.text)));
            }
        }
        Ok(())
    }

    // ---- declarations ----

    fn external_decl(&mut self) -> Result<(), FrontendError> {
        if self.eat(";") {
            return Ok(());
        }
        self.check_unsupported_keyword()?;
        let start = self.pos;
        let specs = self.decl_specs()?;
        let spec_end = self.pos;
        if self.eat(";") {
            self.record_spec_site(&specs, None, specs.storage == Some(Storage::Typedef), None);
            self.tu.items.push(ExternalDecl::Decl(Declaration {
                loc: specs.loc.clone(),
                specs,
                declarators: Vec::new(),
            }));
            return Ok(());
        }
        let d_start = self.pos;
        self.pending_params.clear();
        let decl = self.declarator(false)?;
        let d_end = self.pos;
        let (name, nloc) = decl
            .name()
            .cloned()
            .ok_or_else(|| self.error("declaration without a name"))?;
        if self.at("{") {
            let Some((params, variadic)) = decl.function_params() else {
                return Err(self.error("function body after a non-function declarator"));
            };
            if variadic {
                return Err(FrontendError::Unsupported {
                    loc: nloc,
                    construct: "variadic function definition".into(),
                });
            }
            let params: Vec<Param> = params.to_vec();
            self.record_spec_site(&specs, Some(&name), false, Some((name.clone(), nloc.clone())));
            self.flush_params(Some((name.clone(), nloc.clone())));
            let ty = decl.apply(specs.base.clone());
            let mut text = self.texts(start, spec_end);
            text.extend(self.texts(d_start, d_end));
            self.declare(&name, false);
            self.push_scope();
            for p in &params {
                if let Some(n) = &p.name {
                    self.declare(n, false);
                }
            }
            let body = self.compound()?;
            self.pop_scope();
            self.tu.items.push(ExternalDecl::Function(FunctionDef {
                specs,
                name,
                ty,
                params,
                variadic,
                body,
                loc: nloc,
                text,
            }));
            return Ok(());
        }
        let decl = self.finish_declaration(specs, start, spec_end, d_start, decl)?;
        self.tu.items.push(ExternalDecl::Decl(decl));
        Ok(())
    }

    fn record_spec_site(
        &mut self,
        specs: &DeclSpecs,
        subject: Option<&str>,
        is_typedef: bool,
        signature_of: Option<(String, SourceLoc)>,
    ) {
        if specs.base_keywords.is_empty() {
            return;
        }
        self.tu.decl_sites.push(DeclSite {
            base_keywords: specs.base_keywords.clone(),
            loc: specs.loc.clone(),
            subject: subject.unwrap_or("").to_string(),
            is_typedef,
            signature_of,
        });
    }

    fn flush_params(&mut self, signature_of: Option<(String, SourceLoc)>) {
        for p in std::mem::take(&mut self.pending_params) {
            if p.keywords.is_empty() {
                continue;
            }
            self.tu.decl_sites.push(DeclSite {
                base_keywords: p.keywords,
                loc: p.loc,
                subject: p.subject,
                is_typedef: false,
                signature_of: signature_of.clone(),
            });
        }
    }

    /// Parse init-declarators after the first one and the closing `;`.
    fn finish_declaration(
        &mut self,
        specs: DeclSpecs,
        start: usize,
        spec_end: usize,
        mut d_start: usize,
        first: Declarator,
    ) -> Result<Declaration, FrontendError> {
        let is_typedef = specs.storage == Some(Storage::Typedef);
        let mut declarators = Vec::new();
        let mut decl = first;
        let mut first_site = true;
        loop {
            let d_end = self.pos;
            let (name, nloc) = decl
                .name()
                .cloned()
                .ok_or_else(|| self.error("declaration without a name"))?;
            let fn_params: Option<Vec<Option<String>>> =
                decl.function_params().map(|(ps, _)| ps.iter().map(|p| p.name.clone()).collect());
            let sig = fn_params.as_ref().map(|_| (name.clone(), nloc.clone()));
            if first_site {
                self.record_spec_site(&specs, Some(&name), is_typedef, sig.clone());
                first_site = false;
            }
            self.flush_params(sig);
            if self.block_depth > 0 {
                self.check_vla(&decl)?;
            }
            let ty = decl.apply(specs.base.clone());
            self.declare(&name, is_typedef);
            if is_typedef {
                self.tu.typedefs.push(TypedefInfo { name: name.clone(), ty: ty.clone(), loc: nloc.clone() });
            }
            let init = if self.eat("=") { Some(self.initializer()?) } else { None };
            let mut text = self.texts(start, spec_end);
            text.extend(self.texts(d_start, d_end));
            declarators.push(InitDeclarator {
                name,
                ty,
                init,
                loc: nloc,
                text,
                param_names: fn_params.unwrap_or_default(),
            });
            if self.eat(",") {
                d_start = self.pos;
                self.pending_params.clear();
                decl = self.declarator(false)?;
                continue;
            }
            self.expect(";")?;
            break;
        }
        Ok(Declaration { loc: specs.loc.clone(), specs, declarators })
    }

    fn check_vla(&self, d: &Declarator) -> Result<(), FrontendError> {
        for s in &d.suffixes {
            if let Suffix::Array(Some(e)) = s {
                if !self.is_constant(e) {
                    return Err(FrontendError::Unsupported {
                        loc: e.loc.clone(),
                        construct: "variable-length array".into(),
                    });
                }
            }
        }
        if let Some(n) = &d.nested {
            self.check_vla(n)?;
        }
        Ok(())
    }

    fn is_constant(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::IntLit(_) | ExprKind::CharLit(_) | ExprKind::SizeofType(_) | ExprKind::SizeofExpr(_) => true,
            ExprKind::Ident(n) => self.enum_consts.contains(n),
            ExprKind::Unary(op, a) => !matches!(op, UnOp::Deref | UnOp::AddrOf | UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec) && self.is_constant(a),
            ExprKind::Binary(_, a, b) => self.is_constant(a) && self.is_constant(b),
            ExprKind::Cond(a, b, c) => self.is_constant(a) && self.is_constant(b) && self.is_constant(c),
            ExprKind::Cast(_, a) => self.is_constant(a),
            _ => false,
        }
    }

    fn decl_specs(&mut self) -> Result<DeclSpecs, FrontendError> {
        let loc = self.loc();
        let mut storage = None;
        let mut inline = false;
        let mut keywords: Vec<String> = Vec::new();
        let mut base: Option<CType> = None;
        let mut saw_spec = false;
        loop {
            self.check_unsupported_keyword()?;
            let Some(t) = self.peek() else { break };
            if t.kind != TokKind::Ident {
                break;
            }
            let text = &*t.text;
            match text {
                "typedef" | "extern" | "static" | "auto" | "register" => {
                    if storage.is_some() {
                        return Err(self.error("multiple storage classes"));
                    }
                    storage = Some(match text {
                        "typedef" => Storage::Typedef,
                        "extern" => Storage::Extern,
                        "static" => Storage::Static,
                        "auto" => Storage::Auto,
                        _ => Storage::Register,
                    });
                    self.pos += 1;
                }
                "inline" => {
                    inline = true;
                    self.pos += 1;
                }
                "const" | "volatile" | "restrict" => self.pos += 1,
                "void" => {
                    base = Some(CType::Void);
                    saw_spec = true;
                    self.pos += 1;
                }
                "_Bool" => {
                    base = Some(CType::Bool);
                    saw_spec = true;
                    self.pos += 1;
                }
                "_Complex" => return Err(self.unsupported("`_Complex`")),
                "struct" | "union" => {
                    base = Some(self.aggregate()?);
                    saw_spec = true;
                }
                "enum" => {
                    base = Some(self.enumeration()?);
                    saw_spec = true;
                }
                _ if ARITH_KEYWORDS.contains(&text) => {
                    keywords.push(text.to_string());
                    saw_spec = true;
                    self.pos += 1;
                }
                _ if !saw_spec && self.is_typedef_name(text) => {
                    base = Some(CType::Named(text.to_string()));
                    saw_spec = true;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        if !saw_spec && storage.is_none() && !inline {
            return Err(self.error("expected a declaration"));
        }
        let base = match base {
            Some(b) => b,
            None if keywords.iter().any(|k| k == "float" || k == "double") => CType::Floating,
            None => CType::Integer,
        };
        Ok(DeclSpecs { storage, inline, base, base_keywords: keywords, loc })
    }

    fn aggregate(&mut self) -> Result<CType, FrontendError> {
        let kw = self.bump()?;
        let is_union = kw.is("union");
        let tag = if self.peek().is_some_and(|t| t.kind == TokKind::Ident) {
            self.bump()?.text.to_string()
        } else {
            self.anon += 1;
            format!("<anonymous#{}>", self.anon)
        };
        if self.eat("{") {
            let mut fields = Vec::new();
            while !self.eat("}") {
                let specs = self.decl_specs()?;
                if self.eat(";") {
                    // anonymous member struct/union
                    fields.push(Field { name: String::new(), ty: specs.base.clone(), loc: specs.loc.clone() });
                    continue;
                }
                let mut first = true;
                loop {
                    self.pending_params.clear();
                    let d = if self.at(":") {
                        Declarator { name: None, pointers: 0, nested: None, suffixes: Vec::new() }
                    } else {
                        self.declarator(false)?
                    };
                    let (name, floc) = d.name().cloned().unwrap_or_else(|| (String::new(), specs.loc.clone()));
                    if first {
                        self.record_spec_site(&specs, Some(&name), false, None);
                        first = false;
                    }
                    self.flush_params(None);
                    if self.eat(":") {
                        self.conditional()?;
                    }
                    fields.push(Field { name, ty: d.apply(specs.base.clone()), loc: floc });
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
            }
            self.tu.aggregates.push((tag.clone(), fields));
        }
        Ok(if is_union { CType::Union(tag) } else { CType::Struct(tag) })
    }

    fn enumeration(&mut self) -> Result<CType, FrontendError> {
        self.bump()?;
        let tag = if self.peek().is_some_and(|t| t.kind == TokKind::Ident) {
            self.bump()?.text.to_string()
        } else {
            self.anon += 1;
            format!("<anonymous#{}>", self.anon)
        };
        if self.eat("{") {
            while !self.eat("}") {
                let name = self.ident()?.text.to_string();
                if self.eat("=") {
                    self.conditional()?;
                }
                self.declare(&name, false);
                self.enum_consts.insert(name.clone());
                self.tu.enum_constants.push(name);
                if !self.eat(",") {
                    self.expect("}")?;
                    break;
                }
            }
        }
        Ok(CType::Enum(tag))
    }

    /// Parse a (possibly abstract) declarator.
    fn declarator(&mut self, allow_abstract: bool) -> Result<Declarator, FrontendError> {
        let mut pointers = 0;
        while self.eat("*") {
            pointers += 1;
            while let Some(t) = self.peek() {
                if QUALIFIERS.contains(&&*t.text) && t.kind == TokKind::Ident {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.check_unsupported_keyword()?;
        let mut d = Declarator { name: None, pointers, nested: None, suffixes: Vec::new() };
        if let Some(t) = self.peek().filter(|t| t.kind == TokKind::Ident && !self.is_type_start(t)) {
            self.pos += 1;
            d.name = Some((t.text.to_string(), t.loc()));
        } else if self.at("(") && self.nested_declarator_follows(allow_abstract) {
            self.pos += 1;
            d.nested = Some(Box::new(self.declarator(allow_abstract)?));
            self.expect(")")?;
        } else if !allow_abstract {
            return Err(self.error("expected a declarator"));
        }
        loop {
            if self.eat("[") {
                while self.peek().is_some_and(|t| QUALIFIERS.contains(&&*t.text) || t.is("static")) {
                    self.pos += 1;
                }
                let size = if self.at("]") {
                    None
                } else if self.at("*") && self.peek_at(1).is_some_and(|t| t.is("]")) {
                    return Err(self.unsupported("variable-length array"));
                } else {
                    Some(self.assignment()?)
                };
                self.expect("]")?;
                d.suffixes.push(Suffix::Array(size));
            } else if self.at("(") {
                self.pos += 1;
                let (params, variadic) = self.params()?;
                d.suffixes.push(Suffix::Func(params, variadic));
            } else {
                break;
            }
        }
        Ok(d)
    }

    fn nested_declarator_follows(&self, allow_abstract: bool) -> bool {
        let Some(next) = self.peek_at(1) else { return false };
        if !allow_abstract {
            return true;
        }
        next.is_punct("*") || next.is_punct("(") || next.is_punct("[")
            || (next.kind == TokKind::Ident && !self.is_type_start(next))
    }

    fn params(&mut self) -> Result<(Vec<Param>, bool), FrontendError> {
        let mut params = Vec::new();
        if self.eat(")") {
            return Ok((params, false));
        }
        if self.at("void") && self.peek_at(1).is_some_and(|t| t.is_punct(")")) {
            self.pos += 2;
            return Ok((params, false));
        }
        self.push_scope();
        let mut variadic = false;
        loop {
            if self.eat("...") {
                variadic = true;
                break;
            }
            let loc = self.loc();
            let specs = self.decl_specs()?;
            let d = self.declarator(true)?;
            let name = d.name().map(|n| n.0.clone());
            let ty = match d.apply(specs.base.clone()) {
                // parameters of array and function type adjust to pointers
                CType::Array(inner, _) => CType::Pointer(inner),
                f @ CType::Function { .. } => CType::pointer_to(f),
                t => t,
            };
            if let Some(n) = &name {
                self.declare(n, false);
            }
            self.pending_params.push(PendingParam {
                keywords: specs.base_keywords.clone(),
                loc: loc.clone(),
                subject: name.clone().unwrap_or_default(),
            });
            params.push(Param { name, ty, base_keywords: specs.base_keywords, loc });
            if !self.eat(",") {
                break;
            }
        }
        self.pop_scope();
        self.expect(")")?;
        Ok((params, variadic))
    }

    fn type_name(&mut self) -> Result<TypeName, FrontendError> {
        let loc = self.loc();
        let specs = self.decl_specs()?;
        if specs.storage.is_some() {
            return Err(self.error("storage class in type name"));
        }
        self.pending_params.clear();
        let d = self.declarator(true)?;
        self.pending_params.clear();
        Ok(TypeName { ty: d.apply(specs.base), base_keywords: specs.base_keywords, loc })
    }

    fn initializer(&mut self) -> Result<Initializer, FrontendError> {
        if !self.eat("{") {
            return Ok(Initializer::Expr(self.assignment()?));
        }
        let mut items = Vec::new();
        while !self.eat("}") {
            // designators are parsed and dropped
            let mut designated = false;
            loop {
                if self.eat(".") {
                    self.ident()?;
                    designated = true;
                } else if self.eat("[") {
                    self.conditional()?;
                    self.expect("]")?;
                    designated = true;
                } else {
                    break;
                }
            }
            if designated {
                self.expect("=")?;
            }
            items.push(self.initializer()?);
            if !self.eat(",") {
                self.expect("}")?;
                break;
            }
        }
        Ok(Initializer::List(items))
    }

    // ---- statements ----

    fn compound(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.expect("{")?.loc();
        self.push_scope();
        self.block_depth += 1;
        let mut items = Vec::new();
        while !self.eat("}") {
            if self.peek().is_none() {
                return Err(self.error("unterminated block"));
            }
            items.push(self.block_item()?);
        }
        self.block_depth -= 1;
        self.pop_scope();
        Ok(Stmt { kind: StmtKind::Compound(items), loc })
    }

    fn block_item(&mut self) -> Result<BlockItem, FrontendError> {
        self.check_unsupported_keyword()?;
        let is_decl = self.peek().is_some_and(|t| {
            self.is_type_start(t) && !self.peek_at(1).is_some_and(|n| n.is_punct(":"))
        });
        if is_decl {
            Ok(BlockItem::Decl(self.local_declaration()?))
        } else {
            Ok(BlockItem::Stmt(self.statement()?))
        }
    }

    fn local_declaration(&mut self) -> Result<Declaration, FrontendError> {
        let start = self.pos;
        let specs = self.decl_specs()?;
        let spec_end = self.pos;
        if self.eat(";") {
            self.record_spec_site(&specs, None, specs.storage == Some(Storage::Typedef), None);
            return Ok(Declaration { loc: specs.loc.clone(), specs, declarators: Vec::new() });
        }
        let d_start = self.pos;
        self.pending_params.clear();
        let first = self.declarator(false)?;
        self.finish_declaration(specs, start, spec_end, d_start, first)
    }

    fn statement(&mut self) -> Result<Stmt, FrontendError> {
        self.check_unsupported_keyword()?;
        let loc = self.loc();
        let t = self.peek().ok_or_else(|| self.error("expected a statement"))?;
        let kind = if t.kind == TokKind::Ident {
            match &*t.text {
                "if" => {
                    self.pos += 1;
                    self.expect("(")?;
                    let c = self.expression()?;
                    self.expect(")")?;
                    let then = self.statement()?;
                    let els = if self.eat("else") { Some(Box::new(self.statement()?)) } else { None };
                    StmtKind::If(c, Box::new(then), els)
                }
                "while" => {
                    self.pos += 1;
                    self.expect("(")?;
                    let c = self.expression()?;
                    self.expect(")")?;
                    StmtKind::While(c, Box::new(self.statement()?))
                }
                "do" => {
                    self.pos += 1;
                    let body = self.statement()?;
                    self.expect("while")?;
                    self.expect("(")?;
                    let c = self.expression()?;
                    self.expect(")")?;
                    self.expect(";")?;
                    StmtKind::DoWhile(Box::new(body), c)
                }
                "for" => {
                    self.pos += 1;
                    self.expect("(")?;
                    self.push_scope();
                    let init = if self.eat(";") {
                        None
                    } else if self.peek().is_some_and(|t| self.is_type_start(t)) {
                        Some(ForInit::Decl(self.local_declaration()?))
                    } else {
                        let e = self.expression()?;
                        self.expect(";")?;
                        Some(ForInit::Expr(e))
                    };
                    let cond = if self.at(";") { None } else { Some(self.expression()?) };
                    self.expect(";")?;
                    let step = if self.at(")") { None } else { Some(self.expression()?) };
                    self.expect(")")?;
                    let body = self.statement()?;
                    self.pop_scope();
                    StmtKind::For(init, cond, step, Box::new(body))
                }
                "switch" => {
                    self.pos += 1;
                    self.expect("(")?;
                    let c = self.expression()?;
                    self.expect(")")?;
                    StmtKind::Switch(c, Box::new(self.statement()?))
                }
                "case" => {
                    self.pos += 1;
                    let v = self.conditional()?;
                    self.expect(":")?;
                    StmtKind::Case(v, Box::new(self.statement()?))
                }
                "default" => {
                    self.pos += 1;
                    self.expect(":")?;
                    StmtKind::Default(Box::new(self.statement()?))
                }
                "break" => {
                    self.pos += 1;
                    self.expect(";")?;
                    StmtKind::Break
                }
                "continue" => {
                    self.pos += 1;
                    self.expect(";")?;
                    StmtKind::Continue
                }
                "return" => {
                    self.pos += 1;
                    let e = if self.at(";") { None } else { Some(self.expression()?) };
                    self.expect(";")?;
                    StmtKind::Return(e)
                }
                "goto" => return Err(self.unsupported("`goto`")),
                _ if self.peek_at(1).is_some_and(|n| n.is_punct(":")) => {
                    return Err(self.unsupported("statement label"))
                }
                _ => self.expression_statement()?,
            }
        } else if t.is_punct("{") {
            return self.compound();
        } else {
            self.expression_statement()?
        };
        Ok(Stmt { kind, loc })
    }

    fn expression_statement(&mut self) -> Result<StmtKind, FrontendError> {
        if self.eat(";") {
            return Ok(StmtKind::Expr(None));
        }
        let e = self.expression()?;
        self.expect(";")?;
        Ok(StmtKind::Expr(Some(e)))
    }

    // ---- expressions ----

    fn mk(&self, kind: ExprKind, tok: &Token) -> Expr {
        Expr {
            kind,
            loc: tok.loc(),
            macro_origin: tok.expanded_from.iter().map(|m| m.to_string()).collect(),
        }
    }

    fn expression(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.assignment()?;
        while self.at(",") {
            let t = self.bump()?;
            let rhs = self.assignment()?;
            let mut n = self.mk(ExprKind::Binary(BinOp::Comma, Box::new(e), Box::new(rhs)), t);
            n.macro_origin.clear();
            e = n;
        }
        Ok(e)
    }

    fn assignment(&mut self) -> Result<Expr, FrontendError> {
        let start = self.peek();
        let lhs = self.conditional()?;
        let Some(t) = self.peek() else { return Ok(lhs) };
        if t.kind != TokKind::Punct {
            return Ok(lhs);
        }
        let op = match &*t.text {
            "=" => None,
            "+=" => Some(BinOp::Add),
            "-=" => Some(BinOp::Sub),
            "*=" => Some(BinOp::Mul),
            "/=" => Some(BinOp::Div),
            "%=" => Some(BinOp::Rem),
            "<<=" => Some(BinOp::Shl),
            ">>=" => Some(BinOp::Shr),
            "&=" => Some(BinOp::BitAnd),
            "^=" => Some(BinOp::BitXor),
            "|=" => Some(BinOp::BitOr),
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.assignment()?;
        let mut e = self.mk(ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)), start.unwrap_or(t));
        e.loc = t.loc();
        Ok(e)
    }

    fn conditional(&mut self) -> Result<Expr, FrontendError> {
        let c = self.binary(0)?;
        if self.at("?") {
            let t = self.bump()?;
            let a = self.expression()?;
            self.expect(":")?;
            let b = self.conditional()?;
            let mut e = self.mk(ExprKind::Cond(Box::new(c), Box::new(a), Box::new(b)), t);
            e.macro_origin.clear();
            return Ok(e);
        }
        Ok(c)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.cast()?;
        loop {
            let Some(t) = self.peek() else { break };
            if t.kind != TokKind::Punct {
                break;
            }
            let (prec, op) = match &*t.text {
                "||" => (1, BinOp::LogOr),
                "&&" => (2, BinOp::LogAnd),
                "|" => (3, BinOp::BitOr),
                "^" => (4, BinOp::BitXor),
                "&" => (5, BinOp::BitAnd),
                "==" => (6, BinOp::Eq),
                "!=" => (6, BinOp::Ne),
                "<" => (7, BinOp::Lt),
                ">" => (7, BinOp::Gt),
                "<=" => (7, BinOp::Le),
                ">=" => (7, BinOp::Ge),
                "<<" => (8, BinOp::Shl),
                ">>" => (8, BinOp::Shr),
                "+" => (9, BinOp::Add),
                "-" => (9, BinOp::Sub),
                "*" => (10, BinOp::Mul),
                "/" => (10, BinOp::Div),
                "%" => (10, BinOp::Rem),
                _ => break,
            };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            let mut e = self.mk(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), t);
            e.macro_origin.clear();
            lhs = e;
        }
        Ok(lhs)
    }

    fn cast(&mut self) -> Result<Expr, FrontendError> {
        if self.at("(") && self.peek_at(1).is_some_and(|t| self.is_type_start(t)) {
            let open = self.bump()?;
            let tn = self.type_name()?;
            self.expect(")")?;
            if self.at("{") {
                return Err(self.unsupported("compound literal"));
            }
            let operand = self.cast()?;
            return Ok(self.mk(ExprKind::Cast(tn, Box::new(operand)), open));
        }
        self.unary()
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let t = self.peek().ok_or_else(|| self.error("expected an expression"))?;
        let op = match (&*t.text, t.kind) {
            ("-", TokKind::Punct) => Some(UnOp::Neg),
            ("+", TokKind::Punct) => Some(UnOp::Plus),
            ("!", TokKind::Punct) => Some(UnOp::Not),
            ("~", TokKind::Punct) => Some(UnOp::BitNot),
            ("*", TokKind::Punct) => Some(UnOp::Deref),
            ("&", TokKind::Punct) => Some(UnOp::AddrOf),
            ("++", TokKind::Punct) => Some(UnOp::PreInc),
            ("--", TokKind::Punct) => Some(UnOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = if matches!(op, UnOp::PreInc | UnOp::PreDec) { self.unary()? } else { self.cast()? };
            return Ok(self.mk(ExprKind::Unary(op, Box::new(operand)), t));
        }
        if t.is("sizeof") && t.kind == TokKind::Ident {
            self.pos += 1;
            if self.at("(") && self.peek_at(1).is_some_and(|n| self.is_type_start(n)) {
                self.pos += 1;
                let tn = self.type_name()?;
                self.expect(")")?;
                return Ok(self.mk(ExprKind::SizeofType(tn), t));
            }
            let operand = self.unary()?;
            return Ok(self.mk(ExprKind::SizeofExpr(Box::new(operand)), t));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.primary()?;
        loop {
            let Some(t) = self.peek() else { break };
            if t.kind != TokKind::Punct {
                break;
            }
            match &*t.text {
                "(" => {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        loop {
                            args.push(self.assignment()?);
                            if self.eat(")") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                    let loc = e.loc.clone();
                    e = Expr { kind: ExprKind::Call(Box::new(e), args), loc, macro_origin: Vec::new() };
                }
                "[" => {
                    self.pos += 1;
                    let idx = self.expression()?;
                    self.expect("]")?;
                    let loc = e.loc.clone();
                    e = Expr { kind: ExprKind::Index(Box::new(e), Box::new(idx)), loc, macro_origin: Vec::new() };
                }
                "." | "->" => {
                    self.pos += 1;
                    let field = self.ident()?.text.to_string();
                    let loc = e.loc.clone();
                    e = Expr {
                        kind: ExprKind::Member(Box::new(e), field, t.is("->")),
                        loc,
                        macro_origin: Vec::new(),
                    };
                }
                "++" | "--" => {
                    self.pos += 1;
                    let op = if t.is("++") { UnOp::PostInc } else { UnOp::PostDec };
                    let loc = t.loc();
                    e = Expr { kind: ExprKind::Unary(op, Box::new(e)), loc, macro_origin: Vec::new() };
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        self.check_unsupported_keyword()?;
        let t = self.bump()?;
        let kind = match t.kind {
            TokKind::Ident => {
                if self.is_typedef_name(&t.text) || TYPE_SPEC_KEYWORDS.contains(&&*t.text) {
                    self.pos -= 1;
                    return Err(self.error(format!("unexpected type name `{}` in expression", t.text)));
                }
                ExprKind::Ident(t.text.to_string())
            }
            TokKind::Int => ExprKind::IntLit(t.text.to_string()),
            TokKind::Float => ExprKind::FloatLit(t.text.to_string()),
            TokKind::Char => ExprKind::CharLit(t.text.to_string()),
            TokKind::Str => {
                let mut s = t.text.to_string();
                while self.peek().is_some_and(|n| n.kind == TokKind::Str) {
                    s.push_str(&self.bump()?.text);
                }
                ExprKind::StrLit(s)
            }
            TokKind::Punct if t.is("(") => {
                let mut inner = self.expression()?;
                self.expect(")")?;
                // parenthesized expressions keep the origin of their opening token
                // when it came from a macro, e.g. `NULL` -> `((void*)0)`
                if !t.expanded_from.is_empty() {
                    inner.macro_origin = t.expanded_from.iter().map(|m| m.to_string()).collect();
                }
                return Ok(inner);
            }
            _ => {
                self.pos -= 1;
                return Err(self.error(format!("unexpected `{}`", t.text)));
            }
        };
        Ok(self.mk(kind, t))
    }
}
