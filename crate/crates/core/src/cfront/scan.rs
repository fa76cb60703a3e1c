//! Surface scans over the AST: call sites and flagged constructs
//! (function pointers, pointer arithmetic, pointer casts, pointer literals, `extern`).

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ast::*;
use crate::source::SourceLoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructKind {
    FunctionPointer,
    PointerArithmetic,
    PointerCast,
    PointerLiteral,
    Extern,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructFlag {
    pub kind: ConstructKind,
    pub loc: SourceLoc,
    pub subject: String,
    pub detail: String,
    /// Macros the flagged expression was expanded from.
    pub macro_origin: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub caller: String,
    /// The called identifier, or `<indirect>` for calls through an expression.
    pub callee: String,
    pub args_arity: usize,
    pub loc: SourceLoc,
    pub via_pointer: bool,
}

/// File-scope names visible to the scan.
#[derive(Default)]
pub struct TypeEnv {
    pub typedefs: HashMap<String, CType>,
    pub aggregates: HashMap<String, Vec<Field>>,
    pub variables: HashMap<String, CType>,
    pub functions: HashMap<String, CType>,
    pub enum_constants: HashSet<String>,
}

impl TypeEnv {
    pub fn add_unit(&mut self, tu: &TranslationUnit) {
        for t in &tu.typedefs {
            self.typedefs.entry(t.name.clone()).or_insert_with(|| t.ty.clone());
        }
        for (tag, fields) in &tu.aggregates {
            if !fields.is_empty() || !self.aggregates.contains_key(tag) {
                self.aggregates.insert(tag.clone(), fields.clone());
            }
        }
        self.enum_constants.extend(tu.enum_constants.iter().cloned());
        for item in &tu.items {
            match item {
                ExternalDecl::Function(f) => {
                    self.functions.insert(f.name.clone(), f.ty.clone());
                }
                ExternalDecl::Decl(d) => {
                    if d.specs.storage == Some(Storage::Typedef) {
                        continue;
                    }
                    for id in &d.declarators {
                        if matches!(id.ty, CType::Function { .. }) {
                            self.functions.entry(id.name.clone()).or_insert_with(|| id.ty.clone());
                        } else {
                            self.variables.insert(id.name.clone(), id.ty.clone());
                        }
                    }
                }
            }
        }
    }

    /// Chase typedef names at the top level.
    pub fn resolve(&self, t: &CType) -> CType {
        let mut t = t.clone();
        for _ in 0..64 {
            match &t {
                CType::Named(n) => match self.typedefs.get(n) {
                    Some(u) => t = u.clone(),
                    None => return CType::Unknown,
                },
                _ => return t,
            }
        }
        CType::Unknown
    }

    /// True when the type mentions a pointer to a function anywhere, through typedefs.
    pub fn mentions_function_pointer(&self, t: &CType) -> bool {
        self.fp_rec(t, 0)
    }

    fn fp_rec(&self, t: &CType, depth: usize) -> bool {
        if depth > 64 {
            return false;
        }
        match t {
            CType::Pointer(inner) => {
                matches!(self.resolve(inner), CType::Function { .. }) || self.fp_rec(inner, depth + 1)
            }
            CType::Named(n) => self.typedefs.get(n).is_some_and(|u| self.fp_rec(u, depth + 1)),
            CType::Array(inner, _) => self.fp_rec(inner, depth + 1),
            CType::Function { ret, params, .. } => {
                self.fp_rec(ret, depth + 1) || params.iter().any(|p| self.fp_rec(p, depth + 1))
            }
            _ => false,
        }
    }

    fn is_pointer(&self, t: &CType) -> bool {
        matches!(self.resolve(t), CType::Pointer(_))
    }

    fn is_pointerish(&self, t: &CType) -> bool {
        matches!(self.resolve(t), CType::Pointer(_) | CType::Array(..))
    }

    fn element(&self, t: &CType) -> Option<CType> {
        match self.resolve(t) {
            CType::Pointer(inner) | CType::Array(inner, _) => Some(*inner),
            _ => None,
        }
    }

    fn field(&self, t: &CType, name: &str) -> Option<CType> {
        let tag = match self.resolve(t) {
            CType::Struct(tag) | CType::Union(tag) => tag,
            _ => return None,
        };
        let fields = self.aggregates.get(&tag)?;
        for f in fields {
            if f.name == name {
                return Some(f.ty.clone());
            }
            if f.name.is_empty() {
                if let Some(t) = self.field(&f.ty, name) {
                    return Some(t);
                }
            }
        }
        None
    }
}

/// Collects flags and calls for code located in module files.
pub struct Scanner<'a> {
    pub env: &'a TypeEnv,
    pub flags: Vec<ConstructFlag>,
    pub calls: Vec<CallSite>,
    scopes: Vec<HashMap<String, CType>>,
    caller: String,
    ret: CType,
}

impl<'a> Scanner<'a> {
    pub fn new(env: &'a TypeEnv) -> Self {
        Scanner { env, flags: Vec::new(), calls: Vec::new(), scopes: Vec::new(), caller: String::new(), ret: CType::Void }
    }

    fn flag(&mut self, kind: ConstructKind, loc: &SourceLoc, subject: &str, detail: impl Into<String>, origin: &[String]) {
        self.flags.push(ConstructFlag {
            kind,
            loc: loc.clone(),
            subject: subject.to_string(),
            detail: detail.into(),
            macro_origin: origin.to_vec(),
        });
    }

    fn lookup(&self, name: &str) -> Option<CType> {
        for s in self.scopes.iter().rev() {
            if let Some(t) = s.get(name) {
                return Some(t.clone());
            }
        }
        None
    }

    fn is_local(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains_key(name))
    }

    /// Scan a declaration at file or block scope.
    pub fn declaration(&mut self, d: &Declaration) {
        let is_typedef = d.specs.storage == Some(Storage::Typedef);
        for id in &d.declarators {
            if d.specs.storage == Some(Storage::Extern) {
                self.flag(ConstructKind::Extern, &d.specs.loc, &id.name, format!("extern declaration of {}", id.name), &[]);
            }
            let fp_type = match &id.ty {
                CType::Function { ret, params, .. } => {
                    self.env.mentions_function_pointer(ret) || params.iter().any(|p| self.env.mentions_function_pointer(p))
                }
                t => self.env.mentions_function_pointer(t),
            };
            if fp_type {
                let what = if is_typedef { "typedef" } else { "declaration" };
                self.flag(ConstructKind::FunctionPointer, &id.loc, &id.name, format!("function pointer in {what} of {}", id.name), &[]);
            }
            if !is_typedef && !matches!(id.ty, CType::Function { .. }) {
                if let Some(init) = &id.init {
                    self.initializer(init, &id.ty);
                }
                if let Some(s) = self.scopes.last_mut() {
                    s.insert(id.name.clone(), id.ty.clone());
                }
            }
        }
    }

    /// Flag struct and union members of function-pointer type.
    pub fn fields(&mut self, fields: &[Field]) {
        for f in fields {
            if self.env.mentions_function_pointer(&f.ty) {
                self.flag(ConstructKind::FunctionPointer, &f.loc, &f.name, format!("function pointer member {}", f.name), &[]);
            }
        }
    }

    fn initializer(&mut self, init: &Initializer, target: &CType) {
        match init {
            Initializer::Expr(e) => {
                self.expr(e);
                self.pointer_context(e, target, "initializer");
            }
            Initializer::List(items) => {
                let elem = self.env.element(target);
                for i in items {
                    match &elem {
                        Some(t) => self.initializer(i, t),
                        None => self.initializer(i, &CType::Unknown),
                    }
                }
            }
        }
    }

    /// Flag an integer constant flowing into a pointer-typed destination.
    fn pointer_context(&mut self, e: &Expr, target: &CType, what: &str) {
        if self.env.is_pointer(target) && e.is_integer_constant() {
            self.flag(ConstructKind::PointerLiteral, &e.loc, "", format!("integer constant used as pointer in {what}"), &e.macro_origin);
        }
    }

    pub fn function(&mut self, f: &FunctionDef) {
        self.caller = f.name.clone();
        self.ret = f.return_type().clone();
        if f.specs.storage == Some(Storage::Extern) {
            self.flag(ConstructKind::Extern, &f.specs.loc, &f.name, format!("extern definition of {}", f.name), &[]);
        }
        let fp = match &f.ty {
            CType::Function { ret, params, .. } => {
                self.env.mentions_function_pointer(ret) || params.iter().any(|p| self.env.mentions_function_pointer(p))
            }
            _ => false,
        };
        if fp {
            self.flag(ConstructKind::FunctionPointer, &f.loc, &f.name, format!("function pointer in signature of {}", f.name), &[]);
        }
        let params = f.params.iter().filter_map(|p| p.name.clone().map(|n| (n, p.ty.clone()))).collect();
        self.scopes = vec![params];
        self.stmt(&f.body);
        self.scopes.clear();
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Compound(items) => {
                self.scopes.push(HashMap::new());
                for item in items {
                    match item {
                        BlockItem::Decl(d) => self.declaration(d),
                        BlockItem::Stmt(s) => self.stmt(s),
                    }
                }
                self.scopes.pop();
            }
            StmtKind::Expr(e) => {
                if let Some(e) = e {
                    self.expr(e);
                }
            }
            StmtKind::If(c, a, b) => {
                self.expr(c);
                self.stmt(a);
                if let Some(b) = b {
                    self.stmt(b);
                }
            }
            StmtKind::While(c, body) | StmtKind::DoWhile(body, c) | StmtKind::Switch(c, body) => {
                self.expr(c);
                self.stmt(body);
            }
            StmtKind::For(init, c, step, body) => {
                self.scopes.push(HashMap::new());
                match init {
                    Some(ForInit::Decl(d)) => self.declaration(d),
                    Some(ForInit::Expr(e)) => {
                        self.expr(e);
                    }
                    None => {}
                }
                for e in [c, step].into_iter().flatten() {
                    self.expr(e);
                }
                self.stmt(body);
                self.scopes.pop();
            }
            StmtKind::Case(_, body) | StmtKind::Default(body) => self.stmt(body),
            StmtKind::Break | StmtKind::Continue => {}
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                    let ret = self.ret.clone();
                    self.pointer_context(e, &ret, "return");
                }
            }
        }
    }

    /// Scan an expression and return its type when known.
    fn expr(&mut self, e: &Expr) -> CType {
        self.expr_in(e, false)
    }

    fn expr_in(&mut self, e: &Expr, callee_pos: bool) -> CType {
        match &e.kind {
            ExprKind::Ident(n) => {
                if let Some(t) = self.lookup(n) {
                    return t;
                }
                if let Some(t) = self.env.variables.get(n) {
                    return t.clone();
                }
                if let Some(t) = self.env.functions.get(n) {
                    if !callee_pos {
                        self.flag(ConstructKind::FunctionPointer, &e.loc, n, format!("function {n} used as a value"), &[]);
                    }
                    return t.clone();
                }
                if self.env.enum_constants.contains(n) {
                    return CType::Integer;
                }
                CType::Unknown
            }
            ExprKind::IntLit(_) | ExprKind::CharLit(_) => CType::Integer,
            ExprKind::FloatLit(_) => CType::Floating,
            ExprKind::StrLit(_) => CType::Array(Box::new(CType::Integer), None),
            ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_) => CType::Integer,
            ExprKind::Unary(op, inner) => {
                let t = self.expr(inner);
                match op {
                    UnOp::Deref => self.env.element(&t).unwrap_or(CType::Unknown),
                    UnOp::AddrOf => CType::pointer_to(t),
                    UnOp::Not => CType::Integer,
                    UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec => {
                        if self.env.is_pointerish(&t) {
                            self.flag(ConstructKind::PointerArithmetic, &e.loc, "", "increment or decrement of a pointer", &e.macro_origin);
                        }
                        t
                    }
                    _ => t,
                }
            }
            ExprKind::Binary(op, a, b) => {
                let ta = self.expr(a);
                let tb = self.expr(b);
                match op {
                    BinOp::Add | BinOp::Sub => {
                        let pa = self.env.is_pointerish(&ta);
                        let pb = self.env.is_pointerish(&tb);
                        if pa || pb {
                            self.flag(ConstructKind::PointerArithmetic, &e.loc, "", "arithmetic on a pointer operand", &e.macro_origin);
                        }
                        match (pa, pb) {
                            (true, true) => CType::Integer,
                            (true, false) => self.env.element(&ta).map(CType::pointer_to).unwrap_or(CType::Unknown),
                            (false, true) => self.env.element(&tb).map(CType::pointer_to).unwrap_or(CType::Unknown),
                            _ => arith(&self.env.resolve(&ta), &self.env.resolve(&tb)),
                        }
                    }
                    BinOp::Mul | BinOp::Div => arith(&self.env.resolve(&ta), &self.env.resolve(&tb)),
                    BinOp::Comma => tb,
                    _ => CType::Integer,
                }
            }
            ExprKind::Assign(op, lhs, rhs) => {
                let tl = self.expr(lhs);
                self.expr(rhs);
                match op {
                    None => self.pointer_context(rhs, &tl, "assignment"),
                    Some(BinOp::Add | BinOp::Sub) if self.env.is_pointerish(&tl) => {
                        self.flag(ConstructKind::PointerArithmetic, &e.loc, "", "compound assignment on a pointer", &e.macro_origin);
                    }
                    _ => {}
                }
                tl
            }
            ExprKind::Cond(c, a, b) => {
                self.expr(c);
                let ta = self.expr(a);
                let tb = self.expr(b);
                if matches!(ta, CType::Unknown) {
                    tb
                } else {
                    ta
                }
            }
            ExprKind::Call(callee, args) => {
                let direct = match &callee.kind {
                    ExprKind::Ident(n) if !self.is_local(n) && !self.env.variables.contains_key(n) => Some(n.clone()),
                    _ => None,
                };
                let ft = match &direct {
                    Some(n) => self.env.functions.get(n).cloned().unwrap_or(CType::Unknown),
                    None => {
                        let t = self.expr_in(callee, true);
                        self.flag(ConstructKind::FunctionPointer, &e.loc, "", "call through a function pointer", &[]);
                        t
                    }
                };
                let ft = match self.env.resolve(&ft) {
                    CType::Pointer(inner) => self.env.resolve(&inner),
                    t => t,
                };
                let (ret, params) = match ft {
                    CType::Function { ret, params, .. } => (*ret, params),
                    _ => (CType::Unknown, Vec::new()),
                };
                for (i, a) in args.iter().enumerate() {
                    self.expr(a);
                    if let Some(p) = params.get(i) {
                        self.pointer_context(a, p, "argument");
                    }
                }
                self.calls.push(CallSite {
                    caller: self.caller.clone(),
                    callee: direct.clone().unwrap_or_else(|| "<indirect>".into()),
                    args_arity: args.len(),
                    loc: e.loc.clone(),
                    via_pointer: direct.is_none(),
                });
                ret
            }
            ExprKind::Index(base, idx) => {
                let tb = self.expr(base);
                self.expr(idx);
                if self.env.is_pointer(&tb) {
                    self.flag(ConstructKind::PointerArithmetic, &e.loc, "", "indexing through a pointer", &e.macro_origin);
                }
                self.env.element(&tb).unwrap_or(CType::Unknown)
            }
            ExprKind::Member(base, field, arrow) => {
                let tb = self.expr(base);
                let agg = if *arrow { self.env.element(&tb).unwrap_or(CType::Unknown) } else { tb };
                self.env.field(&agg, field).unwrap_or(CType::Unknown)
            }
            ExprKind::Cast(tn, inner) => {
                let from = self.expr(inner);
                let to_ptr = self.env.is_pointer(&tn.ty);
                if to_ptr || self.env.is_pointerish(&from) || matches!(self.env.resolve(&from), CType::Function { .. }) {
                    self.flag(ConstructKind::PointerCast, &e.loc, "", "explicit cast to or from a pointer type", &e.macro_origin);
                }
                if to_ptr && inner.is_integer_constant() {
                    self.flag(ConstructKind::PointerLiteral, &e.loc, "", "integer constant cast to a pointer", &e.macro_origin);
                }
                if self.env.mentions_function_pointer(&tn.ty) {
                    self.flag(ConstructKind::FunctionPointer, &e.loc, "", "cast to a function pointer type", &[]);
                }
                tn.ty.clone()
            }
        }
    }
}

fn arith(a: &CType, b: &CType) -> CType {
    if matches!(a, CType::Floating) || matches!(b, CType::Floating) {
        CType::Floating
    } else if matches!(a, CType::Unknown) && matches!(b, CType::Unknown) {
        CType::Unknown
    } else {
        CType::Integer
    }
}
