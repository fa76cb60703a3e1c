//! The semantic model of one module: a `.h`/`.c` pair.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::cfg::{build_cfg, Cfg, CfgContext};
use super::parser::parse_translation_unit;
use super::preprocess::{preprocess, IncludeRecord, PreprocessConfig};
use super::scan::{Scanner, TypeEnv};
use super::FrontendError;
use crate::sig::{join_tokens, signature_from_tokens, CTypeText, FunSignature, TypeTextKind};
use crate::source::SourceLoc;

pub use super::scan::{CallSite, ConstructFlag, ConstructKind};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclaredIn {
    ModuleHeader,
    ModuleSource,
    External(PathBuf),
}

impl DeclaredIn {
    pub fn is_module(&self) -> bool {
        !matches!(self, DeclaredIn::External(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalVar {
    pub name: String,
    pub type_text: CTypeText,
    pub is_static: bool,
    /// `extern` declaration without a definition in this module.
    pub is_extern: bool,
    pub has_initializer: bool,
    pub is_array: bool,
    pub declared_in: DeclaredIn,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunDeclSite {
    pub signature: FunSignature,
    pub is_static: bool,
    pub is_extern_kw: bool,
    pub declared_in: DeclaredIn,
    pub is_definition: bool,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderDefKind {
    FunctionDefinition,
    Initialization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderDef {
    pub kind: HeaderDefKind,
    pub subject: String,
    pub loc: SourceLoc,
}

/// A defined function of the module.
#[derive(Debug, Clone)]
pub struct FunctionBody {
    pub name: String,
    /// Static by its own specifier or by an earlier static declaration.
    pub is_static: bool,
    pub defined_in: DeclaredIn,
    pub loc: SourceLoc,
    pub def: FunctionDef,
    pub cfg: Cfg,
}

#[derive(Debug, Clone)]
pub struct CModule {
    pub name: String,
    pub header_path: PathBuf,
    pub source_path: PathBuf,
    pub includes: Vec<IncludeRecord>,
    pub typedefs: Vec<(String, CTypeText)>,
    pub globals: Vec<GlobalVar>,
    pub decls: Vec<FunDeclSite>,
    pub defs: BTreeMap<String, FunctionBody>,
    pub calls: Vec<CallSite>,
    pub construct_flags: Vec<ConstructFlag>,
    pub header_defs: Vec<HeaderDef>,
    /// Declaration-specifier sites in module files, for the typedef-usage rule.
    pub decl_sites: Vec<DeclSite>,
}

impl CModule {
    /// File-scope variables the module owns (defined here, not `extern`).
    pub fn owned_globals(&self) -> impl Iterator<Item = &GlobalVar> {
        self.globals.iter().filter(|g| !g.is_extern)
    }

    pub fn global(&self, name: &str) -> Option<&GlobalVar> {
        self.owned_globals().find(|g| g.name == name)
    }

    pub fn decls_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a FunDeclSite> + 'a {
        self.decls.iter().filter(move |d| d.signature.name == name)
    }

    pub fn is_module_file(&self, loc: &SourceLoc) -> bool {
        same_file(&loc.file, &self.header_path) || same_file(&loc.file, &self.source_path)
    }

    /// Direct callees of `f` that are defined in this module.
    pub fn local_callees(&self, f: &str) -> BTreeSet<&str> {
        self.calls
            .iter()
            .filter(|c| c.caller == f && !c.via_pointer && self.defs.contains_key(&c.callee))
            .map(|c| c.callee.as_str())
            .collect()
    }

    /// Defined functions ordered so that callees come before callers.
    pub fn bottom_up(&self) -> Vec<&str> {
        let mut order = Vec::new();
        let mut state: HashMap<&str, bool> = HashMap::new();
        fn visit<'m>(m: &'m CModule, f: &'m str, state: &mut HashMap<&'m str, bool>, order: &mut Vec<&'m str>) {
            if state.contains_key(f) {
                return;
            }
            state.insert(f, false);
            for c in m.local_callees(f) {
                visit(m, c, state, order);
            }
            state.insert(f, true);
            order.push(f);
        }
        for f in self.defs.keys() {
            visit(self, f, &mut state, &mut order);
        }
        order
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    if a == b {
        return true;
    }
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

struct FileClass {
    header: PathBuf,
    source: PathBuf,
    cache: HashMap<PathBuf, Option<bool>>,
}

impl FileClass {
    /// Some(true) for the module header, Some(false) for the module source, None otherwise.
    fn classify(&mut self, file: &Path) -> Option<bool> {
        if let Some(c) = self.cache.get(file) {
            return *c;
        }
        let c = if same_file(file, &self.header) {
            Some(true)
        } else if same_file(file, &self.source) {
            Some(false)
        } else {
            None
        };
        self.cache.insert(file.to_path_buf(), c);
        c
    }

    fn declared_in(&mut self, loc: &SourceLoc) -> DeclaredIn {
        match self.classify(&loc.file) {
            Some(true) => DeclaredIn::ModuleHeader,
            Some(false) => DeclaredIn::ModuleSource,
            None => DeclaredIn::External(loc.file.clone()),
        }
    }
}

fn signature_of(text: &[String], name: &str) -> FunSignature {
    match signature_from_tokens(text) {
        Ok(sig) if sig.name == name => sig,
        _ => FunSignature {
            name: name.to_string(),
            return_type: CTypeText { text: join_tokens(text), kind: TypeTextKind::ReturnType },
            params: Vec::new(),
        },
    }
}

fn strip_storage(text: &[String]) -> Vec<String> {
    text.iter()
        .filter(|t| !matches!(t.as_str(), "static" | "extern" | "typedef" | "inline" | "register" | "auto"))
        .cloned()
        .collect()
}

/// Parse a module from its header and source file.
pub fn parse_module(h_path: &Path, c_path: &Path, cfg: &PreprocessConfig) -> Result<CModule, FrontendError> {
    let header_pp = preprocess(h_path, cfg)?;
    let source_pp = preprocess(c_path, cfg)?;
    let header_tu = parse_translation_unit(&header_pp.tokens)?;
    let source_tu = parse_translation_unit(&source_pp.tokens)?;

    let mut fc = FileClass { header: h_path.to_path_buf(), source: c_path.to_path_buf(), cache: HashMap::new() };
    let name = c_path.file_stem().and_then(|s| s.to_str()).unwrap_or("module").to_string();

    let mut env = TypeEnv::default();
    env.add_unit(&source_tu);
    env.add_unit(&header_tu);

    // Module header items come from the header's own unit; module source items
    // from the source unit; external declarations from both.
    let mut items: Vec<(&ExternalDecl, DeclaredIn)> = Vec::new();
    let mut seen_external: HashSet<(String, SourceLoc)> = HashSet::new();
    for (tu, own) in [(&header_tu, true), (&source_tu, false)] {
        for item in &tu.items {
            let loc = match item {
                ExternalDecl::Decl(d) => &d.loc,
                ExternalDecl::Function(f) => &f.loc,
            };
            let class = fc.declared_in(loc);
            let keep = match &class {
                DeclaredIn::ModuleHeader => own,
                DeclaredIn::ModuleSource => !own,
                DeclaredIn::External(_) => {
                    let key = match item {
                        ExternalDecl::Decl(d) => (d.declarators.first().map(|x| x.name.clone()).unwrap_or_default(), loc.clone()),
                        ExternalDecl::Function(f) => (f.name.clone(), loc.clone()),
                    };
                    seen_external.insert(key)
                }
            };
            if keep {
                items.push((item, class));
            }
        }
    }

    let mut m = CModule {
        name,
        header_path: h_path.to_path_buf(),
        source_path: c_path.to_path_buf(),
        includes: Vec::new(),
        typedefs: Vec::new(),
        globals: Vec::new(),
        decls: Vec::new(),
        defs: BTreeMap::new(),
        calls: Vec::new(),
        construct_flags: Vec::new(),
        header_defs: Vec::new(),
        decl_sites: Vec::new(),
    };

    for rec in header_pp.includes.iter().chain(&source_pp.includes) {
        if fc.classify(&rec.loc.file).is_some() && !m.includes.contains(rec) {
            m.includes.push(rec.clone());
        }
    }
    for tu in [&header_tu, &source_tu] {
        for site in &tu.decl_sites {
            if fc.classify(&site.loc.file).is_some() && !m.decl_sites.contains(site) {
                m.decl_sites.push(site.clone());
            }
        }
    }

    // Functions declared static anywhere in the source unit keep internal linkage.
    let mut static_in_source: HashSet<String> = HashSet::new();
    for item in &source_tu.items {
        match item {
            ExternalDecl::Decl(d) if d.specs.storage == Some(Storage::Static) => {
                for id in &d.declarators {
                    if matches!(id.ty, CType::Function { .. }) {
                        static_in_source.insert(id.name.clone());
                    }
                }
            }
            _ => {}
        }
    }

    let mut scanner = Scanner::new(&env);
    let mut fn_defs: Vec<(FunctionDef, DeclaredIn)> = Vec::new();
    for (item, class) in &items {
        let module = class.is_module();
        match item {
            ExternalDecl::Function(f) => {
                let is_static = f.specs.storage == Some(Storage::Static);
                m.decls.push(FunDeclSite {
                    signature: signature_of(&strip_storage(&f.text), &f.name),
                    is_static,
                    is_extern_kw: f.specs.storage == Some(Storage::Extern),
                    declared_in: class.clone(),
                    is_definition: true,
                    loc: f.loc.clone(),
                });
                if module {
                    if *class == DeclaredIn::ModuleHeader {
                        m.header_defs.push(HeaderDef {
                            kind: HeaderDefKind::FunctionDefinition,
                            subject: f.name.clone(),
                            loc: f.loc.clone(),
                        });
                    }
                    fn_defs.push(((*f).clone(), class.clone()));
                }
            }
            ExternalDecl::Decl(d) => {
                let storage = d.specs.storage;
                if module {
                    scanner.declaration(d);
                }
                for id in &d.declarators {
                    if storage == Some(Storage::Typedef) {
                        if module {
                            let text: Vec<String> = strip_storage(&id.text).into_iter().filter(|t| *t != id.name).collect();
                            m.typedefs.push((id.name.clone(), CTypeText::from_tokens(&text, TypeTextKind::ParameterType)));
                        }
                        continue;
                    }
                    if matches!(id.ty, CType::Function { .. }) {
                        m.decls.push(FunDeclSite {
                            signature: signature_of(&strip_storage(&id.text), &id.name),
                            is_static: storage == Some(Storage::Static),
                            is_extern_kw: storage == Some(Storage::Extern),
                            declared_in: class.clone(),
                            is_definition: false,
                            loc: id.loc.clone(),
                        });
                        continue;
                    }
                    if !module {
                        continue;
                    }
                    if *class == DeclaredIn::ModuleHeader && id.init.is_some() {
                        m.header_defs.push(HeaderDef {
                            kind: HeaderDefKind::Initialization,
                            subject: id.name.clone(),
                            loc: id.loc.clone(),
                        });
                    }
                    let type_tokens: Vec<String> =
                        strip_storage(&id.text).into_iter().filter(|t| *t != id.name).collect();
                    let var = GlobalVar {
                        name: id.name.clone(),
                        type_text: CTypeText::from_tokens(&type_tokens, TypeTextKind::ParameterType),
                        is_static: storage == Some(Storage::Static),
                        is_extern: storage == Some(Storage::Extern) && id.init.is_none(),
                        has_initializer: id.init.is_some(),
                        is_array: matches!(env.resolve(&id.ty), CType::Array(..)),
                        declared_in: class.clone(),
                        loc: id.loc.clone(),
                    };
                    // repeated tentative definitions merge into one variable
                    if let Some(prev) = m.globals.iter_mut().find(|g| g.name == var.name && g.is_extern == var.is_extern && g.declared_in == var.declared_in) {
                        prev.has_initializer |= var.has_initializer;
                        prev.is_static |= var.is_static;
                    } else {
                        m.globals.push(var);
                    }
                }
            }
        }
    }
    for tu in [&header_tu, &source_tu] {
        for (_, fields) in &tu.aggregates {
            let module_fields: Vec<Field> = fields.iter().filter(|f| fc.classify(&f.loc.file).is_some()).cloned().collect();
            scanner.fields(&module_fields);
        }
    }

    let tracked: HashSet<String> = m.owned_globals().map(|g| g.name.clone()).collect();
    let variables: HashSet<String> = env.variables.keys().cloned().collect();
    let arrays: HashSet<String> = m.owned_globals().filter(|g| g.is_array).map(|g| g.name.clone()).collect();
    let ctx = CfgContext { tracked: &tracked, variables: &variables, arrays: &arrays };
    for (f, class) in fn_defs {
        if m.defs.contains_key(&f.name) {
            return Err(FrontendError::Parse { loc: f.loc.clone(), message: format!("function {} is defined twice", f.name) });
        }
        scanner.function(&f);
        let cfg = build_cfg(&f, &ctx)?;
        let is_static = f.specs.storage == Some(Storage::Static) || static_in_source.contains(&f.name);
        m.defs.insert(
            f.name.clone(),
            FunctionBody { name: f.name.clone(), is_static, defined_in: class, loc: f.loc.clone(), def: f, cfg },
        );
    }
    m.construct_flags = std::mem::take(&mut scanner.flags);
    m.construct_flags.dedup();
    m.calls = std::mem::take(&mut scanner.calls);
    check_recursion(&m)?;
    Ok(m)
}

fn check_recursion(m: &CModule) -> Result<(), FrontendError> {
    // Tarjan's strongly connected components over the local call graph.
    struct St<'m> {
        m: &'m CModule,
        index: HashMap<&'m str, usize>,
        low: HashMap<&'m str, usize>,
        stack: Vec<&'m str>,
        on: HashSet<&'m str>,
        next: usize,
        found: Option<Vec<String>>,
    }
    fn strong<'m>(s: &mut St<'m>, v: &'m str) {
        s.index.insert(v, s.next);
        s.low.insert(v, s.next);
        s.next += 1;
        s.stack.push(v);
        s.on.insert(v);
        for w in s.m.local_callees(v) {
            if !s.index.contains_key(w) {
                strong(s, w);
                let lw = s.low[w];
                let lv = s.low.get_mut(v).unwrap();
                *lv = (*lv).min(lw);
            } else if s.on.contains(w) {
                let iw = s.index[w];
                let lv = s.low.get_mut(v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if s.low[v] == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().unwrap();
                s.on.remove(w);
                comp.push(w.to_string());
                if w == v {
                    break;
                }
            }
            let self_loop = s.m.local_callees(v).contains(v);
            if (comp.len() > 1 || self_loop) && s.found.is_none() {
                comp.sort();
                s.found = Some(comp);
            }
        }
    }
    let mut s = St { m, index: HashMap::new(), low: HashMap::new(), stack: Vec::new(), on: HashSet::new(), next: 0, found: None };
    for f in m.defs.keys() {
        if !s.index.contains_key(f.as_str()) {
            strong(&mut s, f);
        }
    }
    match s.found {
        Some(functions) => Err(FrontendError::Recursion { functions }),
        None => Ok(()),
    }
}
