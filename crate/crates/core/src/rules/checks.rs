use std::collections::BTreeSet;

use super::{timed, CheckId, Diagnostic, RuleConfig, RuleId, RuleResult, TaskId};
use crate::cfront::model::{ConstructKind, DeclaredIn};
use crate::cfront::CModule;
use crate::contract::ISContract;
use crate::sig::FunSignature;

/// Compared as normalized token text: return type, name, parameter types.
pub fn same_signature(a: &FunSignature, b: &FunSignature) -> bool {
    a.name == b.name
        && a.return_type.as_str() == b.return_type.as_str()
        && a.params.len() == b.params.len()
        && a.params.iter().zip(&b.params).all(|(x, y)| x.as_str() == y.as_str())
}

fn null_exempt(origin: &[String], cfg: &RuleConfig) -> bool {
    origin.iter().any(|m| cfg.null_macros.contains(m))
}

/// T1: only contracted external calls.
pub fn check_call_permissions(m: &CModule, c: &ISContract) -> RuleResult {
    timed(CheckId::Task(TaskId::T1), || {
        let mut out = Vec::new();
        for call in m.calls.iter().filter(|c| !c.via_pointer) {
            let callee = call.callee.as_str();
            if m.defs.contains_key(callee) || c.is_entry(callee) {
                continue;
            }
            let Some((group, sig)) = c.external(callee) else {
                out.push(Diagnostic::violation(
                    RuleId::CFR1,
                    &call.loc,
                    callee,
                    format!("call to {callee} in {} is not permitted by the contract", call.caller),
                ));
                continue;
            };
            let arity_ok = if sig.is_variadic() { call.args_arity >= sig.arity() } else { call.args_arity == sig.arity() };
            if !arity_ok {
                out.push(Diagnostic::violation(
                    RuleId::CFR1,
                    &call.loc,
                    callee,
                    format!("call to {callee} passes {} argument(s); the contract declares {}", call.args_arity, sig),
                ));
            }
            if let Some(header) = group.header_name() {
                let declared_there = m.decls_named(callee).any(|d| match &d.declared_in {
                    DeclaredIn::External(p) => p.file_name().and_then(|f| f.to_str()) == Some(header),
                    _ => false,
                });
                if !declared_there {
                    out.push(Diagnostic::violation(
                        RuleId::CFR1,
                        &call.loc,
                        callee,
                        format!("{callee} must be declared in {header} as the contract requires"),
                    ));
                }
            }
        }
        out
    })
}

/// T2: no function pointers, including function names used as values.
pub fn check_no_function_pointers(m: &CModule) -> RuleResult {
    timed(CheckId::Task(TaskId::T2), || {
        m.construct_flags
            .iter()
            .filter(|f| f.kind == ConstructKind::FunctionPointer)
            .map(|f| Diagnostic::violation(RuleId::CFR3, &f.loc, &f.subject, f.detail.clone()))
            .collect()
    })
}

/// T3: no definitions or initializations in the header.
pub fn check_header_purity(m: &CModule) -> RuleResult {
    use crate::cfront::model::HeaderDefKind;
    timed(CheckId::Task(TaskId::T3), || {
        m.header_defs
            .iter()
            .map(|h| {
                let what = match h.kind {
                    HeaderDefKind::FunctionDefinition => "function definition",
                    HeaderDefKind::Initialization => "initialization",
                };
                Diagnostic::violation(RuleId::CFR4, &h.loc, &h.subject, format!("{what} of {} in the header", h.subject))
            })
            .collect()
    })
}

/// T4: only `.h` files are included.
pub fn check_includes(m: &CModule) -> RuleResult {
    timed(CheckId::Task(TaskId::T4), || {
        m.includes
            .iter()
            .filter(|i| !i.is_header_suffix)
            .map(|i| {
                Diagnostic::violation(
                    RuleId::CFR5,
                    &i.loc,
                    i.directive_text.clone(),
                    format!("#include {} does not name a .h file", i.directive_text),
                )
            })
            .collect()
    })
}

/// T5: entry points declared non-static in the module header with the exact contract signature.
pub fn check_entry_declarations(m: &CModule, c: &ISContract) -> RuleResult {
    timed(CheckId::Task(TaskId::T5), || {
        let mut out = Vec::new();
        for entry in &c.entry_points {
            let name = entry.name.as_str();
            let in_header: Vec<_> = m.decls_named(name).filter(|d| d.declared_in == DeclaredIn::ModuleHeader).collect();
            if in_header.is_empty() {
                let loc = crate::source::SourceLoc::new(m.header_path.clone(), 1, 1);
                out.push(Diagnostic::violation(RuleId::CFR6, &loc, name, format!("entry point {name} is not declared in the header")));
            }
            for d in in_header {
                if d.is_static {
                    out.push(Diagnostic::violation(RuleId::CFR6, &d.loc, name, format!("entry point {name} is declared static")));
                }
                if !same_signature(&d.signature, entry) {
                    out.push(Diagnostic::violation(
                        RuleId::CFR11,
                        &d.loc,
                        name,
                        format!("header declares `{}` but the contract declares `{}`", d.signature, entry),
                    ));
                }
            }
        }
        out
    })
}

/// T6: entry points defined non-static in the source file.
pub fn check_entry_definitions(m: &CModule, c: &ISContract) -> RuleResult {
    timed(CheckId::Task(TaskId::T6), || {
        let mut out = Vec::new();
        for entry in &c.entry_points {
            let name = entry.name.as_str();
            match m.defs.get(name) {
                None => {
                    let loc = crate::source::SourceLoc::new(m.source_path.clone(), 1, 1);
                    out.push(Diagnostic::violation(RuleId::CFR7, &loc, name, format!("entry point {name} is not defined in the .c file")));
                }
                Some(body) => {
                    if body.defined_in != DeclaredIn::ModuleSource {
                        out.push(Diagnostic::violation(RuleId::CFR7, &body.loc, name, format!("entry point {name} is defined outside the .c file")));
                    }
                    if body.is_static {
                        out.push(Diagnostic::violation(RuleId::CFR7, &body.loc, name, format!("entry point {name} is defined static")));
                    }
                }
            }
        }
        out
    })
}

/// T7: non-entry functions are static and stay out of the header.
pub fn check_local_functions(m: &CModule, c: &ISContract) -> RuleResult {
    timed(CheckId::Task(TaskId::T7), || {
        let mut out = Vec::new();
        for (name, body) in &m.defs {
            if c.is_entry(name) {
                continue;
            }
            if !body.is_static {
                out.push(Diagnostic::violation(RuleId::CFR8, &body.loc, name, format!("local function {name} is not static")));
            }
        }
        // definitions in the header are reported by T3
        for d in m.decls.iter().filter(|d| d.declared_in == DeclaredIn::ModuleHeader && !d.is_definition) {
            let name = &d.signature.name;
            if !c.is_entry(name) {
                out.push(Diagnostic::violation(RuleId::CFR9, &d.loc, name, format!("{name} is declared in the header but is not an entry point")));
            }
        }
        out
    })
}

/// T8: file-scope variables are static and live in the source file.
pub fn check_globals_static(m: &CModule) -> RuleResult {
    timed(CheckId::Task(TaskId::T8), || {
        let mut out = Vec::new();
        for g in m.owned_globals() {
            if g.declared_in == DeclaredIn::ModuleHeader {
                out.push(Diagnostic::violation(RuleId::DFR1, &g.loc, &g.name, format!("variable {} is declared in the header", g.name)));
            } else if !g.is_static {
                out.push(Diagnostic::violation(RuleId::DFR1, &g.loc, &g.name, format!("file-scope variable {} is not static", g.name)));
            }
        }
        out
    })
}

/// T10: no integer constants used as pointers.
pub fn check_no_pointer_literals(m: &CModule, cfg: &RuleConfig) -> RuleResult {
    timed(CheckId::Task(TaskId::T10), || {
        m.construct_flags
            .iter()
            .filter(|f| f.kind == ConstructKind::PointerLiteral && !null_exempt(&f.macro_origin, cfg))
            .map(|f| Diagnostic::violation(RuleId::DFR5, &f.loc, &f.subject, f.detail.clone()))
            .collect()
    })
}

/// T11: raw arithmetic types in declarations draw a warning (a violation when strict).
pub fn check_typedef_usage(m: &CModule, c: Option<&ISContract>, cfg: &RuleConfig) -> RuleResult {
    timed(CheckId::Task(TaskId::T11), || {
        let allowed: BTreeSet<&str> = cfg.typedef_allowlist.iter().map(|s| s.trim()).collect();
        let mut out = Vec::new();
        for site in m.decl_sites.iter().filter(|s| !s.is_typedef) {
            let text = site.base_keywords.join(" ");
            if allowed.contains(text.as_str()) || site.base_keywords.iter().all(|k| allowed.contains(k.as_str())) {
                continue;
            }
            if let (Some((fname, floc)), Some(c)) = (&site.signature_of, c) {
                let contracted = c.entry(fname).or_else(|| c.external(fname).map(|(_, s)| s));
                let matches = contracted.is_some_and(|sig| {
                    m.decls_named(fname).any(|d| &d.loc == floc && same_signature(&d.signature, sig))
                });
                if matches {
                    continue;
                }
            }
            let what = if site.subject.is_empty() { String::new() } else { format!(" of {}", site.subject) };
            let message = format!("raw type `{text}` in the declaration{what}; use a typedef");
            out.push(if cfg.strict_advisory {
                Diagnostic::violation(RuleId::DFR6, &site.loc, &site.subject, message)
            } else {
                Diagnostic::warning(RuleId::DFR6, &site.loc, &site.subject, message)
            });
        }
        out
    })
}

/// CFR10: no `extern` except on entry-point declarations.
pub fn check_no_extern(m: &CModule, c: Option<&ISContract>) -> RuleResult {
    timed(CheckId::Cfr10, || {
        m.construct_flags
            .iter()
            .filter(|f| f.kind == ConstructKind::Extern)
            .filter(|f| {
                let is_fn = m.decls_named(&f.subject).next().is_some();
                let entry = match c {
                    Some(c) => c.is_entry(&f.subject),
                    None => m.decls_named(&f.subject).any(|d| d.declared_in == DeclaredIn::ModuleHeader && !d.is_static),
                };
                !(is_fn && entry)
            })
            .map(|f| Diagnostic::violation(RuleId::CFR10, &f.loc, &f.subject, format!("`extern` used for {}", f.subject)))
            .collect()
    })
}

/// DFR2 and DFR3: no pointer arithmetic, no casts to or from pointers.
pub fn check_pointer_discipline(m: &CModule, cfg: &RuleConfig) -> RuleResult {
    timed(CheckId::Dfr2_3, || {
        m.construct_flags
            .iter()
            .filter_map(|f| match f.kind {
                ConstructKind::PointerArithmetic => Some(Diagnostic::violation(RuleId::DFR2, &f.loc, &f.subject, f.detail.clone())),
                ConstructKind::PointerCast if !null_exempt(&f.macro_origin, cfg) => {
                    Some(Diagnostic::violation(RuleId::DFR3, &f.loc, &f.subject, f.detail.clone()))
                }
                _ => None,
            })
            .collect()
    })
}
