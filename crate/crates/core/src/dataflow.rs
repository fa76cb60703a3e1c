//! Initialization-before-read of file-scope variables (T9).
//!
//! Each function gets a summary of the variables it writes on every path and
//! the variables it may read before writing them. Local callees are spliced in
//! at their call sites; external calls do not touch module variables.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cfront::cfg::{Cfg, Event};
use crate::cfront::CModule;
use crate::contract::{order_closure, predecessors, ISContract};
use crate::rules::{timed, CheckId, Diagnostic, RuleId, RuleResult, TaskId};
use crate::source::SourceLoc;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EffectSummary {
    pub function: String,
    pub must_write: BTreeSet<String>,
    pub may_read_before_write: BTreeSet<String>,
    /// Places where a tracked variable's address escapes, including in callees.
    pub address_taken: BTreeSet<(String, SourceLoc)>,
}

pub fn compute_effects(m: &CModule) -> BTreeMap<String, EffectSummary> {
    let mut out: BTreeMap<String, EffectSummary> = BTreeMap::new();
    for f in m.bottom_up() {
        let summary = summarize(f, &m.defs[f].cfg, &out);
        out.insert(f.to_string(), summary);
    }
    out
}

/// Forward must-analysis of the written set; `None` is the not-yet-reached state.
fn summarize(name: &str, cfg: &Cfg, done: &BTreeMap<String, EffectSummary>) -> EffectSummary {
    let n = cfg.blocks.len();
    let preds = cfg.preds();
    let order = cfg.rpo();
    let mut out_state: Vec<Option<BTreeSet<String>>> = vec![None; n];
    let mut sink = EffectSummary::default();
    let input = |b: usize, out_state: &[Option<BTreeSet<String>>]| -> Option<BTreeSet<String>> {
        if b == cfg.entry {
            return Some(BTreeSet::new());
        }
        let mut acc: Option<BTreeSet<String>> = None;
        for &p in &preds[b] {
            if let Some(s) = &out_state[p] {
                acc = Some(match acc {
                    None => s.clone(),
                    Some(a) => a.intersection(s).cloned().collect(),
                });
            }
        }
        acc
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &order {
            let Some(mut w) = input(b, &out_state) else { continue };
            transfer(&cfg.blocks[b].events, &mut w, done, &mut sink);
            if out_state[b].as_ref() != Some(&w) {
                out_state[b] = Some(w);
                changed = true;
            }
        }
    }
    // collect reads against the fixpoint states
    let mut summary = EffectSummary { function: name.to_string(), ..Default::default() };
    for &b in &order {
        if let Some(mut w) = input(b, &out_state) {
            transfer(&cfg.blocks[b].events, &mut w, done, &mut summary);
        }
    }
    summary.must_write = out_state[cfg.exit].clone().unwrap_or_default();
    summary
}

fn transfer(events: &[Event], w: &mut BTreeSet<String>, done: &BTreeMap<String, EffectSummary>, acc: &mut EffectSummary) {
    for e in events {
        match e {
            Event::Read(g) => {
                if !w.contains(g) {
                    acc.may_read_before_write.insert(g.clone());
                }
            }
            Event::Write(g) => {
                w.insert(g.clone());
            }
            Event::PartialWrite(_) | Event::IndirectCall { .. } => {}
            Event::AddrOf(g, loc) => {
                acc.address_taken.insert((g.clone(), loc.clone()));
            }
            Event::Call { callee, .. } => {
                if let Some(s) = done.get(callee) {
                    for g in &s.may_read_before_write {
                        if !w.contains(g) {
                            acc.may_read_before_write.insert(g.clone());
                        }
                    }
                    acc.address_taken.extend(s.address_taken.iter().cloned());
                    w.extend(s.must_write.iter().cloned());
                }
            }
        }
    }
}

/// T9: every variable an entry point may read first is initialized, or written
/// on every path by an entry point ordered strictly before it.
pub fn check_init_before_read(m: &CModule, c: &ISContract) -> RuleResult {
    let check = CheckId::Task(TaskId::T9);
    let closure = match order_closure(&c.entry_order) {
        Ok(cl) => cl,
        Err(e) => return RuleResult::error(check, e.to_string()),
    };
    let effects = compute_effects(m);
    timed(check, || {
        let mut out = Vec::new();
        let mut reported_addr = BTreeSet::new();
        for s in effects.values() {
            for (g, loc) in &s.address_taken {
                if reported_addr.insert((g.clone(), loc.clone())) {
                    out.push(Diagnostic::violation(
                        RuleId::DFR4,
                        loc,
                        g,
                        format!("address of {g} escapes; its initialization cannot be tracked"),
                    ));
                }
            }
        }
        for entry in &c.entry_points {
            let e = entry.name.as_str();
            let (Some(body), Some(eff)) = (m.defs.get(e), effects.get(e)) else { continue };
            for g in &eff.may_read_before_write {
                if m.global(g).is_some_and(|v| v.has_initializer) {
                    continue;
                }
                let written_before =
                    predecessors(&closure, e).any(|p| effects.get(p).is_some_and(|s| s.must_write.contains(g)));
                if !written_before {
                    out.push(Diagnostic::violation(
                        RuleId::DFR4,
                        &body.loc,
                        g,
                        format!("entry point {e} may read {g} before it is initialized or written"),
                    ));
                }
            }
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::{parse_module, PreprocessConfig};
    use crate::contract::parse_contract;
    use std::fs;

    fn module(src: &str) -> (tempfile::TempDir, CModule) {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("m.h"), "").unwrap();
        fs::write(dir.path().join("m.c"), src).unwrap();
        let m = parse_module(&dir.path().join("m.h"), &dir.path().join("m.c"), &PreprocessConfig::default()).unwrap();
        (dir, m)
    }

    fn set(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_function_has_no_effects() {
        let (_d, m) = module("void f(void) { }");
        let e = &compute_effects(&m)["f"];
        assert!(e.must_write.is_empty() && e.may_read_before_write.is_empty());
    }

    #[test]
    fn branch_writes_are_not_must() {
        let (_d, m) = module("static int g; static int h; void f(int c) { if (c) { g = 1; } else { g = 2; h = 1; } }");
        let e = &compute_effects(&m)["f"];
        assert_eq!(e.must_write, set(&["g"]));
    }

    #[test]
    fn loop_body_writes_are_not_must() {
        let (_d, m) = module("static int g; void f(int c) { while (c) { g = 1; c--; } }");
        assert!(compute_effects(&m)["f"].must_write.is_empty());
    }

    #[test]
    fn do_while_body_runs_once() {
        let (_d, m) = module("static int g; void f(int c) { do { g = 1; } while (c); }");
        assert_eq!(compute_effects(&m)["f"].must_write, set(&["g"]));
    }

    #[test]
    fn self_increment_reads_first() {
        let (_d, m) = module("static int g; void f(void) { g = g + 1; }");
        let e = &compute_effects(&m)["f"];
        assert_eq!(e.may_read_before_write, set(&["g"]));
        assert_eq!(e.must_write, set(&["g"]));
    }

    #[test]
    fn callee_summaries_are_spliced() {
        let src = "static int g; static void init(void) { g = 0; } static int get(void) { return g; }\n\
                   void a(void) { init(); get(); } void b(void) { get(); init(); }";
        let (_d, m) = module(src);
        let e = compute_effects(&m);
        assert!(e["a"].may_read_before_write.is_empty());
        assert_eq!(e["b"].may_read_before_write, set(&["g"]));
        assert_eq!(e["b"].must_write, set(&["g"]));
    }

    #[test]
    fn short_circuit_guards_reads() {
        let (_d, m) = module("static int g; int ok(void); void f(void) { if (ok() && (g = 1)) { } g; }");
        let e = &compute_effects(&m)["f"];
        assert_eq!(e.may_read_before_write, set(&["g"]));
    }

    #[test]
    fn unordered_writer_gives_no_guarantee() {
        let (_d, m) = module("static int g; void w(void) { g = 1; } void r(void) { if (g) { } }");
        let ordered = parse_contract("module m { entry_points: { void w(void), void r(void) } entry_order: { w < r } }").unwrap();
        assert!(check_init_before_read(&m, &ordered).violations().next().is_none());
        let unordered = parse_contract("module m { entry_points: { void w(void), void r(void) } }").unwrap();
        assert_eq!(check_init_before_read(&m, &unordered).violations().count(), 1);
    }

    #[test]
    fn initializer_suffices() {
        let (_d, m) = module("static int g = 0; void r(void) { if (g) { } }");
        let c = parse_contract("module m { entry_points: { void r(void) } }").unwrap();
        assert!(check_init_before_read(&m, &c).violations().next().is_none());
    }

    #[test]
    fn address_taken_is_a_violation() {
        let (_d, m) = module("static int g = 0; void use(int *p); void r(void) { use(&g); }");
        let c = parse_contract("module m { entry_points: { void r(void) } }").unwrap();
        let r = check_init_before_read(&m, &c);
        assert_eq!(r.violations().count(), 1);
        assert!(r.diagnostics[0].message.contains("address"));
    }
}
