//! External call order (CFR2, reported as T12).
//!
//! `a < b` means the first call of `b` in a run is preceded by some call of `a`.
//! The static check works on must-called sets; [`enumerate_oracle`] enumerates
//! bounded schedules and paths to look for a violating trace.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::cfront::ast::*;
use crate::cfront::cfg::{Cfg, Event};
use crate::cfront::CModule;
use crate::contract::{order_closure, predecessors, ISContract, OrderClosure};
use crate::rules::{timed, CheckId, Diagnostic, RuleId, RuleResult, TaskId};
use crate::source::SourceLoc;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CallSiteOrder {
    pub callee: String,
    pub loc: SourceLoc,
    /// External functions called on every path from the function entry to this site.
    pub must_before: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CallSequenceSummary {
    pub function: String,
    pub must_call: BTreeSet<String>,
    pub may_call: BTreeSet<String>,
    pub sites: BTreeSet<CallSiteOrder>,
}

pub fn summarize_call_sequences(m: &CModule) -> BTreeMap<String, CallSequenceSummary> {
    let mut out = BTreeMap::new();
    for f in m.bottom_up() {
        let s = summarize(f, &m.defs[f].cfg, &out);
        out.insert(f.to_string(), s);
    }
    out
}

fn summarize(name: &str, cfg: &Cfg, done: &BTreeMap<String, CallSequenceSummary>) -> CallSequenceSummary {
    let preds = cfg.preds();
    let order = cfg.rpo();
    let mut out_state: Vec<Option<BTreeSet<String>>> = vec![None; cfg.blocks.len()];
    let input = |b: usize, out_state: &[Option<BTreeSet<String>>]| -> Option<BTreeSet<String>> {
        if b == cfg.entry {
            return Some(BTreeSet::new());
        }
        preds[b].iter().filter_map(|&p| out_state[p].as_ref()).fold(None, |acc, s| {
            Some(match acc {
                None => s.clone(),
                Some(a) => a.intersection(s).cloned().collect(),
            })
        })
    };
    let mut scratch = CallSequenceSummary::default();
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &order {
            let Some(mut s) = input(b, &out_state) else { continue };
            transfer(&cfg.blocks[b].events, &mut s, done, &mut scratch);
            if out_state[b].as_ref() != Some(&s) {
                out_state[b] = Some(s);
                changed = true;
            }
        }
    }
    let mut summary = CallSequenceSummary { function: name.to_string(), ..Default::default() };
    for &b in &order {
        if let Some(mut s) = input(b, &out_state) {
            transfer(&cfg.blocks[b].events, &mut s, done, &mut summary);
        }
    }
    summary.must_call = out_state[cfg.exit].clone().unwrap_or_default();
    summary
}

fn transfer(
    events: &[Event],
    s: &mut BTreeSet<String>,
    done: &BTreeMap<String, CallSequenceSummary>,
    acc: &mut CallSequenceSummary,
) {
    for e in events {
        let Event::Call { callee, loc, .. } = e else { continue };
        match done.get(callee) {
            Some(local) => {
                for site in &local.sites {
                    acc.sites.insert(CallSiteOrder {
                        callee: site.callee.clone(),
                        loc: site.loc.clone(),
                        must_before: s.union(&site.must_before).cloned().collect(),
                    });
                }
                acc.may_call.extend(local.may_call.iter().cloned());
                s.extend(local.must_call.iter().cloned());
            }
            None => {
                let mut before = s.clone();
                before.remove(callee);
                acc.sites.insert(CallSiteOrder { callee: callee.clone(), loc: loc.clone(), must_before: before });
                acc.may_call.insert(callee.clone());
                s.insert(callee.clone());
            }
        }
    }
}

pub fn check_call_order(m: &CModule, c: &ISContract) -> RuleResult {
    let check = CheckId::Task(TaskId::T12);
    let closure = match order_closure(&c.entry_order) {
        Ok(cl) => cl,
        Err(e) => return RuleResult::error(check, e.to_string()),
    };
    if let Err(e) = order_closure(&c.external_order) {
        return RuleResult::error(check, e.to_string());
    }
    let summaries = summarize_call_sequences(m);
    timed(check, || {
        let mut out = Vec::new();
        for k in &c.external_order {
            let (a, b) = (&k.before, &k.after);
            for entry in &c.entry_points {
                let e = entry.name.as_str();
                let Some(sum) = summaries.get(e) else { continue };
                let guaranteed = predecessors(&closure, e).any(|p| summaries.get(p).is_some_and(|s| s.must_call.contains(a)));
                if guaranteed {
                    continue;
                }
                for site in sum.sites.iter().filter(|s| &s.callee == b) {
                    if !site.must_before.contains(a) {
                        out.push(Diagnostic::violation(
                            RuleId::CFR2,
                            &site.loc,
                            b,
                            format!("call to {b} from entry point {e} may happen before any call to {a} (order {a} < {b})"),
                        ));
                    }
                }
            }
        }
        out
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBounds {
    pub max_schedule_len: usize,
    pub max_unroll: usize,
    pub max_paths: usize,
}

impl Default for OracleBounds {
    fn default() -> Self {
        OracleBounds { max_schedule_len: 3, max_unroll: 2, max_paths: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum OracleVerdict {
    NoViolation,
    Violation {
        /// Entry points invoked, in order.
        schedule: Vec<String>,
        /// External calls made, in order, ending with the offending call.
        trace: Vec<String>,
        before: String,
        after: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("bound exceeded: {dimension} (limit {limit})")]
    BoundExceeded { dimension: &'static str, limit: usize },
    #[error(transparent)]
    Cycle(#[from] crate::contract::CycleError),
}

/// Exhaustively search bounded schedules and paths for a trace violating an
/// external order constraint. Reports a violation from the shortest violating
/// schedule, taking entries and paths in lexicographic order.
pub fn enumerate_oracle(m: &CModule, c: &ISContract, bounds: OracleBounds) -> Result<OracleVerdict, OracleError> {
    let closure = order_closure(&c.entry_order)?;
    if c.external_order.is_empty() {
        return Ok(OracleVerdict::NoViolation);
    }
    let mut entries: Vec<&str> = c.entry_points.iter().map(|e| e.name.as_str()).collect();
    entries.sort_unstable();
    entries.dedup();
    let mut paths = PathEnum { m, bounds, memo: BTreeMap::new() };
    let mut traces: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    for &e in &entries {
        let mut t: Vec<Vec<String>> = match m.defs.get(e) {
            Some(_) => paths.function(e)?.into_iter().collect(),
            None => vec![Vec::new()],
        };
        t.sort();
        traces.push((e.to_string(), t));
    }
    let constraints: Vec<(String, String)> =
        c.external_order.iter().map(|k| (k.before.clone(), k.after.clone())).collect();
    // shortest schedules first, so the reported trace is minimal
    for len in 1..=bounds.max_schedule_len {
        let mut search = Search { traces: &traces, closure: &closure, constraints: &constraints, seen: HashSet::new() };
        if let Some(v) = search.dfs(&BTreeSet::new(), &BTreeSet::new(), len, &mut Vec::new(), &mut Vec::new()) {
            return Ok(v);
        }
    }
    Ok(OracleVerdict::NoViolation)
}

struct Search<'a> {
    traces: &'a [(String, Vec<Vec<String>>)],
    closure: &'a OrderClosure,
    constraints: &'a [(String, String)],
    seen: HashSet<(BTreeSet<String>, BTreeSet<String>, usize)>,
}

impl Search<'_> {
    fn dfs(
        &mut self,
        called: &BTreeSet<String>,
        started: &BTreeSet<String>,
        remaining: usize,
        schedule: &mut Vec<String>,
        trace: &mut Vec<String>,
    ) -> Option<OracleVerdict> {
        if remaining == 0 || !self.seen.insert((called.clone(), started.clone(), remaining)) {
            return None;
        }
        for (e, paths) in self.traces {
            let admissible = started.contains(e) || predecessors(self.closure, e).all(|p| started.contains(p));
            if !admissible {
                continue;
            }
            let mut next_started = started.clone();
            next_started.insert(e.clone());
            schedule.push(e.clone());
            for path in paths {
                let mut now = called.clone();
                let depth = trace.len();
                for f in path {
                    trace.push(f.clone());
                    if !now.contains(f) {
                        if let Some((a, b)) = self.constraints.iter().find(|(a, b)| b == f && !now.contains(a)) {
                            let v = OracleVerdict::Violation {
                                schedule: schedule.clone(),
                                trace: trace.clone(),
                                before: a.clone(),
                                after: b.clone(),
                            };
                            trace.truncate(depth);
                            schedule.pop();
                            return Some(v);
                        }
                        now.insert(f.clone());
                    }
                }
                let found = self.dfs(&now, &next_started, remaining - 1, schedule, trace);
                trace.truncate(depth);
                if found.is_some() {
                    schedule.pop();
                    return found;
                }
            }
            schedule.pop();
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Flow {
    Normal,
    Break,
    Continue,
    Return,
}

type Paths = BTreeSet<(Vec<String>, Flow)>;

/// Enumerates the external-call traces of function bodies over the AST.
struct PathEnum<'m> {
    m: &'m CModule,
    bounds: OracleBounds,
    memo: BTreeMap<String, BTreeSet<Vec<String>>>,
}

impl PathEnum<'_> {
    fn limit(&self, n: usize) -> Result<(), OracleError> {
        if n > self.bounds.max_paths {
            Err(OracleError::BoundExceeded { dimension: "paths", limit: self.bounds.max_paths })
        } else {
            Ok(())
        }
    }

    fn function(&mut self, name: &str) -> Result<BTreeSet<Vec<String>>, OracleError> {
        if let Some(t) = self.memo.get(name) {
            return Ok(t.clone());
        }
        let body = &self.m.defs[name].def.body;
        let start: Paths = BTreeSet::from([(Vec::new(), Flow::Normal)]);
        let paths = self.stmt(body, start)?;
        let out: BTreeSet<Vec<String>> = paths.into_iter().map(|(t, _)| t).collect();
        self.memo.insert(name.to_string(), out.clone());
        Ok(out)
    }

    /// Extend every still-running path with `f`.
    fn then<F>(&mut self, paths: Paths, mut f: F) -> Result<Paths, OracleError>
    where
        F: FnMut(&mut Self, Vec<String>) -> Result<Paths, OracleError>,
    {
        let mut out = BTreeSet::new();
        for (t, flow) in paths {
            if flow == Flow::Normal {
                out.extend(f(self, t)?);
            } else {
                out.insert((t, flow));
            }
            self.limit(out.len())?;
        }
        Ok(out)
    }

    fn stmt(&mut self, s: &Stmt, paths: Paths) -> Result<Paths, OracleError> {
        match &s.kind {
            StmtKind::Compound(items) => {
                let mut p = paths;
                for item in items {
                    p = match item {
                        BlockItem::Decl(d) => self.decl(d, p)?,
                        BlockItem::Stmt(s) => self.stmt(s, p)?,
                    };
                }
                Ok(p)
            }
            StmtKind::Expr(e) => match e {
                Some(e) => self.expr_paths(e, paths),
                None => Ok(paths),
            },
            StmtKind::If(c, a, b) => {
                let after_c = self.expr_paths(c, paths)?;
                let mut out = self.stmt(a, after_c.clone())?;
                match b {
                    Some(b) => out.extend(self.stmt(b, after_c)?),
                    None => out.extend(after_c),
                }
                self.limit(out.len())?;
                Ok(out)
            }
            StmtKind::While(c, body) => self.looped(Some(c), None, body, paths, false),
            StmtKind::DoWhile(body, c) => self.looped(Some(c), None, body, paths, true),
            StmtKind::For(init, c, step, body) => {
                let p = match init {
                    Some(ForInit::Decl(d)) => self.decl(d, paths)?,
                    Some(ForInit::Expr(e)) => self.expr_paths(e, paths)?,
                    None => paths,
                };
                self.looped(c.as_ref(), step.as_ref(), body, p, false)
            }
            StmtKind::Switch(c, body) => {
                let after_c = self.expr_paths(c, paths)?;
                let items: Vec<&Stmt> = match &body.kind {
                    StmtKind::Compound(items) => items
                        .iter()
                        .filter_map(|i| match i {
                            BlockItem::Stmt(s) => Some(s),
                            BlockItem::Decl(_) => None,
                        })
                        .collect(),
                    _ => vec![body.as_ref()],
                };
                let labels: Vec<usize> = (0..items.len())
                    .filter(|&i| matches!(items[i].kind, StmtKind::Case(..) | StmtKind::Default(_)))
                    .collect();
                let has_default = items.iter().any(|s| is_default(s));
                let mut out = BTreeSet::new();
                if !has_default {
                    out.extend(after_c.clone());
                }
                for &start in &labels {
                    let mut p = after_c.clone();
                    for s in &items[start..] {
                        p = self.stmt(strip_labels(s), p)?;
                    }
                    for (t, flow) in p {
                        out.insert((t, if flow == Flow::Break { Flow::Normal } else { flow }));
                    }
                    self.limit(out.len())?;
                }
                Ok(out)
            }
            StmtKind::Case(_, inner) | StmtKind::Default(inner) => self.stmt(inner, paths),
            StmtKind::Break => Ok(paths.into_iter().map(|(t, f)| (t, if f == Flow::Normal { Flow::Break } else { f })).collect()),
            StmtKind::Continue => {
                Ok(paths.into_iter().map(|(t, f)| (t, if f == Flow::Normal { Flow::Continue } else { f })).collect())
            }
            StmtKind::Return(e) => {
                let p = match e {
                    Some(e) => self.expr_paths(e, paths)?,
                    None => paths,
                };
                Ok(p.into_iter().map(|(t, f)| (t, if f == Flow::Normal { Flow::Return } else { f })).collect())
            }
        }
    }

    /// Loops run their body 0..=unroll times (at least once for do-while).
    /// A loop without a condition may also leave normally, which keeps
    /// truncated prefixes of unbounded loops in the result.
    fn looped(
        &mut self,
        cond: Option<&Expr>,
        step: Option<&Expr>,
        body: &Stmt,
        paths: Paths,
        body_first: bool,
    ) -> Result<Paths, OracleError> {
        let mut out = BTreeSet::new();
        let mut running = paths;
        let min_iters = usize::from(body_first);
        let max_iters = self.bounds.max_unroll.max(min_iters);
        for i in 0..=max_iters {
            // leave the loop after `i` iterations
            if i >= min_iters {
                let exit = match cond {
                    Some(c) if !body_first || i > 0 => self.expr_paths(c, running.clone())?,
                    _ => running.clone(),
                };
                out.extend(exit);
                self.limit(out.len())?;
            }
            if i == max_iters {
                break;
            }
            // one more iteration
            let entered = match cond {
                Some(c) if !(body_first && i == 0) => self.expr_paths(c, running)?,
                _ => running,
            };
            let after_body = self.stmt(body, entered)?;
            let mut next = BTreeSet::new();
            for (t, flow) in after_body {
                match flow {
                    Flow::Break => {
                        out.insert((t, Flow::Normal));
                    }
                    Flow::Return => {
                        out.insert((t, Flow::Return));
                    }
                    Flow::Normal | Flow::Continue => {
                        next.insert((t, Flow::Normal));
                    }
                }
            }
            running = match step {
                Some(st) => self.expr_paths(st, next)?,
                None => next,
            };
            self.limit(running.len() + out.len())?;
        }
        Ok(out)
    }

    fn decl(&mut self, d: &Declaration, mut paths: Paths) -> Result<Paths, OracleError> {
        if matches!(d.specs.storage, Some(Storage::Typedef) | Some(Storage::Extern)) {
            return Ok(paths);
        }
        for id in &d.declarators {
            if let Some(init) = &id.init {
                paths = self.init_paths(init, paths)?;
            }
        }
        Ok(paths)
    }

    fn init_paths(&mut self, init: &Initializer, paths: Paths) -> Result<Paths, OracleError> {
        match init {
            Initializer::Expr(e) => self.expr_paths(e, paths),
            Initializer::List(items) => {
                let mut p = paths;
                for i in items {
                    p = self.init_paths(i, p)?;
                }
                Ok(p)
            }
        }
    }

    fn expr_paths(&mut self, e: &Expr, paths: Paths) -> Result<Paths, OracleError> {
        self.then(paths, |me, t| {
            let suffixes = me.expr(e)?;
            let mut out = BTreeSet::new();
            for s in suffixes {
                let mut full = t.clone();
                full.extend(s);
                out.insert((full, Flow::Normal));
            }
            Ok(out)
        })
    }

    /// The call traces an expression can produce, in evaluation order.
    fn expr(&mut self, e: &Expr) -> Result<BTreeSet<Vec<String>>, OracleError> {
        let unit = || BTreeSet::from([Vec::new()]);
        Ok(match &e.kind {
            ExprKind::Ident(_)
            | ExprKind::IntLit(_)
            | ExprKind::FloatLit(_)
            | ExprKind::CharLit(_)
            | ExprKind::StrLit(_)
            | ExprKind::SizeofExpr(_)
            | ExprKind::SizeofType(_) => unit(),
            ExprKind::Unary(_, a) | ExprKind::Cast(_, a) | ExprKind::Member(a, _, _) => self.expr(a)?,
            ExprKind::Binary(BinOp::LogAnd | BinOp::LogOr, a, b) => {
                let ta = self.expr(a)?;
                let tb = self.expr(b)?;
                let mut out = ta.clone();
                out.extend(self.seq(&ta, &tb)?);
                out
            }
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) => {
                let ta = self.expr(a)?;
                let tb = self.expr(b)?;
                self.seq(&ta, &tb)?
            }
            ExprKind::Assign(_, l, r) => {
                let tl = self.expr(l)?;
                let tr = self.expr(r)?;
                self.seq(&tl, &tr)?
            }
            ExprKind::Cond(c, a, b) => {
                let tc = self.expr(c)?;
                let mut arms = self.expr(a)?;
                arms.extend(self.expr(b)?);
                self.seq(&tc, &arms)?
            }
            ExprKind::Call(callee, args) => {
                let mut acc = match &callee.kind {
                    ExprKind::Ident(_) => unit(),
                    _ => self.expr(callee)?,
                };
                for a in args {
                    let ta = self.expr(a)?;
                    acc = self.seq(&acc, &ta)?;
                }
                match &callee.kind {
                    ExprKind::Ident(n) if self.m.defs.contains_key(n) => {
                        let body = self.function(n)?;
                        self.seq(&acc, &body)?
                    }
                    ExprKind::Ident(n) if !self.m.globals.iter().any(|g| &g.name == n) => {
                        acc.into_iter().map(|mut t| {
                            t.push(n.clone());
                            t
                        }).collect()
                    }
                    _ => acc,
                }
            }
        })
    }

    fn seq(&self, a: &BTreeSet<Vec<String>>, b: &BTreeSet<Vec<String>>) -> Result<BTreeSet<Vec<String>>, OracleError> {
        self.limit(a.len().saturating_mul(b.len()))?;
        let mut out = BTreeSet::new();
        for x in a {
            for y in b {
                let mut t = x.clone();
                t.extend(y.iter().cloned());
                out.insert(t);
            }
        }
        Ok(out)
    }
}

fn is_default(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Default(_) => true,
        StmtKind::Case(_, inner) => is_default(inner),
        _ => false,
    }
}

fn strip_labels(s: &Stmt) -> &Stmt {
    match &s.kind {
        StmtKind::Case(_, inner) | StmtKind::Default(inner) => strip_labels(inner),
        _ => s,
    }
}
