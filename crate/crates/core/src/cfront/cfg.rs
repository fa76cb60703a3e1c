//! Per-function control-flow graphs whose blocks hold ordered effect events.
//!
//! Expressions are lowered left to right; `&&`, `||` and `?:` become
//! branches. Assignments evaluate the right-hand side before the write.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use super::ast::*;
use super::FrontendError;
use crate::source::SourceLoc;

pub type BlockId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Event {
    /// Read of a tracked file-scope variable.
    Read(String),
    /// Whole-object write.
    Write(String),
    /// Element or member write; never counts as initializing the object.
    PartialWrite(String),
    /// The variable's address escapes (explicitly, or by array decay).
    AddrOf(String, SourceLoc),
    Call { callee: String, loc: SourceLoc, arity: usize },
    IndirectCall { loc: SourceLoc },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Block {
    pub events: Vec<Event>,
    pub succs: Vec<BlockId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cfg {
    pub blocks: Vec<Block>,
    pub entry: BlockId,
    pub exit: BlockId,
}

/// Names the builder needs to classify identifiers.
pub struct CfgContext<'a> {
    /// File-scope variables whose reads and writes become events.
    pub tracked: &'a HashSet<String>,
    /// Every file-scope object name; a call through one of these is indirect.
    pub variables: &'a HashSet<String>,
    /// Tracked arrays; using one as a value (decay) takes its address.
    pub arrays: &'a HashSet<String>,
}

impl Cfg {
    pub fn preds(&self) -> Vec<Vec<BlockId>> {
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for (b, blk) in self.blocks.iter().enumerate() {
            for &s in &blk.succs {
                preds[s].push(b);
            }
        }
        preds
    }

    /// Reverse postorder from the entry block.
    pub fn rpo(&self) -> Vec<BlockId> {
        let mut seen = vec![false; self.blocks.len()];
        let mut order = Vec::new();
        let mut stack = vec![(self.entry, 0usize)];
        seen[self.entry] = true;
        while let Some((b, i)) = stack.pop() {
            if let Some(&s) = self.blocks[b].succs.get(i) {
                stack.push((b, i + 1));
                if !seen[s] {
                    seen[s] = true;
                    stack.push((s, 0));
                }
            } else {
                order.push(b);
            }
        }
        order.reverse();
        order
    }

    pub fn called_names(&self) -> BTreeSet<String> {
        self.blocks
            .iter()
            .flat_map(|b| &b.events)
            .filter_map(|e| match e {
                Event::Call { callee, .. } => Some(callee.clone()),
                _ => None,
            })
            .collect()
    }

    /// Structural checks: edges in range, every block reachable from the entry,
    /// the exit reachable from every block, and the exit without successors.
    pub fn well_formed(&self) -> Result<(), String> {
        let n = self.blocks.len();
        if self.entry >= n || self.exit >= n {
            return Err("entry or exit out of range".into());
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            if let Some(&s) = blk.succs.iter().find(|&&s| s >= n) {
                return Err(format!("dangling edge {b} -> {s}"));
            }
        }
        if !self.blocks[self.exit].succs.is_empty() {
            return Err("exit block has successors".into());
        }
        if self.rpo().len() != n {
            return Err("unreachable block".into());
        }
        let preds = self.preds();
        let mut seen = vec![false; n];
        let mut stack = vec![self.exit];
        seen[self.exit] = true;
        while let Some(b) = stack.pop() {
            for &p in &preds[b] {
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        if let Some(b) = seen.iter().position(|s| !s) {
            return Err(format!("block {b} cannot reach the exit"));
        }
        Ok(())
    }

    /// Dominator sets, indexed by block.
    pub fn dominators(&self) -> Vec<BTreeSet<BlockId>> {
        let n = self.blocks.len();
        let all: BTreeSet<BlockId> = (0..n).collect();
        let mut dom = vec![all; n];
        dom[self.entry] = BTreeSet::from([self.entry]);
        let preds = self.preds();
        let order = self.rpo();
        let mut changed = true;
        while changed {
            changed = false;
            for &b in &order {
                if b == self.entry {
                    continue;
                }
                let mut new: Option<BTreeSet<BlockId>> = None;
                for &p in &preds[b] {
                    new = Some(match new {
                        None => dom[p].clone(),
                        Some(s) => s.intersection(&dom[p]).copied().collect(),
                    });
                }
                let mut new = new.unwrap_or_default();
                new.insert(b);
                if new != dom[b] {
                    dom[b] = new;
                    changed = true;
                }
            }
        }
        dom
    }
}

pub fn build_cfg(def: &FunctionDef, ctx: &CfgContext) -> Result<Cfg, FrontendError> {
    let mut b = Builder {
        blocks: vec![Block::default(), Block::default()],
        cur: 0,
        exit: 1,
        scopes: vec![def.params.iter().filter_map(|p| p.name.clone()).collect()],
        loops: Vec::new(),
        switch: None,
        ctx,
    };
    b.stmt(&def.body)?;
    let cur = b.cur;
    b.edge(cur, 1);
    Ok(b.finish())
}

struct LoopTargets {
    brk: BlockId,
    cont: Option<BlockId>,
}

struct SwitchTargets {
    dispatch: BlockId,
    has_default: bool,
}

struct Builder<'a> {
    blocks: Vec<Block>,
    cur: BlockId,
    exit: BlockId,
    scopes: Vec<HashSet<String>>,
    loops: Vec<LoopTargets>,
    switch: Option<SwitchTargets>,
    ctx: &'a CfgContext<'a>,
}

enum Place {
    Whole(String),
    Part(String),
    Other,
}

impl<'a> Builder<'a> {
    fn new_block(&mut self) -> BlockId {
        self.blocks.push(Block::default());
        self.blocks.len() - 1
    }

    fn edge(&mut self, from: BlockId, to: BlockId) {
        if !self.blocks[from].succs.contains(&to) {
            self.blocks[from].succs.push(to);
        }
    }

    fn emit(&mut self, e: Event) {
        let cur = self.cur;
        self.blocks[cur].events.push(e);
    }

    fn is_local(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains(name))
    }

    fn tracked(&self, name: &str) -> bool {
        !self.is_local(name) && self.ctx.tracked.contains(name)
    }

    /// Drop unreachable blocks and renumber.
    fn finish(self) -> Cfg {
        let raw = Cfg { blocks: self.blocks, entry: 0, exit: self.exit };
        let order = raw.rpo();
        let mut map = vec![usize::MAX; raw.blocks.len()];
        let mut keep: Vec<BlockId> = order.clone();
        keep.sort_unstable();
        let exit_reached = keep.contains(&raw.exit);
        if !exit_reached {
            keep.push(raw.exit);
        }
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut blocks: Vec<Block> = keep
            .iter()
            .map(|&old| {
                let blk = &raw.blocks[old];
                Block {
                    events: blk.events.clone(),
                    succs: blk.succs.iter().filter(|&&s| map[s] != usize::MAX).map(|&s| map[s]).collect(),
                }
            })
            .collect();
        let exit = map[raw.exit];
        if !exit_reached {
            // every path loops or the body never finishes; keep the exit reachable
            blocks[0].succs.push(exit);
        }
        Cfg { blocks, entry: 0, exit }
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), FrontendError> {
        match &s.kind {
            StmtKind::Compound(items) => {
                self.scopes.push(HashSet::new());
                for item in items {
                    self.block_item(item)?;
                }
                self.scopes.pop();
            }
            StmtKind::Expr(e) => {
                if let Some(e) = e {
                    self.expr(e)?;
                }
            }
            StmtKind::If(c, then, els) => {
                self.expr(c)?;
                let branch = self.cur;
                let join = self.new_block();
                let t = self.new_block();
                self.edge(branch, t);
                self.cur = t;
                self.stmt(then)?;
                let end = self.cur;
                self.edge(end, join);
                if let Some(els) = els {
                    let f = self.new_block();
                    self.edge(branch, f);
                    self.cur = f;
                    self.stmt(els)?;
                    let end = self.cur;
                    self.edge(end, join);
                } else {
                    self.edge(branch, join);
                }
                self.cur = join;
            }
            StmtKind::While(c, body) => {
                let header = self.new_block();
                let after = self.new_block();
                let cur = self.cur;
                self.edge(cur, header);
                self.cur = header;
                self.expr(c)?;
                let test = self.cur;
                self.edge(test, after);
                let body_b = self.new_block();
                self.edge(test, body_b);
                self.cur = body_b;
                self.loop_body(body, after, Some(header))?;
                let end = self.cur;
                self.edge(end, header);
                self.cur = after;
            }
            StmtKind::DoWhile(body, c) => {
                let body_b = self.new_block();
                let cond_b = self.new_block();
                let after = self.new_block();
                let cur = self.cur;
                self.edge(cur, body_b);
                self.cur = body_b;
                self.loop_body(body, after, Some(cond_b))?;
                let end = self.cur;
                self.edge(end, cond_b);
                self.cur = cond_b;
                self.expr(c)?;
                let test = self.cur;
                self.edge(test, body_b);
                self.edge(test, after);
                self.cur = after;
            }
            StmtKind::For(init, c, step, body) => {
                self.scopes.push(HashSet::new());
                match init {
                    Some(ForInit::Decl(d)) => self.declaration(d)?,
                    Some(ForInit::Expr(e)) => self.expr(e)?,
                    None => {}
                }
                let header = self.new_block();
                let step_b = self.new_block();
                let after = self.new_block();
                let cur = self.cur;
                self.edge(cur, header);
                self.cur = header;
                if let Some(c) = c {
                    self.expr(c)?;
                }
                let test = self.cur;
                self.edge(test, after);
                let body_b = self.new_block();
                self.edge(test, body_b);
                self.cur = body_b;
                self.loop_body(body, after, Some(step_b))?;
                let end = self.cur;
                self.edge(end, step_b);
                self.cur = step_b;
                if let Some(step) = step {
                    self.expr(step)?;
                }
                let end = self.cur;
                self.edge(end, header);
                self.cur = after;
                self.scopes.pop();
            }
            StmtKind::Switch(c, body) => {
                self.expr(c)?;
                let dispatch = self.cur;
                let after = self.new_block();
                let saved = self.switch.replace(SwitchTargets { dispatch, has_default: false });
                // statements before the first label are unreachable
                self.cur = self.new_block();
                self.loops.push(LoopTargets { brk: after, cont: None });
                match &body.kind {
                    StmtKind::Compound(items) => {
                        self.scopes.push(HashSet::new());
                        for item in items {
                            match item {
                                BlockItem::Stmt(s) => self.switch_item(s)?,
                                BlockItem::Decl(d) => self.declaration(d)?,
                            }
                        }
                        self.scopes.pop();
                    }
                    _ => self.switch_item(body)?,
                }
                self.loops.pop();
                let end = self.cur;
                self.edge(end, after);
                let sw = std::mem::replace(&mut self.switch, saved).unwrap();
                if !sw.has_default {
                    self.edge(dispatch, after);
                }
                self.cur = after;
            }
            StmtKind::Case(..) | StmtKind::Default(_) => {
                return Err(FrontendError::Unsupported {
                    loc: s.loc.clone(),
                    construct: "case label nested inside another statement".into(),
                })
            }
            StmtKind::Break => {
                let Some(t) = self.loops.last() else {
                    return Err(FrontendError::Parse { loc: s.loc.clone(), message: "`break` outside a loop or switch".into() });
                };
                let (cur, brk) = (self.cur, t.brk);
                self.edge(cur, brk);
                self.cur = self.new_block();
            }
            StmtKind::Continue => {
                let Some(cont) = self.loops.iter().rev().find_map(|l| l.cont) else {
                    return Err(FrontendError::Parse { loc: s.loc.clone(), message: "`continue` outside a loop".into() });
                };
                let cur = self.cur;
                self.edge(cur, cont);
                self.cur = self.new_block();
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e)?;
                }
                let (cur, exit) = (self.cur, self.exit);
                self.edge(cur, exit);
                self.cur = self.new_block();
            }
        }
        Ok(())
    }

    fn switch_item(&mut self, s: &Stmt) -> Result<(), FrontendError> {
        match &s.kind {
            StmtKind::Case(_, inner) | StmtKind::Default(inner) => {
                let label = self.new_block();
                let cur = self.cur;
                self.edge(cur, label);
                let sw = self.switch.as_mut().expect("inside switch");
                if matches!(s.kind, StmtKind::Default(_)) {
                    sw.has_default = true;
                }
                let dispatch = sw.dispatch;
                self.edge(dispatch, label);
                self.cur = label;
                self.switch_item(inner)
            }
            _ => self.stmt(s),
        }
    }

    fn loop_body(&mut self, body: &Stmt, brk: BlockId, cont: Option<BlockId>) -> Result<(), FrontendError> {
        self.loops.push(LoopTargets { brk, cont });
        let saved = self.switch.take();
        let r = self.stmt(body);
        self.switch = saved;
        self.loops.pop();
        r
    }

    fn block_item(&mut self, item: &BlockItem) -> Result<(), FrontendError> {
        match item {
            BlockItem::Decl(d) => self.declaration(d),
            BlockItem::Stmt(s) => self.stmt(s),
        }
    }

    fn declaration(&mut self, d: &Declaration) -> Result<(), FrontendError> {
        for id in &d.declarators {
            if d.specs.storage == Some(Storage::Typedef) || d.specs.storage == Some(Storage::Extern) {
                continue;
            }
            if matches!(id.ty, CType::Function { .. }) {
                continue;
            }
            if let Some(init) = &id.init {
                self.initializer(init)?;
            }
            self.scopes.last_mut().unwrap().insert(id.name.clone());
        }
        Ok(())
    }

    fn initializer(&mut self, init: &Initializer) -> Result<(), FrontendError> {
        match init {
            Initializer::Expr(e) => self.expr(e),
            Initializer::List(items) => {
                for i in items {
                    self.initializer(i)?;
                }
                Ok(())
            }
        }
    }

    /// The tracked object an lvalue designates.
    fn place(&self, e: &Expr) -> Place {
        match &e.kind {
            ExprKind::Ident(n) if self.tracked(n) => Place::Whole(n.clone()),
            ExprKind::Index(base, _) | ExprKind::Member(base, _, false) => match self.place(base) {
                Place::Whole(n) | Place::Part(n) => Place::Part(n),
                Place::Other => Place::Other,
            },
            _ => Place::Other,
        }
    }

    /// Evaluate the sub-expressions an lvalue needs (indices, pointer bases).
    fn lvalue_operands(&mut self, e: &Expr) -> Result<(), FrontendError> {
        match &e.kind {
            ExprKind::Ident(_) => Ok(()),
            ExprKind::Index(base, idx) => {
                if matches!(self.place(base), Place::Other) {
                    self.expr(base)?;
                } else {
                    self.lvalue_operands(base)?;
                }
                self.expr(idx)
            }
            ExprKind::Member(base, _, false) => {
                if matches!(self.place(base), Place::Other) {
                    self.expr(base)
                } else {
                    self.lvalue_operands(base)
                }
            }
            _ => self.expr(e),
        }
    }

    fn read_place(&mut self, e: &Expr) -> Result<(), FrontendError> {
        match self.place(e) {
            Place::Whole(n) | Place::Part(n) => {
                self.lvalue_operands(e)?;
                self.emit(Event::Read(n));
                Ok(())
            }
            Place::Other => match &e.kind {
                ExprKind::Index(base, idx) => {
                    self.expr(base)?;
                    self.expr(idx)
                }
                ExprKind::Member(base, _, _) => self.expr(base),
                _ => self.expr(e),
            },
        }
    }

    fn write_place(&mut self, e: &Expr) {
        match self.place(e) {
            Place::Whole(n) => self.emit(Event::Write(n)),
            Place::Part(n) => self.emit(Event::PartialWrite(n)),
            Place::Other => {}
        }
    }

    fn branch_join<F, G>(&mut self, left: F, right: G) -> Result<(), FrontendError>
    where
        F: FnOnce(&mut Self) -> Result<(), FrontendError>,
        G: FnOnce(&mut Self) -> Result<(), FrontendError>,
    {
        let from = self.cur;
        let join = self.new_block();
        let l = self.new_block();
        self.edge(from, l);
        self.cur = l;
        left(self)?;
        let end = self.cur;
        self.edge(end, join);
        let r = self.new_block();
        self.edge(from, r);
        self.cur = r;
        right(self)?;
        let end = self.cur;
        self.edge(end, join);
        self.cur = join;
        Ok(())
    }

    fn expr(&mut self, e: &Expr) -> Result<(), FrontendError> {
        match &e.kind {
            ExprKind::Ident(n) => {
                if self.tracked(n) {
                    if self.ctx.arrays.contains(n) {
                        self.emit(Event::AddrOf(n.clone(), e.loc.clone()));
                    } else {
                        self.emit(Event::Read(n.clone()));
                    }
                }
            }
            ExprKind::IntLit(_) | ExprKind::FloatLit(_) | ExprKind::CharLit(_) | ExprKind::StrLit(_) => {}
            ExprKind::SizeofExpr(_) | ExprKind::SizeofType(_) => {}
            ExprKind::Unary(UnOp::AddrOf, inner) => match self.place(inner) {
                Place::Whole(n) | Place::Part(n) => {
                    self.lvalue_operands(inner)?;
                    self.emit(Event::AddrOf(n, e.loc.clone()));
                }
                Place::Other => self.lvalue_operands(inner)?,
            },
            ExprKind::Unary(UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec, inner) => {
                self.read_place(inner)?;
                self.write_place(inner);
            }
            ExprKind::Unary(_, inner) => self.expr(inner)?,
            ExprKind::Binary(BinOp::LogAnd | BinOp::LogOr, a, b) => {
                self.expr(a)?;
                self.branch_join(|s| s.expr(b), |_| Ok(()))?;
            }
            ExprKind::Binary(_, a, b) => {
                self.expr(a)?;
                self.expr(b)?;
            }
            ExprKind::Assign(op, lhs, rhs) => {
                if op.is_some() {
                    self.read_place(lhs)?;
                } else {
                    self.lvalue_operands(lhs)?;
                }
                self.expr(rhs)?;
                self.write_place(lhs);
            }
            ExprKind::Cond(c, a, b) => {
                self.expr(c)?;
                self.branch_join(|s| s.expr(a), |s| s.expr(b))?;
            }
            ExprKind::Call(callee, args) => {
                let direct = match &callee.kind {
                    ExprKind::Ident(n) if !self.is_local(n) && !self.ctx.variables.contains(n) => Some(n.clone()),
                    _ => None,
                };
                if direct.is_none() {
                    self.expr(callee)?;
                }
                for a in args {
                    self.expr(a)?;
                }
                match direct {
                    Some(callee) => self.emit(Event::Call { callee, loc: e.loc.clone(), arity: args.len() }),
                    None => self.emit(Event::IndirectCall { loc: e.loc.clone() }),
                }
            }
            ExprKind::Index(..) | ExprKind::Member(_, _, false) => self.read_place(e)?,
            ExprKind::Member(base, _, true) => self.expr(base)?,
            ExprKind::Cast(_, inner) => self.expr(inner)?,
        }
        Ok(())
    }
}
