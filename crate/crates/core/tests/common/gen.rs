//! Random small modules built from a tiny statement IR, rendered to C, plus an
//! interpreter over the IR that enumerates schedules and paths exhaustively.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

#[derive(Debug, Clone)]
pub enum Cond {
    Global(usize),
    Ext(usize),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Write(usize),
    Incr(usize),
    Copy { dst: usize, src: usize },
    Ext(usize),
    Local(usize),
    If(Cond, Vec<Stmt>, Vec<Stmt>),
    While(Cond, Vec<Stmt>),
    DoWhile(Vec<Stmt>, Cond),
    Return,
    Break,
}

#[derive(Debug, Clone)]
pub struct GenModule {
    /// Initializer per global, if any.
    pub globals: Vec<Option<i32>>,
    pub externals: usize,
    /// `helpers[i]` only calls helpers with a larger index.
    pub helpers: Vec<Vec<Stmt>>,
    pub entries: Vec<Vec<Stmt>>,
    pub entry_order: Vec<(usize, usize)>,
    pub ext_order: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy)]
pub struct Family {
    pub max_entries: usize,
    pub max_externals: usize,
    pub max_globals: usize,
    pub max_helpers: usize,
    pub max_branches: usize,
    pub max_stmts: usize,
}

impl Default for Family {
    fn default() -> Self {
        Family { max_entries: 3, max_externals: 6, max_globals: 4, max_helpers: 2, max_branches: 2, max_stmts: 4 }
    }
}

struct Ctx<'a, R: Rng> {
    rng: &'a mut R,
    globals: usize,
    externals: usize,
    /// Helpers this function may call.
    callable: std::ops::Range<usize>,
    branches: usize,
}

impl<R: Rng> Ctx<'_, R> {
    fn cond(&mut self, depth: usize) -> Cond {
        match self.rng.gen_range(0..if depth == 0 { 6 } else { 4 }) {
            0 | 1 => Cond::Global(self.rng.gen_range(0..self.globals)),
            2 | 3 => Cond::Ext(self.rng.gen_range(0..self.externals)),
            4 => Cond::And(Box::new(self.cond(1)), Box::new(self.cond(1))),
            _ => Cond::Or(Box::new(self.cond(1)), Box::new(self.cond(1))),
        }
    }

    fn block(&mut self, max: usize, depth: usize, in_loop: bool) -> Vec<Stmt> {
        let n = self.rng.gen_range(if depth == 0 { 1 } else { 0 }..=max);
        (0..n).map(|_| self.stmt(max, depth, in_loop)).collect()
    }

    fn stmt(&mut self, max: usize, depth: usize, in_loop: bool) -> Stmt {
        loop {
            let g = self.rng.gen_range(0..self.globals);
            match self.rng.gen_range(0..16) {
                0..=2 => return Stmt::Write(g),
                3 => return Stmt::Incr(g),
                4 => return Stmt::Copy { dst: g, src: self.rng.gen_range(0..self.globals) },
                5..=8 => return Stmt::Ext(self.rng.gen_range(0..self.externals)),
                9 if !self.callable.is_empty() => return Stmt::Local(self.rng.gen_range(self.callable.clone())),
                10 | 11 if self.branches > 0 && depth < 2 => {
                    self.branches -= 1;
                    let c = self.cond(0);
                    let a = self.block(max.min(3), depth + 1, in_loop);
                    let b = if self.rng.gen_bool(0.5) { self.block(max.min(3), depth + 1, in_loop) } else { Vec::new() };
                    return Stmt::If(c, a, b);
                }
                12 if self.branches > 0 && depth < 2 => {
                    self.branches -= 1;
                    let c = self.cond(0);
                    return Stmt::While(c, self.block(max.min(2), depth + 1, true));
                }
                13 if self.branches > 0 && depth < 2 => {
                    self.branches -= 1;
                    let body = self.block(max.min(2), depth + 1, true);
                    return Stmt::DoWhile(body, self.cond(0));
                }
                14 if depth > 0 => return Stmt::Return,
                15 if depth > 0 && in_loop => return Stmt::Break,
                _ => {}
            }
        }
    }
}

pub fn generate<R: Rng>(rng: &mut R, fam: Family) -> GenModule {
    let n_globals = rng.gen_range(1..=fam.max_globals);
    let globals = (0..n_globals).map(|_| rng.gen_bool(0.25).then(|| rng.gen_range(0..3))).collect();
    let externals = rng.gen_range(2..=fam.max_externals);
    let n_helpers = rng.gen_range(0..=fam.max_helpers);
    let n_entries = rng.gen_range(1..=fam.max_entries);
    let body = |rng: &mut R, callable: std::ops::Range<usize>| {
        let mut ctx = Ctx { rng, globals: n_globals, externals, callable, branches: fam.max_branches };
        ctx.block(fam.max_stmts, 0, false)
    };
    let helpers = (0..n_helpers).map(|i| body(rng, i + 1..n_helpers)).collect();
    let entries = (0..n_entries).map(|_| body(rng, 0..n_helpers)).collect();
    let mut entry_order = Vec::new();
    for a in 0..n_entries {
        for b in a + 1..n_entries {
            if rng.gen_bool(0.6) {
                entry_order.push((a, b));
            }
        }
    }
    let mut ext_order = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=3) {
        let a = rng.gen_range(0..externals - 1);
        let b = rng.gen_range(a + 1..externals);
        ext_order.insert((a, b));
    }
    GenModule { globals, externals, helpers, entries, entry_order, ext_order: ext_order.into_iter().collect() }
}

fn render_cond(c: &Cond) -> String {
    match c {
        Cond::Global(g) => format!("g{g} > 0"),
        Cond::Ext(k) => format!("x{k}() > 0"),
        Cond::And(a, b) => format!("({} && {})", render_cond(a), render_cond(b)),
        Cond::Or(a, b) => format!("({} || {})", render_cond(a), render_cond(b)),
    }
}

fn render_block(out: &mut String, stmts: &[Stmt], indent: usize) {
    let pad = " ".repeat(indent);
    for s in stmts {
        match s {
            Stmt::Write(g) => {
                let _ = writeln!(out, "{pad}g{g} = 1;");
            }
            Stmt::Incr(g) => {
                let _ = writeln!(out, "{pad}g{g}++;");
            }
            Stmt::Copy { dst, src } => {
                let _ = writeln!(out, "{pad}g{dst} = g{src};");
            }
            Stmt::Ext(k) => {
                let _ = writeln!(out, "{pad}x{k}();");
            }
            Stmt::Local(i) => {
                let _ = writeln!(out, "{pad}h{i}();");
            }
            Stmt::If(c, a, b) => {
                let _ = writeln!(out, "{pad}if ({}) {{", render_cond(c));
                render_block(out, a, indent + 2);
                if b.is_empty() {
                    let _ = writeln!(out, "{pad}}}");
                } else {
                    let _ = writeln!(out, "{pad}}} else {{");
                    render_block(out, b, indent + 2);
                    let _ = writeln!(out, "{pad}}}");
                }
            }
            Stmt::While(c, body) => {
                let _ = writeln!(out, "{pad}while ({}) {{", render_cond(c));
                render_block(out, body, indent + 2);
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::DoWhile(body, c) => {
                let _ = writeln!(out, "{pad}do {{");
                render_block(out, body, indent + 2);
                let _ = writeln!(out, "{pad}}} while ({});", render_cond(c));
            }
            Stmt::Return => {
                let _ = writeln!(out, "{pad}return;");
            }
            Stmt::Break => {
                let _ = writeln!(out, "{pad}break;");
            }
        }
    }
}

impl GenModule {
    pub fn source(&self) -> String {
        let mut s = String::from("#include \"m.h\"\n#include \"ext.h\"\n\n");
        for (i, init) in self.globals.iter().enumerate() {
            let _ = match init {
                Some(v) => writeln!(s, "static int g{i} = {v};"),
                None => writeln!(s, "static int g{i};"),
            };
        }
        for i in (0..self.helpers.len()).rev() {
            let _ = writeln!(s, "\nstatic void h{i}(void)\n{{");
            render_block(&mut s, &self.helpers[i], 2);
            s.push_str("}\n");
        }
        for (i, body) in self.entries.iter().enumerate() {
            let _ = writeln!(s, "\nvoid e{i}(void)\n{{");
            render_block(&mut s, body, 2);
            s.push_str("}\n");
        }
        s
    }

    pub fn header(&self) -> String {
        let mut s = String::from("#ifndef M_H\n#define M_H\n");
        for i in 0..self.entries.len() {
            let _ = writeln!(s, "void e{i}(void);");
        }
        s.push_str("#endif\n");
        s
    }

    pub fn ext_header(&self) -> String {
        let mut s = String::from("#ifndef EXT_H\n#define EXT_H\n");
        for k in 0..self.externals {
            let _ = writeln!(s, "int x{k}(void);");
        }
        s.push_str("#endif\n");
        s
    }

    pub fn contract(&self) -> String {
        let entries: Vec<String> = (0..self.entries.len()).map(|i| format!("void e{i}(void)")).collect();
        let eo: Vec<String> = self.entry_order.iter().map(|(a, b)| format!("e{a} < e{b}")).collect();
        let ext: Vec<String> = (0..self.externals).map(|k| format!("int x{k}(void)")).collect();
        let xo: Vec<String> = self.ext_order.iter().map(|(a, b)| format!("x{a} < x{b}")).collect();
        format!(
            "module m {{\n  entry_points: {{ {} }}\n  entry_order: {{ {} }}\n  external_calls: {{ ext.h: {{ {} }} }}\n  external_call_order: {{ {} }}\n}}\n",
            entries.join(", "),
            eo.join(", "),
            ext.join(", "),
            xo.join(", ")
        )
    }

    pub fn write_to(&self, dir: &Path) {
        std::fs::write(dir.join("m.c"), self.source()).unwrap();
        std::fs::write(dir.join("m.h"), self.header()).unwrap();
        std::fs::write(dir.join("ext.h"), self.ext_header()).unwrap();
        std::fs::write(dir.join("m.is"), self.contract()).unwrap();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ev {
    Read(usize),
    Write(usize),
    Call(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Exit {
    Fall,
    Break,
    Return,
}

type Runs = BTreeSet<(Vec<Ev>, Exit)>;

/// Enumerates event traces of IR functions with loops run 0..=unroll times.
pub struct Interp<'m> {
    m: &'m GenModule,
    unroll: usize,
    helper_traces: Vec<Option<BTreeSet<Vec<Ev>>>>,
}

impl<'m> Interp<'m> {
    pub fn new(m: &'m GenModule, unroll: usize) -> Self {
        Interp { m, unroll, helper_traces: vec![None; m.helpers.len()] }
    }

    fn cond(&mut self, c: &Cond) -> BTreeSet<Vec<Ev>> {
        match c {
            Cond::Global(g) => BTreeSet::from([vec![Ev::Read(*g)]]),
            Cond::Ext(k) => BTreeSet::from([vec![Ev::Call(*k)]]),
            Cond::And(a, b) | Cond::Or(a, b) => {
                let ta = self.cond(a);
                let tb = self.cond(b);
                let mut out = ta.clone();
                for x in &ta {
                    for y in &tb {
                        out.insert(x.iter().chain(y).copied().collect());
                    }
                }
                out
            }
        }
    }

    fn helper(&mut self, i: usize) -> BTreeSet<Vec<Ev>> {
        if let Some(t) = &self.helper_traces[i] {
            return t.clone();
        }
        let body = self.m.helpers[i].clone();
        let t = self.function(&body);
        self.helper_traces[i] = Some(t.clone());
        t
    }

    pub fn entry(&mut self, i: usize) -> BTreeSet<Vec<Ev>> {
        let body = self.m.entries[i].clone();
        self.function(&body)
    }

    fn function(&mut self, body: &[Stmt]) -> BTreeSet<Vec<Ev>> {
        self.block(body, vec![]).into_iter().map(|(t, _)| t).collect()
    }

    /// All ways to run `stmts` after `prefix`.
    fn block(&mut self, stmts: &[Stmt], prefix: Vec<Ev>) -> Runs {
        let Some((first, rest)) = stmts.split_first() else {
            return BTreeSet::from([(prefix, Exit::Fall)]);
        };
        let mut out = BTreeSet::new();
        for (t, exit) in self.one(first, prefix) {
            if exit == Exit::Fall {
                out.extend(self.block(rest, t));
            } else {
                out.insert((t, exit));
            }
        }
        out
    }

    fn then(prefix: &[Ev], suffixes: &BTreeSet<Vec<Ev>>) -> Vec<Vec<Ev>> {
        suffixes.iter().map(|s| prefix.iter().chain(s).copied().collect()).collect()
    }

    fn one(&mut self, s: &Stmt, prefix: Vec<Ev>) -> Runs {
        let single = |mut p: Vec<Ev>, evs: &[Ev]| {
            p.extend_from_slice(evs);
            BTreeSet::from([(p, Exit::Fall)])
        };
        match s {
            Stmt::Write(g) => single(prefix, &[Ev::Write(*g)]),
            Stmt::Incr(g) => single(prefix, &[Ev::Read(*g), Ev::Write(*g)]),
            Stmt::Copy { dst, src } => single(prefix, &[Ev::Read(*src), Ev::Write(*dst)]),
            Stmt::Ext(k) => single(prefix, &[Ev::Call(*k)]),
            Stmt::Local(i) => {
                let h = self.helper(*i);
                Self::then(&prefix, &h).into_iter().map(|t| (t, Exit::Fall)).collect()
            }
            Stmt::Return => BTreeSet::from([(prefix, Exit::Return)]),
            Stmt::Break => BTreeSet::from([(prefix, Exit::Break)]),
            Stmt::If(c, a, b) => {
                let tc = self.cond(c);
                let mut out = BTreeSet::new();
                for t in Self::then(&prefix, &tc) {
                    out.extend(self.block(a, t.clone()));
                    out.extend(self.block(b, t));
                }
                out
            }
            Stmt::While(c, body) => {
                let tc = self.cond(c);
                let mut out = BTreeSet::new();
                let mut live = vec![prefix];
                for iter in 0..=self.unroll {
                    let mut next = Vec::new();
                    for p in live {
                        for t in Self::then(&p, &tc) {
                            // condition false: leave
                            out.insert((t.clone(), Exit::Fall));
                            if iter == self.unroll {
                                continue;
                            }
                            for (bt, exit) in self.block(body, t) {
                                match exit {
                                    Exit::Fall => next.push(bt),
                                    Exit::Break => {
                                        out.insert((bt, Exit::Fall));
                                    }
                                    Exit::Return => {
                                        out.insert((bt, Exit::Return));
                                    }
                                }
                            }
                        }
                    }
                    live = next;
                }
                out
            }
            Stmt::DoWhile(body, c) => {
                let tc = self.cond(c);
                let mut out = BTreeSet::new();
                let mut live = vec![prefix];
                for iter in 1..=self.unroll.max(1) {
                    let mut next = Vec::new();
                    for p in live {
                        for (bt, exit) in self.block(body, p) {
                            match exit {
                                Exit::Fall => {
                                    for t in Self::then(&bt, &tc) {
                                        out.insert((t.clone(), Exit::Fall));
                                        if iter < self.unroll.max(1) {
                                            next.push(t);
                                        }
                                    }
                                }
                                Exit::Break => {
                                    out.insert((bt, Exit::Fall));
                                }
                                Exit::Return => {
                                    out.insert((bt, Exit::Return));
                                }
                            }
                        }
                    }
                    live = next;
                }
                out
            }
        }
    }
}

/// Strict transitive closure of the entry order, as `before[e]` = entries that must start before `e`.
pub fn closure(n: usize, order: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in order {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n).map(|e| (0..n).filter(|&p| reach[p][e]).collect()).collect()
}

/// Explores every schedule of at most `max_len` entry invocations in which each
/// entry starts only after all of its ordered predecessors have started, and
/// every path combination. `step` updates the state with one event and returns
/// false on a violation.
fn explore<S: Clone + Eq + std::hash::Hash>(
    m: &GenModule,
    max_len: usize,
    unroll: usize,
    init: S,
    step: impl Fn(&mut S, Ev) -> bool,
) -> bool {
    let mut interp = Interp::new(m, unroll);
    let traces: Vec<BTreeSet<Vec<Ev>>> = (0..m.entries.len()).map(|i| interp.entry(i)).collect();
    let before = closure(m.entries.len(), &m.entry_order);
    let mut seen = HashSet::new();
    let mut stack = vec![(init, BTreeSet::<usize>::new(), max_len)];
    while let Some((state, started, left)) = stack.pop() {
        if left == 0 || !seen.insert((state.clone(), started.clone(), left)) {
            continue;
        }
        for e in 0..m.entries.len() {
            if !before[e].is_subset(&started) {
                continue;
            }
            let mut st = started.clone();
            st.insert(e);
            for t in &traces[e] {
                let mut s = state.clone();
                for &ev in t {
                    if !step(&mut s, ev) {
                        return true;
                    }
                }
                stack.push((s, st.clone(), left - 1));
            }
        }
    }
    false
}

/// True if some bounded run reads a global that has no initializer and was not yet written.
pub fn uninit_read_exists(m: &GenModule, max_len: usize, unroll: usize) -> bool {
    let init: BTreeSet<usize> = (0..m.globals.len()).filter(|&g| m.globals[g].is_some()).collect();
    explore(m, max_len, unroll, init, |w, ev| match ev {
        Ev::Read(g) => w.contains(&g),
        Ev::Write(g) => {
            w.insert(g);
            true
        }
        Ev::Call(_) => true,
    })
}

/// True if some bounded run calls `b` before any call of `a` for a constraint `a < b`.
pub fn order_violation_exists(m: &GenModule, max_len: usize, unroll: usize) -> bool {
    explore(m, max_len, unroll, BTreeSet::<usize>::new(), |called, ev| {
        if let Ev::Call(k) = ev {
            if m.ext_order.iter().any(|&(a, b)| b == k && !called.contains(&a)) {
                return false;
            }
            called.insert(k);
        }
        true
    })
}
