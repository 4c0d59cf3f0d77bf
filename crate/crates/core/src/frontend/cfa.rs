use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::{Cond, Expr, Program, RelOp, Stmt};
use super::FrontendError;

pub type Loc = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Assume(Cond),
    Assign(String, Expr),
    Havoc(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: Loc,
    pub op: Op,
    pub dst: Loc,
}

/// Control-flow automaton. Variables are implicitly zero-initialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfa {
    pub locations: BTreeSet<Loc>,
    pub edges: Vec<Edge>,
    pub initial: Loc,
    pub errors: BTreeSet<Loc>,
    /// Declared variables followed by generated ones (`__nondet_k`, `__pc`).
    pub vars: Vec<String>,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Assume(c) => write!(f, "[{c}]"),
            Op::Assign(x, e) => write!(f, "{x} = {e};"),
            Op::Havoc(x) => write!(f, "{x} = nondet();"),
        }
    }
}

impl fmt::Display for Cfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "initial l{}", self.initial)?;
        let errs: Vec<String> = self.errors.iter().map(|l| format!("l{l}")).collect();
        writeln!(f, "errors {}", errs.join(" "))?;
        for e in &self.edges {
            writeln!(f, "l{} -> l{}  {}", e.src, e.dst, e.op)?;
        }
        Ok(())
    }
}

impl Op {
    pub fn skip() -> Op {
        Op::Assume(Cond::Bool(true))
    }

    /// Variables read by this operation.
    pub fn uses(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Op::Assume(c) => c.vars(&mut out),
            Op::Assign(_, e) => e.vars(&mut out),
            Op::Havoc(_) => {}
        }
        out
    }

    /// Variable written by this operation.
    pub fn def(&self) -> Option<&str> {
        match self {
            Op::Assign(x, _) | Op::Havoc(x) => Some(x),
            Op::Assume(_) => None,
        }
    }
}

impl Cfa {
    pub fn out_edges(&self, l: Loc) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.src == l)
    }

    pub fn successors(&self) -> BTreeMap<Loc, Vec<usize>> {
        let mut m: BTreeMap<Loc, Vec<usize>> = self.locations.iter().map(|l| (*l, Vec::new())).collect();
        for (i, e) in self.edges.iter().enumerate() {
            m.entry(e.src).or_default().push(i);
        }
        m
    }

    pub fn fresh_loc(&self) -> Loc {
        self.locations.iter().next_back().map_or(0, |l| l + 1)
    }

    /// Targets of DFS back edges from the initial location.
    pub fn loop_heads(&self) -> BTreeSet<Loc> {
        let succ = self.successors();
        let mut heads = BTreeSet::new();
        let mut state: BTreeMap<Loc, u8> = BTreeMap::new(); // 1 = on stack, 2 = done
        let mut stack: Vec<(Loc, usize)> = vec![(self.initial, 0)];
        state.insert(self.initial, 1);
        while let Some((l, i)) = stack.pop() {
            let out = &succ[&l];
            if i < out.len() {
                stack.push((l, i + 1));
                let d = self.edges[out[i]].dst;
                match state.get(&d) {
                    Some(1) => {
                        heads.insert(d);
                    }
                    Some(_) => {}
                    None => {
                        state.insert(d, 1);
                        stack.push((d, 0));
                    }
                }
            } else {
                state.insert(l, 2);
            }
        }
        heads
    }

    /// Drops edges leaving error locations and everything unreachable.
    pub fn prune(&mut self) {
        let errors = self.errors.clone();
        self.edges.retain(|e| !errors.contains(&e.src));
        let mut seen = BTreeSet::from([self.initial]);
        let mut work = vec![self.initial];
        while let Some(l) = work.pop() {
            for e in self.edges.iter().filter(|e| e.src == l) {
                if seen.insert(e.dst) {
                    work.push(e.dst);
                }
            }
        }
        self.edges.retain(|e| seen.contains(&e.src));
        self.locations.retain(|l| seen.contains(l));
        self.errors.retain(|l| seen.contains(l));
    }

    /// Ensures the initial location has no incoming edge.
    pub fn isolate_initial(&mut self) {
        if self.edges.iter().any(|e| e.dst == self.initial) {
            let l = self.fresh_loc();
            self.locations.insert(l);
            self.edges.push(Edge {
                src: l,
                op: Op::skip(),
                dst: self.initial,
            });
            self.initial = l;
        }
    }
}

struct Builder {
    next: Loc,
    edges: Vec<Edge>,
    errors: BTreeSet<Loc>,
    initial: Loc,
    exit: Loc,
    temps: Vec<String>,
}

impl Builder {
    fn fresh(&mut self) -> Loc {
        let l = self.next;
        self.next += 1;
        l
    }

    fn edge(&mut self, src: Loc, op: Op, dst: Loc) {
        self.edges.push(Edge { src, op, dst });
    }

    fn entry_for(&mut self, stmts: &[Stmt], to: Loc) -> Loc {
        if stmts.is_empty() {
            to
        } else {
            self.fresh()
        }
    }

    fn block(&mut self, stmts: &[Stmt], from: Loc, to: Loc) {
        if stmts.is_empty() {
            if from != to {
                self.edge(from, Op::skip(), to);
            }
            return;
        }
        let mut cur = from;
        for (i, s) in stmts.iter().enumerate() {
            let next = if i + 1 == stmts.len() { to } else { self.fresh() };
            self.stmt(s, cur, next);
            cur = next;
        }
    }

    /// Emits the branch on `c` at `from`. A `nondet()` condition is havoced
    /// into a fresh temporary first, then tested against zero.
    fn branch(&mut self, c: &Cond, from: Loc, on_true: Loc, on_false: Loc) {
        match c {
            Cond::Nondet => {
                let t = format!("__nondet_{}", self.temps.len());
                self.temps.push(t.clone());
                let mid = self.fresh();
                self.edge(from, Op::Havoc(t.clone()), mid);
                let tv = Expr::Var(t);
                self.edge(mid, Op::Assume(Cond::Rel(RelOp::Ne, tv.clone(), Expr::Num(0))), on_true);
                self.edge(mid, Op::Assume(Cond::Rel(RelOp::Eq, tv, Expr::Num(0))), on_false);
            }
            c => {
                self.edge(from, Op::Assume(c.clone()), on_true);
                self.edge(from, Op::Assume(c.negate()), on_false);
            }
        }
    }

    fn stmt(&mut self, s: &Stmt, from: Loc, to: Loc) {
        match s {
            Stmt::Assign(x, e) => self.edge(from, Op::Assign(x.clone(), e.clone()), to),
            Stmt::Havoc(x) => self.edge(from, Op::Havoc(x.clone()), to),
            Stmt::Assume(c) => self.edge(from, Op::Assume(c.clone()), to),
            Stmt::Assert(c) => {
                let err = self.fresh();
                self.errors.insert(err);
                self.edge(from, Op::Assume(c.clone()), to);
                self.edge(from, Op::Assume(c.negate()), err);
            }
            Stmt::If(c, then, els) => {
                let els = els.as_deref().unwrap_or(&[]);
                let t = self.entry_for(then, to);
                let e = self.entry_for(els, to);
                self.branch(c, from, t, e);
                if !then.is_empty() {
                    self.block(then, t, to);
                }
                if !els.is_empty() {
                    self.block(els, e, to);
                }
            }
            Stmt::While(c, body) => {
                let b = self.entry_for(body, from);
                self.branch(c, from, b, to);
                if !body.is_empty() {
                    self.block(body, b, from);
                }
            }
            Stmt::Error(_) => {
                if from == self.initial {
                    let err = self.fresh();
                    self.edge(from, Op::skip(), err);
                    self.errors.insert(err);
                } else {
                    self.errors.insert(from);
                }
            }
            Stmt::Return => {
                let exit = self.exit;
                self.edge(from, Op::skip(), exit);
            }
            Stmt::Block(b) => self.block(b, from, to),
        }
    }
}

/// Builds the control-flow automaton of a type-checked program.
pub fn build_cfa(prog: &Program) -> Result<Cfa, FrontendError> {
    if !prog.body.iter().any(Stmt::has_error_site) {
        return Err(FrontendError::NoErrorLocation);
    }
    let mut b = Builder {
        next: 2,
        edges: Vec::new(),
        errors: BTreeSet::new(),
        initial: 0,
        exit: 1,
        temps: Vec::new(),
    };
    b.block(&prog.body, 0, 1);
    let mut vars = prog.decls.clone();
    vars.extend(b.temps);
    let mut cfa = Cfa {
        locations: (0..b.next).collect(),
        edges: b.edges,
        initial: 0,
        errors: b.errors,
        vars,
    };
    cfa.isolate_initial();
    cfa.prune();
    Ok(cfa)
}
