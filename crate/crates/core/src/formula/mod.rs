//! Quantifier-free formulas over SSA-indexed integer variables.
//!
//! Formulas are plain owned trees. The only normalization performed by the
//! smart constructors is folding of boolean literals (`true`/`false`) inside
//! connectives; arithmetic is never rewritten.

mod parse;
pub mod sexp;
mod smtlib;
mod ssa;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use parse::{parse_formula, parse_formula_sexp, ParseError};
pub use smtlib::{declarations, to_smtlib};
pub use ssa::{instantiate, shift_variable_index, FormulaTemplate, IndexPool, SsaMap};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("variable {0} is not bound by the source SSA map")]
    UnboundVariable(SsaVar),
    #[error("SSA index {0} was already issued in this run")]
    IndexCollision(SsaVar),
    #[error("base SSA map has no entry for `{0}`")]
    MissingBase(String),
}

/// A program variable at one SSA generation, rendered `name!index`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SsaVar {
    pub name: Arc<str>,
    pub index: u32,
}

impl SsaVar {
    pub fn new(name: impl Into<Arc<str>>, index: u32) -> Self {
        SsaVar {
            name: name.into(),
            index,
        }
    }
}

impl fmt::Display for SsaVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}!{}", self.name, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Const(i64),
    Var(SsaVar),
    Add(Vec<Term>),
    Sub(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    /// Multiplication by an integer constant.
    Scale(i64, Box<Term>),
    /// Euclidean remainder by a positive constant.
    Mod(Box<Term>, i64),
    /// Euclidean (floor for positive divisors) quotient by a positive constant.
    Div(Box<Term>, i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Bool(bool),
    Cmp(CmpOp, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

/// Euclidean remainder; `None` for a non-positive divisor.
pub fn euclid_mod(a: i64, c: i64) -> Option<i64> {
    (c > 0).then(|| a.rem_euclid(c))
}

pub fn euclid_div(a: i64, c: i64) -> Option<i64> {
    (c > 0).then(|| a.div_euclid(c))
}

impl Term {
    pub fn var(name: impl Into<Arc<str>>, index: u32) -> Term {
        Term::Var(SsaVar::new(name, index))
    }

    pub fn neg(t: Term) -> Term {
        match t {
            Term::Const(c) if c != i64::MIN => Term::Const(-c),
            t => Term::Neg(Box::new(t)),
        }
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(vec![a, b])
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn modulo(t: Term, c: i64) -> Term {
        Term::Mod(Box::new(t), c)
    }

    pub fn div(t: Term, c: i64) -> Term {
        Term::Div(Box::new(t), c)
    }

    /// Evaluates under `env`; `None` on an unassigned variable or overflow.
    pub fn eval(&self, env: &dyn Fn(&SsaVar) -> Option<i64>) -> Option<i64> {
        match self {
            Term::Const(c) => Some(*c),
            Term::Var(v) => env(v),
            Term::Add(ts) => ts
                .iter()
                .try_fold(0i64, |acc, t| acc.checked_add(t.eval(env)?)),
            Term::Sub(a, b) => a.eval(env)?.checked_sub(b.eval(env)?),
            Term::Neg(a) => a.eval(env)?.checked_neg(),
            Term::Scale(c, a) => a.eval(env)?.checked_mul(*c),
            Term::Mod(a, c) => euclid_mod(a.eval(env)?, *c),
            Term::Div(a, c) => euclid_div(a.eval(env)?, *c),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<SsaVar>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Add(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Term::Sub(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Term::Neg(a) | Term::Scale(_, a) | Term::Mod(a, _) | Term::Div(a, _) => {
                a.collect_vars(out)
            }
        }
    }

    fn try_map_vars<E>(
        &self,
        f: &mut dyn FnMut(&SsaVar) -> Result<SsaVar, E>,
    ) -> Result<Term, E> {
        Ok(match self {
            Term::Const(c) => Term::Const(*c),
            Term::Var(v) => Term::Var(f(v)?),
            Term::Add(ts) => Term::Add(
                ts.iter()
                    .map(|t| t.try_map_vars(f))
                    .collect::<Result<_, _>>()?,
            ),
            Term::Sub(a, b) => {
                let a = a.try_map_vars(f)?;
                Term::Sub(Box::new(a), Box::new(b.try_map_vars(f)?))
            }
            Term::Neg(a) => Term::Neg(Box::new(a.try_map_vars(f)?)),
            Term::Scale(c, a) => Term::Scale(*c, Box::new(a.try_map_vars(f)?)),
            Term::Mod(a, c) => Term::Mod(Box::new(a.try_map_vars(f)?), *c),
            Term::Div(a, c) => Term::Div(Box::new(a.try_map_vars(f)?), *c),
        })
    }

    fn collect_constants(&self, out: &mut BTreeSet<i64>) {
        match self {
            Term::Const(c) => {
                out.insert(*c);
            }
            Term::Var(_) => {}
            Term::Add(ts) => ts.iter().for_each(|t| t.collect_constants(out)),
            Term::Sub(a, b) => {
                a.collect_constants(out);
                b.collect_constants(out);
            }
            Term::Neg(a) => a.collect_constants(out),
            Term::Scale(c, a) | Term::Mod(a, c) | Term::Div(a, c) => {
                out.insert(*c);
                a.collect_constants(out);
            }
        }
    }
}

impl Formula {
    pub const TRUE: Formula = Formula::Bool(true);
    pub const FALSE: Formula = Formula::Bool(false);

    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Eq, a, b)
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Bool(b) => Formula::Bool(!b),
            f => Formula::Not(Box::new(f)),
        }
    }

    /// Conjunction with boolean-literal folding.
    pub fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::Bool(true) => {}
                Formula::Bool(false) => return Formula::FALSE,
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::TRUE,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with boolean-literal folding.
    pub fn or(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::Bool(false) => {}
                Formula::Bool(true) => return Formula::TRUE,
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::FALSE,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::Bool(false), _) | (_, Formula::Bool(true)) => Formula::TRUE,
            (Formula::Bool(true), b) => b,
            (a, b) => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Bool(false))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::Bool(true))
    }

    pub fn eval(&self, env: &dyn Fn(&SsaVar) -> Option<i64>) -> Option<bool> {
        match self {
            Formula::Bool(b) => Some(*b),
            Formula::Cmp(op, a, b) => Some(op.holds(a.eval(env)?, b.eval(env)?)),
            Formula::Not(f) => Some(!f.eval(env)?),
            Formula::And(fs) => {
                let mut all = true;
                for f in fs {
                    all &= f.eval(env)?;
                }
                Some(all)
            }
            Formula::Or(fs) => {
                let mut any = false;
                for f in fs {
                    any |= f.eval(env)?;
                }
                Some(any)
            }
            Formula::Implies(a, b) => Some(!a.eval(env)? || b.eval(env)?),
            Formula::Iff(a, b) => Some(a.eval(env)? == b.eval(env)?),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<SsaVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<SsaVar>) {
        match self {
            Formula::Bool(_) => {}
            Formula::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// All integer constants, including divisors and scale factors.
    pub fn constants(&self) -> BTreeSet<i64> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |f| {
            if let Formula::Cmp(_, a, b) = f {
                a.collect_constants(&mut out);
                b.collect_constants(&mut out);
            }
        });
        out
    }

    /// Calls `visit` on every comparison atom, left to right.
    pub fn visit_atoms(&self, visit: &mut dyn FnMut(&Formula)) {
        match self {
            Formula::Bool(_) => {}
            Formula::Cmp(..) => visit(self),
            Formula::Not(f) => f.visit_atoms(visit),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit_atoms(visit)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit_atoms(visit);
                b.visit_atoms(visit);
            }
        }
    }

    /// Rewrites every variable occurrence, in left-to-right order.
    pub fn try_map_vars<E>(
        &self,
        f: &mut dyn FnMut(&SsaVar) -> Result<SsaVar, E>,
    ) -> Result<Formula, E> {
        Ok(match self {
            Formula::Bool(b) => Formula::Bool(*b),
            Formula::Cmp(op, a, b) => {
                let a = a.try_map_vars(f)?;
                Formula::Cmp(*op, a, b.try_map_vars(f)?)
            }
            Formula::Not(g) => Formula::Not(Box::new(g.try_map_vars(f)?)),
            Formula::And(gs) => Formula::And(
                gs.iter()
                    .map(|g| g.try_map_vars(f))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(gs) => Formula::Or(
                gs.iter()
                    .map(|g| g.try_map_vars(f))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Implies(a, b) => {
                let a = a.try_map_vars(f)?;
                Formula::Implies(Box::new(a), Box::new(b.try_map_vars(f)?))
            }
            Formula::Iff(a, b) => {
                let a = a.try_map_vars(f)?;
                Formula::Iff(Box::new(a), Box::new(b.try_map_vars(f)?))
            }
        })
    }

    pub fn map_vars(&self, f: &mut dyn FnMut(&SsaVar) -> SsaVar) -> Formula {
        self.try_map_vars::<std::convert::Infallible>(&mut |v| Ok(f(v)))
            .unwrap_or_else(|e| match e {})
    }

    /// Number of nodes, counting terms.
    pub fn size(&self) -> usize {
        fn term_size(t: &Term) -> usize {
            match t {
                Term::Const(_) | Term::Var(_) => 1,
                Term::Add(ts) => 1 + ts.iter().map(term_size).sum::<usize>(),
                Term::Sub(a, b) => 1 + term_size(a) + term_size(b),
                Term::Neg(a) | Term::Scale(_, a) | Term::Mod(a, _) | Term::Div(a, _) => {
                    1 + term_size(a)
                }
            }
        }
        match self {
            Formula::Bool(_) => 1,
            Formula::Cmp(_, a, b) => 1 + term_size(a) + term_size(b),
            Formula::Not(f) => f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        smtlib::write_term(self, &mut s);
        f.write_str(&s)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_smtlib(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_semantics() {
        assert_eq!(euclid_mod(-3, 2), Some(1));
        assert_eq!(euclid_div(-3, 2), Some(-2));
        assert_eq!(euclid_mod(7, 3), Some(1));
        assert_eq!(euclid_mod(1, 0), None);
    }

    #[test]
    fn connectives_fold_literals() {
        let a = Formula::eq(Term::var("x", 0), Term::Const(0));
        assert_eq!(Formula::and([Formula::TRUE, a.clone()]), a);
        assert_eq!(Formula::and([Formula::FALSE, a.clone()]), Formula::FALSE);
        assert_eq!(Formula::or([Formula::FALSE, a.clone()]), a);
        assert_eq!(Formula::or([a.clone(), Formula::TRUE]), Formula::TRUE);
        assert_eq!(Formula::and([]), Formula::TRUE);
        assert_eq!(Formula::or([]), Formula::FALSE);
        assert_eq!(Formula::not(Formula::TRUE), Formula::FALSE);
    }

    #[test]
    fn evaluation() {
        // not (x!1 mod 2 = 0)
        let f = Formula::not(Formula::eq(
            Term::modulo(Term::var("x", 1), 2),
            Term::Const(0),
        ));
        let env = |v: &SsaVar| (v.index == 1).then_some(-3);
        assert_eq!(f.eval(&env), Some(true));
        let env = |_: &SsaVar| None;
        assert_eq!(f.eval(&env), None);
    }
}
