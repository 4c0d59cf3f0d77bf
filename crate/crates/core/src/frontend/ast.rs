use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(i64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    /// At least one side is variable-free (checked by the parser).
    Mul(Box<Expr>, Box<Expr>),
    /// Euclidean remainder by a positive literal.
    Mod(Box<Expr>, i64),
    /// Euclidean quotient by a positive literal.
    Div(Box<Expr>, i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cond {
    /// Only produced internally, never by the parser.
    Bool(bool),
    Rel(RelOp, Expr, Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    /// An integer used as a condition: true iff nonzero.
    Truthy(Expr),
    /// Bare `nondet()` as an `if`/`while` condition.
    Nondet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(String, Expr),
    /// `x = nondet();`
    Havoc(String),
    If(Cond, Vec<Stmt>, Option<Vec<Stmt>>),
    While(Cond, Vec<Stmt>),
    Assert(Cond),
    Assume(Cond),
    /// `ERROR: stmt`
    Error(Box<Stmt>),
    Return,
    Block(Vec<Stmt>),
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Program {
    pub decls: Vec<String>,
    pub body: Vec<Stmt>,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        }
    }
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// Value of a variable-free expression.
    pub fn constant_value(&self) -> Option<i64> {
        self.eval(&|_| None)
    }

    /// `None` on an unbound variable or arithmetic overflow.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Option<i64> {
        match self {
            Expr::Num(n) => Some(*n),
            Expr::Var(v) => env(v),
            Expr::Neg(a) => a.eval(env)?.checked_neg(),
            Expr::Add(a, b) => a.eval(env)?.checked_add(b.eval(env)?),
            Expr::Sub(a, b) => a.eval(env)?.checked_sub(b.eval(env)?),
            Expr::Mul(a, b) => a.eval(env)?.checked_mul(b.eval(env)?),
            Expr::Mod(a, c) => crate::formula::euclid_mod(a.eval(env)?, *c),
            Expr::Div(a, c) => crate::formula::euclid_div(a.eval(env)?, *c),
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Neg(a) | Expr::Mod(a, _) | Expr::Div(a, _) => a.vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    fn is_atomic(&self) -> bool {
        matches!(self, Expr::Num(n) if *n >= 0) || matches!(self, Expr::Var(_))
    }
}

impl Cond {
    pub fn and(a: Cond, b: Cond) -> Cond {
        Cond::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Cond, b: Cond) -> Cond {
        Cond::Or(Box::new(a), Box::new(b))
    }

    /// Syntactic negation: flips `==`/`!=`, strips a leading `!`.
    pub fn negate(&self) -> Cond {
        match self {
            Cond::Bool(b) => Cond::Bool(!b),
            Cond::Rel(RelOp::Eq, a, b) => Cond::Rel(RelOp::Ne, a.clone(), b.clone()),
            Cond::Rel(RelOp::Ne, a, b) => Cond::Rel(RelOp::Eq, a.clone(), b.clone()),
            Cond::Not(c) => (**c).clone(),
            c => Cond::Not(Box::new(c.clone())),
        }
    }

    /// `None` on an unbound variable, overflow, or `nondet()`.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Option<bool> {
        match self {
            Cond::Bool(b) => Some(*b),
            Cond::Rel(op, a, b) => Some(op.holds(a.eval(env)?, b.eval(env)?)),
            Cond::And(a, b) => Some(a.eval(env)? & b.eval(env)?),
            Cond::Or(a, b) => Some(a.eval(env)? | b.eval(env)?),
            Cond::Not(a) => Some(!a.eval(env)?),
            Cond::Truthy(e) => Some(e.eval(env)? != 0),
            Cond::Nondet => None,
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Cond::Bool(_) | Cond::Nondet => {}
            Cond::Rel(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Cond::Not(a) => a.vars(out),
            Cond::Truthy(e) => e.vars(out),
        }
    }
}

impl Stmt {
    /// Whether this statement (or a nested one) is an error label or assert.
    pub fn has_error_site(&self) -> bool {
        match self {
            Stmt::Error(_) | Stmt::Assert(_) => true,
            Stmt::If(_, t, e) => {
                t.iter().any(Stmt::has_error_site)
                    || e.iter().flatten().any(Stmt::has_error_site)
            }
            Stmt::While(_, b) | Stmt::Block(b) => b.iter().any(Stmt::has_error_site),
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(n) if *n < 0 => write!(f, "(-{})", n.unsigned_abs()),
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) if a.is_atomic() => write!(f, "-{a}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Mod(a, c) => write!(f, "({a} % {c})"),
            Expr::Div(a, c) => write!(f, "({a} / {c})"),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Bool(true) => f.write_str("(0 == 0)"),
            Cond::Bool(false) => f.write_str("(0 != 0)"),
            Cond::Rel(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Cond::And(a, b) => write!(f, "({a} && {b})"),
            Cond::Or(a, b) => write!(f, "({a} || {b})"),
            Cond::Not(a) => write!(f, "!{a}"),
            Cond::Truthy(e) => write!(f, "{e}"),
            Cond::Nondet => f.write_str("nondet()"),
        }
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, stmts: &[Stmt], indent: usize) -> fmt::Result {
    f.write_str("{\n")?;
    for s in stmts {
        write_stmt(f, s, indent + 1)?;
    }
    write!(f, "{:w$}}}", "", w = indent * 4)
}

fn write_stmt(f: &mut fmt::Formatter<'_>, s: &Stmt, indent: usize) -> fmt::Result {
    write!(f, "{:w$}", "", w = indent * 4)?;
    write_stmt_inline(f, s, indent)?;
    f.write_str("\n")
}

fn write_stmt_inline(f: &mut fmt::Formatter<'_>, s: &Stmt, indent: usize) -> fmt::Result {
    match s {
        Stmt::Assign(x, e) => write!(f, "{x} = {e};"),
        Stmt::Havoc(x) => write!(f, "{x} = nondet();"),
        Stmt::If(c, t, e) => {
            write!(f, "if ({c}) ")?;
            write_block(f, t, indent)?;
            if let Some(e) = e {
                f.write_str(" else ")?;
                write_block(f, e, indent)?;
            }
            Ok(())
        }
        Stmt::While(c, b) => {
            write!(f, "while ({c}) ")?;
            write_block(f, b, indent)
        }
        Stmt::Assert(c) => write!(f, "assert({c});"),
        Stmt::Assume(c) => write!(f, "assume({c});"),
        Stmt::Error(s) => {
            f.write_str("ERROR: ")?;
            write_stmt_inline(f, s, indent)
        }
        Stmt::Return => f.write_str("return;"),
        Stmt::Block(b) => write_block(f, b, indent),
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_stmt_inline(f, self, 0)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.decls {
            writeln!(f, "int {d};")?;
        }
        for s in &self.body {
            write_stmt(f, s, 0)?;
        }
        Ok(())
    }
}
