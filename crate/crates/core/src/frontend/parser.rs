use std::collections::HashSet;

use super::ast::{Cond, Expr, Program, RelOp, Stmt};
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

/// Parses and type-checks a MiniC program.
pub fn parse(source: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        declared: HashSet::new(),
    };
    p.program()
}

enum Typed {
    Int(Expr),
    Bool(Cond),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    declared: HashSet<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, expected: &[&str]) -> Result<T, FrontendError> {
        let (line, col) = self.here();
        Err(FrontendError::Syntax {
            line,
            col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn type_error<T>(&self, at: (usize, usize), message: impl Into<String>) -> Result<T, FrontendError> {
        Err(FrontendError::Type {
            line: at.0,
            col: at.1,
            message: message.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<(), FrontendError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&[&format!("`{s}`")])
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(&["identifier"]),
        }
    }

    fn program(&mut self) -> Result<Program, FrontendError> {
        let mut prog = Program::default();
        while self.is_kw("int") {
            self.bump();
            let at = self.here();
            let name = self.ident()?;
            if name.starts_with("__") {
                return self.type_error(at, format!("identifier `{name}` uses the reserved `__` prefix"));
            }
            if !self.declared.insert(name.clone()) {
                return self.type_error(at, format!("variable `{name}` is declared twice"));
            }
            self.expect_sym(";")?;
            prog.decls.push(name);
        }
        while *self.peek() != Tok::Eof {
            prog.body.push(self.stmt()?);
        }
        Ok(prog)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.is_sym("}") {
            if *self.peek() == Tok::Eof {
                return self.unexpected(&["`}`"]);
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let at = self.here();
                self.bump();
                self.check_declared(&name, at)?;
                self.expect_sym("=")?;
                let nondet_rhs = matches!(self.peek(), Tok::Kw("nondet"))
                    && matches!(self.peek_at(1), Tok::Sym("("))
                    && matches!(self.peek_at(2), Tok::Sym(")"))
                    && matches!(self.peek_at(3), Tok::Sym(";"));
                if nondet_rhs {
                    self.pos += 3;
                    self.expect_sym(";")?;
                    return Ok(Stmt::Havoc(name));
                }
                let e = self.int_expr()?;
                self.expect_sym(";")?;
                Ok(Stmt::Assign(name, e))
            }
            Tok::Kw("if") => {
                self.bump();
                let c = self.head_cond()?;
                let then = self.block()?;
                let els = if self.is_kw("else") {
                    self.bump();
                    Some(self.block()?)
                } else {
                    None
                };
                Ok(Stmt::If(c, then, els))
            }
            Tok::Kw("while") => {
                self.bump();
                let c = self.head_cond()?;
                Ok(Stmt::While(c, self.block()?))
            }
            Tok::Kw(kw @ ("assert" | "assume")) => {
                self.bump();
                self.expect_sym("(")?;
                let c = self.cond()?;
                self.expect_sym(")")?;
                self.expect_sym(";")?;
                Ok(if kw == "assert" { Stmt::Assert(c) } else { Stmt::Assume(c) })
            }
            Tok::Kw("ERROR") => {
                self.bump();
                self.expect_sym(":")?;
                Ok(Stmt::Error(Box::new(self.stmt()?)))
            }
            Tok::Kw("return") => {
                self.bump();
                self.expect_sym(";")?;
                Ok(Stmt::Return)
            }
            Tok::Sym("{") => Ok(Stmt::Block(self.block()?)),
            _ => self.unexpected(&[
                "identifier",
                "`if`",
                "`while`",
                "`assert`",
                "`assume`",
                "`ERROR`",
                "`return`",
                "`{`",
            ]),
        }
    }

    /// `( cond )` after `if`/`while`, where a bare `nondet()` is allowed.
    fn head_cond(&mut self) -> Result<Cond, FrontendError> {
        self.expect_sym("(")?;
        let bare_nondet = matches!(self.peek(), Tok::Kw("nondet"))
            && matches!(self.peek_at(1), Tok::Sym("("))
            && matches!(self.peek_at(2), Tok::Sym(")"))
            && matches!(self.peek_at(3), Tok::Sym(")"));
        let c = if bare_nondet {
            self.pos += 3;
            Cond::Nondet
        } else {
            self.cond()?
        };
        self.expect_sym(")")?;
        Ok(c)
    }

    fn check_declared(&self, name: &str, at: (usize, usize)) -> Result<(), FrontendError> {
        if self.declared.contains(name) {
            Ok(())
        } else {
            self.type_error(at, format!("variable `{name}` is not declared"))
        }
    }

    fn cond(&mut self) -> Result<Cond, FrontendError> {
        let v = self.or_expr()?;
        Ok(to_cond(v))
    }

    fn int_expr(&mut self) -> Result<Expr, FrontendError> {
        let at = self.here();
        let v = self.or_expr()?;
        self.to_int(v, at)
    }

    fn to_int(&self, v: Typed, at: (usize, usize)) -> Result<Expr, FrontendError> {
        match v {
            Typed::Int(e) => Ok(e),
            Typed::Bool(_) => self.type_error(at, "condition used where an integer is expected"),
        }
    }

    fn or_expr(&mut self) -> Result<Typed, FrontendError> {
        let mut lhs = self.and_expr()?;
        while self.is_sym("||") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Typed::Bool(Cond::or(to_cond(lhs), to_cond(rhs)));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Typed, FrontendError> {
        let mut lhs = self.eq_expr()?;
        while self.is_sym("&&") {
            self.bump();
            let rhs = self.eq_expr()?;
            lhs = Typed::Bool(Cond::and(to_cond(lhs), to_cond(rhs)));
        }
        Ok(lhs)
    }

    fn eq_expr(&mut self) -> Result<Typed, FrontendError> {
        let at = self.here();
        let mut lhs = self.rel_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("==") => RelOp::Eq,
                Tok::Sym("!=") => RelOp::Ne,
                _ => return Ok(lhs),
            };
            self.bump();
            let rat = self.here();
            let rhs = self.rel_expr()?;
            lhs = Typed::Bool(Cond::Rel(op, self.to_int(lhs, at)?, self.to_int(rhs, rat)?));
        }
    }

    fn rel_expr(&mut self) -> Result<Typed, FrontendError> {
        let at = self.here();
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("<") => RelOp::Lt,
                Tok::Sym("<=") => RelOp::Le,
                Tok::Sym(">") => RelOp::Gt,
                Tok::Sym(">=") => RelOp::Ge,
                _ => return Ok(lhs),
            };
            self.bump();
            let rat = self.here();
            let rhs = self.add_expr()?;
            lhs = Typed::Bool(Cond::Rel(op, self.to_int(lhs, at)?, self.to_int(rhs, rat)?));
        }
    }

    fn add_expr(&mut self) -> Result<Typed, FrontendError> {
        let at = self.here();
        let mut lhs = self.mul_expr()?;
        loop {
            let add = match self.peek() {
                Tok::Sym("+") => true,
                Tok::Sym("-") => false,
                _ => return Ok(lhs),
            };
            self.bump();
            let rat = self.here();
            let rhs = self.mul_expr()?;
            let (a, b) = (self.to_int(lhs, at)?, self.to_int(rhs, rat)?);
            lhs = Typed::Int(if add {
                Expr::Add(Box::new(a), Box::new(b))
            } else {
                Expr::Sub(Box::new(a), Box::new(b))
            });
        }
    }

    fn mul_expr(&mut self) -> Result<Typed, FrontendError> {
        let at = self.here();
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym(s @ ("*" | "/" | "%")) => *s,
                _ => return Ok(lhs),
            };
            let op_at = self.here();
            self.bump();
            let rat = self.here();
            let rhs = self.unary()?;
            let (a, b) = (self.to_int(lhs, at)?, self.to_int(rhs, rat)?);
            lhs = Typed::Int(match op {
                "*" => {
                    if a.constant_value().is_none() && b.constant_value().is_none() {
                        return self.type_error(op_at, "non-linear multiplication");
                    }
                    Expr::Mul(Box::new(a), Box::new(b))
                }
                _ => {
                    let Expr::Num(c) = b else {
                        return self.type_error(rat, format!("`{op}` needs a positive integer literal divisor"));
                    };
                    if c <= 0 {
                        return self.type_error(rat, format!("`{op}` needs a positive integer literal divisor"));
                    }
                    if op == "%" {
                        Expr::Mod(Box::new(a), c)
                    } else {
                        Expr::Div(Box::new(a), c)
                    }
                }
            });
        }
    }

    fn unary(&mut self) -> Result<Typed, FrontendError> {
        match self.peek() {
            Tok::Sym("!") => {
                self.bump();
                let v = self.unary()?;
                Ok(Typed::Bool(Cond::Not(Box::new(to_cond(v)))))
            }
            Tok::Sym("-") => {
                self.bump();
                let rat = self.here();
                let v = self.unary()?;
                Ok(Typed::Int(Expr::Neg(Box::new(self.to_int(v, rat)?))))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Typed, FrontendError> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Typed::Int(Expr::Num(n)))
            }
            Tok::Ident(name) => {
                self.bump();
                self.check_declared(&name, at)?;
                Ok(Typed::Int(Expr::Var(name)))
            }
            Tok::Sym("(") => {
                self.bump();
                let v = self.or_expr()?;
                self.expect_sym(")")?;
                Ok(v)
            }
            Tok::Kw("nondet") => self.type_error(
                at,
                "`nondet()` is only allowed as a whole assignment right-hand side or a bare `if`/`while` condition",
            ),
            _ => self.unexpected(&["integer literal", "identifier", "`(`", "`!`", "`-`"]),
        }
    }
}

fn to_cond(v: Typed) -> Cond {
    match v {
        Typed::Bool(c) => c,
        Typed::Int(e) => Cond::Truthy(e),
    }
}
