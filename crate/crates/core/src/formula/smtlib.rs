use std::collections::BTreeSet;
use std::fmt::Write;

use super::{Formula, SsaVar, Term};

/// Renders `f` as an SMT-LIB 2 term. Output is deterministic.
pub fn to_smtlib(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

/// `(declare-fun v () Int)` lines for every variable, in sorted order.
pub fn declarations<'a>(vars: impl IntoIterator<Item = &'a SsaVar>) -> String {
    let vars: BTreeSet<&SsaVar> = vars.into_iter().collect();
    let mut out = String::new();
    for v in vars {
        let _ = writeln!(out, "(declare-fun {v} () Int)");
    }
    out
}

fn write_const(c: i64, out: &mut String) {
    if c < 0 {
        let _ = write!(out, "(- {})", c.unsigned_abs());
    } else {
        let _ = write!(out, "{c}");
    }
}

pub(super) fn write_term(t: &Term, out: &mut String) {
    match t {
        Term::Const(c) => write_const(*c, out),
        Term::Var(v) => {
            let _ = write!(out, "{v}");
        }
        Term::Add(ts) => match ts.len() {
            0 => out.push('0'),
            1 => write_term(&ts[0], out),
            _ => {
                out.push_str("(+");
                for t in ts {
                    out.push(' ');
                    write_term(t, out);
                }
                out.push(')');
            }
        },
        Term::Sub(a, b) => {
            out.push_str("(- ");
            write_term(a, out);
            out.push(' ');
            write_term(b, out);
            out.push(')');
        }
        Term::Neg(a) => {
            out.push_str("(- ");
            write_term(a, out);
            out.push(')');
        }
        Term::Scale(c, a) => {
            out.push_str("(* ");
            write_const(*c, out);
            out.push(' ');
            write_term(a, out);
            out.push(')');
        }
        Term::Mod(a, c) => {
            out.push_str("(mod ");
            write_term(a, out);
            out.push(' ');
            write_const(*c, out);
            out.push(')');
        }
        Term::Div(a, c) => {
            out.push_str("(div ");
            write_term(a, out);
            out.push(' ');
            write_const(*c, out);
            out.push(')');
        }
    }
}

fn write_nary(op: &str, empty: &str, fs: &[Formula], out: &mut String) {
    match fs.len() {
        0 => out.push_str(empty),
        1 => write_formula(&fs[0], out),
        _ => {
            out.push('(');
            out.push_str(op);
            for f in fs {
                out.push(' ');
                write_formula(f, out);
            }
            out.push(')');
        }
    }
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Bool(true) => out.push_str("true"),
        Formula::Bool(false) => out.push_str("false"),
        Formula::Cmp(op, a, b) => {
            out.push('(');
            out.push_str(op.symbol());
            out.push(' ');
            write_term(a, out);
            out.push(' ');
            write_term(b, out);
            out.push(')');
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            write_formula(g, out);
            out.push(')');
        }
        Formula::And(fs) => write_nary("and", "true", fs, out),
        Formula::Or(fs) => write_nary("or", "false", fs, out),
        Formula::Implies(a, b) => {
            out.push_str("(=> ");
            write_formula(a, out);
            out.push(' ');
            write_formula(b, out);
            out.push(')');
        }
        Formula::Iff(a, b) => {
            out.push_str("(= ");
            write_formula(a, out);
            out.push(' ');
            write_formula(b, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::CmpOp;

    #[test]
    fn golden_renderings() {
        let f = Formula::eq(Term::var("x", 0), Term::Const(0));
        assert_eq!(to_smtlib(&f), "(= x!0 0)");

        let f = Formula::not(Formula::eq(
            Term::modulo(Term::var("x", 1), 2),
            Term::Const(0),
        ));
        assert_eq!(to_smtlib(&f), "(not (= (mod x!1 2) 0))");

        let f = Formula::and([
            Formula::cmp(CmpOp::Le, Term::Const(-3), Term::Scale(2, Box::new(Term::var("y", 4)))),
            Formula::implies(
                Formula::cmp(CmpOp::Gt, Term::div(Term::var("x", 0), 3), Term::Const(1)),
                Formula::eq(
                    Term::sub(Term::var("x", 0), Term::Neg(Box::new(Term::var("y", 0)))),
                    Term::Add(vec![Term::Const(1), Term::var("y", 1), Term::Const(2)]),
                ),
            ),
        ]);
        assert_eq!(
            to_smtlib(&f),
            "(and (<= (- 3) (* 2 y!4)) (=> (> (div x!0 3) 1) (= (- x!0 (- y!0)) (+ 1 y!1 2))))"
        );
    }

    #[test]
    fn declarations_are_sorted_and_deduplicated() {
        let vs = [SsaVar::new("y", 0), SsaVar::new("x", 2), SsaVar::new("y", 0)];
        assert_eq!(
            declarations(vs.iter()),
            "(declare-fun x!2 () Int)\n(declare-fun y!0 () Int)\n"
        );
    }
}
