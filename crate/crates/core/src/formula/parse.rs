//! Reads quantifier-free linear integer SMT-LIB terms back into [`Formula`].
//!
//! Accepts `let`, `ite` (boolean and integer), `abs`, `distinct`, `xor`,
//! `(_ divisible n)` and `div`/`mod` by non-zero constants. Integer `ite` is
//! lifted to the enclosing comparison, so the resulting formula stays within
//! the IR. Anything else (quantifiers, reals, non-linear products, unknown
//! symbols) is rejected.

use super::sexp::{self, Sexp};
use super::{CmpOp, Formula, SsaVar, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot read solver term: {0}")]
pub struct ParseError(pub String);

const MAX_CASES: usize = 256;

type Cases = Vec<(Formula, Term)>;

#[derive(Clone, Debug)]
enum Val {
    Bool(Formula),
    Int(Cases),
}

fn err<T>(msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError(msg.into()))
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let s = sexp::parse_one(text).map_err(|e| ParseError(e.to_string()))?;
    parse_formula_sexp(&s)
}

pub fn parse_formula_sexp(s: &Sexp) -> Result<Formula, ParseError> {
    let mut env = Vec::new();
    match parse(s, &mut env)? {
        Val::Bool(f) => Ok(f),
        Val::Int(_) => err(format!("expected a boolean term, got integer `{s}`")),
    }
}

/// Splits `name!index` into an SSA variable.
pub(crate) fn ssa_var_of(sym: &str) -> Option<SsaVar> {
    let (name, idx) = sym.rsplit_once('!')?;
    if name.is_empty() || idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(SsaVar::new(name, idx.parse().ok()?))
}

fn parse_numeral(a: &str) -> Option<i64> {
    if !a.is_empty() && a.bytes().all(|b| b.is_ascii_digit()) {
        a.parse().ok()
    } else {
        None
    }
}

fn single(t: Term) -> Val {
    Val::Int(vec![(Formula::TRUE, t)])
}

fn as_bool(v: Val, ctx: &Sexp) -> Result<Formula, ParseError> {
    match v {
        Val::Bool(f) => Ok(f),
        Val::Int(_) => err(format!("expected boolean in `{ctx}`")),
    }
}

fn as_int(v: Val, ctx: &Sexp) -> Result<Cases, ParseError> {
    match v {
        Val::Int(c) => Ok(c),
        Val::Bool(_) => err(format!("expected integer in `{ctx}`")),
    }
}

/// The constant value of an unguarded case list, if it is one.
fn as_const(c: &Cases) -> Option<i64> {
    match c.as_slice() {
        [(g, Term::Const(k))] if g.is_true() => Some(*k),
        [(g, Term::Neg(inner))] if g.is_true() => match **inner {
            Term::Const(k) => k.checked_neg(),
            _ => None,
        },
        _ => None,
    }
}

fn combine(
    a: Cases,
    b: Cases,
    mut f: impl FnMut(Term, Term) -> Result<Term, ParseError>,
) -> Result<Cases, ParseError> {
    if a.len() * b.len() > MAX_CASES {
        return err("integer if-then-else nesting too deep");
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (ga, ta) in &a {
        for (gb, tb) in &b {
            let g = Formula::and([ga.clone(), gb.clone()]);
            if g.is_false() {
                continue;
            }
            out.push((g, f(ta.clone(), tb.clone())?));
        }
    }
    Ok(out)
}

fn map_cases(a: Cases, mut f: impl FnMut(Term) -> Term) -> Cases {
    a.into_iter().map(|(g, t)| (g, f(t))).collect()
}

fn compare(op: CmpOp, a: &Cases, b: &Cases) -> Formula {
    let mut disj = Vec::new();
    for (ga, ta) in a {
        for (gb, tb) in b {
            disj.push(Formula::and([
                ga.clone(),
                gb.clone(),
                Formula::cmp(op, ta.clone(), tb.clone()),
            ]));
        }
    }
    Formula::or(disj)
}

fn lookup(env: &[(String, Val)], name: &str) -> Option<Val> {
    env.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v.clone())
}

fn parse(s: &Sexp, env: &mut Vec<(String, Val)>) -> Result<Val, ParseError> {
    match s {
        Sexp::Str(_) => err(format!("unexpected string `{s}`")),
        Sexp::Atom(a) => {
            if let Some(v) = lookup(env, a) {
                return Ok(v);
            }
            match a.as_str() {
                "true" => return Ok(Val::Bool(Formula::TRUE)),
                "false" => return Ok(Val::Bool(Formula::FALSE)),
                _ => {}
            }
            if let Some(n) = parse_numeral(a) {
                return Ok(single(Term::Const(n)));
            }
            if let Some(v) = ssa_var_of(a) {
                return Ok(single(Term::Var(v)));
            }
            err(format!("unknown symbol `{a}`"))
        }
        Sexp::List(items) => {
            let Some(head) = items.first() else {
                return err("empty application");
            };
            let args = &items[1..];
            if let Sexp::List(h) = head {
                // ((_ divisible n) t)
                if h.len() == 3 && h[0].is_atom("_") && h[1].is_atom("divisible") {
                    let Some(n) = h[2].atom().and_then(parse_numeral) else {
                        return err(format!("bad divisible index in `{s}`"));
                    };
                    if n == 0 || args.len() != 1 {
                        return err(format!("bad divisible application `{s}`"));
                    }
                    let t = as_int(parse(&args[0], env)?, s)?;
                    let m = map_cases(t, |t| Term::modulo(t, n));
                    return Ok(Val::Bool(compare(CmpOp::Eq, &m, &vec![(Formula::TRUE, Term::Const(0))])));
                }
                return err(format!("unsupported indexed application `{s}`"));
            }
            let op = head.atom().unwrap_or_default();
            match op {
                "let" => {
                    let Some(bindings) = args.first().and_then(Sexp::list) else {
                        return err(format!("malformed let `{s}`"));
                    };
                    if args.len() != 2 {
                        return err(format!("malformed let `{s}`"));
                    }
                    let mut vals = Vec::new();
                    for b in bindings {
                        match b.list() {
                            Some([Sexp::Atom(name), e]) => vals.push((name.clone(), parse(e, env)?)),
                            _ => return err(format!("malformed let binding `{b}`")),
                        }
                    }
                    let depth = env.len();
                    env.extend(vals);
                    let body = parse(&args[1], env);
                    env.truncate(depth);
                    body
                }
                "forall" | "exists" | "lambda" | "!" => err(format!("unsupported binder `{op}`")),
                "not" => {
                    let [a] = args else { return err(format!("bad arity in `{s}`")) };
                    Ok(Val::Bool(Formula::not(as_bool(parse(a, env)?, s)?)))
                }
                "and" | "or" => {
                    let fs = args
                        .iter()
                        .map(|a| parse(a, env).and_then(|v| as_bool(v, s)))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Val::Bool(if op == "and" {
                        Formula::and(fs)
                    } else {
                        Formula::or(fs)
                    }))
                }
                "=>" => {
                    if args.len() < 2 {
                        return err(format!("bad arity in `{s}`"));
                    }
                    let mut fs = args
                        .iter()
                        .map(|a| parse(a, env).and_then(|v| as_bool(v, s)))
                        .collect::<Result<Vec<_>, _>>()?;
                    // right associative
                    let mut acc = fs.pop().unwrap();
                    while let Some(f) = fs.pop() {
                        acc = Formula::Implies(Box::new(f), Box::new(acc));
                    }
                    Ok(Val::Bool(acc))
                }
                "xor" => {
                    let [a, b] = args else { return err(format!("bad arity in `{s}`")) };
                    let a = as_bool(parse(a, env)?, s)?;
                    let b = as_bool(parse(b, env)?, s)?;
                    Ok(Val::Bool(Formula::not(Formula::iff(a, b))))
                }
                "ite" => {
                    let [c, t, e] = args else { return err(format!("bad arity in `{s}`")) };
                    let c = as_bool(parse(c, env)?, s)?;
                    match (parse(t, env)?, parse(e, env)?) {
                        (Val::Bool(t), Val::Bool(e)) => Ok(Val::Bool(Formula::or([
                            Formula::and([c.clone(), t]),
                            Formula::and([Formula::not(c), e]),
                        ]))),
                        (Val::Int(t), Val::Int(e)) => {
                            if t.len() + e.len() > MAX_CASES {
                                return err("integer if-then-else nesting too deep");
                            }
                            let mut out: Cases = t
                                .into_iter()
                                .map(|(g, x)| (Formula::and([c.clone(), g]), x))
                                .collect();
                            out.extend(
                                e.into_iter()
                                    .map(|(g, x)| (Formula::and([Formula::not(c.clone()), g]), x)),
                            );
                            out.retain(|(g, _)| !g.is_false());
                            Ok(Val::Int(out))
                        }
                        _ => err(format!("ill-sorted ite `{s}`")),
                    }
                }
                "=" | "distinct" | "<" | "<=" | ">" | ">=" => {
                    if args.len() < 2 {
                        return err(format!("bad arity in `{s}`"));
                    }
                    let vals = args
                        .iter()
                        .map(|a| parse(a, env))
                        .collect::<Result<Vec<_>, _>>()?;
                    if vals.iter().all(|v| matches!(v, Val::Bool(_))) {
                        let fs: Vec<Formula> = vals
                            .into_iter()
                            .map(|v| match v {
                                Val::Bool(f) => f,
                                Val::Int(_) => unreachable!(),
                            })
                            .collect();
                        return match op {
                            "=" => Ok(Val::Bool(Formula::and(
                                fs.windows(2).map(|w| Formula::iff(w[0].clone(), w[1].clone())),
                            ))),
                            "distinct" if fs.len() == 2 => Ok(Val::Bool(Formula::not(Formula::iff(
                                fs[0].clone(),
                                fs[1].clone(),
                            )))),
                            _ => err(format!("ill-sorted comparison `{s}`")),
                        };
                    }
                    let ints = vals
                        .into_iter()
                        .map(|v| as_int(v, s))
                        .collect::<Result<Vec<_>, _>>()?;
                    if op == "distinct" {
                        let mut conj = Vec::new();
                        for i in 0..ints.len() {
                            for j in i + 1..ints.len() {
                                conj.push(Formula::not(compare(CmpOp::Eq, &ints[i], &ints[j])));
                            }
                        }
                        return Ok(Val::Bool(Formula::and(conj)));
                    }
                    let cmp = match op {
                        "=" => CmpOp::Eq,
                        "<" => CmpOp::Lt,
                        "<=" => CmpOp::Le,
                        ">" => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    };
                    Ok(Val::Bool(Formula::and(
                        ints.windows(2).map(|w| compare(cmp, &w[0], &w[1])),
                    )))
                }
                "+" => {
                    let mut acc: Option<Cases> = None;
                    for a in args {
                        let c = as_int(parse(a, env)?, s)?;
                        acc = Some(match acc {
                            None => map_cases(c, |t| Term::Add(vec![t])),
                            Some(prev) => combine(prev, c, |x, y| {
                                Ok(match x {
                                    Term::Add(mut v) => {
                                        v.push(y);
                                        Term::Add(v)
                                    }
                                    x => Term::Add(vec![x, y]),
                                })
                            })?,
                        });
                    }
                    let Some(acc) = acc else { return err(format!("bad arity in `{s}`")) };
                    Ok(Val::Int(map_cases(acc, |t| match t {
                        Term::Add(mut v) if v.len() == 1 => v.pop().unwrap(),
                        t => t,
                    })))
                }
                "-" => {
                    let mut vals = args
                        .iter()
                        .map(|a| parse(a, env).and_then(|v| as_int(v, s)))
                        .collect::<Result<Vec<_>, _>>()?;
                    match vals.len() {
                        0 => err(format!("bad arity in `{s}`")),
                        1 => Ok(Val::Int(map_cases(vals.pop().unwrap(), Term::neg))),
                        _ => {
                            let mut it = vals.into_iter();
                            let mut acc = it.next().unwrap();
                            for c in it {
                                acc = combine(acc, c, |x, y| Ok(Term::sub(x, y)))?;
                            }
                            Ok(Val::Int(acc))
                        }
                    }
                }
                "*" => {
                    let vals = args
                        .iter()
                        .map(|a| parse(a, env).and_then(|v| as_int(v, s)))
                        .collect::<Result<Vec<_>, _>>()?;
                    if vals.is_empty() {
                        return err(format!("bad arity in `{s}`"));
                    }
                    let mut coeff: i64 = 1;
                    let mut var_part: Option<Cases> = None;
                    for v in vals {
                        if let Some(k) = as_const(&v) {
                            coeff = coeff
                                .checked_mul(k)
                                .ok_or_else(|| ParseError("constant overflow".into()))?;
                        } else if var_part.is_none() {
                            var_part = Some(v);
                        } else {
                            return err(format!("non-linear product `{s}`"));
                        }
                    }
                    Ok(match var_part {
                        None => single(Term::Const(coeff)),
                        Some(c) if coeff == 1 => Val::Int(c),
                        Some(c) => Val::Int(map_cases(c, |t| Term::Scale(coeff, Box::new(t)))),
                    })
                }
                "div" | "mod" => {
                    let [a, d] = args else { return err(format!("bad arity in `{s}`")) };
                    let a = as_int(parse(a, env)?, s)?;
                    let d = as_int(parse(d, env)?, s)?;
                    let Some(k) = as_const(&d).filter(|k| *k != 0 && *k != i64::MIN) else {
                        return err(format!("division by a non-constant or zero in `{s}`"));
                    };
                    let c = k.abs();
                    Ok(Val::Int(if op == "mod" {
                        map_cases(a, |t| Term::modulo(t, c))
                    } else if k > 0 {
                        map_cases(a, |t| Term::div(t, c))
                    } else {
                        map_cases(a, |t| Term::neg(Term::div(t, c)))
                    }))
                }
                "abs" => {
                    let [a] = args else { return err(format!("bad arity in `{s}`")) };
                    let a = as_int(parse(a, env)?, s)?;
                    let mut out = Vec::new();
                    for (g, t) in a {
                        let nonneg = Formula::cmp(CmpOp::Ge, t.clone(), Term::Const(0));
                        out.push((Formula::and([g.clone(), nonneg.clone()]), t.clone()));
                        out.push((Formula::and([g, Formula::not(nonneg)]), Term::neg(t)));
                    }
                    Ok(Val::Int(out))
                }
                _ => err(format!("unsupported operator `{op}`")),
            }
        }
    }
}
