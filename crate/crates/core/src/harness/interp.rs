//! Concrete interpreters over the AST and over the CFA, enumerating every
//! execution within a fuel budget and a value domain.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::{Cond, Expr, Program, Stmt};
use crate::frontend::{Cfa, Op};
use crate::transform::PC_VAR;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Error,
    Exit,
}

/// How an execution ended, with the final values of the declared variables.
pub type Final = (Outcome, Vec<i64>);

type Env = BTreeMap<String, i64>;

/// Bounds shared by both interpreters: loop-condition evaluations (equal to
/// loop-head visits) and the value domain `[-bound, bound]`. Assignments
/// leaving the domain cut the execution, except those to the program counter
/// introduced by the single-loop transformation.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub fuel: usize,
    pub bound: i64,
}

fn lookup(env: &Env) -> impl Fn(&str) -> Option<i64> + '_ {
    move |v| Some(env.get(v).copied().unwrap_or(0))
}

fn eval_expr(e: &Expr, env: &Env) -> Option<i64> {
    e.eval(&lookup(env))
}

fn eval_cond(c: &Cond, env: &Env) -> Option<bool> {
    c.eval(&lookup(env))
}

fn project(env: &Env, decls: &[String]) -> Vec<i64> {
    decls.iter().map(|d| env.get(d).copied().unwrap_or(0)).collect()
}

enum Flow {
    Normal,
    Stop(Outcome),
}

struct Ast<'a> {
    limits: Limits,
    decls: &'a [String],
}

impl Ast<'_> {
    fn branches(&self, c: &Cond, env: &Env) -> Vec<bool> {
        match c {
            Cond::Nondet => vec![true, false],
            c => c.eval(&lookup(env)).into_iter().collect(),
        }
    }

    fn block(&self, stmts: &[Stmt], env: Env, fuel: usize) -> Vec<(Flow, Env, usize)> {
        let mut live = vec![(env, fuel)];
        let mut done = Vec::new();
        for s in stmts {
            let mut next = Vec::new();
            for (env, fuel) in live {
                for (flow, env, fuel) in self.stmt(s, env, fuel) {
                    match flow {
                        Flow::Normal => next.push((env, fuel)),
                        stop => done.push((stop, env, fuel)),
                    }
                }
            }
            live = next;
        }
        done.extend(live.into_iter().map(|(e, f)| (Flow::Normal, e, f)));
        done
    }

    fn stmt(&self, s: &Stmt, mut env: Env, fuel: usize) -> Vec<(Flow, Env, usize)> {
        let b = self.limits.bound;
        match s {
            Stmt::Assign(x, e) => match eval_expr(e, &env) {
                Some(v) if (-b..=b).contains(&v) => {
                    env.insert(x.clone(), v);
                    vec![(Flow::Normal, env, fuel)]
                }
                _ => vec![],
            },
            Stmt::Havoc(x) => (-b..=b)
                .map(|v| {
                    let mut e = env.clone();
                    e.insert(x.clone(), v);
                    (Flow::Normal, e, fuel)
                })
                .collect(),
            Stmt::If(c, t, e) => {
                let mut out = Vec::new();
                for taken in self.branches(c, &env) {
                    match (taken, e) {
                        (true, _) => out.extend(self.block(t, env.clone(), fuel)),
                        (false, Some(e)) => out.extend(self.block(e, env.clone(), fuel)),
                        (false, None) => out.push((Flow::Normal, env.clone(), fuel)),
                    }
                }
                out
            }
            Stmt::While(c, body) => {
                let mut out = Vec::new();
                let mut live = vec![(env, fuel)];
                while !live.is_empty() {
                    let mut next = Vec::new();
                    for (env, fuel) in live {
                        if fuel == 0 {
                            continue;
                        }
                        for taken in self.branches(c, &env) {
                            if !taken {
                                out.push((Flow::Normal, env.clone(), fuel - 1));
                                continue;
                            }
                            for (flow, env, fuel) in self.block(body, env.clone(), fuel - 1) {
                                match flow {
                                    Flow::Normal => next.push((env, fuel)),
                                    stop => out.push((stop, env, fuel)),
                                }
                            }
                        }
                    }
                    live = next;
                }
                out
            }
            Stmt::Assert(c) => match eval_cond(c, &env) {
                Some(true) => vec![(Flow::Normal, env, fuel)],
                Some(false) => vec![(Flow::Stop(Outcome::Error), env, fuel)],
                None => vec![],
            },
            Stmt::Assume(c) => match eval_cond(c, &env) {
                Some(true) => vec![(Flow::Normal, env, fuel)],
                _ => vec![],
            },
            Stmt::Error(_) => vec![(Flow::Stop(Outcome::Error), env, fuel)],
            Stmt::Return => vec![(Flow::Stop(Outcome::Exit), env, fuel)],
            Stmt::Block(b) => self.block(b, env, fuel),
        }
    }
}

/// Every terminating execution of `prog` within `limits`.
pub fn run_program(prog: &Program, limits: Limits) -> BTreeSet<Final> {
    let ast = Ast {
        limits,
        decls: &prog.decls,
    };
    ast.block(&prog.body, Env::new(), limits.fuel)
        .into_iter()
        .map(|(flow, env, _)| {
            let o = match flow {
                Flow::Normal => Outcome::Exit,
                Flow::Stop(o) => o,
            };
            (o, project(&env, ast.decls))
        })
        .collect()
}

/// Applies one CFA operation, returning every successor environment.
pub(crate) fn step(op: &Op, env: &Env, havoc: &dyn Fn(&str) -> Vec<i64>, bound: Option<i64>) -> (Vec<Env>, bool) {
    let in_domain = |v: i64| bound.is_none_or(|b| (-b..=b).contains(&v));
    match op {
        Op::Assume(c) => match c.eval(&lookup(env)) {
            Some(true) => (vec![env.clone()], false),
            Some(false) => (vec![], false),
            None => (vec![], true),
        },
        Op::Assign(x, e) => match e.eval(&lookup(env)) {
            Some(v) if in_domain(v) || x == PC_VAR => {
                let mut n = env.clone();
                n.insert(x.clone(), v);
                (vec![n], false)
            }
            _ => (vec![], true),
        },
        Op::Havoc(x) => (
            havoc(x)
                .into_iter()
                .map(|v| {
                    let mut n = env.clone();
                    n.insert(x.clone(), v);
                    n
                })
                .collect(),
            false,
        ),
    }
}

/// Every terminating execution of `cfa` within `limits`, projected to `decls`.
pub fn run_cfa(cfa: &Cfa, decls: &[String], limits: Limits) -> BTreeSet<Final> {
    let heads = cfa.loop_heads();
    let b = limits.bound;
    let havoc = |_: &str| (-b..=b).collect::<Vec<_>>();
    let mut out = BTreeSet::new();
    let mut stack = vec![(cfa.initial, Env::new(), limits.fuel)];
    let mut seen = BTreeSet::new();
    while let Some((l, env, fuel)) = stack.pop() {
        let fuel = if heads.contains(&l) {
            if fuel == 0 {
                continue;
            }
            fuel - 1
        } else {
            fuel
        };
        if cfa.errors.contains(&l) {
            out.insert((Outcome::Error, project(&env, decls)));
            continue;
        }
        let mut any = false;
        for e in cfa.out_edges(l) {
            any = true;
            for n in step(&e.op, &env, &havoc, Some(b)).0 {
                if seen.insert((e.dst, n.clone(), fuel)) {
                    stack.push((e.dst, n, fuel));
                }
            }
        }
        if !any {
            out.insert((Outcome::Exit, project(&env, decls)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_cfa, parse};
    use crate::transform::single_loop_transform;

    fn both(src: &str, limits: Limits) -> (BTreeSet<Final>, BTreeSet<Final>) {
        let p = parse(src).unwrap();
        let cfa = build_cfa(&p).unwrap();
        (run_program(&p, limits), run_cfa(&cfa, &p.decls, limits))
    }

    #[test]
    fn counter_paths_agree() {
        let (a, c) = both(
            "int x; while (nondet()) { x = x + 1; } assert(x != 2);",
            Limits { fuel: 4, bound: 5 },
        );
        assert_eq!(a, c);
        assert!(a.contains(&(Outcome::Error, vec![2])));
        assert!(a.contains(&(Outcome::Exit, vec![1])));
        assert!(!a.iter().any(|(_, v)| v[0] > 3));
    }

    #[test]
    fn program_counter_ignores_value_domain() {
        let src = "int x; int i; int j; while (i < 1) { i = i + 1; } while (j < 1) { j = j + 1; } \
                   while (nondet()) { x = 1; } assert(x == 0);";
        let p = parse(src).unwrap();
        let limits = Limits { fuel: 50, bound: 1 };
        let single = single_loop_transform(&build_cfa(&p).unwrap());
        let direct = run_program(&p, limits);
        assert!(direct.contains(&(Outcome::Error, vec![1, 1, 1])));
        assert_eq!(run_cfa(&single, &p.decls, limits), direct);
    }

    #[test]
    fn error_label_and_return() {
        let (a, c) = both(
            "int x; x = nondet(); if (x > 1) { ERROR: return; } return;",
            Limits { fuel: 1, bound: 2 },
        );
        assert_eq!(a, c);
        assert_eq!(a.iter().filter(|(o, _)| *o == Outcome::Error).count(), 1);
    }

    #[test]
    fn single_loop_transform_preserves_paths() {
        let src = "int i; int j; while (i < 2) { j = 0; while (j < 2) { j = j + 1; } i = i + 1; } assert(i + j != 4);";
        let p = parse(src).unwrap();
        let cfa = build_cfa(&p).unwrap();
        let l = Limits { fuel: 12, bound: 4 };
        assert_eq!(run_cfa(&cfa, &p.decls, l), run_cfa(&single_loop_transform(&cfa), &p.decls, l));
        assert_eq!(run_program(&p, l), run_cfa(&cfa, &p.decls, l));
    }
}
