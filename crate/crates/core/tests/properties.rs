use std::collections::BTreeMap;

use proptest::prelude::*;

use imcv::formula::{parse_formula, shift_variable_index, to_smtlib, CmpOp, Formula, SsaMap, SsaVar, Term};
use imcv::frontend::ast::{Cond, Expr, Program, RelOp, Stmt};
use imcv::frontend::{build_cfa, parse};
use imcv::harness::interp::{run_cfa, run_program, Limits};
use imcv::solver::{Direction, Solver, SolverConfig};
use imcv::transform::single_loop_transform;

const DATA: [&str; 2] = ["x", "y"];

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0i64..4).prop_map(Expr::Num), prop::sample::select(&DATA[..]).prop_map(Expr::var)];
    leaf.prop_recursive(3, 12, 2, |e| {
        prop_oneof![
            e.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (e.clone(), e.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (e.clone(), e.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (0i64..3, e.clone()).prop_map(|(c, a)| Expr::Mul(Box::new(Expr::Num(c)), Box::new(a))),
            (e.clone(), 1i64..4).prop_map(|(a, c)| Expr::Mod(Box::new(a), c)),
            (e, 1i64..4).prop_map(|(a, c)| Expr::Div(Box::new(a), c)),
        ]
    })
}

fn rel() -> impl Strategy<Value = RelOp> {
    prop::sample::select(&[RelOp::Eq, RelOp::Ne, RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge][..])
}

fn cond() -> impl Strategy<Value = Cond> {
    let leaf = (rel(), expr(), expr()).prop_map(|(op, a, b)| Cond::Rel(op, a, b));
    leaf.prop_recursive(2, 6, 2, |c| {
        prop_oneof![
            (c.clone(), c.clone()).prop_map(|(a, b)| Cond::And(Box::new(a), Box::new(b))),
            (c.clone(), c.clone()).prop_map(|(a, b)| Cond::Or(Box::new(a), Box::new(b))),
            c.prop_map(|a| Cond::Not(Box::new(a))),
        ]
    })
}

fn branch_cond() -> impl Strategy<Value = Cond> {
    prop_oneof![3 => cond(), 1 => Just(Cond::Nondet)]
}

fn simple() -> impl Strategy<Value = Stmt> {
    let var = || prop::sample::select(&DATA[..]).prop_map(String::from);
    prop_oneof![
        4 => (var(), expr()).prop_map(|(v, e)| Stmt::Assign(v, e)),
        1 => var().prop_map(Stmt::Havoc),
        1 => cond().prop_map(Stmt::Assert),
        1 => cond().prop_map(Stmt::Assume),
    ]
}

/// `n = 0; while (n < c) { body; n = n + 1; }` with `n` untouched by `body`.
fn counted(n: &str, c: i64, mut body: Vec<Stmt>) -> Vec<Stmt> {
    body.push(Stmt::Assign(n.into(), Expr::Add(Box::new(Expr::var(n)), Box::new(Expr::Num(1)))));
    vec![
        Stmt::Assign(n.into(), Expr::Num(0)),
        Stmt::While(Cond::Rel(RelOp::Lt, Expr::var(n), Expr::Num(c)), body),
    ]
}

fn block(depth: usize) -> BoxedStrategy<Vec<Stmt>> {
    let one: BoxedStrategy<Vec<Stmt>> = if depth == 0 {
        simple().prop_map(|s| vec![s]).boxed()
    } else {
        let inner = || block(depth - 1);
        let counter = if depth == 2 { "n0" } else { "n1" };
        prop_oneof![
            4 => simple().prop_map(|s| vec![s]),
            1 => (branch_cond(), inner(), prop::option::of(inner()))
                .prop_map(|(c, t, e)| vec![Stmt::If(c, t, e)]),
            1 => (1i64..3, inner()).prop_map(move |(c, b)| counted(counter, c, b)),
        ]
        .boxed()
    };
    prop::collection::vec(one, 1..4).prop_map(|v| v.concat()).boxed()
}

fn program() -> impl Strategy<Value = Program> {
    (block(2), cond()).prop_map(|(mut body, last)| {
        body.push(Stmt::Assert(last));
        Program {
            decls: ["x", "y", "n0", "n1"].map(String::from).to_vec(),
            body,
        }
    })
}

fn term() -> impl Strategy<Value = Term> {
    let var = (prop::sample::select(&DATA[..]), 0u32..3).prop_map(|(v, i)| Term::var(v, i));
    let leaf = prop_oneof![(-5i64..6).prop_map(Term::Const), var];
    leaf.prop_recursive(2, 8, 3, |t| {
        prop_oneof![
            prop::collection::vec(t.clone(), 2..4).prop_map(Term::Add),
            (t.clone(), t.clone()).prop_map(|(a, b)| Term::sub(a, b)),
            t.clone().prop_map(|a| Term::Neg(Box::new(a))),
            (-3i64..4, t.clone()).prop_map(|(c, a)| Term::Scale(c, Box::new(a))),
            (t.clone(), 1i64..5).prop_map(|(a, c)| Term::modulo(a, c)),
            (t, 1i64..5).prop_map(|(a, c)| Term::div(a, c)),
        ]
    })
}

fn cmp() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(&[CmpOp::Eq, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge][..])
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        1 => any::<bool>().prop_map(Formula::Bool),
        6 => (cmp(), term(), term()).prop_map(|(op, a, b)| Formula::Cmp(op, a, b)),
    ];
    leaf.prop_recursive(3, 16, 3, |f| {
        prop_oneof![
            f.clone().prop_map(|a| Formula::Not(Box::new(a))),
            prop::collection::vec(f.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(f.clone(), 2..4).prop_map(Formula::Or),
            (f.clone(), f.clone()).prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
            (f.clone(), f).prop_map(|(a, b)| Formula::Iff(Box::new(a), Box::new(b))),
        ]
    })
}

fn env(values: &[i64]) -> impl Fn(&SsaVar) -> Option<i64> + '_ {
    move |v| {
        let slot = DATA.iter().position(|d| **d == *v.name).unwrap_or(0) * 3 + v.index as usize;
        Some(values[slot % values.len()])
    }
}

/// Linear constraints over `s` and a private variable `p`.
fn linear(p: &'static str) -> impl Strategy<Value = Formula> {
    let atom = (cmp(), -2i64..3, -2i64..3, -4i64..5).prop_map(move |(op, a, b, c)| {
        let lhs = Term::add(
            Term::Scale(a, Box::new(Term::var("s", 0))),
            Term::Scale(b, Box::new(Term::var(p, 0))),
        );
        Formula::cmp(op, lhs, Term::Const(c))
    });
    prop::collection::vec(atom, 1..4).prop_map(Formula::and)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_programs_parse_back(p in program()) {
        let text = p.to_string();
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, p);
    }

    #[test]
    fn cfa_and_single_loop_keep_executions(p in program()) {
        let limits = Limits { fuel: 4000, bound: 2 };
        let direct = run_program(&p, limits);
        let cfa = build_cfa(&p).unwrap();
        prop_assert_eq!(&run_cfa(&cfa, &p.decls, limits), &direct);
        let single = single_loop_transform(&cfa);
        prop_assert_eq!(&run_cfa(&single, &p.decls, limits), &direct);
    }

    #[test]
    fn smtlib_parses_back_equivalent(f in formula(), values in prop::collection::vec(-6i64..7, 6)) {
        let text = to_smtlib(&f);
        let back = parse_formula(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let e = env(&values);
        prop_assert_eq!(back.eval(&e), f.eval(&e));
    }

    #[test]
    fn shifting_there_and_back_is_identity(f in formula(), from in 0u32..3, to in 3u32..6) {
        let uniform = |i: u32| -> SsaMap { DATA.iter().map(|d| (*d, i)).collect() };
        let at: BTreeMap<&str, u32> = DATA.iter().map(|d| (*d, from)).collect();
        let g = f.map_vars(&mut |v| SsaVar::new(v.name.clone(), at[&*v.name]));
        let there = shift_variable_index(&g, &uniform(to), &uniform(from)).unwrap();
        prop_assert!(there.free_vars().iter().all(|v| v.index == to));
        let back = shift_variable_index(&there, &uniform(from), &uniform(to)).unwrap();
        prop_assert_eq!(back, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interpolants_meet_the_contract(a in linear("p"), b in linear("q"), backward in any::<bool>()) {
        let mut s = Solver::new(SolverConfig::default()).unwrap();
        prop_assume!(s.is_unsat(&Formula::and([a.clone(), b.clone()])).unwrap());
        let dir = if backward { Direction::Backward } else { Direction::Forward };
        let c = s.get_interpolant(&a, &b, dir).unwrap();
        prop_assert!(c.free_vars().iter().all(|v| &*v.name == "s"), "{}", to_smtlib(&c));
        prop_assert!(s.is_valid(&Formula::implies(a, c.clone())).unwrap());
        prop_assert!(s.is_unsat(&Formula::and([c, b])).unwrap());
    }
}
