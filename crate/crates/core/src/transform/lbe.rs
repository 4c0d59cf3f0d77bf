use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use crate::formula::{declarations, to_smtlib, CmpOp, Formula, FormulaTemplate, SsaMap, Term};
use crate::frontend::ast::{Cond, Expr, RelOp};
use crate::frontend::{Cfa, Loc, Op};

use super::liveness::live_variables;
use super::TransformError;

/// The INIT / TRANS / ERROR templates of a single-loop program.
#[derive(Clone, Debug)]
pub struct SummarizedSystem {
    /// Paths from the initial location to the first loop-head visit.
    pub init: FormulaTemplate,
    /// Paths from the loop head back to itself.
    pub trans: FormulaTemplate,
    /// Paths from the loop head to an error location.
    pub error: FormulaTemplate,
    /// Paths from the initial location to an error location that never
    /// visit the loop head. Checked once, alongside the first error query.
    pub pre_error: FormulaTemplate,
    /// Program variables live at the loop head, in declaration order.
    pub state_vars: Vec<String>,
    pub loop_free: bool,
    pub loop_head: Loc,
}

impl SummarizedSystem {
    /// SMT-LIB rendering of the templates for `--dump-system`.
    pub fn to_smtlib(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "; state variables: {}", self.state_vars.join(" "));
        let _ = writeln!(out, "; loop-free: {}", self.loop_free);
        let parts = [
            ("INIT", &self.init),
            ("TRANS", &self.trans),
            ("ERROR", &self.error),
            ("PRE_ERROR", &self.pre_error),
        ];
        let mut vars = BTreeSet::new();
        for (_, t) in &parts {
            vars.extend(t.body.free_vars());
        }
        out.push_str(&declarations(vars.iter()));
        for (name, t) in parts {
            let _ = writeln!(out, "; {name} in {} out {}", t.in_map, t.out_map);
            let _ = writeln!(out, "(define-fun {name} () Bool {})", to_smtlib(&t.body));
        }
        out
    }

    /// Variables of `template` that are neither entry nor exit variables.
    pub fn internal_vars(template: &FormulaTemplate) -> BTreeSet<crate::formula::SsaVar> {
        template
            .body
            .free_vars()
            .into_iter()
            .filter(|v| {
                template.in_map.get(&v.name) != Some(v.index)
                    && template.out_map.get(&v.name) != Some(v.index)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Val {
    Idx(u32),
    Zero,
}

/// Absent entries are unconstrained (a dead variable read before any write).
type Store = BTreeMap<String, Val>;

fn flat_and(items: impl IntoIterator<Item = Formula>) -> Formula {
    let mut out = Vec::new();
    for f in items {
        match f {
            Formula::And(fs) => out.extend(fs),
            f => out.push(f),
        }
    }
    Formula::and(out)
}

struct Encoder {
    next: HashMap<String, u32>,
}

impl Encoder {
    fn new(in_map: &SsaMap) -> Self {
        Encoder {
            next: in_map.iter().map(|(k, v)| (k.to_string(), v + 1)).collect(),
        }
    }

    fn fresh(&mut self, v: &str) -> u32 {
        let n = self.next.entry(v.to_string()).or_insert(0);
        *n += 1;
        *n - 1
    }

    fn read(&mut self, v: &str, store: &mut Store) -> Term {
        match store.get(v) {
            Some(Val::Idx(j)) => Term::var(v, *j),
            Some(Val::Zero) => Term::Const(0),
            None => {
                let j = self.fresh(v);
                store.insert(v.to_string(), Val::Idx(j));
                Term::var(v, j)
            }
        }
    }

    fn expr(&mut self, e: &Expr, store: &mut Store) -> Result<Term, TransformError> {
        Ok(match e {
            Expr::Num(n) => Term::Const(*n),
            Expr::Var(v) => self.read(v, store),
            Expr::Neg(a) => Term::neg(self.expr(a, store)?),
            Expr::Add(a, b) => {
                let a = self.expr(a, store)?;
                Term::add(a, self.expr(b, store)?)
            }
            Expr::Sub(a, b) => {
                let a = self.expr(a, store)?;
                Term::sub(a, self.expr(b, store)?)
            }
            Expr::Mul(a, b) => match (a.constant_value(), b.constant_value()) {
                (Some(c), _) => Term::Scale(c, Box::new(self.expr(b, store)?)),
                (_, Some(c)) => Term::Scale(c, Box::new(self.expr(a, store)?)),
                _ => return Err(TransformError::NonLinear(e.to_string())),
            },
            Expr::Mod(a, c) => Term::modulo(self.expr(a, store)?, *c),
            Expr::Div(a, c) => Term::div(self.expr(a, store)?, *c),
        })
    }

    fn cond(&mut self, c: &Cond, store: &mut Store) -> Result<Formula, TransformError> {
        Ok(match c {
            Cond::Bool(b) => Formula::Bool(*b),
            Cond::Rel(op, a, b) => {
                let a = self.expr(a, store)?;
                let b = self.expr(b, store)?;
                match op {
                    RelOp::Eq => Formula::eq(a, b),
                    RelOp::Ne => Formula::not(Formula::eq(a, b)),
                    RelOp::Lt => Formula::cmp(CmpOp::Lt, a, b),
                    RelOp::Le => Formula::cmp(CmpOp::Le, a, b),
                    RelOp::Gt => Formula::cmp(CmpOp::Gt, a, b),
                    RelOp::Ge => Formula::cmp(CmpOp::Ge, a, b),
                }
            }
            Cond::And(a, b) => {
                let a = self.cond(a, store)?;
                Formula::and([a, self.cond(b, store)?])
            }
            Cond::Or(a, b) => {
                let a = self.cond(a, store)?;
                Formula::or([a, self.cond(b, store)?])
            }
            Cond::Not(a) => Formula::not(self.cond(a, store)?),
            Cond::Truthy(e) => Formula::not(Formula::eq(self.expr(e, store)?, Term::Const(0))),
            Cond::Nondet => return Err(TransformError::UnloweredNondet),
        })
    }

    fn apply(&mut self, op: &Op, store: &Store) -> Result<(Formula, Store), TransformError> {
        let mut st = store.clone();
        let f = match op {
            Op::Assume(c) => self.cond(c, &mut st)?,
            Op::Assign(x, e) => {
                let rhs = self.expr(e, &mut st)?;
                let j = self.fresh(x);
                st.insert(x.clone(), Val::Idx(j));
                Formula::eq(Term::var(x.as_str(), j), rhs)
            }
            Op::Havoc(x) => {
                let j = self.fresh(x);
                st.insert(x.clone(), Val::Idx(j));
                Formula::TRUE
            }
        };
        Ok((f, st))
    }

    fn value_term(v: &str, val: Val) -> Term {
        match val {
            Val::Idx(j) => Term::var(v, j),
            Val::Zero => Term::Const(0),
        }
    }

    fn merge(&mut self, branches: Vec<(Formula, Store)>) -> (Formula, Store) {
        if branches.len() == 1 {
            return branches.into_iter().next().unwrap();
        }
        let keys: BTreeSet<String> = branches.iter().flat_map(|(_, s)| s.keys().cloned()).collect();
        let mut merged = Store::new();
        let mut eqs: Vec<Vec<Formula>> = vec![Vec::new(); branches.len()];
        for k in keys {
            let vals: Vec<Option<Val>> = branches.iter().map(|(_, s)| s.get(&k).copied()).collect();
            if vals.iter().any(Option::is_none) {
                continue;
            }
            let vals: Vec<Val> = vals.into_iter().flatten().collect();
            if vals.iter().all(|v| *v == vals[0]) {
                merged.insert(k, vals[0]);
                continue;
            }
            let m = self.fresh(&k);
            for (i, v) in vals.iter().enumerate() {
                eqs[i].push(Formula::eq(Term::var(k.as_str(), m), Self::value_term(&k, *v)));
            }
            merged.insert(k, Val::Idx(m));
        }
        let disj = branches
            .into_iter()
            .zip(eqs)
            .map(|((f, _), e)| flat_and(std::iter::once(f).chain(e)));
        (Formula::or(disj), merged)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Node {
    Source,
    At(Loc),
}

struct Region {
    order: Vec<Node>,
    preds: HashMap<Node, Vec<(Node, usize)>>,
    sinks: Vec<Loc>,
}

/// The acyclic region reachable from `start` without crossing a boundary.
fn region(cfa: &Cfa, start: Loc, boundary: &BTreeSet<Loc>) -> Result<Region, TransformError> {
    let succ = cfa.successors();
    let mut preds: HashMap<Node, Vec<(Node, usize)>> = HashMap::new();
    let mut nodes = vec![Node::Source];
    let mut seen: BTreeSet<Node> = BTreeSet::from([Node::Source]);
    let mut work = vec![Node::Source];
    let mut sinks = BTreeSet::new();
    while let Some(n) = work.pop() {
        let l = match n {
            Node::Source => start,
            Node::At(l) => l,
        };
        if n != Node::Source && boundary.contains(&l) {
            sinks.insert(l);
            continue;
        }
        for &ei in &succ[&l] {
            let d = Node::At(cfa.edges[ei].dst);
            preds.entry(d).or_default().push((n, ei));
            if seen.insert(d) {
                nodes.push(d);
                work.push(d);
            }
        }
    }
    // Kahn's algorithm; a leftover node means a cycle avoiding the boundary.
    let mut indeg: HashMap<Node, usize> = nodes.iter().map(|n| (*n, 0)).collect();
    for (n, ps) in &preds {
        *indeg.get_mut(n).unwrap() += ps.len();
    }
    let mut succs: HashMap<Node, Vec<Node>> = HashMap::new();
    for (n, ps) in &preds {
        for (p, _) in ps {
            succs.entry(*p).or_default().push(*n);
        }
    }
    let mut ready: Vec<Node> = vec![Node::Source];
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(n) = ready.pop() {
        order.push(n);
        if let Some(ss) = succs.get(&n) {
            let mut ss = ss.clone();
            ss.sort();
            for s in ss.into_iter().rev() {
                let d = indeg.get_mut(&s).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(s);
                }
            }
        }
    }
    if order.len() != nodes.len() {
        return Err(TransformError::UnsupportedShape(format!(
            "cycle avoiding the loop head in the region from l{start}"
        )));
    }
    for ps in preds.values_mut() {
        ps.sort();
    }
    Ok(Region {
        order,
        preds,
        sinks: sinks.into_iter().collect(),
    })
}

/// Path formula and final store for every sink of the region from `start`.
fn fold_region(
    cfa: &Cfa,
    start: Loc,
    boundary: &BTreeSet<Loc>,
    enc: &mut Encoder,
    init: Store,
) -> Result<BTreeMap<Loc, (Formula, Store)>, TransformError> {
    let r = region(cfa, start, boundary)?;
    let pos: HashMap<Node, usize> = r.order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut idom: HashMap<Node, Node> = HashMap::new();
    let mut rel: HashMap<Node, Formula> = HashMap::new();
    let mut store: HashMap<Node, Store> = HashMap::new();
    store.insert(Node::Source, init);
    rel.insert(Node::Source, Formula::TRUE);

    for &n in r.order.iter().skip(1) {
        let ps = &r.preds[&n];
        let mut d = ps[0].0;
        for (p, _) in &ps[1..] {
            let mut a = *p;
            while a != d {
                if pos[&a] > pos[&d] {
                    a = idom[&a];
                } else {
                    d = idom[&d];
                }
            }
        }
        idom.insert(n, d);
        let mut branches = Vec::with_capacity(ps.len());
        for &(p, ei) in ps {
            let mut path = Vec::new();
            let mut x = p;
            while x != d {
                path.push(rel[&x].clone());
                x = idom[&x];
            }
            path.reverse();
            let (f, st) = enc.apply(&cfa.edges[ei].op, &store[&p])?;
            path.push(f);
            branches.push((flat_and(path), st));
        }
        let (f, st) = enc.merge(branches);
        rel.insert(n, f);
        store.insert(n, st);
    }

    let mut out = BTreeMap::new();
    for &t in &r.sinks {
        let n = Node::At(t);
        let mut chain = Vec::new();
        let mut x = n;
        while x != Node::Source {
            chain.push(rel[&x].clone());
            x = idom[&x];
        }
        chain.reverse();
        out.insert(t, (flat_and(chain), store[&n].clone()));
    }
    Ok(out)
}

/// Exit map at the loop head, adding frame equalities where a state
/// variable still holds its entry value (or the implicit zero).
fn close_at_head(
    enc: &mut Encoder,
    state_vars: &[String],
    in_map: &SsaMap,
    body: Formula,
    store: &Store,
) -> (Formula, SsaMap) {
    let mut parts = vec![body];
    let mut out = SsaMap::new();
    for v in state_vars {
        match store.get(v) {
            Some(Val::Idx(j)) if in_map.get(v) != Some(*j) => out.insert(v.as_str(), *j),
            val => {
                let j = enc.fresh(v);
                if let Some(val) = val {
                    parts.push(Formula::eq(Term::var(v.as_str(), j), Encoder::value_term(v, *val)));
                }
                out.insert(v.as_str(), j);
            }
        }
    }
    (flat_and(parts), out)
}

fn error_template(
    paths: &BTreeMap<Loc, (Formula, Store)>,
    errors: &BTreeSet<Loc>,
    in_map: SsaMap,
) -> FormulaTemplate {
    let body = Formula::or(
        paths
            .iter()
            .filter(|(l, _)| errors.contains(l))
            .map(|(_, (f, _))| f.clone()),
    );
    FormulaTemplate {
        body,
        in_map,
        out_map: SsaMap::new(),
    }
}

/// Summarizes a single-loop (or loop-free) CFA into INIT / TRANS / ERROR.
pub fn large_block_encode(cfa: &Cfa) -> Result<SummarizedSystem, TransformError> {
    let heads = cfa.loop_heads();
    if heads.len() > 1 {
        return Err(TransformError::UnsupportedShape(format!(
            "{} loop heads; expected at most one",
            heads.len()
        )));
    }
    let zero: Store = cfa.vars.iter().map(|v| (v.clone(), Val::Zero)).collect();

    let Some(&lh) = heads.iter().next() else {
        let mut boundary = cfa.errors.clone();
        boundary.insert(cfa.initial);
        let mut enc = Encoder::new(&SsaMap::new());
        let paths = fold_region(cfa, cfa.initial, &boundary, &mut enc, zero)?;
        return Ok(SummarizedSystem {
            init: FormulaTemplate::constant(Formula::TRUE),
            trans: FormulaTemplate::constant(Formula::FALSE),
            error: error_template(&paths, &cfa.errors, SsaMap::new()),
            pre_error: FormulaTemplate::constant(Formula::FALSE),
            state_vars: Vec::new(),
            loop_free: true,
            loop_head: cfa.initial,
        });
    };

    let live = live_variables(cfa);
    let state_vars: Vec<String> = cfa
        .vars
        .iter()
        .filter(|v| live[&lh].contains(*v))
        .cloned()
        .collect();
    let mut boundary = cfa.errors.clone();
    boundary.insert(cfa.initial);
    boundary.insert(lh);

    // INIT and the errors reachable without visiting the loop head.
    let mut enc = Encoder::new(&SsaMap::new());
    let paths = fold_region(cfa, cfa.initial, &boundary, &mut enc, zero)?;
    let (init, pre_error) = {
        let (body, out_map) = match paths.get(&lh) {
            Some((f, st)) => close_at_head(&mut enc, &state_vars, &SsaMap::new(), f.clone(), st),
            None => (Formula::FALSE, state_vars.iter().map(|v| (v.as_str(), 0)).collect()),
        };
        (
            FormulaTemplate {
                body,
                in_map: SsaMap::new(),
                out_map,
            },
            error_template(&paths, &cfa.errors, SsaMap::new()),
        )
    };

    // TRANS and ERROR from the loop head.
    let in_map: SsaMap = state_vars.iter().map(|v| (v.as_str(), 0)).collect();
    let entry: Store = state_vars.iter().map(|v| (v.clone(), Val::Idx(0))).collect();
    let mut enc = Encoder::new(&in_map);
    let paths = fold_region(cfa, lh, &boundary, &mut enc, entry)?;
    let trans = match paths.get(&lh) {
        Some((f, st)) => {
            let (body, out_map) = close_at_head(&mut enc, &state_vars, &in_map, f.clone(), st);
            FormulaTemplate {
                body,
                in_map: in_map.clone(),
                out_map,
            }
        }
        None => FormulaTemplate {
            body: Formula::FALSE,
            in_map: in_map.clone(),
            out_map: state_vars.iter().map(|v| (v.as_str(), 1)).collect(),
        },
    };
    let error = error_template(&paths, &cfa.errors, in_map);

    Ok(SummarizedSystem {
        init,
        trans,
        error,
        pre_error,
        state_vars,
        loop_free: false,
        loop_head: lh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_cfa, parse};
    use crate::transform::single_loop_transform;

    const EVEN: &str = "int x;\nx = 0;\nwhile (nondet()) {\n    x = x + 2;\n}\nif (x % 2) {\n    ERROR: return;\n}\nreturn;\n";

    fn system(src: &str) -> SummarizedSystem {
        let cfa = build_cfa(&parse(src).unwrap()).unwrap();
        large_block_encode(&single_loop_transform(&cfa)).unwrap()
    }

    #[test]
    fn even_templates() {
        let s = system(EVEN);
        assert!(!s.loop_free);
        assert_eq!(s.state_vars, vec!["x"]);
        assert_eq!(to_smtlib(&s.init.body), "(= x!0 0)");
        assert_eq!(
            to_smtlib(&s.trans.body),
            "(and (not (= __nondet_0!0 0)) (= x!1 (+ x!0 2)))"
        );
        assert_eq!(
            to_smtlib(&s.error.body),
            "(and (= __nondet_0!0 0) (not (= (mod x!0 2) 0)))"
        );
        assert!(s.pre_error.body.is_false());
        assert_eq!(s.trans.in_map.get("x"), Some(0));
        assert_eq!(s.trans.out_map.get("x"), Some(1));
    }

    #[test]
    fn loop_free_fold() {
        let s = system("int x; x = 1; assert(x == 1);");
        assert!(s.loop_free);
        assert!(s.trans.body.is_false());
        assert!(s.init.body.is_true());
        assert_eq!(to_smtlib(&s.error.body), "(and (= x!0 1) (not (= x!0 1)))");
    }

    #[test]
    fn diamond_in_loop_body_is_a_disjunction() {
        let s = system(
            "int x; int n; while (x < 10) { n = nondet(); if (n) { x = x + 1; } else { x = x + 2; } } assert(x <= 11);",
        );
        assert_eq!(s.state_vars, vec!["x"]);
        match &s.trans.body {
            Formula::And(parts) => assert!(parts.iter().any(|p| matches!(p, Formula::Or(d) if d.len() == 2))),
            f => panic!("unexpected {f}"),
        }
    }

    #[test]
    fn unchanged_state_vars_get_frame_equalities() {
        let s = system("int x; int y; y = 5; while (nondet()) { x = x + 1; } assert(y == 5);");
        assert_eq!(s.state_vars, vec!["x", "y"]);
        let text = to_smtlib(&s.trans.body);
        assert!(text.contains("(= y!1 y!0)"), "{text}");
        // x keeps its implicit zero.
        assert_eq!(to_smtlib(&s.init.body), "(and (= y!0 5) (= x!0 0))");
    }

    #[test]
    fn errors_before_the_loop_go_to_pre_error() {
        let s = system("int x; x = nondet(); assert(x != 3); while (nondet()) { x = x + 1; } assert(x != 5);");
        assert!(!s.pre_error.body.is_false());
        assert!(!s.error.body.is_false());
    }

    #[test]
    fn dump_mentions_all_parts() {
        let d = system(EVEN).to_smtlib();
        for part in ["INIT", "TRANS", "ERROR", "PRE_ERROR"] {
            assert!(d.contains(&format!("(define-fun {part} () Bool")));
        }
    }
}
