use std::collections::{BTreeMap, BTreeSet};

use crate::formula::sexp::Sexp;
use crate::formula::{declarations, parse_formula_sexp, to_smtlib, CmpOp, Formula, SsaVar, Term};

use super::{ItpDialect, Solver, SolverError};
use crate::transform::PC_VAR;

/// Which side the interpolant is derived from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

const MAX_MODULUS: i64 = 12;
const PAIR_POOL: usize = 24;

/// A soft preference among valid interpolants `C`, honoured by dialects that
/// choose between candidates.
#[derive(Clone, Debug)]
pub(super) enum Goal {
    None,
    /// Prefer `C & f` unsatisfiable.
    Exclude(Formula),
    /// Prefer `f -> C` valid.
    Cover(Formula),
}

impl Goal {
    /// The formula that must be unsatisfiable for `c` to meet the goal.
    fn query(&self, c: &Formula) -> Option<Formula> {
        match self {
            Goal::None => None,
            Goal::Exclude(f) => Some(Formula::and([c.clone(), f.clone()])),
            Goal::Cover(f) => Some(Formula::and([f.clone(), Formula::not(c.clone())])),
        }
    }
}

pub(super) fn compute(
    s: &mut Solver,
    a: &Formula,
    b: &Formula,
    goal: &Goal,
) -> Result<Formula, SolverError> {
    match s.cfg.dialect {
        ItpDialect::GetInterpolant => get_interpolant(s, a, b),
        ItpDialect::NamedPartitions => named_partitions(s, a, b),
        ItpDialect::Qe => qe_interpolant(s, a, b, goal),
    }
}

/// Index of the first formula meeting `goal`, if any.
fn first_meeting(s: &mut Solver, fs: &[Formula], goal: &Goal) -> Result<Option<usize>, SolverError> {
    let queries: Vec<Formula> = fs.iter().filter_map(|f| goal.query(f)).collect();
    if queries.is_empty() {
        return Ok(if fs.is_empty() { None } else { Some(0) });
    }
    Ok(s.unsat_batch(&queries)?.iter().position(|ok| *ok))
}

fn unsupported(e: SolverError) -> SolverError {
    match e {
        SolverError::Rejected(m) => SolverError::InterpolationUnsupported(m),
        e => e,
    }
}

fn read_term(s: &Sexp) -> Result<Formula, SolverError> {
    // `(define-fun I () Bool t)` or a bare term, possibly wrapped in a list.
    if let Some(l) = s.list() {
        if l.len() == 5 && l[0].is_atom("define-fun") {
            return read_term(&l[4]);
        }
        if l.len() == 1 {
            if let Ok(f) = read_term(&l[0]) {
                return Ok(f);
            }
        }
    }
    parse_formula_sexp(s).map_err(|e| SolverError::UnsupportedTerm(e.to_string()))
}

fn get_interpolant(s: &mut Solver, a: &Formula, b: &Formula) -> Result<Formula, SolverError> {
    match s.itp_takes_pair {
        Some(true) => pair_interpolant(s, a, b),
        Some(false) => conjecture_interpolant(s, a, b),
        None => match conjecture_interpolant(s, a, b) {
            Err(SolverError::InterpolationUnsupported(_)) => {
                let r = pair_interpolant(s, a, b);
                if !matches!(r, Err(SolverError::InterpolationUnsupported(_))) {
                    s.itp_takes_pair = Some(true);
                }
                r
            }
            r => {
                s.itp_takes_pair = Some(false);
                r
            }
        },
    }
}

/// `(get-interpolant I (not B))` after asserting A, answered with I such that
/// A implies I and I implies `(not B)`.
fn conjecture_interpolant(s: &mut Solver, a: &Formula, b: &Formula) -> Result<Formula, SolverError> {
    let vars: BTreeSet<SsaVar> = a.free_vars().union(&b.free_vars()).cloned().collect();
    let mut body = declarations(vars.iter());
    body.push_str(&format!(
        "(assert {})\n(get-interpolant __itp (not {}))\n",
        to_smtlib(a),
        to_smtlib(b)
    ));
    let out = s
        .session("(set-option :produce-interpolants true)\n", &body)
        .map_err(unsupported)?;
    match out.first() {
        Some(x) if x.is_atom("none") => Err(SolverError::NotUnsat),
        Some(x) if x.is_atom("fail") => Err(SolverError::Unknown),
        Some(x) => read_term(x),
        None => Err(SolverError::InterpolationUnsupported("no answer to get-interpolant".into())),
    }
}

/// `(get-interpolant A B)`, answered with a Craig interpolant or `sat`.
fn pair_interpolant(s: &mut Solver, a: &Formula, b: &Formula) -> Result<Formula, SolverError> {
    let vars: BTreeSet<SsaVar> = a.free_vars().union(&b.free_vars()).cloned().collect();
    let mut body = declarations(vars.iter());
    body.push_str(&format!("(get-interpolant {} {})\n", to_smtlib(a), to_smtlib(b)));
    let out = s.session("", &body);
    s.restart();
    let out = out.map_err(unsupported)?;
    match out.first() {
        Some(x) if x.is_atom("sat") => Err(SolverError::NotUnsat),
        Some(x) if x.is_atom("unknown") => Err(SolverError::Unknown),
        Some(x) => read_term(x),
        None => Err(SolverError::InterpolationUnsupported("no answer to get-interpolant".into())),
    }
}

fn named_partitions(s: &mut Solver, a: &Formula, b: &Formula) -> Result<Formula, SolverError> {
    let vars: BTreeSet<SsaVar> = a.free_vars().union(&b.free_vars()).cloned().collect();
    let mut body = declarations(vars.iter());
    body.push_str(&format!(
        "(assert (! {} :named __A))\n(assert (! {} :named __B))\n(check-sat)\n(get-interpolants __A __B)\n",
        to_smtlib(a),
        to_smtlib(b)
    ));
    let out = match s.session("(set-option :produce-interpolants true)\n", &body) {
        Err(SolverError::Rejected(m)) if m.contains("sat") && !m.contains("unsat") => {
            return Err(SolverError::NotUnsat)
        }
        r => r.map_err(unsupported)?,
    };
    match out.first().and_then(Sexp::atom) {
        Some("unsat") => {}
        Some("sat") => return Err(SolverError::NotUnsat),
        _ => return Err(SolverError::Unknown),
    }
    out.get(1)
        .map(read_term)
        .unwrap_or_else(|| Err(SolverError::InterpolationUnsupported("no answer to get-interpolants".into())))
}

fn term_has_mod(t: &Term) -> bool {
    match t {
        Term::Const(_) | Term::Var(_) => false,
        Term::Mod(..) => true,
        Term::Add(ts) => ts.iter().any(term_has_mod),
        Term::Sub(a, b) => term_has_mod(a) || term_has_mod(b),
        Term::Neg(a) | Term::Scale(_, a) | Term::Div(a, _) => term_has_mod(a),
    }
}

fn collect_moduli(t: &Term, out: &mut BTreeSet<i64>) {
    match t {
        Term::Const(_) | Term::Var(_) => {}
        Term::Mod(a, c) | Term::Div(a, c) => {
            out.insert(*c);
            collect_moduli(a, out);
        }
        Term::Add(ts) => ts.iter().for_each(|t| collect_moduli(t, out)),
        Term::Sub(a, b) => {
            collect_moduli(a, out);
            collect_moduli(b, out);
        }
        Term::Neg(a) | Term::Scale(_, a) => collect_moduli(a, out),
    }
}

/// Lower is simpler: congruences and relations between variables generalize
/// best, then bounds, then point constraints.
fn score(atom: &Formula) -> u32 {
    let Formula::Cmp(op, l, r) = atom else { return 4 };
    if term_has_mod(l) || term_has_mod(r) {
        return 1;
    }
    if atom.free_vars().len() >= 2 {
        return 1;
    }
    if *op == CmpOp::Eq {
        3
    } else {
        2
    }
}

struct Candidate {
    atom: Formula,
    key: Key,
}

fn candidates(fs: &[&Formula], shared: &BTreeSet<SsaVar>) -> Vec<Candidate> {
    let mut atoms: BTreeMap<String, Formula> = BTreeMap::new();
    let mut moduli = BTreeSet::from([2]);
    let add = |f: Formula, atoms: &mut BTreeMap<String, Formula>| {
        let vs = f.free_vars();
        if !vs.is_empty() && vs.is_subset(shared) {
            atoms.entry(to_smtlib(&f)).or_insert(f);
        }
    };
    for f in fs {
        for c in f.constants() {
            if (2..=MAX_MODULUS).contains(&c) {
                moduli.insert(c);
            }
        }
        let mut found = Vec::new();
        f.visit_atoms(&mut |x| found.push(x.clone()));
        for x in found {
            if let Formula::Cmp(op, l, r) = &x {
                collect_moduli(l, &mut moduli);
                collect_moduli(r, &mut moduli);
                if *op != CmpOp::Eq {
                    add(Formula::eq(l.clone(), r.clone()), &mut atoms);
                }
            }
            add(x, &mut atoms);
        }
    }
    for v in shared.iter().filter(|v| &*v.name != PC_VAR) {
        for &m in &moduli {
            if m > MAX_MODULUS {
                continue;
            }
            for r in 0..m {
                add(
                    Formula::eq(Term::modulo(Term::Var(v.clone()), m), Term::Const(r)),
                    &mut atoms,
                );
            }
        }
    }
    let mut out: Vec<Candidate> = atoms
        .into_values()
        .map(|atom| {
            let neg = to_smtlib(&Formula::not(atom.clone()));
            let pos = to_smtlib(&atom);
            let key = (score(&atom), atom.size(), pos.min(neg));
            Candidate { atom, key }
        })
        .collect();
    out.sort_by(|x, y| x.key.cmp(&y.key));
    out
}

/// Separates the projections `qa` and `qb` with the simplest literal (or pair
/// of literals) found among the atoms of both sides, preferring separators
/// that meet `goal`. Falls back to the exact projection of the deriving side.
fn qe_interpolant(s: &mut Solver, a: &Formula, b: &Formula, goal: &Goal) -> Result<Formula, SolverError> {
    let shared: BTreeSet<SsaVar> = a.free_vars().intersection(&b.free_vars()).cloned().collect();
    let qa = s.project(a, &|v| shared.contains(v))?;
    let qb = s.project(b, &|v| shared.contains(v))?;
    let basic = s.unsat_batch(&[Formula::and([qa.clone(), qb.clone()]), qa.clone(), qb.clone()])?;
    if !basic[0] {
        return Err(SolverError::NotUnsat);
    }
    if basic[1] {
        return Ok(Formula::FALSE);
    }
    if basic[2] {
        return Ok(Formula::TRUE);
    }

    let cands = candidates(&[&qa, &qb, a, b], &shared);
    let mut lits = Vec::with_capacity(cands.len() * 2);
    for c in &cands {
        lits.push((c.key.clone(), c.atom.clone()));
        lits.push((c.key.clone(), Formula::not(c.atom.clone())));
    }
    let mut queries = Vec::with_capacity(lits.len() * 2);
    for (_, l) in &lits {
        queries.push(Formula::and([qa.clone(), Formula::not(l.clone())]));
        queries.push(Formula::and([l.clone(), qb.clone()]));
    }
    let res = s.unsat_batch(&queries)?;
    let mut single = Vec::new();
    let mut implied = Vec::new();
    let mut excluding = Vec::new();
    for (i, (key, l)) in lits.iter().enumerate() {
        let (from_a, blocks_b) = (res[2 * i], res[2 * i + 1]);
        if from_a && blocks_b {
            single.push(l.clone());
        }
        if from_a {
            implied.push((key.clone(), l.clone()));
        }
        if blocks_b {
            excluding.push((key.clone(), l.clone()));
        }
    }
    if let Some(i) = first_meeting(s, &single, goal)? {
        return Ok(single.swap_remove(i));
    }

    // Conjunctions of implied literals, disjunctions of excluding ones.
    let mut pairs = Vec::new();
    let pool_a = &implied[..implied.len().min(PAIR_POOL)];
    let pool_b = &excluding[..excluding.len().min(PAIR_POOL)];
    for (i, (k1, l1)) in pool_a.iter().enumerate() {
        for (k2, l2) in &pool_a[i + 1..] {
            pairs.push((k1.0 + k2.0, Formula::and([l1.clone(), l2.clone()]), true));
        }
    }
    for (i, (k1, l1)) in pool_b.iter().enumerate() {
        for (k2, l2) in &pool_b[i + 1..] {
            pairs.push((k1.0 + k2.0, Formula::or([l1.clone(), l2.clone()]), false));
        }
    }
    pairs.sort_by_key(|(k, f, _)| (*k, to_smtlib(f)));
    let queries: Vec<Formula> = pairs
        .iter()
        .map(|(_, f, conj)| {
            if *conj {
                Formula::and([f.clone(), qb.clone()])
            } else {
                Formula::and([qa.clone(), Formula::not(f.clone())])
            }
        })
        .collect();
    let res = s.unsat_batch(&queries)?;
    let mut valid: Vec<Formula> = pairs
        .into_iter()
        .zip(res)
        .filter(|(_, ok)| *ok)
        .map(|((_, f, _), _)| f)
        .collect();
    if let Some(i) = first_meeting(s, &valid, goal)? {
        return Ok(valid.swap_remove(i));
    }
    if let Some(f) = single.into_iter().chain(valid).next() {
        return Ok(f);
    }

    let lits = |v: &[(Key, Formula)]| v.iter().map(|(_, l)| l.clone()).collect::<Vec<_>>();
    let cube = generalize(s, lits(&implied), &|c| Formula::and([Formula::and(c.to_vec()), qb.clone()]))?;
    if let Some(c) = cube {
        return Ok(Formula::and(c));
    }
    let clause = generalize(s, lits(&excluding), &|c| {
        Formula::and([qa.clone(), Formula::not(Formula::or(c.to_vec()))])
    })?;
    Ok(clause.map(Formula::or).unwrap_or(qa))
}

type Key = (u32, usize, String);

/// Drops literals from `lits` (least general first) while `query` of the
/// remainder stays unsatisfiable. `None` if the full set fails already.
fn generalize(
    s: &mut Solver,
    mut lits: Vec<Formula>,
    query: &dyn Fn(&[Formula]) -> Formula,
) -> Result<Option<Vec<Formula>>, SolverError> {
    if lits.is_empty() || !s.is_unsat(&query(&lits))? {
        return Ok(None);
    }
    lits.sort_by_key(retention);
    let mut i = 0;
    while i < lits.len() {
        let mut rest = lits.clone();
        rest.remove(i);
        if !rest.is_empty() && s.is_unsat(&query(&rest))? {
            lits = rest;
        } else {
            i += 1;
        }
    }
    Ok(Some(lits))
}

/// Order in which generalization tries to drop literals: congruences and
/// point constraints first, bounds and relations between variables last.
fn retention(l: &Formula) -> u32 {
    let atom = match l {
        Formula::Not(a) => a.as_ref(),
        a => a,
    };
    let Formula::Cmp(op, a, b) = atom else { return 0 };
    if term_has_mod(a) || term_has_mod(b) {
        0
    } else if atom.free_vars().len() >= 2 {
        3
    } else if *op == CmpOp::Eq {
        1
    } else {
        2
    }
}
