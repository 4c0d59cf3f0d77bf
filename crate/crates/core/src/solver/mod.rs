//! Client for an external SMT solver: satisfiability, models, projection
//! and Craig interpolants.

mod interpolate;
mod process;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::sexp::Sexp;
use crate::formula::{declarations, parse_formula_sexp, to_smtlib, Formula, SsaVar};

use process::SmtProcess;

pub use interpolate::Direction;

/// How interpolants are obtained from the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItpDialect {
    /// `(get-interpolant I B)` after asserting A.
    GetInterpolant,
    /// Named partitions and `(get-interpolants A B)`.
    NamedPartitions,
    /// Quantifier elimination on each side, then a search for a simple
    /// separating literal. Works with any solver that implements `qe`.
    Qe,
}

impl FromStr for ItpDialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" => Ok(ItpDialect::GetInterpolant),
            "b" => Ok(ItpDialect::NamedPartitions),
            "qe" => Ok(ItpDialect::Qe),
            _ => Err(format!("unknown interpolation dialect `{s}` (expected a, b or qe)")),
        }
    }
}

impl fmt::Display for ItpDialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ItpDialect::GetInterpolant => "a",
            ItpDialect::NamedPartitions => "b",
            ItpDialect::Qe => "qe",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub command: String,
    pub dialect: ItpDialect,
    pub timeout_ms: u64,
    pub validate_interpolants: bool,
    pub transcript: Option<PathBuf>,
    /// Hard stop for the whole run; queries never wait past it.
    pub deadline: Option<Instant>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: "z3 -in -smt2".into(),
            dialect: ItpDialect::Qe,
            timeout_ms: 20_000,
            validate_interpolants: true,
            transcript: None,
            deadline: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("cannot start solver: {0}")]
    Spawn(String),
    #[error("solver crashed: {0}")]
    Crash(String),
    #[error("solver rejected the query: {0}")]
    Rejected(String),
    #[error("solver timed out")]
    Timeout,
    #[error("solver answered unknown")]
    Unknown,
    #[error("interpolation requested for a satisfiable pair")]
    NotUnsat,
    #[error("interpolation unsupported: {0}")]
    InterpolationUnsupported(String),
    #[error("interpolant contract violated: {0}")]
    ContractViolation(String),
    #[error("unsupported solver term: {0}")]
    UnsupportedTerm(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatStatus {
    Sat,
    Unsat,
    Unknown,
}

pub type Model = BTreeMap<SsaVar, i64>;

#[derive(Clone, Debug)]
pub struct SatResult {
    pub status: SatStatus,
    pub model: Option<Model>,
    pub reason: Option<String>,
}

/// Counters for one client, reported by the harness.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub queries: u64,
    pub interpolants: u64,
    pub validated: u64,
    pub contract_violations: u64,
    pub respawns: u64,
}

/// Owns one solver subprocess. Not shareable between threads.
pub struct Solver {
    cfg: SolverConfig,
    proc: Option<SmtProcess>,
    transcript: Option<File>,
    /// Whether `get-interpolant` takes the two partitions directly (z3)
    /// rather than a named conjecture (cvc5); learned on first use.
    pub(crate) itp_takes_pair: Option<bool>,
    pub stats: SolverStats,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self, SolverError> {
        let transcript = cfg.transcript.as_deref().and_then(process::open_transcript);
        let proc = SmtProcess::spawn(&cfg.command)?;
        Ok(Solver {
            cfg,
            proc: Some(proc),
            itp_takes_pair: None,
            transcript,
            stats: SolverStats::default(),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn deadline(&self) -> Instant {
        let q = Instant::now() + Duration::from_millis(self.cfg.timeout_ms.max(1));
        match self.cfg.deadline {
            Some(d) if d < q => d,
            _ => q,
        }
    }

    /// Runs one logical query from a fresh solver state.
    fn session(&mut self, options: &str, body: &str) -> Result<Vec<Sexp>, SolverError> {
        self.stats.queries += 1;
        if self.proc.is_none() {
            self.stats.respawns += 1;
            self.proc = Some(SmtProcess::spawn(&self.cfg.command)?);
        }
        self.send(&format!("(reset)\n{options}(set-logic ALL)\n{body}"))
    }

    /// Ends the solver process; the next session starts a fresh one.
    pub(crate) fn restart(&mut self) {
        if let Some(mut p) = self.proc.take() {
            p.kill();
        }
    }

    /// Continues the current session.
    fn send(&mut self, script: &str) -> Result<Vec<Sexp>, SolverError> {
        let deadline = self.deadline();
        let Some(proc) = self.proc.as_mut() else {
            return Err(SolverError::Crash("no live solver session".into()));
        };
        match proc.run(script, deadline, self.transcript.as_mut()) {
            Ok(out) => Ok(out),
            Err(e) => {
                if let Some(mut p) = self.proc.take() {
                    p.kill();
                }
                Err(e)
            }
        }
    }

    pub fn check_sat(&mut self, f: &Formula) -> SatResult {
        match self.check_sat_inner(f) {
            Ok(r) => r,
            Err(e) => SatResult {
                status: SatStatus::Unknown,
                model: None,
                reason: Some(e.to_string()),
            },
        }
    }

    fn check_sat_inner(&mut self, f: &Formula) -> Result<SatResult, SolverError> {
        let vars = f.free_vars();
        let mut body = declarations(vars.iter());
        body.push_str(&format!("(assert {})\n(check-sat)\n", to_smtlib(f)));
        let out = self.session("(set-option :produce-models true)\n", &body)?;
        let status = sat_status(out.first())?;
        if status != SatStatus::Sat {
            return Ok(SatResult {
                status,
                model: None,
                reason: (status == SatStatus::Unknown).then(|| "solver answered unknown".into()),
            });
        }
        let model = if vars.is_empty() {
            Model::new()
        } else {
            let names: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
            let out = self.send(&format!("(get-value ({}))", names.join(" ")))?;
            parse_model(out.first(), &vars)?
        };
        Ok(SatResult {
            status,
            model: Some(model),
            reason: None,
        })
    }

    /// `Ok(true)` iff `f` is unsatisfiable; unknown outcomes are errors.
    pub fn is_unsat(&mut self, f: &Formula) -> Result<bool, SolverError> {
        let mut body = declarations(f.free_vars().iter());
        body.push_str(&format!("(assert {})\n(check-sat)\n", to_smtlib(f)));
        let out = self.session("", &body)?;
        match sat_status(out.first())? {
            SatStatus::Sat => Ok(false),
            SatStatus::Unsat => Ok(true),
            SatStatus::Unknown => Err(SolverError::Unknown),
        }
    }

    pub fn is_valid(&mut self, f: &Formula) -> Result<bool, SolverError> {
        self.is_unsat(&Formula::not(f.clone()))
    }

    /// Checks several formulas for unsatisfiability in one session.
    pub fn unsat_batch(&mut self, fs: &[Formula]) -> Result<Vec<bool>, SolverError> {
        if fs.is_empty() {
            return Ok(Vec::new());
        }
        let vars: BTreeSet<SsaVar> = fs.iter().flat_map(|f| f.free_vars()).collect();
        let mut body = declarations(vars.iter());
        for f in fs {
            body.push_str(&format!("(push 1)\n(assert {})\n(check-sat)\n(pop 1)\n", to_smtlib(f)));
        }
        let out = self.session("", &body)?;
        if out.len() != fs.len() {
            return Err(SolverError::Crash(format!(
                "expected {} answers, got {}",
                fs.len(),
                out.len()
            )));
        }
        out.iter()
            .map(|s| match sat_status(Some(s))? {
                SatStatus::Sat => Ok(false),
                SatStatus::Unsat => Ok(true),
                SatStatus::Unknown => Err(SolverError::Unknown),
            })
            .collect()
    }

    /// Existentially quantifies every variable of `f` not satisfying `keep`
    /// and returns an equivalent quantifier-free formula.
    pub fn project(
        &mut self,
        f: &Formula,
        keep: &dyn Fn(&SsaVar) -> bool,
    ) -> Result<Formula, SolverError> {
        let (kept, dropped): (Vec<SsaVar>, Vec<SsaVar>) = f.free_vars().into_iter().partition(|v| keep(v));
        if dropped.is_empty() {
            return Ok(f.clone());
        }
        if f.is_false() {
            return Ok(Formula::FALSE);
        }
        let mut body = declarations(kept.iter());
        let bound: Vec<String> = dropped.iter().map(|v| format!("({v} Int)")).collect();
        body.push_str(&format!(
            "(assert (exists ({}) {}))\n(apply (or-else qe2 qe))\n",
            bound.join(" "),
            to_smtlib(f)
        ));
        let out = self.session("", &body)?;
        let g = parse_goals(out.first())?;
        let stray: Vec<_> = g.free_vars().into_iter().filter(|v| !keep(v)).collect();
        if !stray.is_empty() {
            return Err(SolverError::UnsupportedTerm(format!(
                "projection kept eliminated variables {stray:?}"
            )));
        }
        Ok(g)
    }

    /// Enumerates the distinct valuations of `vars` over models of `f`,
    /// stopping after `limit` valuations.
    pub fn enumerate(
        &mut self,
        f: &Formula,
        vars: &[SsaVar],
        limit: usize,
    ) -> Result<Vec<Vec<i64>>, SolverError> {
        let mut out = Vec::new();
        let mut blocked = vec![f.clone()];
        while out.len() < limit {
            let q = Formula::and(blocked.iter().cloned());
            let r = self.check_sat(&q);
            match r.status {
                SatStatus::Unsat => break,
                SatStatus::Unknown => return Err(SolverError::Unknown),
                SatStatus::Sat => {}
            }
            let m = r.model.expect("sat carries a model");
            let vals: Vec<i64> = vars.iter().map(|v| m.get(v).copied().unwrap_or(0)).collect();
            blocked.push(Formula::not(Formula::and(vars.iter().zip(&vals).map(|(v, c)| {
                Formula::eq(crate::formula::Term::Var(v.clone()), crate::formula::Term::Const(*c))
            }))));
            if vars.is_empty() {
                out.push(vals);
                break;
            }
            out.push(vals);
        }
        Ok(out)
    }

    /// Craig interpolant of `(a, b)`: `a -> C`, `C & b` unsat, and `C` only
    /// mentions shared variables. `Backward` computes `not itp(b, a)`.
    pub fn get_interpolant(
        &mut self,
        a: &Formula,
        b: &Formula,
        direction: Direction,
    ) -> Result<Formula, SolverError> {
        self.interpolant(a, b, direction, None)
    }

    /// Like [`Solver::get_interpolant`], but among candidate interpolants
    /// prefers one inconsistent with `avoid`. The preference is best effort
    /// and never weakens the interpolation contract.
    pub fn get_interpolant_avoiding(
        &mut self,
        a: &Formula,
        b: &Formula,
        direction: Direction,
        avoid: &Formula,
    ) -> Result<Formula, SolverError> {
        self.interpolant(a, b, direction, Some(avoid))
    }

    fn interpolant(
        &mut self,
        a: &Formula,
        b: &Formula,
        direction: Direction,
        avoid: Option<&Formula>,
    ) -> Result<Formula, SolverError> {
        use interpolate::Goal;
        self.stats.interpolants += 1;
        let c = match direction {
            Direction::Forward => {
                let goal = avoid.map_or(Goal::None, |f| Goal::Exclude(f.clone()));
                interpolate::compute(self, a, b, &goal)?
            }
            Direction::Backward => match interpolate::compute(
                self,
                b,
                a,
                &avoid.map_or(Goal::None, |f| Goal::Cover(f.clone())),
            )? {
                Formula::Not(c) => *c,
                c => Formula::not(c),
            },
        };
        let c = match avoid {
            Some(f) => self.strengthen(a, b, c, f),
            None => c,
        };
        if self.cfg.validate_interpolants {
            self.stats.validated += 1;
            if let Err(e) = self.validate(a, b, &c) {
                if matches!(e, SolverError::ContractViolation(_)) {
                    self.stats.contract_violations += 1;
                }
                return Err(e);
            }
        }
        Ok(c)
    }

    /// Conjoins the shared projection of `avoid` negated when `a` already
    /// excludes it, so the result stays an interpolant of `(a, b)`.
    fn strengthen(&mut self, a: &Formula, b: &Formula, c: Formula, avoid: &Formula) -> Formula {
        if self.is_unsat(&Formula::and([c.clone(), avoid.clone()])).unwrap_or(true) {
            return c;
        }
        let shared: BTreeSet<SsaVar> = a.free_vars().intersection(&b.free_vars()).cloned().collect();
        let Ok(h) = self.project(avoid, &|v| shared.contains(v)) else { return c };
        if !h.free_vars().is_subset(&shared) {
            return c;
        }
        match self.is_unsat(&Formula::and([a.clone(), h.clone()])) {
            Ok(true) => Formula::and([c, Formula::not(h)]),
            _ => c,
        }
    }

    fn validate(&mut self, a: &Formula, b: &Formula, c: &Formula) -> Result<(), SolverError> {
        let shared: BTreeSet<SsaVar> = a.free_vars().intersection(&b.free_vars()).cloned().collect();
        let foreign: Vec<String> = c
            .free_vars()
            .into_iter()
            .filter(|v| !shared.contains(v))
            .map(|v| v.to_string())
            .collect();
        if !foreign.is_empty() {
            return Err(SolverError::ContractViolation(format!(
                "non-shared variables {}",
                foreign.join(", ")
            )));
        }
        let checks = self.unsat_batch(&[
            Formula::and([a.clone(), Formula::not(c.clone())]),
            Formula::and([c.clone(), b.clone()]),
        ])?;
        if !checks[0] {
            return Err(SolverError::ContractViolation("A does not imply the interpolant".into()));
        }
        if !checks[1] {
            return Err(SolverError::ContractViolation("interpolant is consistent with B".into()));
        }
        Ok(())
    }
}

fn sat_status(s: Option<&Sexp>) -> Result<SatStatus, SolverError> {
    match s.and_then(Sexp::atom) {
        Some("sat") => Ok(SatStatus::Sat),
        Some("unsat") => Ok(SatStatus::Unsat),
        Some("unknown") => Ok(SatStatus::Unknown),
        _ => Err(SolverError::Crash(format!(
            "expected a check-sat answer, got {}",
            s.map(|s| s.to_string()).unwrap_or_else(|| "nothing".into())
        ))),
    }
}

fn int_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(l) if l.len() == 2 && l[0].is_atom("-") => int_value(&l[1]).map(|v| -v),
        _ => None,
    }
}

fn parse_model(s: Option<&Sexp>, vars: &BTreeSet<SsaVar>) -> Result<Model, SolverError> {
    let bad = |s: &dyn fmt::Display| SolverError::Crash(format!("unreadable model: {s}"));
    let pairs = s.and_then(Sexp::list).ok_or_else(|| bad(&"missing get-value answer"))?;
    let mut model = Model::new();
    for p in pairs {
        let l = p.list().filter(|l| l.len() == 2).ok_or_else(|| bad(p))?;
        let name = l[0].atom().ok_or_else(|| bad(p))?;
        let v = vars
            .iter()
            .find(|v| v.to_string() == name)
            .ok_or_else(|| bad(p))?;
        model.insert(v.clone(), int_value(&l[1]).ok_or_else(|| bad(p))?);
    }
    if model.len() != vars.len() {
        return Err(bad(&"model is not total"));
    }
    Ok(model)
}

/// Reads `(goals (goal f1 f2 ... :precision ...) ...)` as a disjunction of
/// conjunctions.
fn parse_goals(s: Option<&Sexp>) -> Result<Formula, SolverError> {
    let bad = |s: &dyn fmt::Display| SolverError::UnsupportedTerm(format!("unreadable goals: {s}"));
    let l = s.and_then(Sexp::list).ok_or_else(|| bad(&"missing goals"))?;
    if !l.first().is_some_and(|h| h.is_atom("goals")) {
        return Err(bad(s.unwrap()));
    }
    let mut disj = Vec::new();
    for g in &l[1..] {
        let items = g
            .list()
            .filter(|i| i.first().is_some_and(|h| h.is_atom("goal")))
            .ok_or_else(|| bad(g))?;
        let mut conj = Vec::new();
        let mut it = items[1..].iter();
        while let Some(x) = it.next() {
            if x.atom().is_some_and(|a| a.starts_with(':')) {
                it.next();
                continue;
            }
            conj.push(parse_formula_sexp(x).map_err(|e| SolverError::UnsupportedTerm(e.to_string()))?);
        }
        disj.push(Formula::and(conj));
    }
    Ok(Formula::or(disj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn solver() -> Solver {
        Solver::new(SolverConfig::default()).unwrap()
    }

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn contradiction_is_unsat() {
        let r = solver().check_sat(&f("(and (= x!0 0) (not (= x!0 0)))"));
        assert_eq!(r.status, SatStatus::Unsat);
        assert!(r.model.is_none());
    }

    #[test]
    fn even_bmc_query_at_two_is_unsat() {
        let q = f("(and (= x!0 0) (not (= r!0 0)) (= x!1 (+ x!0 2)) (= r!1 0) (not (= (mod x!1 2) 0)))");
        assert_eq!(solver().check_sat(&q).status, SatStatus::Unsat);
    }

    #[test]
    fn sat_comes_with_a_total_model() {
        let r = solver().check_sat(&f("(and (= x!0 0) (= x!1 (+ x!0 2)) (= x!1 2))"));
        assert_eq!(r.status, SatStatus::Sat);
        let m = r.model.unwrap();
        assert_eq!(m[&SsaVar::new("x", 0)], 0);
        assert_eq!(m[&SsaVar::new("x", 1)], 2);
    }

    #[test]
    fn negative_model_values() {
        let r = solver().check_sat(&f("(= (+ y!0 5) 0)"));
        assert_eq!(r.model.unwrap()[&SsaVar::new("y", 0)], -5);
    }

    #[test]
    fn projection_eliminates_locals() {
        let mut s = solver();
        let g = s
            .project(&f("(and (= (mod x!0 2) 0) (not (= r!0 0)) (= x!1 (+ x!0 2)))"), &|v| v.index == 1)
            .unwrap();
        assert!(g.free_vars().iter().all(|v| v.index == 1));
        assert!(s.is_valid(&Formula::iff(g, f("(= (mod x!1 2) 0)"))).unwrap());
    }

    #[test]
    fn even_first_step_interpolant_is_parity() {
        let mut s = solver();
        let a = f("(and (= x!0 0) (not (= r!0 0)) (= x!1 (+ x!0 2)))");
        let b = f("(and (= r!1 0) (not (= (mod x!1 2) 0)))");
        for d in [Direction::Forward, Direction::Backward] {
            let c = s.get_interpolant(&a, &b, d).unwrap();
            assert_eq!(to_smtlib(&c), "(= (mod x!1 2) 0)", "{d:?}");
        }
        assert_eq!(s.stats.contract_violations, 0);
    }

    #[test]
    fn get_interpolant_dialect_meets_contract() {
        let mut s = Solver::new(SolverConfig {
            dialect: ItpDialect::GetInterpolant,
            ..SolverConfig::default()
        })
        .unwrap();
        let a = f("(and (= x!0 0) (not (= r!0 0)) (= x!1 (+ x!0 2)))");
        let b = f("(and (= r!1 0) (not (= (mod x!1 2) 0)))");
        for _ in 0..3 {
            match s.get_interpolant(&a, &b, Direction::Forward) {
                Ok(c) => assert!(c.free_vars().iter().all(|v| *v == SsaVar::new("x", 1))),
                Err(SolverError::InterpolationUnsupported(_)) => return,
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(s.itp_takes_pair, Some(true));
        assert_eq!(s.stats.contract_violations, 0);
        let sat = s.get_interpolant(&f("(> x!0 0)"), &f("(> x!0 1)"), Direction::Forward);
        assert!(matches!(sat, Err(SolverError::NotUnsat)));
    }

    #[test]
    fn vacuous_partition_gives_false() {
        let mut s = solver();
        let c = s.get_interpolant(&Formula::FALSE, &f("(= y!0 1)"), Direction::Forward).unwrap();
        assert!(s.is_unsat(&c).unwrap());
    }

    #[test]
    fn satisfiable_pair_is_rejected() {
        let mut s = solver();
        let e = s.get_interpolant(&f("(= x!0 1)"), &f("(> x!0 0)"), Direction::Forward);
        assert!(matches!(e, Err(SolverError::NotUnsat)));
    }

    #[test]
    fn rejected_command_respawns() {
        let mut s = solver();
        let bad = s.session("", "(assert (foo))\n(check-sat)\n");
        assert!(matches!(bad, Err(SolverError::Rejected(_))));
        assert!(s.is_unsat(&Formula::FALSE).unwrap());
        assert_eq!(s.stats.respawns, 1);
    }

    #[test]
    fn timeout_is_unknown() {
        let mut s = Solver::new(SolverConfig {
            command: "sleep 5".into(),
            timeout_ms: 100,
            ..SolverConfig::default()
        })
        .unwrap();
        let r = s.check_sat(&f("(= x!0 0)"));
        assert_eq!(r.status, SatStatus::Unknown);
        assert!(r.reason.unwrap().contains("timed out"));
    }

    #[test]
    fn model_enumeration_with_blocking() {
        let mut s = solver();
        let x = SsaVar::new("x", 0);
        let mut vals = s.enumerate(&f("(and (<= 0 x!0) (< x!0 4))"), &[x], 100).unwrap();
        vals.sort();
        assert_eq!(vals, vec![vec![0], vec![1], vec![2], vec![3]]);
    }
}
