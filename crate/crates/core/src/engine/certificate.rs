use std::collections::BTreeMap;
use std::fmt;

use crate::formula::{instantiate, shift_variable_index, Formula, IndexPool, SsaMap};
use crate::solver::Solver;
use crate::transform::SummarizedSystem;

use super::{Certificate, CertificateStatus, EngineError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Pass,
    Fail(String),
    Inconclusive(String),
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Pass)
    }

    pub fn failed(&self) -> bool {
        matches!(self, CheckOutcome::Fail(_))
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckOutcome::Pass => f.write_str("pass"),
            CheckOutcome::Fail(r) => write!(f, "fail ({r})"),
            CheckOutcome::Inconclusive(r) => write!(f, "inconclusive ({r})"),
        }
    }
}

/// Outcome of the three certificate conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateReport {
    /// INIT implies the invariant.
    pub initiation: CheckOutcome,
    /// The invariant is closed under TRANS.
    pub consecution: CheckOutcome,
    /// The invariant excludes ERROR, and no error is reachable before the loop.
    pub safety: CheckOutcome,
}

impl CertificateReport {
    /// A refuted initiation or consecution is a failure; anything short of
    /// three passes is merely uncertified.
    pub fn status(&self) -> CertificateStatus {
        if self.initiation.failed() || self.consecution.failed() {
            CertificateStatus::Fail
        } else if self.initiation.passed() && self.consecution.passed() && self.safety.passed() {
            CertificateStatus::Pass
        } else {
            CertificateStatus::Uncertified
        }
    }
}

fn outcome(r: Result<bool, impl fmt::Display>, what: &str) -> CheckOutcome {
    match r {
        Ok(true) => CheckOutcome::Pass,
        Ok(false) => CheckOutcome::Fail(what.into()),
        Err(e) => CheckOutcome::Inconclusive(e.to_string()),
    }
}

fn pool_above(fs: &[&Formula], base: &SsaMap) -> IndexPool {
    let mut top: BTreeMap<String, u32> = base.iter().map(|(k, v)| (k.to_string(), v)).collect();
    for f in fs {
        for v in f.free_vars() {
            let e = top.entry(v.name.to_string()).or_insert(v.index);
            *e = (*e).max(v.index);
        }
    }
    let mut pool = IndexPool::new();
    pool.reserve(&top.into_iter().collect());
    pool
}

/// Checks initiation, consecution and safety of `cert` with fresh queries.
pub fn check_certificate(
    sys: &SummarizedSystem,
    cert: &Certificate,
    solver: &mut Solver,
) -> CertificateReport {
    let inconclusive = |r: String| CertificateReport {
        initiation: CheckOutcome::Inconclusive(r.clone()),
        consecution: CheckOutcome::Inconclusive(r.clone()),
        safety: CheckOutcome::Inconclusive(r),
    };
    let base = &cert.base;
    let in_base = |v: &crate::formula::SsaVar| base.get(&v.name) == Some(v.index);
    let inv = cert.invariant();
    let f = if inv.free_vars().iter().all(in_base) {
        inv.clone()
    } else {
        match solver.project(&inv, &in_base) {
            Ok(f) => f,
            Err(e) => return inconclusive(format!("cannot project invariant: {e}")),
        }
    };

    let initiation = outcome(
        solver.is_unsat(&Formula::and([cert.init.clone(), Formula::not(f.clone())])),
        "INIT does not imply the invariant",
    );

    let mut pool = pool_above(&[&cert.init, &inv], base);
    let consecution = match instantiate(&sys.trans, base, &mut pool)
        .map_err(|e| e.to_string())
        .and_then(|(t, post)| {
            shift_variable_index(&f, &post, base)
                .map(|fp| (t, fp))
                .map_err(|e| e.to_string())
        }) {
        Ok((t, fp)) => outcome(
            solver.is_unsat(&Formula::and([f.clone(), t, Formula::not(fp)])),
            "invariant is not closed under TRANS",
        ),
        Err(e) => CheckOutcome::Inconclusive(e),
    };

    let safety = match instantiate(&sys.error, base, &mut pool)
        .and_then(|(e, _)| Ok((e, instantiate(&sys.pre_error, &SsaMap::new(), &mut pool)?.0)))
    {
        Ok((e, pre)) => match solver.unsat_batch(&[Formula::and([f.clone(), e]), pre]) {
            Ok(r) if r[0] && r[1] => CheckOutcome::Pass,
            Ok(r) if !r[1] => CheckOutcome::Fail("error reachable before the loop".into()),
            Ok(_) => CheckOutcome::Fail("invariant intersects ERROR".into()),
            Err(e) => CheckOutcome::Inconclusive(e.to_string()),
        },
        Err(e) => CheckOutcome::Inconclusive(e.to_string()),
    };

    CertificateReport {
        initiation,
        consecution,
        safety,
    }
}

/// Loop-head states over `base` that cannot reach ERROR within `depth`
/// traversals: `not E and not pre(E) and ... and not pre^depth(E)`.
pub fn error_free_within(
    sys: &SummarizedSystem,
    base: &SsaMap,
    depth: usize,
    solver: &mut Solver,
) -> Result<Formula, EngineError> {
    let in_base = |v: &crate::formula::SsaVar| base.get(&v.name) == Some(v.index);
    let mut pool = pool_above(&[], base);
    let (e, _) = instantiate(&sys.error, base, &mut pool)?;
    let mut p = solver.project(&e, &in_base)?;
    let mut parts = vec![Formula::not(p.clone())];
    for _ in 0..depth {
        let (t, post) = instantiate(&sys.trans, base, &mut pool)?;
        let next = shift_variable_index(&p, &post, base)?;
        p = solver.project(&Formula::and([t, next]), &in_base)?;
        parts.push(Formula::not(p.clone()));
    }
    Ok(Formula::and(parts))
}
