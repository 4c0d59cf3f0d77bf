use crate::formula::{instantiate, shift_variable_index, Formula, IndexPool, SsaMap, SsaVar};
use crate::solver::{SatStatus, Solver};
use crate::transform::SummarizedSystem;

use super::bmc::{bmc_step, loop_free_proof, BmcStep};
use super::{EngineConfig, EngineError, Status, Trace, Verdict};

/// `not ERROR` over the loop-head variables of generation `m`, with the
/// error block's internal variables projected away when the solver can.
struct Property {
    at: SsaMap,
    projected: Option<Formula>,
}

impl Property {
    fn new(sys: &SummarizedSystem, solver: &mut Solver) -> Result<Self, EngineError> {
        let mut pool = IndexPool::new();
        let at: SsaMap = sys.state_vars.iter().map(|v| (v.as_str(), 0)).collect();
        let (e, _) = instantiate(&sys.error, &at, &mut pool)?;
        let keep = |v: &SsaVar| at.get(&v.name) == Some(v.index);
        let projected = solver.project(&e, &keep).ok().map(Formula::not);
        Ok(Property { at, projected })
    }

    fn at(
        &self,
        sys: &SummarizedSystem,
        m: &SsaMap,
        pool: &mut IndexPool,
    ) -> Result<Formula, EngineError> {
        match &self.projected {
            Some(p) => Ok(shift_variable_index(p, m, &self.at)?),
            None => Ok(Formula::not(instantiate(&sys.error, m, pool)?.0)),
        }
    }
}

/// Step case: k traversals from an arbitrary loop-head state, the property
/// holding at the first k visits and failing at visit k+1.
fn step_case(
    sys: &SummarizedSystem,
    k: usize,
    prop: &Property,
    solver: &mut Solver,
) -> Result<SatStatus, EngineError> {
    let mut pool = IndexPool::new();
    let mut m: SsaMap = sys
        .state_vars
        .iter()
        .map(|v| (v.as_str(), 0))
        .collect();
    pool.reserve(&m);
    let mut parts = Vec::new();
    for _ in 0..k {
        parts.push(prop.at(sys, &m, &mut pool)?);
        let (t, next) = instantiate(&sys.trans, &m, &mut pool)?;
        parts.push(t);
        m = next;
    }
    parts.push(instantiate(&sys.error, &m, &mut pool)?.0);
    Ok(solver.check_sat(&Formula::and(parts)).status)
}

/// Plain k-induction without auxiliary invariants.
pub fn run_kinduction(sys: &SummarizedSystem, cfg: &EngineConfig, solver: &mut Solver) -> Verdict {
    let mut trace = Trace::default();
    let mut prop = None;
    for k in 1..=cfg.k_max.max(1) {
        match bmc_step(sys, k, solver, cfg.record.then_some(&mut trace)) {
            Ok(BmcStep::Safe) => {}
            Ok(BmcStep::Violated(cex)) => {
                let mut v = Verdict::new(Status::False, k);
                v.counterexample = Some(cex);
                v.trace = trace;
                return v;
            }
            Ok(BmcStep::Unknown(r)) => return Verdict { trace, ..Verdict::unknown(k, r) },
            Err(e) => return Verdict { trace, ..Verdict::unknown(k, e.to_string()) },
        }
        if sys.loop_free {
            let v = Verdict {
                trace,
                ..Verdict::new(Status::True, 1)
            };
            return loop_free_proof(sys, solver, cfg, v);
        }
        if prop.is_none() {
            match Property::new(sys, solver) {
                Ok(p) => prop = Some(p),
                Err(e) => return Verdict { trace, ..Verdict::unknown(k, e.to_string()) },
            }
        }
        match step_case(sys, k, prop.as_ref().unwrap(), solver) {
            Ok(SatStatus::Unsat) => {
                return Verdict {
                    trace,
                    ..Verdict::new(Status::True, k)
                }
            }
            Ok(SatStatus::Sat) => {}
            Ok(SatStatus::Unknown) => return Verdict { trace, ..Verdict::unknown(k, "solver unknown") },
            Err(e) => return Verdict { trace, ..Verdict::unknown(k, e.to_string()) },
        }
    }
    Verdict {
        trace,
        ..Verdict::unknown(cfg.k_max, "bound exhausted")
    }
}
