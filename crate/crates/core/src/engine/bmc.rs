use crate::formula::{Formula, SsaMap};
use crate::solver::{SatStatus, Solver};
use crate::transform::SummarizedSystem;

use super::{
    check_certificate, Certificate, CertificateStatus, Counterexample, EngineConfig, QueryRecord,
    Status, Trace, Unrolling, Verdict,
};

/// Result of one exact BMC query at bound `k`.
pub(crate) enum BmcStep {
    Safe,
    Violated(Counterexample),
    Unknown(String),
}

pub(crate) fn bmc_step(
    sys: &SummarizedSystem,
    k: usize,
    solver: &mut Solver,
    trace: Option<&mut Trace>,
) -> Result<BmcStep, super::EngineError> {
    let u = Unrolling::new(sys, k)?;
    let (q, parts) = u.query();
    if let Some(t) = trace {
        t.queries.push(QueryRecord {
            k,
            parts,
            formula: q.clone(),
        });
    }
    let r = solver.check_sat(&q);
    Ok(match r.status {
        SatStatus::Unsat => BmcStep::Safe,
        SatStatus::Sat => BmcStep::Violated(Counterexample {
            depth: k - 1,
            model: r.model.unwrap_or_default(),
        }),
        SatStatus::Unknown => BmcStep::Unknown(r.reason.unwrap_or_else(|| "solver unknown".into())),
    })
}

/// Proof of a loop-free system: its only reachable loop-head state set is
/// empty, so `true` is trivially inductive and the error query was UNSAT.
pub(crate) fn loop_free_proof(
    sys: &SummarizedSystem,
    solver: &mut Solver,
    cfg: &EngineConfig,
    mut v: Verdict,
) -> Verdict {
    let cert = Certificate {
        base: SsaMap::new(),
        init: Formula::TRUE,
        fixed_point: Formula::TRUE,
        strengthening: None,
    };
    if cfg.check_certificates {
        let report = check_certificate(sys, &cert, solver);
        v.certificate_status = report.status();
        v.certificate_report = Some(report);
    } else {
        v.certificate_status = CertificateStatus::None;
    }
    v.certificate = Some(cert);
    v
}

/// Checks bounds 1..=k_max; FALSE on the first satisfiable query.
pub fn run_bmc(sys: &SummarizedSystem, cfg: &EngineConfig, solver: &mut Solver) -> Verdict {
    let mut trace = Trace::default();
    let k_max = if sys.loop_free { 1 } else { cfg.k_max.max(1) };
    for k in 1..=k_max {
        let step = match bmc_step(sys, k, solver, cfg.record.then_some(&mut trace)) {
            Ok(s) => s,
            Err(e) => return Verdict { trace, ..Verdict::unknown(k, e.to_string()) },
        };
        match step {
            BmcStep::Safe => {}
            BmcStep::Violated(cex) => {
                let mut v = Verdict::new(Status::False, k);
                v.counterexample = Some(cex);
                v.trace = trace;
                return v;
            }
            BmcStep::Unknown(r) => return Verdict { trace, ..Verdict::unknown(k, r) },
        }
    }
    if sys.loop_free {
        let v = Verdict {
            trace,
            ..Verdict::new(Status::True, 1)
        };
        return loop_free_proof(sys, solver, cfg, v);
    }
    Verdict {
        trace,
        ..Verdict::unknown(k_max, "bound exhausted")
    }
}
