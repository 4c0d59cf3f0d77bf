use crate::formula::{shift_variable_index, Formula, SsaMap, SsaVar};
use crate::solver::{Direction, SatStatus, Solver};
use crate::transform::SummarizedSystem;

use super::{
    check_certificate, error_free_within, run_bmc, Certificate, CertificateStatus, Counterexample, EngineConfig,
    EngineError, QueryRecord, Status, Trace, Unrolling, Verdict,
};

#[derive(Clone, Debug)]
pub enum FixedPoint {
    /// `image` is an inductive overapproximation of the loop-head states.
    Reached(Formula),
    /// The overapproximation reached an error, or the iteration cap was hit.
    NotReached,
}

/// Overapproximates the states reachable at the loop head by repeatedly
/// interpolating between one traversal from `start` and the suffix.
///
/// `m0` is the exit generation of `prefix`, `m1` the exit generation of `lp`.
/// Interpolants inconsistent with `avoid` (over generation `m1`) are preferred.
#[allow(clippy::too_many_arguments)]
pub fn reach_fixed_point(
    prefix: &Formula,
    lp: &Formula,
    suffix: &Formula,
    m0: &SsaMap,
    m1: &SsaMap,
    direction: Direction,
    avoid: Option<&Formula>,
    max_iterations: usize,
    solver: &mut Solver,
    mut trace: Option<(&mut Trace, usize)>,
) -> Result<FixedPoint, EngineError> {
    let in_m0 = |v: &SsaVar| m0.get(&v.name) == Some(v.index);
    let mut image = if prefix.free_vars().iter().all(in_m0) {
        prefix.clone()
    } else {
        solver.project(prefix, &in_m0).unwrap_or_else(|_| prefix.clone())
    };
    let mut start = prefix.clone();
    if let Some((t, k)) = trace.as_mut() {
        t.images.push((*k, image.clone()));
    }
    for _ in 0..max_iterations {
        let q = Formula::and([start.clone(), lp.clone(), suffix.clone()]);
        match solver.check_sat(&q).status {
            SatStatus::Unsat => {}
            SatStatus::Sat => return Ok(FixedPoint::NotReached),
            SatStatus::Unknown => return Err(EngineError::Solver(crate::solver::SolverError::Unknown)),
        }
        let a = Formula::and([start.clone(), lp.clone()]);
        let itp = match avoid {
            Some(f) => solver.get_interpolant_avoiding(&a, suffix, direction, f)?,
            None => solver.get_interpolant(&a, suffix, direction)?,
        };
        let itp = shift_variable_index(&itp, m0, m1)?;
        if solver.is_unsat(&Formula::and([itp.clone(), Formula::not(image.clone())]))? {
            return Ok(FixedPoint::Reached(image));
        }
        image = Formula::or([image, itp.clone()]);
        start = itp;
        if let Some((t, k)) = trace.as_mut() {
            t.images.push((*k, image.clone()));
        }
    }
    Ok(FixedPoint::NotReached)
}

/// Interpolation-based model checking with a growing unrolling bound.
pub fn run_imc(sys: &SummarizedSystem, cfg: &EngineConfig, solver: &mut Solver) -> Verdict {
    if sys.loop_free {
        return run_bmc(sys, cfg, solver);
    }
    let mut trace = Trace::default();
    for k in 1..=cfg.k_max.max(1) {
        let u = match Unrolling::new(sys, k) {
            Ok(u) => u,
            Err(e) => return Verdict { trace, ..Verdict::unknown(k, e.to_string()) },
        };
        let (q, parts) = u.query();
        if cfg.record {
            trace.queries.push(QueryRecord {
                k,
                parts,
                formula: q.clone(),
            });
        }
        let r = solver.check_sat(&q);
        match r.status {
            SatStatus::Unsat => {}
            SatStatus::Sat => {
                let mut v = Verdict::new(Status::False, k);
                v.counterexample = Some(Counterexample {
                    depth: k - 1,
                    model: r.model.unwrap_or_default(),
                });
                v.trace = trace;
                return v;
            }
            SatStatus::Unknown => {
                let reason = r.reason.unwrap_or_else(|| "solver unknown".into());
                return Verdict { trace, ..Verdict::unknown(k, reason) };
            }
        }
        if k == 1 {
            continue;
        }
        let suffix = Formula::and(u.trans[1..].iter().cloned().chain([u.error.clone()]));
        let fp = reach_fixed_point(
            &u.init,
            &u.trans[0],
            &suffix,
            &u.maps[0],
            &u.maps[1],
            cfg.direction,
            cfg.guide_interpolants.then_some(&u.first_error),
            cfg.max_fixpoint_iterations,
            solver,
            cfg.record.then_some((&mut trace, k)),
        );
        match fp {
            Ok(FixedPoint::NotReached) => {}
            Ok(FixedPoint::Reached(image)) => {
                let mut cert = Certificate::new(u.maps[0].clone(), u.init.clone(), image);
                let mut v = Verdict::new(Status::True, k);
                if cfg.check_certificates {
                    let mut report = check_certificate(sys, &cert, solver);
                    if report.initiation.passed() && report.consecution.passed() && report.safety.failed() {
                        if let Ok(s) = error_free_within(sys, &cert.base, k - 2, solver) {
                            let strong = Certificate {
                                strengthening: Some(s),
                                ..cert.clone()
                            };
                            let r = check_certificate(sys, &strong, solver);
                            if r.status() == CertificateStatus::Pass {
                                (cert, report) = (strong, r);
                            }
                        }
                    }
                    v.certificate_status = report.status();
                    if v.certificate_status == CertificateStatus::Fail {
                        v.status = Status::Unknown;
                        v.reason = Some(format!(
                            "certificate rejected: initiation {}, consecution {}",
                            report.initiation, report.consecution
                        ));
                    }
                    v.certificate_report = Some(report);
                }
                v.certificate = Some(cert);
                v.trace = trace;
                return v;
            }
            Err(e) => return Verdict { trace, ..Verdict::unknown(k, e.to_string()) },
        }
    }
    Verdict {
        trace,
        ..Verdict::unknown(cfg.k_max, "bound exhausted")
    }
}
