use crate::formula::{parse_formula, Formula, SsaMap};
use crate::frontend::{build_cfa, parse};
use crate::solver::{Direction, Solver, SolverConfig};
use crate::transform::{large_block_encode, single_loop_transform, SummarizedSystem};

use super::*;

const EVEN: &str = "int x;\nx = 0;\nwhile (nondet()) {\n    x = x + 2;\n}\nif (x % 2) {\n    ERROR: return;\n}\n";

fn system(src: &str) -> SummarizedSystem {
    let cfa = build_cfa(&parse(src).unwrap()).unwrap();
    large_block_encode(&single_loop_transform(&cfa)).unwrap()
}

fn solver() -> Solver {
    Solver::new(SolverConfig::default()).unwrap()
}

fn cfg(k_max: usize) -> EngineConfig {
    EngineConfig {
        k_max,
        record: true,
        ..EngineConfig::default()
    }
}

#[test]
fn even_imc_proves_with_certificate() {
    let v = run_imc(&system(EVEN), &cfg(5), &mut solver());
    assert_eq!(v.status, Status::True, "{:?}", v.reason);
    assert!(v.k_reached <= 5);
    assert_eq!(v.certificate_status, CertificateStatus::Pass);
    assert!(v.certificate.is_some());
}

#[test]
fn even_imc_agrees_in_both_directions() {
    for d in [Direction::Forward, Direction::Backward] {
        let c = EngineConfig {
            direction: d,
            ..cfg(5)
        };
        assert_eq!(run_imc(&system(EVEN), &c, &mut solver()).status, Status::True);
    }
}

#[test]
fn even_bmc_exhausts_bound() {
    let v = run_bmc(&system(EVEN), &cfg(5), &mut solver());
    assert_eq!(v.status, Status::Unknown);
    assert_eq!(v.trace.queries.len(), 5);
}

#[test]
fn bmc_query_has_k_minus_one_trans_copies() {
    let v = run_bmc(&system(EVEN), &cfg(4), &mut solver());
    for q in &v.trace.queries {
        let n = q.parts.iter().filter(|p| **p == QueryPart::Trans).count();
        assert_eq!(n, q.k - 1);
    }
}

const COUNT3: &str = "int x; x = 0; while (nondet()) { x = x + 1; } assert(x != 3);";

#[test]
fn counter_violation_found_at_depth_three() {
    let sys = system(COUNT3);
    for run in [run_bmc, run_imc, run_kinduction] {
        let v = run(&sys, &cfg(5), &mut solver());
        assert_eq!(v.status, Status::False);
        assert_eq!(v.k_reached, 4);
        assert_eq!(v.counterexample_depth(), Some(3));
    }
}

#[test]
fn loop_free_violation_at_k_one() {
    let sys = system("int x; x = 1; assert(x == 2);");
    let v = run_bmc(&sys, &cfg(5), &mut solver());
    assert_eq!((v.status, v.k_reached), (Status::False, 1));
    assert_eq!(run_imc(&sys, &cfg(5), &mut solver()).status, Status::False);
}

#[test]
fn loop_free_proof_is_certified() {
    let sys = system("int x; x = 1; assert(x == 1);");
    let v = run_imc(&sys, &cfg(5), &mut solver());
    assert_eq!(v.status, Status::True);
    assert_eq!(v.certificate_status, CertificateStatus::Pass);
}

#[test]
fn step_by_two_never_hits_seven() {
    let sys = system("int x; x = 0; while (nondet()) { x = x + 2; } assert(x != 7);");
    let v = run_imc(&sys, &cfg(6), &mut solver());
    assert_eq!(v.status, Status::True, "{:?}", v.reason);
    assert_eq!(v.certificate_status, CertificateStatus::Pass);
}

#[test]
fn counter_below_two_is_refuted() {
    let v = run_imc(
        &system("int x; x = 0; while (nondet()) { x = x + 1; } assert(x < 2);"),
        &cfg(5),
        &mut solver(),
    );
    assert_eq!(v.status, Status::False);
    assert_eq!(v.counterexample_depth(), Some(2));
}

#[test]
fn kinduction_examples() {
    let v = run_kinduction(
        &system("int x; x = 0; while (nondet()) { x = x + 0; } assert(x == 0);"),
        &cfg(5),
        &mut solver(),
    );
    assert_eq!((v.status, v.k_reached), (Status::True, 1));
    let v = run_kinduction(&system(EVEN), &cfg(5), &mut solver());
    assert_eq!(v.status, Status::True);
    assert!(v.k_reached <= 2);
}

#[test]
fn images_grow_monotonically() {
    let v = run_imc(&system(EVEN), &cfg(5), &mut solver());
    let mut s = solver();
    for w in v.trace.images.windows(2) {
        if w[0].0 == w[1].0 {
            let f = Formula::implies(w[0].1.clone(), w[1].1.clone());
            assert!(s.is_valid(&f).unwrap());
        }
    }
}

#[test]
fn vacuous_prefix_converges_immediately() {
    let m0: SsaMap = [("x", 0)].into_iter().collect();
    let m1: SsaMap = [("x", 1)].into_iter().collect();
    let lp = parse_formula("(= x!1 (+ x!0 1))").unwrap();
    let suffix = parse_formula("(= x!1 5)").unwrap();
    let r = reach_fixed_point(
        &Formula::FALSE,
        &lp,
        &suffix,
        &m0,
        &m1,
        Direction::Backward,
        None,
        10,
        &mut solver(),
        None,
    )
    .unwrap();
    assert!(matches!(r, FixedPoint::Reached(f) if f.is_false()));
}

#[test]
fn coarse_certificate_fails_safety() {
    let sys = system(EVEN);
    let base: SsaMap = [("x", 0)].into_iter().collect();
    let cert = Certificate {
        base,
        init: parse_formula("(= x!0 0)").unwrap(),
        fixed_point: Formula::TRUE,
        strengthening: None,
    };
    let r = check_certificate(&sys, &cert, &mut solver());
    assert!(r.initiation.passed() && r.consecution.passed());
    assert!(r.safety.failed());
    assert_eq!(r.status(), CertificateStatus::Uncertified);
}

#[test]
fn dropping_a_disjunct_breaks_the_certificate() {
    let sys = system(EVEN);
    let base: SsaMap = [("x", 0)].into_iter().collect();
    let init = parse_formula("(= x!0 0)").unwrap();
    let full = Certificate {
        base: base.clone(),
        init: init.clone(),
        fixed_point: parse_formula("(or (= x!0 0) (= (mod x!0 2) 0))").unwrap(),
        strengthening: None,
    };
    assert_eq!(check_certificate(&sys, &full, &mut solver()).status(), CertificateStatus::Pass);
    let mutant = Certificate {
        fixed_point: parse_formula("(= x!0 0)").unwrap(),
        ..full
    };
    let r = check_certificate(&sys, &mutant, &mut solver());
    assert!(r.consecution.failed());
    assert_eq!(r.status(), CertificateStatus::Fail);
}
