mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use imcv::engine::{run_bmc, Algorithm, CertificateStatus, EngineConfig, QueryPart, Status};
use imcv::formula::{instantiate, Formula, IndexPool, SsaMap, SsaVar};
use imcv::harness::{interpret_bounded, prepare, replay, run_task, Classification, RunOutcome};
use imcv::solver::{Direction, Solver, SolverConfig};

use common::{config, corpus, run_all, task};

const ORACLE_STEPS: usize = 40;
const ORACLE_BOUND: i64 = 8;
const FINITE_TASKS: [&str; 5] = ["count_up_safe", "diamond_safe", "sum_safe", "seq_safe", "nested_safe"];

struct Line {
    id: usize,
    name: &'static str,
    ok: bool,
    detail: String,
}

fn status(o: &RunOutcome) -> Status {
    o.verdict.as_ref().map(|v| v.status).unwrap_or(Status::Unknown)
}

fn even_golden() -> (bool, String) {
    let t = task("even");
    let start = Instant::now();
    let out = run_task(&t, Algorithm::Imc, &config(Direction::Backward, true));
    let secs = start.elapsed().as_secs_f64();
    let Some(v) = out.verdict else {
        return (false, format!("no verdict: {:?}", out.record.reason));
    };
    let ok = v.status == Status::True
        && v.certificate.is_some()
        && v.certificate_status == CertificateStatus::Pass
        && v.k_reached <= 5
        && secs < 10.0;
    (
        ok,
        format!("status {} k {} certificate {} in {secs:.2}s", v.status, v.k_reached, v.certificate_status.name()),
    )
}

fn lbe_models() -> (bool, String) {
    let start = Instant::now();
    let mut solver = Solver::new(SolverConfig::default()).expect("solver starts");
    let mut bad = Vec::new();
    for name in FINITE_TASKS {
        let t = task(name);
        let (cfa, sys) = prepare(&t.source).expect("task encodes");
        let oracle = interpret_bounded(&cfa, ORACLE_STEPS, ORACLE_BOUND);
        let mut pool = IndexPool::default();
        let (mut f, mut m) = instantiate(&sys.init, &SsaMap::new(), &mut pool).expect("init instantiates");
        for i in 0..=4 {
            if i > 0 {
                let (tr, next) = instantiate(&sys.trans, &m, &mut pool).expect("trans instantiates");
                f = Formula::and([f, tr]);
                m = next;
            }
            let vars: Vec<SsaVar> = sys
                .state_vars
                .iter()
                .map(|v| m.var(v).unwrap_or_else(|| SsaVar::new(v.as_str(), 0)))
                .collect();
            let got: BTreeSet<Vec<i64>> = solver
                .enumerate(&f, &vars, 10_000)
                .expect("enumeration succeeds")
                .into_iter()
                .collect();
            let want = oracle.layer_projection(i, &sys.state_vars).unwrap_or_default();
            if got != want || oracle.truncated {
                bad.push(format!("{name}@{i}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        bad.is_empty() && secs < 60.0,
        format!("{} tasks x 5 depths in {secs:.2}s, mismatches {bad:?}", FINITE_TASKS.len()),
    )
}

fn k_convention() -> (bool, String) {
    let (_, sys) = prepare(&task("even").source).expect("even encodes");
    let mut solver = Solver::new(SolverConfig::default()).expect("solver starts");
    let cfg = EngineConfig {
        k_max: 6,
        record: true,
        ..EngineConfig::default()
    };
    let v = run_bmc(&sys, &cfg, &mut solver);
    let mut bad = Vec::new();
    for q in &v.trace.queries {
        let trans = q.parts.iter().filter(|p| **p == QueryPart::Trans).count();
        let xs: BTreeSet<u32> = q.formula.free_vars().iter().filter(|v| &*v.name == "x").map(|v| v.index).collect();
        if trans != q.k - 1 || xs.len() != q.k {
            bad.push(q.k);
        }
    }
    (
        v.trace.queries.len() == 6 && bad.is_empty(),
        format!("{} recorded queries, bad bounds {bad:?}", v.trace.queries.len()),
    )
}

fn main() -> ExitCode {
    let tasks = corpus();
    let safe = tasks.iter().filter(|t| t.expected == imcv::harness::Expected::Safe).count();
    let unsafe_ = tasks.iter().filter(|t| t.expected == imcv::harness::Expected::Unsafe).count();
    let mut lines = Vec::new();

    let (ok, detail) = even_golden();
    lines.push(Line { id: 1, name: "even golden", ok, detail });

    let backward = run_all(&tasks, &Algorithm::ALL, &config(Direction::Backward, true));
    let forward = run_all(&tasks, &[Algorithm::Imc], &config(Direction::Forward, true));
    let all: Vec<&(usize, Algorithm, RunOutcome)> = backward.iter().chain(&forward).collect();

    let imc_true: Vec<&RunOutcome> = all
        .iter()
        .filter(|(_, a, o)| *a == Algorithm::Imc && status(o) == Status::True)
        .map(|(_, _, o)| o)
        .collect();
    let cert = |s: CertificateStatus| {
        imc_true
            .iter()
            .filter(|o| o.verdict.as_ref().unwrap().certificate_status == s)
            .count()
    };
    let (pass, fail) = (cert(CertificateStatus::Pass), cert(CertificateStatus::Fail));
    let share = if imc_true.is_empty() { 1.0 } else { pass as f64 / imc_true.len() as f64 };
    lines.push(Line {
        id: 2,
        name: "certificates",
        ok: tasks.len() >= 20 && safe >= 10 && unsafe_ >= 10 && fail == 0 && share >= 0.9,
        detail: format!(
            "{} tasks ({safe} safe, {unsafe_} unsafe); {pass}/{} IMC proofs certified, {fail} failed",
            tasks.len(),
            imc_true.len()
        ),
    });

    let mut falses = 0;
    let mut unreplayed = Vec::new();
    for (i, a, o) in &all {
        let Some(v) = &o.verdict else { continue };
        if v.status != Status::False {
            continue;
        }
        falses += 1;
        let cex = v.counterexample.as_ref();
        let ok = cex.is_some_and(|c| replay(o.cfa.as_ref().unwrap(), &c.model, c.depth));
        if !ok {
            unreplayed.push(format!("{}/{}", tasks[*i].name, a.name()));
        }
    }
    lines.push(Line {
        id: 3,
        name: "counterexample replay",
        ok: unreplayed.is_empty(),
        detail: format!("{falses} alarms, failed replays {unreplayed:?}"),
    });

    let mut exhaustive = 0;
    let mut disagreements = Vec::new();
    for (i, t) in tasks.iter().enumerate() {
        let Ok((cfa, _)) = prepare(&t.source) else { continue };
        let oracle = interpret_bounded(&cfa, ORACLE_STEPS, ORACLE_BOUND);
        if !oracle.exhaustive {
            continue;
        }
        exhaustive += 1;
        for (j, a, o) in &backward {
            if *j != i {
                continue;
            }
            let Some(v) = &o.verdict else { continue };
            let agrees = match v.status {
                Status::Unknown => true,
                Status::True => oracle.error_depths.is_empty(),
                Status::False => {
                    let d = v.counterexample_depth().unwrap_or(usize::MAX);
                    oracle.error_depths.contains(&d) && (*a != Algorithm::Bmc || oracle.min_error_depth() == Some(d))
                }
            };
            if !agrees {
                disagreements.push(format!("{}/{}", t.name, a.name()));
            }
        }
    }
    lines.push(Line {
        id: 4,
        name: "oracle agreement",
        ok: disagreements.is_empty() && exhaustive > 0,
        detail: format!("{exhaustive} exhaustive tasks, disagreements {disagreements:?}"),
    });

    let violations: u64 = all.iter().map(|(_, _, o)| o.stats.contract_violations).sum();
    let validated: u64 = all.iter().map(|(_, _, o)| o.stats.validated).sum();
    lines.push(Line {
        id: 5,
        name: "interpolant contract",
        ok: violations == 0 && validated > 0,
        detail: format!("{validated} interpolants validated, {violations} violations"),
    });

    let (ok, detail) = lbe_models();
    lines.push(Line { id: 6, name: "lbe model equivalence", ok, detail });

    let (ok, detail) = k_convention();
    lines.push(Line { id: 7, name: "k convention", ok, detail });

    let imc_back: BTreeMap<usize, Status> = backward
        .iter()
        .filter(|(_, a, _)| *a == Algorithm::Imc)
        .map(|(i, _, o)| (*i, status(o)))
        .collect();
    let mut differ = Vec::new();
    let (mut back_ms, mut fwd_ms) = (0, 0);
    for (i, _, o) in &forward {
        if imc_back[i] != status(o) {
            differ.push(tasks[*i].name.clone());
        }
        fwd_ms += o.record.cpu_ms;
    }
    for (_, a, o) in &backward {
        if *a == Algorithm::Imc {
            back_ms += o.record.cpu_ms;
        }
    }
    lines.push(Line {
        id: 8,
        name: "interpolation direction",
        ok: differ.is_empty(),
        detail: format!("differing tasks {differ:?}; cpu backward {back_ms} ms, forward {fwd_ms} ms"),
    });

    let mut contradictions = Vec::new();
    for (i, t) in tasks.iter().enumerate() {
        let runs: Vec<&(usize, Algorithm, RunOutcome)> = backward.iter().filter(|(j, _, _)| *j == i).collect();
        let conclusive: BTreeSet<&str> = runs.iter().map(|(_, _, o)| status(o)).filter(|s| *s != Status::Unknown).map(Status::name).collect();
        let depth = |alg: Algorithm| {
            runs.iter()
                .find(|(_, a, _)| *a == alg)
                .and_then(|(_, _, o)| o.verdict.as_ref())
                .and_then(|v| v.counterexample_depth())
        };
        let bmc_imc = match depth(Algorithm::Bmc) {
            Some(d) => depth(Algorithm::Imc) == Some(d),
            None => true,
        };
        if conclusive.len() > 1 || !bmc_imc {
            contradictions.push(t.name.clone());
        }
    }
    let wrong = all
        .iter()
        .filter(|(_, _, o)| {
            matches!(o.record.classification, Classification::WrongProof | Classification::WrongAlarm)
        })
        .count();
    lines.push(Line {
        id: 9,
        name: "cross-algorithm consistency",
        ok: contradictions.is_empty() && wrong == 0,
        detail: format!("contradictions {contradictions:?}, {wrong} wrong proofs or alarms"),
    });

    for l in &lines {
        println!(
            "criterion {} {}: {} ({})",
            l.id,
            l.name,
            if l.ok { "PASS" } else { "FAIL" },
            l.detail
        );
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.ok).map(|l| l.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", lines.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
