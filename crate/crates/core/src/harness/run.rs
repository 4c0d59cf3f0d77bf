use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::engine::{run_bmc, run_imc, run_kinduction, Algorithm, EngineConfig, Status, Verdict};
use crate::frontend::{build_cfa, parse, Cfa};
use crate::solver::{Direction, Solver, SolverConfig, SolverStats};
use crate::transform::{large_block_encode, single_loop_transform, SummarizedSystem};

use super::task::{Expected, Task};
use super::HarnessError;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub engine: EngineConfig,
    pub timeout_s: u64,
    /// Directory for per-run SMT transcripts.
    pub debug_smt: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            solver: SolverConfig::default(),
            engine: EngineConfig::default(),
            timeout_s: 60,
            debug_smt: None,
        }
    }
}

impl RunConfig {
    /// Flags reproducing this configuration on the command line.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec![
            "--max-k".into(),
            self.engine.k_max.to_string(),
            "--solver-cmd".into(),
            self.solver.command.clone(),
            "--itp-dialect".into(),
            self.solver.dialect.to_string(),
            format!(
                "--backward-itp={}",
                if self.engine.direction == Direction::Backward { "on" } else { "off" }
            ),
            format!("--itp-guidance={}", if self.engine.guide_interpolants { "on" } else { "off" }),
            "--timeout-s".into(),
            self.timeout_s.to_string(),
            "--query-timeout-ms".into(),
            self.solver.timeout_ms.to_string(),
        ];
        a.push(if self.solver.validate_interpolants { "--validate-itp" } else { "--no-validate-itp" }.into());
        if let Some(d) = &self.debug_smt {
            a.push("--debug-smt-dir".into());
            a.push(d.display().to_string());
        }
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    CorrectProof,
    CorrectAlarm,
    WrongProof,
    WrongAlarm,
    Timeout,
    Inconclusive,
    Unchecked,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::CorrectProof => "correct-proof",
            Classification::CorrectAlarm => "correct-alarm",
            Classification::WrongProof => "wrong-proof",
            Classification::WrongAlarm => "wrong-alarm",
            Classification::Timeout => "timeout",
            Classification::Inconclusive => "inconclusive",
            Classification::Unchecked => "unchecked",
        }
    }
}

pub fn classify(status: &str, expected: Expected, timed_out: bool) -> Classification {
    match (status, expected) {
        ("TRUE", Expected::Safe) => Classification::CorrectProof,
        ("TRUE", Expected::Unsafe) => Classification::WrongProof,
        ("FALSE", Expected::Unsafe) => Classification::CorrectAlarm,
        ("FALSE", Expected::Safe) => Classification::WrongAlarm,
        ("TRUE" | "FALSE", Expected::Unknown) => Classification::Unchecked,
        _ if timed_out => Classification::Timeout,
        _ => Classification::Inconclusive,
    }
}

/// One row of results.csv / results.json.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub task: String,
    pub algorithm: String,
    pub status: String,
    pub k_reached: usize,
    pub cpu_ms: u64,
    pub wall_ms: u64,
    pub certificate_status: String,
    pub counterexample_depth: Option<usize>,
    pub expected: Expected,
    pub classification: Classification,
    #[serde(default)]
    pub reason: Option<String>,
    #[serde(default)]
    pub interpolants: u64,
    #[serde(default)]
    pub contract_violations: u64,
}

/// Everything produced by one in-process run.
pub struct RunOutcome {
    pub record: Record,
    pub verdict: Option<Verdict>,
    pub system: Option<SummarizedSystem>,
    /// The CFA before the single-loop transformation.
    pub cfa: Option<Cfa>,
    pub stats: SolverStats,
}

fn cpu_ms_now() -> u64 {
    let mut total = 0;
    for who in [libc::RUSAGE_SELF, libc::RUSAGE_CHILDREN] {
        // SAFETY: getrusage only writes into the provided struct.
        let mut ru: libc::rusage = unsafe { std::mem::zeroed() };
        if unsafe { libc::getrusage(who, &mut ru) } == 0 {
            total += tv_ms(ru.ru_utime) + tv_ms(ru.ru_stime);
        }
    }
    total
}

fn tv_ms(t: libc::timeval) -> u64 {
    (t.tv_sec as u64) * 1000 + (t.tv_usec as u64) / 1000
}

/// Parse, build the CFA, transform and encode.
pub fn prepare(source: &str) -> Result<(Cfa, SummarizedSystem), HarnessError> {
    let prog = parse(source)?;
    let cfa = build_cfa(&prog)?;
    let sys = large_block_encode(&single_loop_transform(&cfa))?;
    Ok((cfa, sys))
}

pub fn run_algorithm(
    alg: Algorithm,
    sys: &SummarizedSystem,
    engine: &EngineConfig,
    solver: &mut Solver,
) -> Verdict {
    match alg {
        Algorithm::Bmc => run_bmc(sys, engine, solver),
        Algorithm::Imc => run_imc(sys, engine, solver),
        Algorithm::Kind => run_kinduction(sys, engine, solver),
    }
}

/// Runs one task in this process.
pub fn run_task(task: &Task, alg: Algorithm, cfg: &RunConfig) -> RunOutcome {
    let start = Instant::now();
    let cpu0 = cpu_ms_now();
    let timeout = task.timeout_s.unwrap_or(cfg.timeout_s);
    let mut engine = cfg.engine.clone();
    if let Some(k) = task.max_k {
        engine.k_max = k;
    }
    let mut solver_cfg = cfg.solver.clone();
    solver_cfg.deadline = Some(start + Duration::from_secs(timeout));
    solver_cfg.transcript = cfg
        .debug_smt
        .as_ref()
        .map(|d| d.join(format!("{}.{}.smt2", task.name, alg.name())));

    let mut record = Record {
        task: task.name.clone(),
        algorithm: alg.name().into(),
        status: Status::Unknown.name().into(),
        k_reached: 0,
        cpu_ms: 0,
        wall_ms: 0,
        certificate_status: "none".into(),
        counterexample_depth: None,
        expected: task.expected,
        classification: Classification::Inconclusive,
        reason: None,
        interpolants: 0,
        contract_violations: 0,
    };
    let mut out = RunOutcome {
        record: record.clone(),
        verdict: None,
        system: None,
        cfa: None,
        stats: SolverStats::default(),
    };
    match prepare(&task.source) {
        Err(e) => record.reason = Some(e.to_string()),
        Ok((cfa, sys)) => match Solver::new(solver_cfg) {
            Err(e) => record.reason = Some(e.to_string()),
            Ok(mut solver) => {
                let v = run_algorithm(alg, &sys, &engine, &mut solver);
                record.status = v.status.name().into();
                record.k_reached = v.k_reached;
                record.certificate_status = v.certificate_status.name().into();
                record.counterexample_depth = v.counterexample_depth();
                record.reason = v.reason.clone();
                record.interpolants = solver.stats.interpolants;
                record.contract_violations = solver.stats.contract_violations;
                out.stats = solver.stats;
                out.verdict = Some(v);
                out.system = Some(sys);
                out.cfa = Some(cfa);
            }
        },
    }
    record.wall_ms = start.elapsed().as_millis() as u64;
    record.cpu_ms = cpu_ms_now().saturating_sub(cpu0);
    let timed_out = start.elapsed() >= Duration::from_secs(timeout)
        || record.reason.as_deref().is_some_and(|r| r.contains("timed out"));
    record.classification = classify(&record.status, task.expected, timed_out);
    out.record = record;
    out
}

/// Runs one task in a child process, killing it after the wall-clock limit.
pub fn run_task_isolated(exe: &Path, task: &Task, alg: Algorithm, cfg: &RunConfig) -> Record {
    let timeout = task.timeout_s.unwrap_or(cfg.timeout_s);
    let start = Instant::now();
    let mut fallback = Record {
        task: task.name.clone(),
        algorithm: alg.name().into(),
        status: Status::Unknown.name().into(),
        k_reached: 0,
        cpu_ms: 0,
        wall_ms: 0,
        certificate_status: "none".into(),
        counterexample_depth: None,
        expected: task.expected,
        classification: Classification::Inconclusive,
        reason: None,
        interpolants: 0,
        contract_violations: 0,
    };
    let child = Command::new(exe)
        .arg("run-one")
        .arg(&task.path)
        .arg("--algorithm")
        .arg(alg.name())
        .args(cfg.to_args())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) => {
            fallback.reason = Some(format!("cannot start runner: {e}"));
            return fallback;
        }
    };
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let pid = child.id() as libc::pid_t;
    let limit = Duration::from_secs(timeout) + Duration::from_secs(5);
    let mut status = 0;
    // SAFETY: rusage is plain data filled by wait4 for our own child.
    let mut ru: libc::rusage = unsafe { std::mem::zeroed() };
    let mut killed = false;
    loop {
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut ru) };
        if r == pid || r < 0 {
            break;
        }
        if !killed && start.elapsed() > limit {
            unsafe { libc::kill(pid, libc::SIGKILL) };
            killed = true;
        }
        thread::sleep(Duration::from_millis(5));
    }
    let text = reader.join().unwrap_or_default();
    let cpu_ms = tv_ms(ru.ru_utime) + tv_ms(ru.ru_stime);
    let wall_ms = start.elapsed().as_millis() as u64;
    match serde_json::from_str::<Record>(text.trim()) {
        Ok(mut r) if !killed => {
            r.cpu_ms = r.cpu_ms.max(cpu_ms);
            r
        }
        _ => {
            fallback.wall_ms = wall_ms;
            fallback.cpu_ms = cpu_ms;
            fallback.reason = Some(if killed { "wall-clock limit".into() } else { "runner crashed".into() });
            fallback.classification = classify("UNKNOWN", task.expected, killed);
            fallback
        }
    }
}

/// Runs every (task, algorithm) pair, in parallel child processes when `exe`
/// is given and sequentially in this process otherwise.
pub fn run_pairs(
    tasks: &[Task],
    algorithms: &[Algorithm],
    cfg: &RunConfig,
    jobs: usize,
    exe: Option<&Path>,
) -> Vec<Record> {
    let pairs: Vec<(usize, &Task, Algorithm)> = tasks
        .iter()
        .flat_map(|t| algorithms.iter().map(move |a| (t, *a)))
        .enumerate()
        .map(|(i, (t, a))| (i, t, a))
        .collect();
    let Some(exe) = exe else {
        return pairs.iter().map(|(_, t, a)| run_task(t, *a, cfg).record).collect();
    };
    let queue = Arc::new(Mutex::new(pairs.into_iter().map(|(i, t, a)| (i, t.clone(), a)).collect::<Vec<_>>()));
    let (tx, rx) = mpsc::channel();
    let mut handles = Vec::new();
    for _ in 0..jobs.max(1) {
        let queue = Arc::clone(&queue);
        let tx = tx.clone();
        let cfg = cfg.clone();
        let exe = exe.to_path_buf();
        handles.push(thread::spawn(move || loop {
            let next = queue.lock().expect("queue lock").pop();
            let Some((i, t, a)) = next else { break };
            let _ = tx.send((i, run_task_isolated(&exe, &t, a, &cfg)));
        }));
    }
    drop(tx);
    let mut out: Vec<(usize, Record)> = rx.iter().collect();
    for h in handles {
        let _ = h.join();
    }
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, r)| r).collect()
}
