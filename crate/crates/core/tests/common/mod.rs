#![allow(dead_code)]

use std::path::PathBuf;

use imcv::engine::Algorithm;
use imcv::harness::{load_corpus, run_task, RunConfig, RunOutcome, Task};
use imcv::solver::Direction;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus() -> Vec<Task> {
    load_corpus(&corpus_dir()).expect("corpus loads")
}

pub fn task(name: &str) -> Task {
    Task::load(&corpus_dir().join(format!("{name}.mc"))).expect("task loads")
}

pub fn config(direction: Direction, validate: bool) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.engine.direction = direction;
    cfg.solver.validate_interpolants = validate;
    cfg
}

/// Runs every (task, algorithm) pair in this process, in task order.
pub fn run_all(tasks: &[Task], algs: &[Algorithm], cfg: &RunConfig) -> Vec<(usize, Algorithm, RunOutcome)> {
    let mut out = Vec::new();
    for (i, t) in tasks.iter().enumerate() {
        for &a in algs {
            out.push((i, a, run_task(t, a, cfg)));
        }
    }
    out
}
