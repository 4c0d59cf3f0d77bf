use std::fs;
use std::path::Path;

use serde::Serialize;

use super::run::{Classification, Record};
use super::HarnessError;

pub const CSV_COLUMNS: [&str; 10] = [
    "task",
    "algorithm",
    "status",
    "k_reached",
    "cpu_ms",
    "wall_ms",
    "certificate_status",
    "counterexample_depth",
    "expected",
    "classification",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub correct_proofs: usize,
    pub correct_alarms: usize,
    pub wrong_proofs: usize,
    pub wrong_alarms: usize,
    pub timeouts: usize,
    pub inconclusive: usize,
    pub unchecked: usize,
}

impl Counts {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a Record>) -> Self {
        let mut c = Counts::default();
        for r in records {
            match r.classification {
                Classification::CorrectProof => c.correct_proofs += 1,
                Classification::CorrectAlarm => c.correct_alarms += 1,
                Classification::WrongProof => c.wrong_proofs += 1,
                Classification::WrongAlarm => c.wrong_alarms += 1,
                Classification::Timeout => c.timeouts += 1,
                Classification::Inconclusive => c.inconclusive += 1,
                Classification::Unchecked => c.unchecked += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.correct_proofs
            + self.correct_alarms
            + self.wrong_proofs
            + self.wrong_alarms
            + self.timeouts
            + self.inconclusive
            + self.unchecked
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub records: Vec<Record>,
    pub counts: Counts,
    pub per_algorithm: Vec<(String, Counts)>,
}

impl RunReport {
    pub fn new(records: Vec<Record>) -> Self {
        let mut algs: Vec<String> = records.iter().map(|r| r.algorithm.clone()).collect();
        algs.sort();
        algs.dedup();
        let per_algorithm = algs
            .into_iter()
            .map(|a| {
                let c = Counts::of(records.iter().filter(|r| r.algorithm == a));
                (a, c)
            })
            .collect();
        RunReport {
            counts: Counts::of(&records),
            records,
            per_algorithm,
        }
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(format!("{}: {e}", path.display()))
}

pub fn write_csv(records: &[Record], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Io(e.to_string()))?;
    w.write_record(CSV_COLUMNS).map_err(|e| HarnessError::Io(e.to_string()))?;
    for r in records {
        w.write_record([
            r.task.clone(),
            r.algorithm.clone(),
            r.status.clone(),
            r.k_reached.to_string(),
            r.cpu_ms.to_string(),
            r.wall_ms.to_string(),
            r.certificate_status.clone(),
            r.counterexample_depth.map(|d| d.to_string()).unwrap_or_default(),
            r.expected.name().to_string(),
            r.classification.name().to_string(),
        ])
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    w.flush().map_err(io(path))
}

/// Correct results of one kind per algorithm, n-th fastest first.
pub fn write_quantiles(records: &[Record], kind: Classification, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Io(e.to_string()))?;
    w.write_record(["algorithm", "n", "cpu_ms", "task"])
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    let mut algs: Vec<&str> = records.iter().map(|r| r.algorithm.as_str()).collect();
    algs.sort();
    algs.dedup();
    for a in algs {
        let mut rs: Vec<&Record> = records
            .iter()
            .filter(|r| r.algorithm == a && r.classification == kind)
            .collect();
        rs.sort_by_key(|r| (r.cpu_ms, r.task.clone()));
        for (i, r) in rs.iter().enumerate() {
            w.write_record([a.to_string(), (i + 1).to_string(), r.cpu_ms.to_string(), r.task.clone()])
                .map_err(|e| HarnessError::Io(e.to_string()))?;
        }
    }
    w.flush().map_err(io(path))
}

/// Writes results.csv, results.json, quantile-true.csv and quantile-false.csv.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    write_csv(&report.records, &dir.join("results.csv"))?;
    let json = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Io(e.to_string()))?;
    let p = dir.join("results.json");
    fs::write(&p, json).map_err(io(&p))?;
    write_quantiles(&report.records, Classification::CorrectProof, &dir.join("quantile-true.csv"))?;
    write_quantiles(&report.records, Classification::CorrectAlarm, &dir.join("quantile-false.csv"))
}
