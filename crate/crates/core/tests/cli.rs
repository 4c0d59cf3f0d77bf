mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::corpus_dir;

fn imcv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imcv")).args(args).output().expect("imcv runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn corpus_file(name: &str) -> String {
    corpus_dir().join(format!("{name}.mc")).display().to_string()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).expect("csv opens");
    r.records().map(|x| x.expect("csv row")).collect()
}

#[test]
fn verify_exit_codes_follow_status() {
    let safe = imcv(&["verify", &corpus_file("even")]);
    assert_eq!(safe.status.code(), Some(0), "{}", stdout(&safe));
    assert!(stdout(&safe).contains("status: TRUE"));
    assert!(stdout(&safe).contains("certificate: pass"));

    let bad = imcv(&["verify", &corpus_file("count3_unsafe"), "--algorithm", "bmc"]);
    assert_eq!(bad.status.code(), Some(1), "{}", stdout(&bad));
    assert!(stdout(&bad).contains("counterexample depth:"));

    let capped = imcv(&["verify", &corpus_file("count_up_safe"), "--algorithm", "bmc", "--max-k", "2"]);
    assert_eq!(capped.status.code(), Some(2), "{}", stdout(&capped));

    assert_eq!(imcv(&["verify", "/nonexistent/x.mc"]).status.code(), Some(3));
    assert_eq!(imcv(&["verify", "--bogus"]).status.code(), Some(3));
}

#[test]
fn verify_rejects_malformed_programs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.mc");
    fs::write(&p, "int x;\nx = ;\n").unwrap();
    let o = imcv(&["verify", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
}

#[test]
fn dump_system_prints_templates() {
    let o = imcv(&["verify", &corpus_file("even"), "--dump-system"]);
    let text = stdout(&o);
    for part in ["INIT", "TRANS", "ERROR"] {
        assert!(text.contains(part), "missing {part} in\n{text}");
    }
    assert!(text.contains("x!"));
}

#[test]
fn both_interpolation_directions_agree_on_even() {
    for dir in ["on", "off"] {
        let o = imcv(&["verify", &corpus_file("even"), &format!("--backward-itp={dir}")]);
        assert_eq!(o.status.code(), Some(0), "direction {dir}: {}", stdout(&o));
    }
}

#[test]
fn run_one_prints_a_record() {
    let o = imcv(&["run-one", &corpus_file("straight_unsafe"), "--algorithm", "imc"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).expect("json record");
    assert_eq!(v["status"], "FALSE");
    assert_eq!(v["algorithm"], "imc");
    assert_eq!(v["classification"], "correct-alarm");
}

#[test]
fn bench_writes_consistent_outputs() {
    let src = tempfile::tempdir().unwrap();
    for name in ["even", "straight_unsafe", "count3_unsafe"] {
        fs::copy(corpus_dir().join(format!("{name}.mc")), src.path().join(format!("{name}.mc"))).unwrap();
    }
    let out = src.path().join("results");
    let o = imcv(&[
        "bench",
        src.path().to_str().unwrap(),
        "--algorithms",
        "bmc,imc",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let results = rows(&out.join("results.csv"));
    assert_eq!(results.len(), 6);
    let header = csv::Reader::from_path(out.join("results.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), imcv::harness::CSV_COLUMNS);

    for (file, kind) in [("quantile-true.csv", "correct-proof"), ("quantile-false.csv", "correct-alarm")] {
        let q = rows(&out.join(file));
        for alg in ["bmc", "imc"] {
            let mine: Vec<&csv::StringRecord> = q.iter().filter(|r| &r[0] == alg).collect();
            let expected = results.iter().filter(|r| &r[1] == alg && &r[9] == kind).count();
            assert_eq!(mine.len(), expected, "{file} {alg}");
            let times: Vec<u64> = mine.iter().map(|r| r[2].parse().unwrap()).collect();
            assert!(times.windows(2).all(|w| w[0] <= w[1]), "{file} {alg} unsorted");
            let ns: Vec<usize> = mine.iter().map(|r| r[1].parse().unwrap()).collect();
            assert_eq!(ns, (1..=mine.len()).collect::<Vec<_>>());
        }
    }

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    for entry in json["per_algorithm"].as_array().unwrap() {
        let alg = entry[0].as_str().unwrap();
        let mine: Vec<&csv::StringRecord> = results.iter().filter(|r| &r[1] == alg).collect();
        let count = |k: &str| mine.iter().filter(|r| &r[9] == k).count() as u64;
        assert_eq!(entry[1]["correct_proofs"], count("correct-proof"));
        assert_eq!(entry[1]["correct_alarms"], count("correct-alarm"));
        assert_eq!(entry[1]["wrong_proofs"], 0);
        assert_eq!(entry[1]["wrong_alarms"], 0);
    }
}
