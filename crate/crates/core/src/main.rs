use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use imcv::engine::{Algorithm, EngineConfig, Status};
use imcv::formula::to_smtlib;
use imcv::harness::{load_corpus, run_pairs, run_task, write_outputs, RunConfig, RunReport, Task};
use imcv::solver::{Direction, ItpDialect, SolverConfig};

macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "imcv", version, about = "Interpolation-based model checker for MiniC")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify one program.
    Verify {
        file: PathBuf,
        #[arg(long, default_value = "imc")]
        algorithm: Algorithm,
        /// Print the INIT/TRANS/ERROR templates as SMT-LIB.
        #[arg(long)]
        dump_system: bool,
        /// Write the solver transcript to `<file>.<algorithm>.smt2`.
        #[arg(long)]
        debug_smt: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run every task of a corpus directory.
    Bench {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "bmc,imc,kind")]
        algorithms: Vec<Algorithm>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Write solver transcripts under `<out>/smt/`.
        #[arg(long)]
        debug_smt: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run one task and print its JSON record (used by `bench`).
    #[command(hide = true)]
    RunOne {
        file: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        debug_smt_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 10)]
    max_k: usize,
    #[arg(long, default_value = "z3 -in -smt2")]
    solver_cmd: String,
    /// Interpolation dialect: a (get-interpolant), b (named partitions), qe.
    #[arg(long, default_value = "qe")]
    itp_dialect: ItpDialect,
    /// Derive interpolants backward (`on`) or forward (`off`).
    #[arg(long, default_value = "on", num_args = 0..=1, default_missing_value = "on", value_parser = ["on", "off"])]
    backward_itp: String,
    /// Prefer interpolants that exclude the error states (`on`) or take the
    /// first one found (`off`).
    #[arg(long, default_value = "on", num_args = 0..=1, default_missing_value = "on", value_parser = ["on", "off"])]
    itp_guidance: String,
    #[arg(long, default_value_t = 60)]
    timeout_s: u64,
    #[arg(long, default_value_t = 30_000)]
    query_timeout_ms: u64,
    /// Check every interpolant against the Craig conditions.
    #[arg(long, overrides_with = "no_validate_itp")]
    validate_itp: bool,
    #[arg(long)]
    no_validate_itp: bool,
}

impl Common {
    fn config(&self, validate_default: bool) -> RunConfig {
        let validate = if self.validate_itp {
            true
        } else if self.no_validate_itp {
            false
        } else {
            validate_default
        };
        RunConfig {
            solver: SolverConfig {
                command: self.solver_cmd.clone(),
                dialect: self.itp_dialect,
                timeout_ms: self.query_timeout_ms.max(1),
                validate_interpolants: validate,
                transcript: None,
                deadline: None,
            },
            engine: EngineConfig {
                k_max: self.max_k.max(1),
                direction: if self.backward_itp == "off" { Direction::Forward } else { Direction::Backward },
                guide_interpolants: self.itp_guidance != "off",
                ..EngineConfig::default()
            },
            timeout_s: self.timeout_s.max(1),
            debug_smt: None,
        }
    }
}

fn exit_for(status: &str) -> ExitCode {
    match status {
        "TRUE" => ExitCode::from(0),
        "FALSE" => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match cli.cmd {
        Cmd::Verify {
            file,
            algorithm,
            dump_system,
            debug_smt,
            common,
        } => {
            let task = match Task::load(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            let mut cfg = common.config(true);
            if debug_smt {
                cfg.debug_smt = Some(file.parent().map(PathBuf::from).unwrap_or_default());
            }
            let out = run_task(&task, algorithm, &cfg);
            let Some(v) = &out.verdict else {
                eprintln!("error: {}", out.record.reason.unwrap_or_default());
                return ExitCode::from(3);
            };
            if dump_system {
                if let Some(sys) = &out.system {
                    out!("{}", sys.to_smtlib());
                }
            }
            out!("status: {}", v.status);
            out!("k: {}", v.k_reached);
            if let Some(c) = &v.certificate {
                out!("certificate: {}", v.certificate_status.name());
                out!("invariant: {}", to_smtlib(&c.invariant()));
                if c.strengthening.is_some() {
                    out!("  strengthened with bounded error exclusion");
                }
            }
            if let Some(r) = &v.certificate_report {
                out!("  initiation: {}", r.initiation);
                out!("  consecution: {}", r.consecution);
                out!("  safety: {}", r.safety);
            }
            if let Some(cex) = &v.counterexample {
                out!("counterexample depth: {}", cex.depth);
                let vals: Vec<String> = cex.model.iter().map(|(k, x)| format!("{k}={x}")).collect();
                out!("model: {}", vals.join(" "));
            }
            if let Some(r) = &v.reason {
                out!("reason: {r}");
            }
            out!("cpu_ms: {}  wall_ms: {}", out.record.cpu_ms, out.record.wall_ms);
            match v.status {
                Status::True => ExitCode::from(0),
                Status::False => ExitCode::from(1),
                Status::Unknown => ExitCode::from(2),
            }
        }
        Cmd::Bench {
            dir,
            algorithms,
            jobs,
            out,
            debug_smt,
            common,
        } => {
            let tasks = match load_corpus(&dir) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            let mut cfg = common.config(false);
            if debug_smt {
                let d = out.join("smt");
                let _ = std::fs::create_dir_all(&d);
                cfg.debug_smt = Some(d);
            }
            let exe = std::env::current_exe().ok();
            let records = run_pairs(&tasks, &algorithms, &cfg, jobs, exe.as_deref());
            let report = RunReport::new(records);
            if let Err(e) = write_outputs(&report, &out) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
            out!(
                "{:<28} {:<5} {:<8} {:>3} {:>8}  {}",
                "task", "alg", "status", "k", "cpu_ms", "classification"
            );
            for r in &report.records {
                out!(
                    "{:<28} {:<5} {:<8} {:>3} {:>8}  {}",
                    r.task,
                    r.algorithm,
                    r.status,
                    r.k_reached,
                    r.cpu_ms,
                    r.classification.name()
                );
            }
            for (a, c) in &report.per_algorithm {
                out!(
                    "{a}: {} correct proofs, {} correct alarms, {} wrong proofs, {} wrong alarms, {} timeouts, {} inconclusive",
                    c.correct_proofs, c.correct_alarms, c.wrong_proofs, c.wrong_alarms, c.timeouts, c.inconclusive
                );
            }
            out!("results written to {}", out.display());
            ExitCode::SUCCESS
        }
        Cmd::RunOne {
            file,
            algorithm,
            debug_smt_dir,
            common,
        } => {
            let task = match Task::load(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            let mut cfg = common.config(false);
            cfg.debug_smt = debug_smt_dir;
            let out = run_task(&task, algorithm, &cfg);
            match serde_json::to_string(&out.record) {
                Ok(s) => out!("{s}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            }
            exit_for(&out.record.status)
        }
    }
}
