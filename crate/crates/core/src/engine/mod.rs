//! Verification algorithms: BMC, IMC, k-induction, and certificate checking.

mod bmc;
mod certificate;
mod imc;
mod kind;
#[cfg(test)]
mod tests;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::formula::{instantiate, Formula, FormulaError, IndexPool, SsaMap};
use crate::solver::{Direction, Model, SolverError};
use crate::transform::SummarizedSystem;

pub use bmc::run_bmc;
pub use certificate::{check_certificate, error_free_within, CertificateReport, CheckOutcome};
pub use imc::{reach_fixed_point, run_imc, FixedPoint};
pub use kind::run_kinduction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Bmc,
    Imc,
    Kind,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Bmc, Algorithm::Imc, Algorithm::Kind];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bmc => "bmc",
            Algorithm::Imc => "imc",
            Algorithm::Kind => "kind",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bmc" => Ok(Algorithm::Bmc),
            "imc" => Ok(Algorithm::Imc),
            "kind" => Ok(Algorithm::Kind),
            _ => Err(format!("unknown algorithm `{s}` (expected bmc, imc or kind)")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    True,
    False,
    Unknown,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::True => "TRUE",
            Status::False => "FALSE",
            Status::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    /// Number of loop traversals before the error block.
    pub depth: usize,
    pub model: Model,
}

/// Inductive invariant at the loop head, over the generation `base`.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub base: SsaMap,
    /// INIT instantiated so that its exit map is `base`.
    pub init: Formula,
    pub fixed_point: Formula,
    /// States that cannot reach ERROR within the suffix length, conjoined
    /// with `fixed_point` when the fixed point alone intersects ERROR.
    pub strengthening: Option<Formula>,
}

impl Certificate {
    pub fn new(base: SsaMap, init: Formula, fixed_point: Formula) -> Self {
        Certificate {
            base,
            init,
            fixed_point,
            strengthening: None,
        }
    }

    /// The formula the certificate conditions are checked on.
    pub fn invariant(&self) -> Formula {
        match &self.strengthening {
            Some(s) => Formula::and([self.fixed_point.clone(), s.clone()]),
            None => self.fixed_point.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertificateStatus {
    Pass,
    Fail,
    Uncertified,
    None,
}

impl CertificateStatus {
    pub fn name(self) -> &'static str {
        match self {
            CertificateStatus::Pass => "pass",
            CertificateStatus::Fail => "fail",
            CertificateStatus::Uncertified => "uncertified",
            CertificateStatus::None => "none",
        }
    }
}

/// Which template a conjunct of a recorded query came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryPart {
    Init,
    Trans,
    Error,
    PreError,
}

#[derive(Clone, Debug)]
pub struct QueryRecord {
    pub k: usize,
    pub parts: Vec<QueryPart>,
    pub formula: Formula,
}

/// Optional record of the queries and images produced during a run.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub queries: Vec<QueryRecord>,
    /// `(k, image)` after every extension in the fixed-point search.
    pub images: Vec<(usize, Formula)>,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: Status,
    pub k_reached: usize,
    pub certificate: Option<Certificate>,
    pub certificate_status: CertificateStatus,
    pub certificate_report: Option<CertificateReport>,
    pub counterexample: Option<Counterexample>,
    pub reason: Option<String>,
    pub trace: Trace,
}

impl Verdict {
    fn new(status: Status, k: usize) -> Self {
        Verdict {
            status,
            k_reached: k,
            certificate: None,
            certificate_status: CertificateStatus::None,
            certificate_report: None,
            counterexample: None,
            reason: None,
            trace: Trace::default(),
        }
    }

    pub fn unknown(k: usize, reason: impl Into<String>) -> Self {
        Verdict {
            reason: Some(reason.into()),
            ..Verdict::new(Status::Unknown, k)
        }
    }

    pub fn counterexample_depth(&self) -> Option<usize> {
        self.counterexample.as_ref().map(|c| c.depth)
    }
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub k_max: usize,
    pub direction: Direction,
    /// Record queries and images in the verdict trace.
    pub record: bool,
    /// Cap on interpolation rounds per fixed-point search.
    pub max_fixpoint_iterations: usize,
    /// Prefer interpolants that exclude the error states.
    pub guide_interpolants: bool,
    /// Check certificates of TRUE verdicts.
    pub check_certificates: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            k_max: 10,
            direction: Direction::Backward,
            record: false,
            max_fixpoint_iterations: 40,
            guide_interpolants: true,
            check_certificates: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// INIT, k-1 copies of TRANS, and ERROR at the last generation; at k = 1 the
/// errors reached before the loop head are a separate disjunct.
pub(crate) struct Unrolling {
    pub init: Formula,
    pub trans: Vec<Formula>,
    pub error: Formula,
    pub pre_error: Formula,
    /// ERROR instantiated after one traversal (false when `k < 2`).
    pub first_error: Formula,
    /// `maps[i]` is the generation after `i` traversals.
    pub maps: Vec<SsaMap>,
}

impl Unrolling {
    pub fn new(sys: &SummarizedSystem, k: usize) -> Result<Self, EngineError> {
        let mut pool = IndexPool::default();
        let (init, m0) = instantiate(&sys.init, &SsaMap::new(), &mut pool)?;
        let mut maps = vec![m0];
        let mut trans = Vec::with_capacity(k.saturating_sub(1));
        for _ in 1..k {
            let (t, m) = instantiate(&sys.trans, maps.last().unwrap(), &mut pool)?;
            trans.push(t);
            maps.push(m);
        }
        let (error, _) = instantiate(&sys.error, maps.last().unwrap(), &mut pool)?;
        let pre_error = if k == 1 {
            instantiate(&sys.pre_error, &SsaMap::new(), &mut pool)?.0
        } else {
            Formula::FALSE
        };
        let first_error = match maps.get(1) {
            Some(m) => instantiate(&sys.error, m, &mut pool)?.0,
            None => Formula::FALSE,
        };
        Ok(Unrolling {
            init,
            trans,
            error,
            pre_error,
            first_error,
            maps,
        })
    }

    /// The BMC query and the template each conjunct came from.
    pub fn query(&self) -> (Formula, Vec<QueryPart>) {
        let mut parts = vec![QueryPart::Init];
        parts.extend(self.trans.iter().map(|_| QueryPart::Trans));
        parts.push(QueryPart::Error);
        if !self.pre_error.is_false() {
            parts.push(QueryPart::PreError);
        }
        let path = Formula::and(
            std::iter::once(self.init.clone())
                .chain(self.trans.iter().cloned())
                .chain(std::iter::once(self.error.clone())),
        );
        let f = Formula::or([path, self.pre_error.clone()]);
        (f, parts)
    }
}
