//! Schedulability predicates over system descriptions, each returning a
//! verdict together with violation witnesses.

mod cf;
mod latency;
mod network;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cf::{contention_free, maf, pair_conflict};
pub use latency::{latency_ok, measure_all, measure_latency, ChainElement, Execution, LatencyMeasurement};
pub use network::{simultaneous_relay, well_formed_paths};

use crate::avionics::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predicate {
    CF,
    WF,
    SR,
    LT,
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Why a predicate failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: Predicate,
    /// Partitions, frames, links or vertices involved.
    pub participants: Vec<String>,
    /// Instants or offsets involved.
    pub instants: Vec<i64>,
    pub explanation: String,
}

/// Verdict of one predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub predicate: Predicate,
    pub pass: bool,
    pub violations: Vec<Violation>,
}

impl PredicateReport {
    pub fn from_violations(predicate: Predicate, violations: Vec<Violation>) -> Self {
        PredicateReport { predicate, pass: violations.is_empty(), violations }
    }
}

/// Reading of the well-formed path condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WfMode {
    /// `next − prev ≥ h` on the offsets as written.
    Strict,
    /// `(next − prev) mod π ≥ h`, a zero difference being a violation.
    #[default]
    Modular,
}

impl FromStr for WfMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(WfMode::Strict),
            "modular" => Ok(WfMode::Modular),
            other => Err(format!("unknown WF mode `{other}` (expected strict or modular)")),
        }
    }
}

/// CF over every module and every link, WF and SR over the network.
pub fn validate_schedules(sys: &SystemSpec, mode: WfMode) -> Vec<PredicateReport> {
    let mut cf = Vec::new();
    for m in &sys.modules {
        cf.extend(contention_free(&m.schedule_vector(), &m.name).1);
    }
    for (link, frames) in sys.frames_by_link() {
        let vector: Vec<_> = frames.iter().filter_map(|(f, _)| f.triple(&link).map(|t| (f.name.clone(), t))).collect();
        cf.extend(contention_free(&vector, &link.to_string()).1);
    }
    vec![
        PredicateReport::from_violations(Predicate::CF, cf),
        PredicateReport::from_violations(Predicate::WF, well_formed_paths(sys, mode).1),
        PredicateReport::from_violations(Predicate::SR, simultaneous_relay(sys).1),
    ]
}
