use std::collections::BTreeMap;

use serde::Serialize;

use super::{Predicate, Violation};
use crate::avionics::{EventTable, ExecutionLog, LatencyKind, LatencySpec, SystemSpec};
use crate::calculus::Trace;

pub use crate::avionics::Execution;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ChainElement {
    Partition(String),
    Hop { frame: String, link: String },
}

/// A latency observed on a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatencyMeasurement {
    pub name: String,
    pub start: u64,
    pub end: u64,
    pub latency: u64,
    pub deadline: u64,
    /// The executions the measurement went through, in order.
    pub steps: Vec<(ChainElement, Execution)>,
}

struct Walk<'a> {
    sys: &'a SystemSpec,
    log: &'a ExecutionLog,
    spec: &'a LatencySpec,
    steps: Vec<(ChainElement, Execution)>,
}

impl Walk<'_> {
    fn missing(&self, what: String, after: u64) -> Violation {
        Violation {
            kind: Predicate::LT,
            participants: vec![self.spec.name.clone(), what.clone()],
            instants: vec![after as i64],
            explanation: format!(
                "chain not exercised: no execution of {what} starts at or after {after} in the trace"
            ),
        }
    }

    fn partition(&mut self, name: &str, after: u64) -> Result<Execution, Violation> {
        let exec = self.log.partition_after(name, after).ok_or_else(|| self.missing(name.to_string(), after))?;
        self.steps.push((ChainElement::Partition(name.to_string()), exec));
        Ok(exec)
    }

    /// Follows a frame hop by hop towards `target` (a module), or along
    /// its first path when the chain gives no receiver. Returns the arrival.
    fn frame(&mut self, name: &str, target: Option<&str>, after: u64) -> Result<u64, Violation> {
        let frame = self.sys.frame(name).ok_or_else(|| self.missing(name.to_string(), after))?;
        let route = match target {
            Some(module) => self.sys.frame_route(frame, module),
            None => self
                .sys
                .topology
                .virtual_link(&frame.virtual_link)
                .and_then(|vl| vl.paths.first())
                .map(|p| crate::avionics::VirtualLink::path_links(p)),
        }
        .ok_or_else(|| self.missing(format!("{name} towards {}", target.unwrap_or("?")), after))?;
        let mut cur = after;
        for link in route {
            let exec = self
                .log
                .hop_after(name, &link, cur)
                .ok_or_else(|| self.missing(format!("{name} on {link}"), cur))?;
            self.steps.push((ChainElement::Hop { frame: name.to_string(), link: link.to_string() }, exec));
            cur = exec.end;
        }
        Ok(cur)
    }
}

/// Measures one latency constraint on an execution log.
///
/// End-to-end: from the stimulus tick, take for each chain element its
/// first execution starting no earlier than the end of the previous one;
/// the latency runs to the end of the last. Elementary: from the start of
/// the sender's first execution after the stimulus to the latest end among
/// the receivers, each reached through the frame's path to its module.
pub fn measure_latency(sys: &SystemSpec, spec: &LatencySpec, log: &ExecutionLog) -> Result<LatencyMeasurement, Violation> {
    let mut walk = Walk { sys, log, spec, steps: Vec::new() };
    let t0 = spec.stimulus.tick;
    let (start, end) = match spec.kind {
        LatencyKind::EndToEnd => {
            let mut cur = t0;
            for (i, item) in spec.chain.iter().enumerate() {
                if sys.partition(item).is_some() {
                    cur = walk.partition(item, cur)?.end;
                } else {
                    let target = spec.chain.get(i + 1).and_then(|n| sys.partition(n)).map(|p| p.module.name.as_str());
                    cur = walk.frame(item, target, cur)?;
                }
            }
            (t0, cur)
        }
        LatencyKind::Elementary => {
            let sent = walk.partition(&spec.chain[0], t0)?;
            let mut end = sent.end;
            for receiver in &spec.chain[2..] {
                let module = sys.partition(receiver).map(|p| p.module.name.as_str());
                let arrival = walk.frame(&spec.chain[1], module, sent.end)?;
                end = end.max(walk.partition(receiver, arrival)?.end);
            }
            (sent.start, end)
        }
    };
    Ok(LatencyMeasurement {
        name: spec.name.clone(),
        start,
        end,
        latency: end - start,
        deadline: spec.deadline,
        steps: walk.steps,
    })
}

/// Every latency constraint of `sys` measured on `trace`; a chain the trace
/// never exhibits counts as a violation.
pub fn latency_ok(sys: &SystemSpec, trace: &Trace) -> (bool, Vec<Violation>) {
    let log = EventTable::for_system(sys).executions(trace);
    let mut violations = Vec::new();
    for spec in &sys.latency {
        match measure_latency(sys, spec, &log) {
            Ok(m) if m.latency <= spec.deadline => {}
            Ok(m) => violations.push(Violation {
                kind: Predicate::LT,
                participants: vec![spec.name.clone()],
                instants: vec![m.latency as i64, spec.deadline as i64],
                explanation: format!(
                    "{}: latency {} (from {} to {}) exceeds deadline {}",
                    spec.name, m.latency, m.start, m.end, spec.deadline
                ),
            }),
            Err(v) => violations.push(v),
        }
    }
    (violations.is_empty(), violations)
}

/// Latency measurements by constraint name (violations for unexercised
/// chains).
pub fn measure_all(sys: &SystemSpec, trace: &Trace) -> BTreeMap<String, Result<LatencyMeasurement, Violation>> {
    let log = EventTable::for_system(sys).executions(trace);
    sys.latency.iter().map(|s| (s.name.clone(), measure_latency(sys, s, &log))).collect()
}
