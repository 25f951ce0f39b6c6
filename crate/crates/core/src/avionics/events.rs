use std::collections::BTreeMap;

use serde::Serialize;

use super::model::{Link, SystemSpec};
use crate::calculus::Trace;

/// What the binding of a result variable means.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventSource {
    /// A partition execution ends.
    Partition { name: String, module: String, duration: u32 },
    /// A frame arrives at the end of a link.
    Hop { frame: String, link: Link, length: u32 },
}

impl EventSource {
    pub fn element(&self) -> &str {
        match self {
            EventSource::Partition { name, .. } => name,
            EventSource::Hop { frame, .. } => frame,
        }
    }
}

/// One execution window of a partition, or one transmission of a frame on
/// one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Execution {
    pub start: u64,
    pub end: u64,
}

/// Maps result variables to the partitions and frame hops writing them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTable {
    by_var: BTreeMap<String, Vec<EventSource>>,
}

/// Executions observed in a trace, per partition and per frame hop.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionLog {
    pub partitions: BTreeMap<String, Vec<Execution>>,
    pub hops: BTreeMap<(String, Link), Vec<Execution>>,
}

impl ExecutionLog {
    /// First execution of `partition` starting at or after `t`.
    pub fn partition_after(&self, partition: &str, t: u64) -> Option<Execution> {
        first_after(self.partitions.get(partition), t)
    }

    pub fn hop_after(&self, frame: &str, link: &Link, t: u64) -> Option<Execution> {
        first_after(self.hops.get(&(frame.to_string(), link.clone())), t)
    }
}

fn first_after(list: Option<&Vec<Execution>>, t: u64) -> Option<Execution> {
    list.and_then(|l| l.iter().find(|e| e.start >= t).copied())
}

/// An avionic event placed on a trace line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AvionicEvent {
    pub kind: &'static str,
    pub name: String,
    /// Module or link.
    pub at: String,
    pub var: String,
    pub value: Option<i64>,
}

impl EventTable {
    pub fn for_system(sys: &SystemSpec) -> Self {
        let mut by_var: BTreeMap<String, Vec<EventSource>> = BTreeMap::new();
        for m in &sys.modules {
            for p in &m.partitions {
                if p.queuing {
                    continue;
                }
                for v in SystemSpec::bound_vars(&p.result) {
                    by_var.entry(v).or_default().push(EventSource::Partition {
                        name: p.name.clone(),
                        module: m.name.clone(),
                        duration: p.schedule.duration,
                    });
                }
            }
        }
        for f in &sys.frames {
            if f.queuing {
                continue;
            }
            for h in &f.hops {
                for v in SystemSpec::bound_vars(&h.result) {
                    by_var.entry(v).or_default().push(EventSource::Hop {
                        frame: f.name.clone(),
                        link: h.link.clone(),
                        length: f.length,
                    });
                }
            }
        }
        EventTable { by_var }
    }

    pub fn sources(&self, var: &str) -> &[EventSource] {
        self.by_var.get(var).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Executions recovered from the stream bindings of a trace: a binding
    /// at tick `t` ends an execution that started `τ` (or the frame length)
    /// earlier.
    pub fn executions(&self, trace: &Trace) -> ExecutionLog {
        let mut log = ExecutionLog::default();
        for r in &trace.records {
            for e in &r.events {
                for src in self.sources(&e.var) {
                    match src {
                        EventSource::Partition { name, duration, .. } => {
                            let exec = Execution { start: r.tick.saturating_sub(*duration as u64), end: r.tick };
                            push_unique(log.partitions.entry(name.clone()).or_default(), exec);
                        }
                        EventSource::Hop { frame, link, length } => {
                            let exec = Execution { start: r.tick.saturating_sub(*length as u64), end: r.tick };
                            push_unique(log.hops.entry((frame.clone(), link.clone())).or_default(), exec);
                        }
                    }
                }
            }
        }
        log
    }

    /// Avionic events per trace line: starts and dispatches are placed on
    /// the tick the window opened, ends and arrivals on the binding tick.
    pub fn annotate(&self, trace: &Trace) -> BTreeMap<u64, Vec<AvionicEvent>> {
        let mut out: BTreeMap<u64, Vec<AvionicEvent>> = BTreeMap::new();
        for r in &trace.records {
            for e in &r.events {
                for src in self.sources(&e.var) {
                    let (open, close, name, at, len) = match src {
                        EventSource::Partition { name, module, duration } => {
                            ("partition_start", "partition_end", name, module.clone(), *duration)
                        }
                        EventSource::Hop { frame, link, length } => {
                            ("frame_dispatch", "frame_arrival", frame, link.to_string(), *length)
                        }
                    };
                    let event = |kind| AvionicEvent { kind, name: name.clone(), at: at.clone(), var: e.var.clone(), value: e.value };
                    push_unique(out.entry(r.tick.saturating_sub(len as u64)).or_default(), event(open));
                    push_unique(out.entry(r.tick).or_default(), event(close));
                }
            }
        }
        out
    }
}

fn push_unique<T: PartialEq>(list: &mut Vec<T>, item: T) {
    if !list.contains(&item) {
        list.push(item);
    }
}
