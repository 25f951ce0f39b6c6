use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::process::Process;
use crate::constraint::Constraint;

/// A binding of a new stream version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub var: String,
    pub version: u32,
    /// The bound value, when the store determines it.
    pub value: Option<i64>,
}

/// What happened during one time unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickRecord {
    pub tick: u64,
    pub input: Constraint,
    /// Constraints told by processes, in order, with local names hidden.
    pub told: Vec<Constraint>,
    /// The store at quiescence with local names hidden.
    pub quiescent_store: Constraint,
    /// The process for the next time unit.
    pub residual: Process,
    pub inconsistent: bool,
    pub events: Vec<Event>,
}

impl TickRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "tick": self.tick,
            "input": self.input.to_string(),
            "told": self.told.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "store": self.quiescent_store.to_string(),
            "events": self.events,
            "inconsistent": self.inconsistent,
        })
    }

    pub fn binds(&self, var: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.var == var)
    }
}

/// The observable part of a trace line, as read back from JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLine {
    pub tick: u64,
    pub input: String,
    pub told: Vec<String>,
    pub store: String,
    pub events: Vec<Event>,
    pub inconsistent: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TickRecord>,
    /// Time unit after which the run stopped on an inconsistent store.
    pub halted: Option<u64>,
}

impl Trace {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_json().to_string());
            out.push('\n');
        }
        out
    }

    /// Every stream binding of `var`, with its time unit.
    pub fn bindings<'a>(&'a self, var: &'a str) -> impl Iterator<Item = (u64, &'a Event)> + 'a {
        self.records
            .iter()
            .flat_map(move |r| r.events.iter().filter(move |e| e.var == var).map(move |e| (r.tick, e)))
    }

    pub fn any_inconsistent(&self) -> bool {
        self.records.iter().any(|r| r.inconsistent)
    }
}

/// Parses JSON-lines trace output.
pub fn parse_trace_lines(text: &str) -> Result<Vec<TraceLine>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
