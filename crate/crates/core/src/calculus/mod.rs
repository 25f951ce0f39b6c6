//! Process terms and their operational semantics.

mod engine;
mod process;
mod streams;
mod trace;

pub use engine::{future, prune, AskPolicy, Configuration, Engine, EngineConfig, EngineError, MicroStep};
pub use process::{Definition, DefinitionTable, Process, Scope};
pub use streams::PersistentVarPolicy;
pub use trace::{parse_trace_lines, Event, TickRecord, Trace, TraceLine};
