//! IMA modules and TTEthernet networks as data, and their compilation into
//! processes.

mod compile;
mod config;
mod events;
mod model;

pub use compile::{
    compile_datalink, compile_frame, compile_ima, compile_module, compile_network, compile_partition, compile_system,
    declarations, latency_report, latency_traces, CompileOptions, CompiledSystem,
};
pub use config::load_system;
pub use events::{AvionicEvent, EventSource, EventTable, Execution, ExecutionLog};
pub use model::{
    FrameSpec, HopSpec, LatencyKind, LatencySpec, Link, ModelError, ModuleSpec, PartitionSpec, Placed, ScheduleTriple,
    Stimulus, SystemSpec, Topology, VirtualLink,
};
