use std::collections::BTreeMap;

use super::events::EventTable;
use super::model::{FrameSpec, HopSpec, Link, ModuleSpec, PartitionSpec, ScheduleTriple, SystemSpec};
use crate::calculus::{DefinitionTable, Engine, EngineConfig, EngineError, Process, Trace};
use crate::constraint::Constraint;
use crate::dsl::{SourceProgram, VarDecl};
use crate::validators::{self, contention_free, PredicateReport, Predicate, WfMode};

/// `rep[π] [local x in] next^o when guard do next^τ tell(result)`.
fn periodic(schedule: ScheduleTriple, guard: &Constraint, result: &Constraint, queuing: bool) -> Process {
    let body = Process::next(
        schedule.offset,
        Process::ask(guard.clone(), Process::next(schedule.duration, Process::tell(result.clone()))),
    );
    let body = if queuing { Process::local(SystemSpec::bound_vars(result), Constraint::True, body) } else { body };
    Process::rep(schedule.period, body)
}

fn verdict(ok: bool) -> Constraint {
    if ok {
        Constraint::True
    } else {
        Constraint::False
    }
}

pub fn compile_partition(p: &PartitionSpec) -> Process {
    periodic(p.schedule, &p.guard, &p.result, p.queuing)
}

/// `when CF do P1 || … || Pn`, with CF decided here.
pub fn compile_module(m: &ModuleSpec) -> Process {
    let cf = contention_free(&m.schedule_vector(), &m.name).0;
    Process::ask(verdict(cf), Process::par(m.partitions.iter().map(compile_partition)))
}

pub fn compile_frame(f: &FrameSpec, hop: &HopSpec) -> Process {
    periodic(ScheduleTriple::new(hop.offset, f.length, f.period), &hop.guard, &hop.result, f.queuing)
}

/// `when CF do F1 || … || Fn` over the frames sharing `link`.
pub fn compile_datalink(link: &Link, frames: &[(&FrameSpec, &HopSpec)]) -> Process {
    let vector: Vec<(String, ScheduleTriple)> =
        frames.iter().map(|(f, h)| (f.name.clone(), ScheduleTriple::new(h.offset, f.length, f.period))).collect();
    let cf = contention_free(&vector, &link.to_string()).0;
    Process::ask(verdict(cf), Process::par(frames.iter().map(|(f, h)| compile_frame(f, h))))
}

/// `when WF ∧ SR do L1 || … || Lm` over the links carrying frames.
pub fn compile_network(sys: &SystemSpec, mode: WfMode) -> Process {
    let ok = validators::well_formed_paths(sys, mode).0 && validators::simultaneous_relay(sys).0;
    let links = sys.frames_by_link();
    Process::ask(verdict(ok), Process::par(links.iter().map(|(l, fs)| compile_datalink(l, fs))))
}

pub fn compile_ima(sys: &SystemSpec) -> Process {
    Process::par(sys.modules.iter().map(compile_module))
}

/// Variables of the compiled system: those written by results are
/// persistent with initial value 0, the others are plain.
pub fn declarations(sys: &SystemSpec) -> Vec<VarDecl> {
    let (written, plain) = sys.variables();
    let mut out: Vec<VarDecl> = written.into_iter().map(|name| VarDecl { name, persistent: true, init: Some(0) }).collect();
    out.extend(plain.into_iter().map(|name| VarDecl { name, persistent: false, init: None }));
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// Options of the system compiler.
#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    pub wf_mode: WfMode,
    /// Engine used for the latency simulation (and for later runs).
    pub engine: EngineConfig,
}

#[derive(Debug, Clone)]
pub struct CompiledSystem {
    /// The closed system term with its variable declarations.
    pub program: SourceProgram,
    pub events: EventTable,
    /// CF, WF, SR and LT verdicts used in the guards.
    pub reports: Vec<PredicateReport>,
}

impl CompiledSystem {
    pub fn process(&self) -> &Process {
        &self.program.entry
    }

    pub fn engine(&self, config: EngineConfig) -> Result<Engine, EngineError> {
        Engine::for_program(&self.program, config)
    }
}

fn program(sys: &SystemSpec, entry: Process) -> SourceProgram {
    SourceProgram { declarations: declarations(sys), definitions: DefinitionTable::new(), entry }
}

/// Simulates `IMA || TTE` for every distinct latency stimulus, over the
/// deadline or one hyperperiod past the stimulus, whichever is longer.
pub fn latency_traces(sys: &SystemSpec, mode: WfMode, config: &EngineConfig) -> Result<Vec<(usize, Trace)>, EngineError> {
    let ungated = program(sys, Process::par([compile_ima(sys), compile_network(sys, mode)]));
    let hyper = validators::maf(sys.periods());
    let mut runs: BTreeMap<(u64, String), Vec<usize>> = BTreeMap::new();
    for (i, l) in sys.latency.iter().enumerate() {
        runs.entry((l.stimulus.tick, l.stimulus.input.to_string())).or_default().push(i);
    }
    let mut out = Vec::new();
    for ((tick, _), members) in runs {
        let horizon = members.iter().map(|&i| sys.latency[i].deadline).max().unwrap_or(0).max(hyper);
        let inputs = [(tick, sys.latency[members[0]].stimulus.input.clone())].into_iter().collect();
        let mut engine = Engine::for_program(&ungated, config.clone())?;
        let trace = engine.run(ungated.entry.clone(), tick + horizon + 1, &inputs)?;
        for i in members {
            out.push((i, trace.clone()));
        }
    }
    Ok(out)
}

/// Latency verdict by simulation.
pub fn latency_report(sys: &SystemSpec, mode: WfMode, config: &EngineConfig) -> Result<PredicateReport, EngineError> {
    let mut violations = Vec::new();
    for (i, trace) in latency_traces(sys, mode, config)? {
        let single = SystemSpec { latency: vec![sys.latency[i].clone()], ..sys.clone() };
        violations.extend(validators::latency_ok(&single, &trace).1);
    }
    Ok(PredicateReport::from_violations(Predicate::LT, violations))
}

/// `when LT do IMA || TTE`, with every schedule predicate decided at
/// compile time.
pub fn compile_system(sys: &SystemSpec, options: &CompileOptions) -> Result<CompiledSystem, EngineError> {
    let mut reports = validators::validate_schedules(sys, options.wf_mode);
    let lt = latency_report(sys, options.wf_mode, &options.engine)?;
    let entry = Process::ask(
        verdict(lt.pass),
        Process::par([compile_ima(sys), compile_network(sys, options.wf_mode)]),
    );
    reports.push(lt);
    Ok(CompiledSystem { program: program(sys, entry), events: EventTable::for_system(sys), reports })
}
