use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::process::{DefinitionTable, Process, Scope};
use super::streams::PersistentVarPolicy;
use super::trace::{Event, TickRecord, Trace};
use crate::constraint::{hide_all, Constraint, ConstraintError, Domain, Registry, Rel, SolverConfig, Store, Term};
use crate::dsl::SourceProgram;

/// When asks are evaluated within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AskPolicy {
    /// Every component steps against the round's snapshot; an ask racing a
    /// tell of the same round is discarded.
    #[default]
    Eager,
    /// Asks only step in rounds where nothing else can.
    Deferred,
}

impl FromStr for AskPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eager" => Ok(AskPolicy::Eager),
            "deferred" => Ok(AskPolicy::Deferred),
            other => Err(format!("unknown ask policy `{other}` (expected eager or deferred)")),
        }
    }
}

impl fmt::Display for AskPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AskPolicy::Eager => "eager",
            AskPolicy::Deferred => "deferred",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub domain: Domain,
    pub solver: SolverConfig,
    pub ask_policy: AskPolicy,
    /// Largest number of micro-steps in one time unit.
    pub step_budget: u64,
    /// Keep running after a time unit ends with an inconsistent store.
    pub keep_going: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            domain: Domain::default(),
            solver: SolverConfig::default(),
            ask_policy: AskPolicy::Eager,
            step_budget: 1_000_000,
            keep_going: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("unguarded recursion: {}", .cycle.join(" -> "))]
    UnguardedRecursion { cycle: Vec<String> },
    #[error("call to undefined procedure `{0}`")]
    UnknownProcedure(String),
    #[error("`{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("more than {budget} micro-steps in time unit {tick}")]
    StepBudgetExceeded { budget: u64, tick: u64 },
}

/// A process together with the store it runs against.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub process: Process,
    pub store: Store,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum MicroStep {
    Moved { next: Configuration, told: Vec<Constraint> },
    Quiescent,
}

struct Round<'a> {
    snapshot: &'a Store,
    /// Stream versions as of the snapshot; reads resolve through these.
    reads: PersistentVarPolicy,
    asks: bool,
    told: Vec<Constraint>,
    moved: bool,
}

/// The reduction engine. Holds the definitions, stream state and fresh
/// name supply, so one engine drives one run.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    defs: DefinitionTable,
    registry: Arc<Registry>,
    streams: PersistentVarPolicy,
    fresh: u64,
    tick: u64,
    steps: u64,
    events: Vec<Event>,
}

impl Engine {
    /// An engine accepting any variable name. Fails when the definitions
    /// contain unresolved calls or unguarded recursion.
    pub fn new(
        defs: DefinitionTable,
        streams: PersistentVarPolicy,
        config: EngineConfig,
    ) -> Result<Engine, EngineError> {
        for def in defs.iter() {
            for (name, arity) in def.body.calls() {
                match defs.get(name) {
                    None => return Err(EngineError::UnknownProcedure(name.to_string())),
                    Some(d) if d.params.len() != arity => {
                        return Err(EngineError::ArityMismatch {
                            name: name.to_string(),
                            expected: d.params.len(),
                            found: arity,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        if let Some(cycle) = defs.unguarded_cycle() {
            return Err(EngineError::UnguardedRecursion { cycle });
        }
        Ok(Engine {
            config,
            defs,
            registry: Arc::new(Registry::permissive()),
            streams,
            fresh: 0,
            tick: 0,
            steps: 0,
            events: Vec::new(),
        })
    }

    /// An engine for a parsed program, restricted to its declared variables.
    pub fn for_program(prog: &SourceProgram, config: EngineConfig) -> Result<Engine, EngineError> {
        let mut streams = PersistentVarPolicy::new();
        let mut registry = Registry::default();
        for d in &prog.effective_declarations() {
            registry.declare(&d.name, d.persistent);
            if d.persistent {
                streams.declare(&d.name, d.init);
            }
        }
        let mut engine = Engine::new(prog.definitions.clone(), streams, config)?;
        engine.registry = Arc::new(registry);
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn definitions(&self) -> &DefinitionTable {
        &self.defs
    }

    pub fn streams(&self) -> &PersistentVarPolicy {
        &self.streams
    }

    /// Index of the next time unit.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn empty_store(&self) -> Store {
        Store::with_config(self.config.domain, self.config.solver, self.registry.clone())
    }

    /// One synchronous round: every component takes one reduction (or
    /// idles) against the current store, and the store grows by everything
    /// told.
    pub fn micro_step(&mut self, cfg: &Configuration) -> Result<MicroStep, EngineError> {
        let outcome = match self.config.ask_policy {
            AskPolicy::Eager => self.round(cfg, true)?,
            AskPolicy::Deferred => match self.round(cfg, false)? {
                Some(done) => Some(done),
                None => self.round(cfg, true)?,
            },
        };
        let Some((process, told)) = outcome else { return Ok(MicroStep::Quiescent) };
        self.steps += 1;
        if self.steps > self.config.step_budget {
            return Err(EngineError::StepBudgetExceeded { budget: self.config.step_budget, tick: self.tick });
        }
        let store = cfg.store.conjoin(&Constraint::and_all(told.iter().cloned()))?;
        if cfg!(debug_assertions) {
            debug_assert!(grows(&cfg.store, &store), "store shrank: {} to {}", cfg.store.content(), store.content());
        }
        Ok(MicroStep::Moved { next: Configuration { process, store }, told })
    }

    fn round(&mut self, cfg: &Configuration, asks: bool) -> Result<Option<(Process, Vec<Constraint>)>, EngineError> {
        let mut round = Round { snapshot: &cfg.store, reads: self.streams.clone(), asks, told: Vec::new(), moved: false };
        let process = self.step(&cfg.process, &mut round)?;
        Ok(round.moved.then_some((process, round.told)))
    }

    fn step(&mut self, p: &Process, r: &mut Round<'_>) -> Result<Process, EngineError> {
        Ok(match p {
            Process::Null | Process::Next(..) => p.clone(),
            Process::Tell(c) => {
                r.moved = true;
                let c = self.bind(c, r)?;
                r.told.push(c);
                Process::Null
            }
            Process::Ask(guard, body) => {
                if !r.asks {
                    return Ok(p.clone());
                }
                r.moved = true;
                if r.snapshot.entails(&r.reads.resolve(guard))? {
                    (**body).clone()
                } else {
                    Process::Null
                }
            }
            Process::Par(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(self.step(item, r)?);
                }
                Process::par(out)
            }
            Process::Local { vars, init, body } => {
                r.moved = true;
                let n = self.fresh;
                self.fresh += 1;
                let fresh: Vec<String> = vars.iter().map(|v| format!("{v}~{n}")).collect();
                let map: BTreeMap<String, Term> =
                    vars.iter().cloned().zip(fresh.iter().map(|f| Term::var(f.clone()))).collect();
                let renamed = Process::Local { vars: vars.clone(), init: init.clone(), body: body.clone() };
                let Process::Local { init, body, .. } = rename_local(&renamed, &map) else { unreachable!() };
                let init = r.reads.resolve(&init);
                r.told.push(init.clone());
                Process::Scope(Box::new(Scope { vars: fresh, store: init, body: *body, needs_seed: false }))
            }
            Process::Scope(scope) => {
                if scope.needs_seed {
                    r.moved = true;
                    r.told.push(scope.store.clone());
                    return Ok(Process::Scope(Box::new(Scope { needs_seed: false, ..(**scope).clone() })));
                }
                let start = r.told.len();
                let body = self.step(&scope.body, r)?;
                let own: Vec<Constraint> = r.told[start..]
                    .iter()
                    .filter(|c| c.free_vars().iter().any(|v| scope.vars.contains(v)))
                    .cloned()
                    .collect();
                let store = if own.is_empty() { scope.store.clone() } else { scope.store.and(&Constraint::and_all(own)) };
                Process::Scope(Box::new(Scope { vars: scope.vars.clone(), store, body, needs_seed: false }))
            }
            Process::Rep(t, body) => {
                r.moved = true;
                Process::par([(**body).clone(), Process::next(*t, p.clone())])
            }
            Process::Call(name, args) => {
                r.moved = true;
                let def = self.defs.get(name).ok_or_else(|| EngineError::UnknownProcedure(name.clone()))?;
                if def.params.len() != args.len() {
                    return Err(EngineError::ArityMismatch {
                        name: name.clone(),
                        expected: def.params.len(),
                        found: args.len(),
                    });
                }
                def.instantiate(args)
            }
        })
    }

    /// Resolves stream reads in a told constraint and turns `x = e` on a
    /// stream `x` into a binding of its next version.
    fn bind(&mut self, c: &Constraint, r: &Round<'_>) -> Result<Constraint, EngineError> {
        let max = self.config.domain.max();
        let mut out = Vec::new();
        for k in c.conjuncts() {
            if let Constraint::Atom(a) = k {
                if let (Term::Var(x), Rel::Eq) = (&a.lhs, a.rel) {
                    if self.streams.is_stream(x) {
                        let rhs = r.reads.resolve_term(&a.rhs);
                        let value = match &rhs {
                            Term::Const(v) => Some(*v),
                            Term::Var(y) => r.snapshot.value_of(y)?,
                            Term::Add(y, d) => r.snapshot.value_of(y)?.map(|v| v + d),
                        };
                        let value = value.filter(|v| matches!(rhs, Term::Const(_)) || (0..max).contains(v));
                        let version = self.streams.bump(x);
                        let name = PersistentVarPolicy::versioned(x, version);
                        out.push(match value {
                            Some(v) => Constraint::eq_const(&name, v),
                            None => Constraint::atom(Term::var(&name), Rel::Eq, rhs),
                        });
                        self.events.push(Event { var: x.clone(), version, value });
                        continue;
                    }
                }
            }
            out.push(r.reads.resolve(k));
        }
        Ok(Constraint::and_all(out))
    }

    /// Iterates [`Engine::micro_step`] until no component moves. Returns
    /// the final configuration and everything told along the way.
    pub fn run_to_quiescence(&mut self, cfg: Configuration) -> Result<(Configuration, Vec<Constraint>), EngineError> {
        let mut cfg = cfg;
        let mut told = Vec::new();
        loop {
            match self.micro_step(&cfg)? {
                MicroStep::Quiescent => return Ok((cfg, told)),
                MicroStep::Moved { next, told: more } => {
                    cfg = next;
                    told.extend(more);
                }
            }
        }
    }

    /// One time unit: seed the store with the input and the carried stream
    /// values, run to quiescence, and move on with the future of the
    /// quiescent process.
    pub fn observable_step(&mut self, p: Process, input: &Constraint) -> Result<TickRecord, EngineError> {
        self.steps = 0;
        self.events.clear();
        let input = self.streams.resolve(input);
        let store = self.empty_store().conjoin(&self.streams.seed())?.conjoin(&input)?;
        let (end, told) = self.run_to_quiescence(Configuration { process: p, store })?;
        let residual = prune(&future(&end.process, &self.defs));
        let mut events = std::mem::take(&mut self.events);
        for e in &mut events {
            if e.value.is_none() {
                e.value = end.store.value_of(&PersistentVarPolicy::versioned(&e.var, e.version))?;
            }
            if let Some(v) = e.value {
                self.streams.record(&e.var, e.version, v);
            }
        }
        let record = TickRecord {
            tick: self.tick,
            input,
            told: told.iter().map(hide_locals).collect(),
            quiescent_store: hide_locals(end.store.content()),
            residual,
            inconsistent: !end.store.is_consistent(),
            events,
        };
        self.tick += 1;
        Ok(record)
    }

    /// Runs `ticks` time units with the given inputs. Stops after the first
    /// inconsistent time unit unless `keep_going` is set.
    pub fn run(
        &mut self,
        p: Process,
        ticks: u64,
        inputs: &BTreeMap<u64, Constraint>,
    ) -> Result<Trace, EngineError> {
        let mut trace = Trace::default();
        let mut p = p;
        for _ in 0..ticks {
            let tick = self.tick;
            let input = inputs.get(&tick).cloned().unwrap_or(Constraint::True);
            let record = self.observable_step(p, &input)?;
            p = record.residual.clone();
            let stop = record.inconsistent && !self.config.keep_going;
            trace.records.push(record);
            if stop {
                trace.halted = Some(tick);
                break;
            }
        }
        Ok(trace)
    }
}

fn rename_local(p: &Process, map: &BTreeMap<String, Term>) -> Process {
    match p {
        Process::Local { vars, init, body } => {
            let inner = Process::Par(vec![Process::Tell(init.clone()), (**body).clone()]).substitute(map);
            let Process::Par(mut parts) = inner else { unreachable!() };
            let body = parts.pop().unwrap_or(Process::Null);
            let init = match parts.pop() {
                Some(Process::Tell(c)) => c,
                _ => Constraint::True,
            };
            Process::Local { vars: vars.clone(), init, body: Box::new(body) }
        }
        other => other.clone(),
    }
}

fn grows(before: &Store, after: &Store) -> bool {
    if matches!(after.content(), Constraint::False) {
        return true;
    }
    let now = after.content().conjuncts();
    before.content().conjuncts().iter().all(|c| now.contains(c))
        || after.entails(before.content()).unwrap_or(true)
}

fn hide_locals(c: &Constraint) -> Constraint {
    let locals: Vec<String> = c.free_vars().into_iter().filter(|v| v.contains('~')).collect();
    hide_all(locals.iter().map(String::as_str), c)
}

/// The future function: what a quiescent process does in the next time
/// unit. Strips one `next`, goes through compositions, `local` blocks and
/// calls, and discards everything else.
pub fn future(p: &Process, defs: &DefinitionTable) -> Process {
    future_within(p, defs, defs.len() + 1)
}

fn future_within(p: &Process, defs: &DefinitionTable, unfold: usize) -> Process {
    match p {
        Process::Next(k, body) => Process::next(k - 1, (**body).clone()),
        Process::Par(items) => Process::Par(items.iter().map(|q| future_within(q, defs, unfold)).collect()),
        Process::Local { vars, init, body } => Process::Local {
            vars: vars.clone(),
            init: init.clone(),
            body: Box::new(future_within(body, defs, unfold)),
        },
        Process::Scope(scope) => Process::Scope(Box::new(Scope {
            vars: scope.vars.clone(),
            store: scope.store.clone(),
            body: future_within(&scope.body, defs, unfold),
            needs_seed: true,
        })),
        Process::Call(name, args) if unfold > 0 => match defs.get(name) {
            Some(def) if def.params.len() == args.len() => future_within(&def.instantiate(args), defs, unfold - 1),
            _ => Process::Null,
        },
        _ => Process::Null,
    }
}

/// Drops finished components: `0` members of compositions, and opened
/// scopes whose body is done and whose store says nothing about outside
/// variables.
pub fn prune(p: &Process) -> Process {
    match p {
        Process::Par(items) => Process::par(items.iter().map(prune).filter(|q| !matches!(q, Process::Null))),
        Process::Ask(g, body) => Process::Ask(g.clone(), Box::new(prune(body))),
        Process::Next(k, body) => Process::Next(*k, Box::new(prune(body))),
        Process::Rep(t, body) => Process::Rep(*t, Box::new(prune(body))),
        Process::Local { vars, init, body } => {
            Process::Local { vars: vars.clone(), init: init.clone(), body: Box::new(prune(body)) }
        }
        Process::Scope(scope) => {
            let body = prune(&scope.body);
            let closed = scope.store.free_vars().iter().all(|v| scope.vars.contains(v));
            if matches!(body, Process::Null) && closed {
                Process::Null
            } else {
                Process::Scope(Box::new(Scope { body, ..(**scope).clone() }))
            }
        }
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_process, parse_program};

    fn c(s: &str) -> Constraint {
        s.parse().unwrap()
    }

    fn p(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    fn engine() -> Engine {
        Engine::new(DefinitionTable::new(), PersistentVarPolicy::new(), EngineConfig::default()).unwrap()
    }

    fn cfg(e: &Engine, src: &str) -> Configuration {
        Configuration { process: p(src), store: e.empty_store() }
    }

    #[test]
    fn tell_adds_to_store() {
        let mut e = engine();
        let MicroStep::Moved { next, told } = e.micro_step(&cfg(&e, "tell(x = 5)")).unwrap() else { panic!() };
        assert_eq!(next.process, Process::Null);
        assert_eq!(next.store.content(), &c("x = 5"));
        assert_eq!(told, vec![c("x = 5")]);
        assert!(matches!(e.micro_step(&next).unwrap(), MicroStep::Quiescent));
    }

    #[test]
    fn failing_ask_is_discarded() {
        let mut e = engine();
        let start = Configuration { process: p("when x > 3 do tell(y = 1)"), store: e.empty_store() };
        let MicroStep::Moved { next, .. } = e.micro_step(&start).unwrap() else { panic!() };
        assert_eq!(next.process, Process::Null);
        assert_eq!(next.store.content(), &Constraint::True);
    }

    #[test]
    fn replication_unfolds() {
        let mut e = engine();
        let MicroStep::Moved { next, .. } = e.micro_step(&cfg(&e, "rep[3] tell(a = 1)")).unwrap() else { panic!() };
        assert_eq!(next.process, p("tell(a = 1) || next^3 rep[3] tell(a = 1)"));
    }

    #[test]
    fn ask_race_depends_on_policy() {
        let mut e = engine();
        let (end, told) = e.run_to_quiescence(cfg(&e, "tell(a = 1) || when a = 1 do tell(b = 1)")).unwrap();
        assert_eq!(end.store.content(), &c("a = 1"));
        assert_eq!(told.len(), 1);

        let config = EngineConfig { ask_policy: AskPolicy::Deferred, ..EngineConfig::default() };
        let mut e = Engine::new(DefinitionTable::new(), PersistentVarPolicy::new(), config).unwrap();
        let (end, _) = e.run_to_quiescence(cfg(&e, "tell(a = 1) || when a = 1 do tell(b = 1)")).unwrap();
        assert_eq!(end.store.content(), &c("a = 1 & b = 1"));
    }

    #[test]
    fn next_blocks_within_time_unit() {
        let mut e = engine();
        assert!(matches!(e.micro_step(&cfg(&e, "next tell(a = 1)")).unwrap(), MicroStep::Quiescent));
        let (end, told) = e.run_to_quiescence(cfg(&e, "0")).unwrap();
        assert!(told.is_empty());
        assert_eq!(end.process, Process::Null);
    }

    #[test]
    fn future_examples() {
        let defs = DefinitionTable::new();
        assert_eq!(future(&p("next tell(a = 1)"), &defs), p("tell(a = 1)"));
        assert_eq!(
            future(&p("next tell(a = 1) || tell(b = 2)"), &defs),
            Process::Par(vec![p("tell(a = 1)"), Process::Null])
        );
        assert_eq!(future(&p("next^3 tell(a = 1)"), &defs), p("next^2 tell(a = 1)"));
        assert_eq!(future(&p("local x in next tell(x = 1)"), &defs), p("local x in tell(x = 1)"));
    }

    #[test]
    fn replicated_tell_every_other_unit() {
        let mut e = engine();
        let trace = e.run(p("rep[2] tell(a = 1)"), 5, &BTreeMap::new()).unwrap();
        let told: Vec<usize> = trace.records.iter().map(|r| r.told.len()).collect();
        assert_eq!(told, vec![1, 0, 1, 0, 1]);
    }

    #[test]
    fn idle_process_keeps_input_only() {
        let mut e = engine();
        let r = e.observable_step(Process::Null, &c("x = 3")).unwrap();
        assert_eq!(r.quiescent_store, c("x = 3"));
        assert_eq!(r.residual, Process::Null);
        let r = e.observable_step(Process::Null, &Constraint::True).unwrap();
        assert_eq!((r.quiescent_store, r.residual), (Constraint::True, Process::Null));
    }

    #[test]
    fn keyboard_unit_increments_waypoint() {
        let prog = parse_program(
            "var pReq; var wpId persistent = 0;\n\
             rep[50] when pReq = 1 do next^25 tell(wpId = wpId + 1)",
        )
        .unwrap();
        let mut e = Engine::for_program(&prog, EngineConfig::default()).unwrap();
        let inputs = [(0, c("pReq = 1")), (50, c("pReq = 1"))].into_iter().collect();
        let trace = e.run(prog.entry.clone(), 120, &inputs).unwrap();
        let bindings: Vec<(u64, Option<i64>)> = trace.bindings("wpId").map(|(t, ev)| (t, ev.value)).collect();
        assert_eq!(bindings, vec![(25, Some(1)), (75, Some(2))]);
        assert_eq!(trace.records[25].quiescent_store, c("wpId#0 = 0 & wpId#1 = 1"));
        assert_eq!(trace.records[26].quiescent_store, c("wpId#1 = 1"));
    }

    #[test]
    fn undeclared_program_variables_are_streams() {
        let prog = parse_program("tell(x = 1)").unwrap();
        let mut e = Engine::for_program(&prog, EngineConfig::default()).unwrap();
        let trace = e.run(prog.entry.clone(), 1, &BTreeMap::new()).unwrap();
        assert_eq!(trace.records[0].told, vec![c("x#0 = 1")]);
    }

    #[test]
    fn locals_are_renamed_apart_and_hidden() {
        let mut e = engine();
        let r = e.observable_step(p("local t, t = 4 in tell(y = t) || local t in tell(t = 1)"), &Constraint::True).unwrap();
        assert_eq!(r.quiescent_store, c("y = 4"));
        assert!(r.told.iter().all(|t| t.free_vars().iter().all(|v| !v.contains('~'))));
    }

    #[test]
    fn local_store_survives_time_units() {
        let mut e = engine();
        let trace = e.run(p("local t, t = 4 in next when t = 4 do tell(y = 1)"), 2, &BTreeMap::new()).unwrap();
        assert_eq!(trace.records[1].quiescent_store, c("y = 1"));
    }

    #[test]
    fn inconsistency_halts_unless_keep_going() {
        let mut e = engine();
        let trace = e.run(p("rep[1] tell(x = 1) || tell(x = 2)"), 4, &BTreeMap::new()).unwrap();
        assert_eq!(trace.halted, Some(0));
        assert_eq!(trace.records.len(), 1);
        assert!(trace.records[0].inconsistent);

        let config = EngineConfig { keep_going: true, ..EngineConfig::default() };
        let mut e = Engine::new(DefinitionTable::new(), PersistentVarPolicy::new(), config).unwrap();
        let trace = e.run(p("rep[1] tell(x = 1) || tell(x = 2)"), 4, &BTreeMap::new()).unwrap();
        assert_eq!(trace.records.len(), 4);
        assert!(!trace.records[1].inconsistent);
    }

    #[test]
    fn recursion_through_next() {
        let prog = parse_program("var a; def A() = tell(a = 1) || next^2 A(); A()").unwrap();
        let mut e = Engine::for_program(&prog, EngineConfig::default()).unwrap();
        let trace = e.run(prog.entry.clone(), 5, &BTreeMap::new()).unwrap();
        let told: Vec<usize> = trace.records.iter().map(|r| r.told.len()).collect();
        assert_eq!(told, vec![1, 0, 1, 0, 1]);
    }

    #[test]
    fn engine_rejects_unguarded_definitions() {
        let mut defs = DefinitionTable::new();
        defs.insert(crate::calculus::Definition { name: "A".into(), params: vec![], body: p("A() || tell(a = 1)") });
        let err = Engine::new(defs, PersistentVarPolicy::new(), EngineConfig::default()).unwrap_err();
        assert!(matches!(err, EngineError::UnguardedRecursion { .. }));
    }

    #[test]
    fn step_budget_is_enforced() {
        let config = EngineConfig { step_budget: 3, ..EngineConfig::default() };
        let mut e = Engine::new(DefinitionTable::new(), PersistentVarPolicy::new(), config).unwrap();
        let err = e.observable_step(p("tell(a = 1) || when a = 1 do when a = 1 do when a = 1 do tell(b = 1)"), &c("a = 1"));
        assert_eq!(err.unwrap_err(), EngineError::StepBudgetExceeded { budget: 3, tick: 0 });
    }
}
