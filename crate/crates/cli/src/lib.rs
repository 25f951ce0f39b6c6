//! The `ttcc` command line: checking programs, validating system schedules,
//! simulating, and replaying traces.
//!
//! Every command returns an [`Outcome`]: what to print, and whether the
//! command found nothing wrong. The binary maps `ok == false` to exit
//! status 1.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use ttcc::avionics::{compile_system, load_system, CompileOptions, SystemSpec};
use ttcc::calculus::{parse_trace_lines, AskPolicy, Engine, EngineConfig, Trace};
use ttcc::constraint::oracle::{entails_oracle_sliced, satisfiable_oracle, DEFAULT_ORACLE_BUDGET};
use ttcc::constraint::{Constraint, Domain, Rel, Term, DEFAULT_MAX};
use ttcc::dsl::{parse_constraint, parse_program, ParseError};
use ttcc::validators::{latency_ok, measure_all, Predicate, PredicateReport, WfMode};

/// Result of one command.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub ok: bool,
    /// Machine-readable output, one JSON object or diagnostic per line.
    pub stdout: String,
    /// Summary lines meant for a human.
    pub stderr: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }
}

/// Settings of `run`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub ticks: u64,
    pub env: Option<PathBuf>,
    pub ask_policy: AskPolicy,
    pub wf_mode: WfMode,
    pub max: i64,
    pub step_budget: u64,
    /// Where the trace goes; standard output when absent.
    pub out: Option<PathBuf>,
    pub keep_going: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ticks: 1,
            env: None,
            ask_policy: AskPolicy::default(),
            wf_mode: WfMode::default(),
            max: DEFAULT_MAX,
            step_budget: EngineConfig::default().step_budget,
            out: None,
            keep_going: false,
        }
    }
}

impl RunConfig {
    pub fn engine(&self) -> Result<EngineConfig> {
        if self.ticks < 1 {
            bail!("--ticks must be at least 1");
        }
        Ok(EngineConfig {
            domain: Domain::new(self.max)?,
            ask_policy: self.ask_policy,
            step_budget: self.step_budget,
            keep_going: self.keep_going,
            ..EngineConfig::default()
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// System configuration files are recognized by their extension.
pub fn is_system_file(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("sys" | "toml"))
}

fn diagnostic(path: &Path, e: &ParseError) -> String {
    match e.position() {
        Some(pos) => format!("{}:{}:{}: error: {e}", path.display(), pos.line, pos.col),
        None => format!("{}: error: {e}", path.display()),
    }
}

/// Parses a program and checks declarations, arity and guardedness.
pub fn cmd_check(path: &Path) -> Result<Outcome> {
    let src = read(path)?;
    Ok(match parse_program(&src) {
        Ok(prog) => Outcome {
            ok: true,
            stdout: String::new(),
            stderr: format!(
                "{}: ok ({} declarations, {} definitions)\n",
                path.display(),
                prog.declarations.len(),
                prog.definitions.len()
            ),
        },
        Err(e) => Outcome { ok: false, stdout: format!("{}\n", diagnostic(path, &e)), stderr: String::new() },
    })
}

fn report_lines(reports: &[PredicateReport]) -> String {
    reports.iter().map(|r| serde_json::to_string(r).expect("report serializes") + "\n").collect()
}

fn summary(reports: &[PredicateReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out += &format!("{}: {}\n", r.predicate, if r.pass { "pass" } else { "FAIL" });
        for v in &r.violations {
            out += &format!("  {}\n", v.explanation);
        }
    }
    out
}

/// Runs every schedule predicate, latency included, on a system file.
pub fn cmd_validate(path: &Path, wf_mode: WfMode, engine: EngineConfig) -> Result<Outcome> {
    let sys = load_system(&read(path)?).with_context(|| format!("{}", path.display()))?;
    let reports = compile_system(&sys, &CompileOptions { wf_mode, engine })?.reports;
    Ok(Outcome { ok: reports.iter().all(|r| r.pass), stdout: report_lines(&reports), stderr: summary(&reports) })
}

/// Environment inputs: `tick: constraint` per line, `//` comments. Several
/// lines for one tick are conjoined.
pub fn parse_env(text: &str) -> Result<BTreeMap<u64, Constraint>> {
    let mut out: BTreeMap<u64, Constraint> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split("//").next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (tick, c) = line.split_once(':').with_context(|| format!("line {}: expected `tick: constraint`", i + 1))?;
        let tick: u64 = tick.trim().parse().with_context(|| format!("line {}: bad tick `{}`", i + 1, tick.trim()))?;
        let c = parse_constraint(c.trim()).with_context(|| format!("line {}", i + 1))?;
        let slot = out.entry(tick).or_insert(Constraint::True);
        *slot = slot.and(&c);
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, lines: &str, stdout: &mut String) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
            f.write_all(lines.as_bytes())?;
        }
        None => stdout.push_str(lines),
    }
    Ok(())
}

fn trace_lines(trace: &Trace, annotate: impl Fn(u64) -> Option<Value>) -> String {
    let mut out = String::new();
    for r in &trace.records {
        let mut line = r.to_json();
        if let Some(events) = annotate(r.tick) {
            line["avionics"] = events;
        }
        out += &serde_json::to_string(&line).expect("trace line serializes");
        out.push('\n');
    }
    out
}

fn inconsistency_note(trace: &Trace) -> String {
    let bad: Vec<String> = trace.records.iter().filter(|r| r.inconsistent).map(|r| r.tick.to_string()).collect();
    match (bad.is_empty(), trace.halted) {
        (true, _) => String::new(),
        (false, Some(t)) => format!("inconsistent store at tick {t}; run halted\n"),
        (false, None) => format!("inconsistent store at ticks {}\n", bad.join(", ")),
    }
}

/// Simulates a program or a compiled system.
pub fn cmd_run(path: &Path, config: &RunConfig) -> Result<Outcome> {
    let engine_config = config.engine()?;
    let inputs = match &config.env {
        Some(env) => parse_env(&read(env)?).with_context(|| format!("{}", env.display()))?,
        None => BTreeMap::new(),
    };
    if is_system_file(path) {
        let sys = load_system(&read(path)?).with_context(|| format!("{}", path.display()))?;
        run_system(&sys, config, engine_config, &inputs)
    } else {
        let prog = parse_program(&read(path)?).map_err(|e| anyhow::anyhow!(diagnostic(path, &e)))?;
        let mut engine = Engine::for_program(&prog, engine_config)?;
        let trace = engine.run(prog.entry.clone(), config.ticks, &inputs)?;
        let mut outcome = Outcome { ok: !trace.any_inconsistent(), ..Outcome::default() };
        emit(&config.out, &trace_lines(&trace, |_| None), &mut outcome.stdout)?;
        outcome.stderr = format!("{} ticks\n{}", trace.records.len(), inconsistency_note(&trace));
        Ok(outcome)
    }
}

fn run_system(
    sys: &SystemSpec,
    config: &RunConfig,
    engine_config: EngineConfig,
    inputs: &BTreeMap<u64, Constraint>,
) -> Result<Outcome> {
    let compiled =
        compile_system(sys, &CompileOptions { wf_mode: config.wf_mode, engine: engine_config.clone() })?;
    let mut engine = compiled.engine(engine_config)?;
    let trace = engine.run(compiled.process().clone(), config.ticks, inputs)?;
    let events = compiled.events.annotate(&trace);
    let lines = trace_lines(&trace, |t| events.get(&t).map(|e| serde_json::to_value(e).expect("events serialize")));

    let (lt_pass, lt_violations) = latency_ok(sys, &trace);
    let measured = PredicateReport { predicate: Predicate::LT, pass: lt_pass, violations: lt_violations };
    let mut reports = compiled.reports.clone();
    reports.retain(|r| r.predicate != Predicate::LT);
    reports.push(measured);

    let mut outcome = Outcome {
        ok: reports.iter().all(|r| r.pass) && !trace.any_inconsistent(),
        ..Outcome::default()
    };
    emit(&config.out, &lines, &mut outcome.stdout)?;
    let mut stderr = summary(&reports);
    for (name, m) in measure_all(sys, &trace) {
        if let Ok(m) = m {
            stderr += &format!("latency {name}: {} (from {} to {}, deadline {})\n", m.latency, m.start, m.end, m.deadline);
        }
    }
    stderr += &inconsistency_note(&trace);
    outcome.stderr = stderr;
    if config.out.is_some() {
        outcome.stdout += &report_lines(&reports);
    }
    Ok(outcome)
}

/// Parses `name#k`.
fn stream_version(name: &str) -> Option<(&str, u32)> {
    let (base, v) = name.split_once('#')?;
    Some((base, v.parse().ok()?))
}

/// Re-checks every line of a trace with the reference oracle: the store
/// entails the input and everything told, and every store conjunct follows
/// from those together with the stream values carried over from earlier
/// ticks (or is an initial stream value). The inconsistency flag must match
/// satisfiability of the store.
pub fn cmd_replay(path: &Path, max: i64) -> Result<Outcome> {
    let lines = parse_trace_lines(&read(path)?).with_context(|| format!("{}", path.display()))?;
    let budget = DEFAULT_ORACLE_BUDGET;
    let mut carried: BTreeMap<String, (u32, i64)> = BTreeMap::new();
    let mut problems = Vec::new();
    for line in &lines {
        let parse = |s: &str| parse_constraint(s).with_context(|| format!("tick {}: `{s}`", line.tick));
        let store = parse(&line.store)?;
        let input = parse(&line.input)?;
        let told = line.told.iter().map(|t| parse(t)).collect::<Result<Vec<_>>>()?;
        let mut complain = |what: String| problems.push(json!({ "tick": line.tick, "problem": what }));

        let satisfiable = satisfiable_oracle(&store, max, budget)?;
        if satisfiable == line.inconsistent {
            complain(format!("store is {}satisfiable but the line says inconsistent = {}", if satisfiable { "" } else { "un" }, line.inconsistent));
        }
        if !satisfiable {
            continue;
        }
        for c in std::iter::once(&input).chain(&told) {
            for k in c.conjuncts() {
                if !entails_oracle_sliced(&store, k, max, budget)? {
                    complain(format!("store does not entail `{k}`"));
                }
            }
        }
        let seed = Constraint::and_all(
            carried.iter().map(|(x, (v, value))| Constraint::eq_const(format!("{x}#{v}"), *value)),
        );
        let basis = Constraint::and_all(std::iter::once(seed).chain(std::iter::once(input.clone())).chain(told.clone()));
        for k in store.conjuncts() {
            if entails_oracle_sliced(&basis, k, max, budget)? {
                continue;
            }
            let initial = matches!(k, Constraint::Atom(a)
                if a.rel == Rel::Eq
                    && matches!(a.rhs, Term::Const(_))
                    && a.lhs.variable().and_then(stream_version).is_some_and(|(_, v)| v == 0));
            if !initial {
                complain(format!("`{k}` is neither told nor carried over"));
            }
        }
        for e in &line.events {
            if let Some(v) = e.value {
                carried.insert(e.var.clone(), (e.version, v));
            }
        }
    }
    let ok = problems.is_empty();
    Ok(Outcome {
        ok,
        stdout: problems.iter().map(|p| p.to_string() + "\n").collect(),
        stderr: format!("{} lines replayed, {} problems\n", lines.len(), problems.len()),
    })
}
