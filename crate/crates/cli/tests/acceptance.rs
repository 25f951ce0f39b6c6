//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttcc::avionics::{compile_system, load_system, CompileOptions, ScheduleTriple, SystemSpec};
use ttcc::calculus::{
    future, Configuration, Definition, DefinitionTable, Engine, EngineConfig, MicroStep, PersistentVarPolicy,
    Process, Scope,
};
use ttcc::constraint::oracle::{entails_oracle_with, satisfiable_oracle, DEFAULT_ORACLE_BUDGET};
use ttcc::constraint::{Constraint, Domain, Procedure, Registry, SolverConfig, Store};
use ttcc::dsl::{parse_constraint, parse_process, parse_program};
use ttcc::validators::{contention_free, well_formed_paths, simultaneous_relay, validate_schedules, WfMode};

type Criterion = (&'static str, fn() -> String);

fn c(s: &str) -> Constraint {
    parse_constraint(s).unwrap()
}

fn p(s: &str) -> Process {
    parse_process(s).unwrap()
}

fn fms() -> SystemSpec {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/fms.sys");
    load_system(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn plain_engine(defs: DefinitionTable) -> Engine {
    Engine::new(defs, PersistentVarPolicy::new(), EngineConfig::default()).unwrap()
}

fn one_step(e: &mut Engine, process: Process, store: &str) -> (Process, Constraint) {
    let store = e.empty_store().conjoin(&c(store)).unwrap();
    match e.micro_step(&Configuration { process, store }).unwrap() {
        MicroStep::Moved { next, .. } => (next.process, next.store.content().clone()),
        MicroStep::Quiescent => panic!("expected a move"),
    }
}

fn semantics() -> String {
    let mut e = plain_engine(DefinitionTable::new());
    let mut checked = 0;
    let mut check = |src: &str, store: &str, want: Process, want_store: &str, e: &mut Engine| {
        let (got, got_store) = one_step(e, p(src), store);
        assert_eq!(got, want, "{src}");
        assert_eq!(got_store, c(want_store), "{src}");
        checked += 1;
    };
    check("tell(x = 5)", "true", Process::Null, "x = 5", &mut e);
    check("when x > 3 do tell(y = 1)", "x = 4", p("tell(y = 1)"), "x = 4", &mut e);
    check("when x > 3 do tell(y = 1)", "x = 3", Process::Null, "x = 3", &mut e);
    check("tell(a = 1) || when a = 1 do tell(b = 1)", "true", Process::Par(vec![Process::Null, Process::Null]), "a = 1", &mut e);
    let scope = Scope { vars: vec!["t~0".into()], store: c("t~0 = 2"), body: p("tell(y = t~0)"), needs_seed: false };
    check("local t, t = 2 in tell(y = t)", "true", Process::Scope(Box::new(scope)), "t~0 = 2", &mut e);
    check("rep[5] tell(a = 1)", "true", p("tell(a = 1) || next^5 rep[5] tell(a = 1)"), "true", &mut e);

    let mut defs = DefinitionTable::new();
    defs.insert(Definition { name: "D".into(), params: vec!["n".into()], body: p("tell(d = n)") });
    let mut with_defs = plain_engine(defs.clone());
    check("D(7)", "true", p("tell(d = 7)"), "true", &mut with_defs);

    let r = e.observable_step(p("tell(a = 1) || next tell(b = 2)"), &c("i = 0")).unwrap();
    assert_eq!((r.quiescent_store.clone(), r.residual.clone()), (c("a = 1 & i = 0"), p("tell(b = 2)")));
    checked += 1;

    let none = DefinitionTable::new();
    let futures = [
        ("0", Process::Null),
        ("tell(a = 1)", Process::Null),
        ("when a = 1 do tell(b = 1)", Process::Null),
        ("rep[2] tell(a = 1)", Process::Null),
        ("next tell(a = 1)", p("tell(a = 1)")),
        ("next^3 tell(a = 1)", p("next^2 tell(a = 1)")),
        ("next tell(a = 1) || tell(b = 1)", Process::Par(vec![p("tell(a = 1)"), Process::Null])),
        ("local x in next tell(x = 1)", p("local x in tell(x = 1)")),
    ];
    for (src, want) in &futures {
        assert_eq!(&future(&p(src), &none), want, "future of {src}");
    }
    assert_eq!(future(&p("D(1)"), &defs), Process::Null);
    format!("{checked} rule cases and {} future cases", futures.len() + 1)
}

fn busy(s: &ScheduleTriple, t: u64) -> bool {
    let (o, d, p) = (s.offset as u64, s.duration as u64, s.period as u64);
    t >= o && (t - o) % p < d
}

/// No unit of one MAF (from the latest offset) is held by two windows.
fn occupancy_free(v: &[ScheduleTriple]) -> bool {
    let maf = ttcc::validators::maf(v.iter().map(|s| s.period));
    let start = v.iter().map(|s| s.offset as u64).max().unwrap_or(0);
    (start..start + maf).all(|t| {
        v.iter().filter(|s| busy(s, t)).count() <= 1
    })
}

fn named(v: &[ScheduleTriple]) -> Vec<(String, ScheduleTriple)> {
    v.iter().enumerate().map(|(i, s)| (format!("p{i}"), *s)).collect()
}

fn ima_schedule() -> String {
    let sys = fms();
    for m in &sys.modules {
        assert!(contention_free(&m.schedule_vector(), &m.name).0, "{} should be contention free", m.name);
    }
    let m1: Vec<ScheduleTriple> = sys.modules[0].partitions.iter().map(|p| p.schedule).collect();
    let mut witnesses = Vec::new();
    for i in 0..m1.len() {
        let mut v = m1.clone();
        v[i].offset += 10;
        let (ok, violations) = contention_free(&named(&v), "M1");
        assert!(!ok && !occupancy_free(&v));
        let at = violations[0].instants[0] as u64;
        assert_eq!(v.iter().filter(|s| busy(s, at)).count(), 2, "witness {at}");
        witnesses.push(at);
    }
    format!("{} modules contention free; M1 shifted by +10 conflicts at {:?}", sys.modules.len(), witnesses)
}

fn tt_schedule() -> String {
    let sys = fms();
    assert_eq!(sys.max_hopdelay, 3);
    assert!(simultaneous_relay(&sys).0);
    assert!(well_formed_paths(&sys, WfMode::Modular).0);
    let (ok, v) = well_formed_paths(&sys, WfMode::Strict);
    assert!(!ok);
    let flagged: Vec<&Vec<String>> = v.iter().map(|v| &v.participants).collect();
    assert_eq!(flagged, vec![&vec!["query2".to_string(), "[M4,SW2]".into(), "[SW2,M5]".into()]]);
    assert!(validate_schedules(&sys, WfMode::Modular).iter().all(|r| r.pass));
    "SR and modular WF pass; strict WF flags only query2 [M4,SW2] -> [SW2,M5]".into()
}

fn cf_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut n, mut conflicting) = (0, 0);
    for _ in 0..600 {
        let len = rng.gen_range(1..=4);
        let v: Vec<ScheduleTriple> = (0..len)
            .map(|_| {
                let period = *[10u32, 20, 25, 50].choose(&mut rng).unwrap();
                ScheduleTriple::new(rng.gen_range(0..period), rng.gen_range(1..=period / 4), period)
            })
            .collect();
        let verdict = contention_free(&named(&v), "m").0;
        assert_eq!(verdict, occupancy_free(&v), "{v:?}");
        n += 1;
        conflicting += usize::from(!verdict);
    }
    format!("{n} vectors, {conflicting} with contention, 0 disagreements")
}

fn random_constraint(rng: &mut ChaCha8Rng, vars: &[&str], max: i64) -> String {
    let atoms = rng.gen_range(1..=3);
    let parts: Vec<String> = (0..atoms)
        .map(|_| {
            let x = vars.choose(rng).unwrap();
            let rel = ["=", "!=", "<", "<=", ">", ">="].choose(rng).unwrap();
            let rhs = match rng.gen_range(0..3) {
                0 => rng.gen_range(0..max).to_string(),
                1 => vars.choose(rng).unwrap().to_string(),
                _ => format!("{} + {}", vars.choose(rng).unwrap(), rng.gen_range(1..4)),
            };
            format!("{x} {rel} {rhs}")
        })
        .collect();
    parts.join(" & ")
}

fn entailment_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let all = ["a", "b", "c", "d"];
    let mut entailed = 0;
    for _ in 0..1000 {
        let vars = &all[..rng.gen_range(1..=4)];
        let max = rng.gen_range(2..=64);
        let s = c(&random_constraint(&mut rng, vars, max));
        let goal = c(&random_constraint(&mut rng, vars, max));
        let store = Store::with_config(
            Domain::new(max).unwrap(),
            SolverConfig { procedure: Procedure::Enumerate, ..SolverConfig::default() },
            Arc::new(Registry::permissive()),
        )
        .conjoin(&s)
        .unwrap();
        assert_eq!(store.is_consistent(), satisfiable_oracle(&s, max, DEFAULT_ORACLE_BUDGET).unwrap(), "{s}");
        let expected = entails_oracle_with(&s, &goal, max, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(store.entails(&goal).unwrap(), expected, "{s} |- {goal} over 0..{max}");
        entailed += usize::from(expected);
    }
    format!("1000 pairs ({entailed} entailed), 0 disagreements")
}

fn random_process(rng: &mut ChaCha8Rng, depth: u32) -> String {
    let vars = ["a", "b", "d"];
    let atom = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
        0 => format!("{} = {}", vars.choose(rng).unwrap(), rng.gen_range(0..6)),
        1 => format!("{} < {}", vars.choose(rng).unwrap(), vars.choose(rng).unwrap()),
        _ => format!("{} >= {}", vars.choose(rng).unwrap(), rng.gen_range(0..6)),
    };
    let choice = if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..7) };
    match choice {
        0 => "0".into(),
        1 => format!("tell({})", atom(rng)),
        2 => format!("when {} do {}", atom(rng), random_process(rng, depth - 1)),
        3 => format!("({} || {})", random_process(rng, depth - 1), random_process(rng, depth - 1)),
        4 => format!("next^{} {}", rng.gen_range(1..4), random_process(rng, depth - 1)),
        5 => format!("rep[{}] {}", rng.gen_range(1..5), random_process(rng, depth - 1)),
        _ => format!("local t in (tell(t = {}) || {})", rng.gen_range(0..6), random_process(rng, depth - 1)),
    }
}

fn random_program(rng: &mut ChaCha8Rng) -> String {
    let decls = if rng.gen_bool(0.5) { "var a; var b; var d;\n" } else { "" };
    format!("{decls}{}", random_process(rng, 4))
}

fn run_text(src: &str, ticks: u64) -> String {
    let prog = parse_program(src).unwrap();
    let config = EngineConfig { domain: Domain::new(16).unwrap(), keep_going: true, ..EngineConfig::default() };
    let mut e = Engine::for_program(&prog, config).unwrap();
    e.run(prog.entry.clone(), ticks, &BTreeMap::new()).unwrap().to_json_lines()
}

fn determinism() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bytes = 0;
    for _ in 0..100 {
        let src = random_program(&mut rng);
        let (a, b) = (run_text(&src, 50), run_text(&src, 50));
        assert_eq!(a, b, "{src}");
        bytes += a.len();
    }
    format!("100 programs x 50 ticks, {bytes} trace bytes each run, identical")
}

fn replication() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..60 {
        let (t, k) = (rng.gen_range(1..=10u64), rng.gen_range(1..=5u64));
        let trace = run_text(&format!("rep[{t}] tell(a = 1)"), k * t + 1);
        let active = trace.lines().filter(|l| !l.contains("\"told\":[]")).count() as u64;
        assert_eq!(active, k + 1, "T = {t}, k = {k}");
    }
    "60 samples of T in 1..=10, k in 1..=5: k + 1 activations each".into()
}

fn fms_end_to_end() -> String {
    let sys = fms();
    let compiled = compile_system(&sys, &CompileOptions::default()).unwrap();
    assert!(compiled.reports.iter().all(|r| r.pass));
    let mut engine = compiled.engine(EngineConfig::default()).unwrap();
    let inputs = [(0, c("pReq1 = 1"))].into_iter().collect();
    let trace = engine.run(compiled.process().clone(), 600, &inputs).unwrap();
    assert!(!trace.any_inconsistent());
    let (tick, event) = trace.bindings("display1").next().expect("no display event");
    assert_eq!(event.value, Some(1));
    assert!(tick <= 600);
    assert_eq!(tick, 350);
    format!("display event at tick {tick} (deadline 600)")
}

fn store_monotonicity() -> String {
    if !cfg!(debug_assertions) {
        panic!("the engine's store assertion is compiled out");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut steps = 0;
    for _ in 0..400 {
        let prog = parse_program(&random_process(&mut rng, 5)).unwrap();
        let mut e = Engine::new(DefinitionTable::new(), PersistentVarPolicy::new(), EngineConfig {
            domain: Domain::new(16).unwrap(),
            ..EngineConfig::default()
        })
        .unwrap();
        let mut cfg = Configuration { process: prog.entry, store: e.empty_store() };
        while let MicroStep::Moved { next, .. } = e.micro_step(&cfg).unwrap() {
            let (before, after) = (cfg.store.content(), next.store.content());
            let kept = before.conjuncts().iter().all(|k| after.conjuncts().contains(k));
            assert!(kept || entails_oracle_with(after, before, 16, DEFAULT_ORACLE_BUDGET).unwrap());
            steps += 1;
            cfg = next;
        }
    }
    format!("engine assertion enabled; {steps} random micro steps re-checked")
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("semantics", semantics),
        ("ima-schedule", ima_schedule),
        ("tt-schedule", tt_schedule),
        ("cf-oracle", cf_oracle),
        ("entailment-oracle", entailment_oracle),
        ("determinism", determinism),
        ("replication", replication),
        ("fms-end-to-end", fms_end_to_end),
        ("store-monotonicity", store_monotonicity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL {name}: {}", msg.lines().next().unwrap_or(""));
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
