use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use ttcc::calculus::{
    future, prune, Configuration, DefinitionTable, Engine, EngineConfig, MicroStep, PersistentVarPolicy, Process,
};
use ttcc::constraint::oracle::{entails_oracle_with, satisfiable_oracle, DEFAULT_ORACLE_BUDGET};
use ttcc::constraint::{Constraint, Domain, Procedure, Registry, Rel, SolverConfig, Store, Term};

const VARS: [&str; 4] = ["a", "b", "c", "d"];

fn atom(max: i64) -> impl Strategy<Value = Constraint> {
    let var = prop::sample::select(VARS.to_vec());
    let rhs = prop_oneof![
        (0..max).prop_map(Term::Const),
        prop::sample::select(VARS.to_vec()).prop_map(Term::var),
        (prop::sample::select(VARS.to_vec()), -3i64..4).prop_map(|(v, k)| Term::offset(v, k)),
    ];
    (var, prop::sample::select(Rel::ALL.to_vec()), rhs).prop_map(|(v, r, t)| Constraint::atom(Term::var(v), r, t))
}

fn constraint(max: i64) -> impl Strategy<Value = Constraint> {
    prop_oneof![
        4 => prop::collection::vec(atom(max), 1..4).prop_map(Constraint::and_all),
        1 => (prop::sample::select(VARS.to_vec()), prop::collection::vec(atom(max), 1..3))
            .prop_map(|(x, body)| Constraint::exists(x, Constraint::and_all(body))),
    ]
}

fn store(max: i64, procedure: Procedure, content: &Constraint) -> Store {
    let solver = SolverConfig { procedure, ..SolverConfig::default() };
    Store::with_config(Domain::new(max).unwrap(), solver, Arc::new(Registry::permissive())).conjoin(content).unwrap()
}

fn case() -> impl Strategy<Value = (i64, Constraint, Constraint)> {
    (2i64..=64).prop_flat_map(|max| (Just(max), constraint(max), constraint(max)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn enumeration_agrees_with_oracle((max, s, c) in case()) {
        let st = store(max, Procedure::Enumerate, &s);
        prop_assert_eq!(st.is_consistent(), satisfiable_oracle(&s, max, DEFAULT_ORACLE_BUDGET).unwrap());
        let expected = entails_oracle_with(&s, &c, max, DEFAULT_ORACLE_BUDGET).unwrap();
        prop_assert_eq!(st.entails(&c).unwrap(), expected, "{} |- {} over 0..{}", s, c, max);
    }

    #[test]
    fn bounds_is_sound((max, s, c) in case()) {
        let st = store(max, Procedure::Bounds, &s);
        if st.is_consistent() && st.entails(&c).unwrap() {
            prop_assert!(entails_oracle_with(&s, &c, max, DEFAULT_ORACLE_BUDGET).unwrap(), "{} |- {}", s, c);
        }
        if !st.is_consistent() {
            prop_assert!(!satisfiable_oracle(&s, max, DEFAULT_ORACLE_BUDGET).unwrap());
        }
    }
}

/// Small constraints over `VARS` with values below 8.
fn simple() -> impl Strategy<Value = Constraint> {
    let var = prop::sample::select(VARS.to_vec());
    prop_oneof![
        (var.clone(), 0i64..8).prop_map(|(v, k)| Constraint::eq_const(v, k)),
        (var.clone(), prop::sample::select(VARS.to_vec()))
            .prop_map(|(x, y)| Constraint::atom(Term::var(x), Rel::Lt, Term::var(y))),
        (var, 0i64..8).prop_map(|(v, k)| Constraint::atom(Term::var(v), Rel::Ge, Term::Const(k))),
    ]
}

fn process(locals: bool) -> impl Strategy<Value = Process> {
    let leaf = prop_oneof![Just(Process::Null), simple().prop_map(Process::tell)];
    leaf.prop_recursive(4, 24, 3, move |inner| {
        let mut options = vec![
            (simple(), inner.clone()).prop_map(|(c, p)| Process::ask(c, p)).boxed(),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Process::par).boxed(),
            (1u32..4, inner.clone()).prop_map(|(k, p)| Process::next(k, p)).boxed(),
            (1u32..5, inner.clone()).prop_map(|(k, p)| Process::rep(k, p)).boxed(),
        ];
        if locals {
            options.push(
                (prop::sample::select(VARS.to_vec()), inner)
                    .prop_map(|(v, p)| Process::local(vec![v.to_string()], Constraint::True, p))
                    .boxed(),
            );
        }
        prop::strategy::Union::new(options)
    })
}

fn engine() -> Engine {
    let config = EngineConfig { domain: Domain::new(16).unwrap(), keep_going: true, ..EngineConfig::default() };
    Engine::new(DefinitionTable::new(), PersistentVarPolicy::new(), config).unwrap()
}

fn run(p: &Process, ticks: u64) -> String {
    engine().run(p.clone(), ticks, &BTreeMap::new()).unwrap().to_json_lines()
}

fn moved(e: &mut Engine, p: &Process, s: &Store) -> (Process, Vec<Constraint>) {
    match e.micro_step(&Configuration { process: p.clone(), store: s.clone() }).unwrap() {
        MicroStep::Moved { next, told } => (next.process, told),
        MicroStep::Quiescent => (p.clone(), Vec::new()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn runs_are_deterministic(p in process(true)) {
        prop_assert_eq!(run(&p, 50), run(&p, 50));
    }

    #[test]
    fn null_component_changes_nothing(p in process(true)) {
        prop_assert_eq!(run(&Process::Par(vec![p.clone(), Process::Null]), 20), run(&p, 20));
    }

    #[test]
    fn future_distributes_over_par(p in process(true), q in process(true)) {
        let defs = DefinitionTable::new();
        let whole = future(&Process::Par(vec![p.clone(), q.clone()]), &defs);
        prop_assert_eq!(whole.clone(), Process::Par(vec![future(&p, &defs), future(&q, &defs)]));
        prop_assert_eq!(prune(&whole), prune(&Process::par([future(&p, &defs), future(&q, &defs)])));
    }

    #[test]
    fn par_steps_components_independently(p in process(false), q in process(false), seed in simple()) {
        let mut e = engine();
        let s = e.empty_store().conjoin(&seed).unwrap();
        let (p2, told_p) = moved(&mut e, &p, &s);
        let (q2, told_q) = moved(&mut e, &q, &s);
        let (both, told) = moved(&mut e, &Process::par([p.clone(), q.clone()]), &s);
        prop_assert_eq!(both, Process::par([p2, q2]));
        prop_assert_eq!(told, [told_p, told_q].concat());
    }

    #[test]
    fn stores_only_grow(p in process(true), input in simple()) {
        let mut e = engine();
        let mut cfg = Configuration { process: p, store: e.empty_store().conjoin(&input).unwrap() };
        while let MicroStep::Moved { next, .. } = e.micro_step(&cfg).unwrap() {
            let before = cfg.store.content();
            let after = next.store.content();
            let kept = before.conjuncts().iter().all(|c| after.conjuncts().contains(c));
            let entailed = || entails_oracle_with(after, before, 16, DEFAULT_ORACLE_BUDGET).unwrap_or(false);
            prop_assert!(kept || entailed(), "{} then {}", before, after);
            cfg = next;
        }
    }

    #[test]
    fn replication_fires_once_per_period(period in 1u32..=10, k in 1u64..=5) {
        let p = Process::rep(period, Process::tell(Constraint::eq_const("a", 1)));
        let trace = engine().run(p, k * period as u64 + 1, &BTreeMap::new()).unwrap();
        let active = trace.records.iter().filter(|r| !r.told.is_empty()).count() as u64;
        prop_assert_eq!(active, k + 1);
    }
}
