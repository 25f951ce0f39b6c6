use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::constraint::{Constraint, Term};

/// Process terms.
///
/// [`Process::Scope`] only arises at run time, when a `local` block has been
/// opened and its variables renamed apart; the parser never produces it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Process {
    Null,
    Tell(Constraint),
    Ask(Constraint, Box<Process>),
    Par(Vec<Process>),
    Local { vars: Vec<String>, init: Constraint, body: Box<Process> },
    Next(u32, Box<Process>),
    Rep(u32, Box<Process>),
    Call(String, Vec<i64>),
    Scope(Box<Scope>),
}

/// An opened `local` block: renamed variables and the private store they
/// have accumulated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    pub vars: Vec<String>,
    pub store: Constraint,
    pub body: Process,
    /// Set when the private store must be re-told before the body runs
    /// (at the first round of a new time unit).
    pub needs_seed: bool,
}

impl Process {
    pub fn tell(c: Constraint) -> Process {
        Process::Tell(c.canonical())
    }

    pub fn ask(guard: Constraint, body: Process) -> Process {
        Process::Ask(guard.canonical(), Box::new(body))
    }

    /// Parallel composition, flattening nested compositions. A single
    /// component is returned as is; an empty one is `0`.
    pub fn par(items: impl IntoIterator<Item = Process>) -> Process {
        let mut flat = Vec::new();
        for item in items {
            match item {
                Process::Par(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Process::Null,
            1 => flat.pop().unwrap_or(Process::Null),
            _ => Process::Par(flat),
        }
    }

    pub fn local(vars: Vec<String>, init: Constraint, body: Process) -> Process {
        Process::Local { vars, init: init.canonical(), body: Box::new(body) }
    }

    /// `next^k body`; `next^0 P` is `P` and nested delays are merged.
    pub fn next(k: u32, body: Process) -> Process {
        match (k, body) {
            (0, body) => body,
            (k, Process::Next(j, inner)) => Process::Next(k + j, inner),
            (k, body) => Process::Next(k, Box::new(body)),
        }
    }

    pub fn rep(period: u32, body: Process) -> Process {
        Process::Rep(period, Box::new(body))
    }

    pub fn call(name: impl Into<String>, args: Vec<i64>) -> Process {
        Process::Call(name.into(), args)
    }

    pub fn is_null(&self) -> bool {
        match self {
            Process::Null => true,
            Process::Par(items) => items.iter().all(Process::is_null),
            _ => false,
        }
    }

    /// Replaces free occurrences of the variables in `map`. Binders
    /// (`local`, `∃`) shadow as expected.
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Process {
        if map.is_empty() {
            return self.clone();
        }
        let on = |c: &Constraint| substitute_constraint(c, map);
        match self {
            Process::Null | Process::Call(..) => self.clone(),
            Process::Tell(c) => Process::Tell(on(c)),
            Process::Ask(c, body) => Process::Ask(on(c), Box::new(body.substitute(map))),
            Process::Par(items) => Process::Par(items.iter().map(|p| p.substitute(map)).collect()),
            Process::Local { vars, init, body } => {
                let inner = without(map, vars);
                Process::Local {
                    vars: vars.clone(),
                    init: substitute_constraint(init, &inner),
                    body: Box::new(body.substitute(&inner)),
                }
            }
            Process::Next(k, body) => Process::Next(*k, Box::new(body.substitute(map))),
            Process::Rep(t, body) => Process::Rep(*t, Box::new(body.substitute(map))),
            Process::Scope(scope) => {
                let inner = without(map, &scope.vars);
                Process::Scope(Box::new(Scope {
                    vars: scope.vars.clone(),
                    store: substitute_constraint(&scope.store, &inner),
                    body: scope.body.substitute(&inner),
                    needs_seed: scope.needs_seed,
                }))
            }
        }
    }

    /// Variables occurring free (outside the `local` blocks binding them).
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        let mut bound_in = |vars: &[String], parts: &[&Constraint], body: &Process| {
            let mut inner = body.free_vars();
            for c in parts {
                inner.extend(c.free_vars());
            }
            out.extend(inner.into_iter().filter(|v| !vars.contains(v)));
        };
        match self {
            Process::Null | Process::Call(..) => {}
            Process::Tell(c) => out.extend(c.free_vars()),
            Process::Ask(c, body) => {
                out.extend(c.free_vars());
                body.collect_free(out);
            }
            Process::Par(items) => items.iter().for_each(|p| p.collect_free(out)),
            Process::Next(_, body) | Process::Rep(_, body) => body.collect_free(out),
            Process::Local { vars, init, body } => bound_in(vars, &[init], body),
            Process::Scope(scope) => bound_in(&scope.vars, &[&scope.store], &scope.body),
        }
    }

    /// Names of procedures called without an intervening `next`.
    pub fn unguarded_calls(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_unguarded(&mut out);
        out
    }

    fn collect_unguarded(&self, out: &mut BTreeSet<String>) {
        match self {
            Process::Null | Process::Tell(_) | Process::Next(..) => {}
            Process::Ask(_, body) | Process::Rep(_, body) => body.collect_unguarded(out),
            Process::Local { body, .. } => body.collect_unguarded(out),
            Process::Scope(scope) => scope.body.collect_unguarded(out),
            Process::Par(items) => items.iter().for_each(|p| p.collect_unguarded(out)),
            Process::Call(name, _) => {
                out.insert(name.clone());
            }
        }
    }

    /// Every procedure name called anywhere in the term.
    pub fn calls(&self) -> Vec<(&str, usize)> {
        let mut out = Vec::new();
        self.collect_calls(&mut out);
        out
    }

    fn collect_calls<'a>(&'a self, out: &mut Vec<(&'a str, usize)>) {
        match self {
            Process::Null | Process::Tell(_) => {}
            Process::Ask(_, body) | Process::Rep(_, body) | Process::Next(_, body) => body.collect_calls(out),
            Process::Local { body, .. } => body.collect_calls(out),
            Process::Scope(scope) => scope.body.collect_calls(out),
            Process::Par(items) => items.iter().for_each(|p| p.collect_calls(out)),
            Process::Call(name, args) => out.push((name, args.len())),
        }
    }
}

fn without(map: &BTreeMap<String, Term>, vars: &[String]) -> BTreeMap<String, Term> {
    map.iter().filter(|(k, _)| !vars.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn substitute_constraint(c: &Constraint, map: &BTreeMap<String, Term>) -> Constraint {
    let mut out = c.clone();
    for (x, by) in map {
        out = match out.substitute(x, by) {
            Some(next) => next,
            // Only a variable replacement can be captured; renaming the free
            // occurrences is what is meant in that case.
            None => match by {
                Term::Var(y) => out.rename_free(&mut |v| (v == x).then(|| y.clone())),
                _ => out,
            },
        };
    }
    out.canonical()
}

/// A procedure definition `def name(params) = body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<String>,
    pub body: Process,
}

impl Definition {
    /// The body with the parameters replaced by `args`.
    pub fn instantiate(&self, args: &[i64]) -> Process {
        let map = self.params.iter().cloned().zip(args.iter().map(|a| Term::Const(*a))).collect();
        self.body.substitute(&map)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DefinitionTable {
    defs: BTreeMap<String, Definition>,
}

impl DefinitionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a definition, returning the previous one with the same name.
    pub fn insert(&mut self, def: Definition) -> Option<Definition> {
        self.defs.insert(def.name.clone(), def)
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.defs.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Definition> {
        self.defs.values()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// A cycle of procedures calling each other without an intervening
    /// `next`, if there is one.
    pub fn unguarded_cycle(&self) -> Option<Vec<String>> {
        let graph: BTreeMap<&str, BTreeSet<String>> =
            self.defs.values().map(|d| (d.name.as_str(), d.body.unguarded_calls())).collect();
        // 0 unvisited, 1 on stack, 2 done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        let mut stack: Vec<&str> = Vec::new();

        fn visit<'a>(
            node: &'a str,
            graph: &'a BTreeMap<&'a str, BTreeSet<String>>,
            state: &mut BTreeMap<&'a str, u8>,
            stack: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            state.insert(node, 1);
            stack.push(node);
            for succ in graph.get(node).into_iter().flatten() {
                let Some((succ, _)) = graph.get_key_value(succ.as_str()) else { continue };
                match state.get(succ).copied().unwrap_or(0) {
                    1 => {
                        let start = stack.iter().position(|n| n == succ).unwrap_or(0);
                        let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                        cycle.push(succ.to_string());
                        return Some(cycle);
                    }
                    0 => {
                        if let Some(c) = visit(succ, graph, state, stack) {
                            return Some(c);
                        }
                    }
                    _ => {}
                }
            }
            stack.pop();
            state.insert(node, 2);
            None
        }

        for name in graph.keys() {
            if state.get(name).copied().unwrap_or(0) == 0 {
                if let Some(c) = visit(name, &graph, &mut state, &mut stack) {
                    return Some(c);
                }
            }
        }
        None
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::pretty(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Constraint {
        s.parse().unwrap()
    }

    #[test]
    fn constructors_normalize() {
        let p = Process::next(2, Process::next(3, Process::Null));
        assert_eq!(p, Process::Next(5, Box::new(Process::Null)));
        assert_eq!(Process::next(0, Process::Null), Process::Null);
        let q = Process::par([Process::Null, Process::par([Process::tell(c("x = 1")), Process::Null])]);
        assert_eq!(q, Process::Par(vec![Process::Null, Process::tell(c("x = 1")), Process::Null]));
        assert_eq!(Process::par([]), Process::Null);
    }

    #[test]
    fn substitution_respects_local_binders() {
        let p = Process::par([
            Process::tell(c("x = a")),
            Process::local(vec!["a".into()], Constraint::True, Process::tell(c("a = 1"))),
        ]);
        let map = [("a".to_string(), Term::Const(7))].into_iter().collect();
        let got = p.substitute(&map);
        assert_eq!(
            got,
            Process::par([
                Process::tell(c("x = 7")),
                Process::local(vec!["a".into()], Constraint::True, Process::tell(c("a = 1"))),
            ])
        );
    }

    #[test]
    fn unguarded_cycles_are_found() {
        let mut table = DefinitionTable::new();
        table.insert(Definition { name: "A".into(), params: vec![], body: Process::call("B", vec![]) });
        table.insert(Definition {
            name: "B".into(),
            params: vec![],
            body: Process::ask(c("x = 1"), Process::call("A", vec![])),
        });
        assert_eq!(table.unguarded_cycle(), Some(vec!["A".into(), "B".into(), "A".into()]));

        let mut table = DefinitionTable::new();
        table.insert(Definition {
            name: "A".into(),
            params: vec![],
            body: Process::par([Process::tell(c("x = 1")), Process::next(1, Process::call("A", vec![]))]),
        });
        assert_eq!(table.unguarded_cycle(), None);
    }
}
