use std::collections::{BTreeMap, BTreeSet};

use crate::constraint::{Constraint, Term};

/// Variables carried across time units as streams of versions.
///
/// A stream variable `x` is stored as `x#0, x#1, …`. Reading `x` means
/// reading its latest bound version (`x#0` before any binding);
/// `tell(x = e)` binds the next unbound version. An initial value binds
/// `x#0`. Only the latest version and its value (when determined) survive
/// a time unit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersistentVarPolicy {
    vars: BTreeSet<String>,
    versions: BTreeMap<String, u32>,
    values: BTreeMap<String, i64>,
}

impl PersistentVarPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: impl Into<String>, init: Option<i64>) {
        let name = name.into();
        if let Some(v) = init {
            self.values.insert(name.clone(), v);
            self.versions.insert(name.clone(), 0);
        }
        self.vars.insert(name);
    }

    pub fn with(mut self, name: impl Into<String>, init: Option<i64>) -> Self {
        self.declare(name, init);
        self
    }

    pub fn is_stream(&self, name: &str) -> bool {
        self.vars.contains(name)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(String::as_str)
    }

    /// Latest bound version, if any.
    pub fn version(&self, name: &str) -> Option<u32> {
        self.versions.get(name).copied()
    }

    /// Value of the latest version, when known.
    pub fn value(&self, name: &str) -> Option<i64> {
        self.values.get(name).copied()
    }

    pub fn versioned(name: &str, version: u32) -> String {
        format!("{name}#{version}")
    }

    /// Name of the latest version of `name`.
    pub fn current(&self, name: &str) -> String {
        Self::versioned(name, self.version(name).unwrap_or(0))
    }

    /// Allocates the next version and returns its number.
    pub(crate) fn bump(&mut self, name: &str) -> u32 {
        let v = self.version(name).map_or(0, |v| v + 1);
        self.versions.insert(name.to_string(), v);
        self.values.remove(name);
        v
    }

    pub(crate) fn record(&mut self, name: &str, version: u32, value: i64) {
        if self.version(name) == Some(version) {
            self.values.insert(name.to_string(), value);
        }
    }

    /// Bindings `x#n = v` of the latest known values.
    pub fn seed(&self) -> Constraint {
        Constraint::and_all(
            self.values
                .iter()
                .map(|(x, v)| Constraint::eq_const(self.current(x), *v)),
        )
    }

    /// Replaces every free stream variable by its latest version.
    pub fn resolve(&self, c: &Constraint) -> Constraint {
        c.rename_free(&mut |v| self.is_stream(v).then(|| self.current(v))).canonical()
    }

    pub fn resolve_term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) if self.is_stream(v) => Term::Var(self.current(v)),
            Term::Add(v, k) if self.is_stream(v) => Term::Add(self.current(v), *k),
            other => other.clone(),
        }
    }
}
