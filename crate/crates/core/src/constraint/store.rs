use std::collections::BTreeSet;
use std::sync::Arc;

use super::solver::{self, Procedure};
use super::{Constraint, ConstraintError};

pub const DEFAULT_MAX: i64 = 65536;

/// The value range `0..max` shared by every variable of a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    max: i64,
}

impl Domain {
    pub fn new(max: i64) -> Result<Domain, ConstraintError> {
        if max < 2 {
            return Err(ConstraintError::InvalidDomain(max));
        }
        Ok(Domain { max })
    }

    pub fn max(&self) -> i64 {
        self.max
    }

    /// Rejects constants outside `0..max`.
    pub fn check(&self, c: &Constraint) -> Result<(), ConstraintError> {
        match c.constants().into_iter().find(|v| *v < 0 || *v >= self.max) {
            Some(value) => Err(ConstraintError::ValueOutOfDomain { value, max: self.max }),
            None => Ok(()),
        }
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain { max: DEFAULT_MAX }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub procedure: Procedure,
    /// Node budget of the exact search.
    pub budget: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { procedure: Procedure::Enumerate, budget: 1_000_000 }
    }
}

/// Variables a store accepts.
///
/// Besides declared names, a registry accepts the stream versions `x#k` of
/// its persistent variables and engine-generated local names `x~k`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    declared: BTreeSet<String>,
    persistent: BTreeSet<String>,
    permissive: bool,
}

impl Registry {
    /// Accepts every variable name.
    pub fn permissive() -> Registry {
        Registry { permissive: true, ..Registry::default() }
    }

    pub fn declare(&mut self, name: impl Into<String>, persistent: bool) {
        let name = name.into();
        if persistent {
            self.persistent.insert(name.clone());
        }
        self.declared.insert(name);
    }

    pub fn is_persistent(&self, name: &str) -> bool {
        self.persistent.contains(name)
    }

    pub fn persistent(&self) -> impl Iterator<Item = &str> {
        self.persistent.iter().map(String::as_str)
    }

    pub fn declared(&self) -> impl Iterator<Item = &str> {
        self.declared.iter().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        if self.permissive || self.declared.contains(name) {
            return true;
        }
        if name.contains('~') {
            return true;
        }
        match name.split_once('#') {
            Some((base, version)) => {
                self.persistent.contains(base) && !version.is_empty() && version.bytes().all(|b| b.is_ascii_digit())
            }
            None => false,
        }
    }

    pub fn check(&self, c: &Constraint) -> Result<(), ConstraintError> {
        match c.free_vars().into_iter().find(|v| !self.contains(v)) {
            Some(v) => Err(ConstraintError::UnknownVariable(v)),
            None => Ok(()),
        }
    }
}

/// A canonical conjunction plus its consistency flag.
///
/// Stores are immutable; [`Store::conjoin`] returns a new store.
#[derive(Debug, Clone)]
pub struct Store {
    domain: Domain,
    solver: SolverConfig,
    registry: Arc<Registry>,
    content: Constraint,
    consistent: bool,
}

impl Store {
    /// The empty store `true` over `domain`, accepting any variable.
    pub fn new(domain: Domain) -> Store {
        Store::with_config(domain, SolverConfig::default(), Arc::new(Registry::permissive()))
    }

    pub fn with_config(domain: Domain, solver: SolverConfig, registry: Arc<Registry>) -> Store {
        Store { domain, solver, registry, content: Constraint::True, consistent: true }
    }

    /// Store with the given content, consistency recomputed.
    pub fn from_constraint(domain: Domain, c: &Constraint) -> Result<Store, ConstraintError> {
        Store::new(domain).conjoin(c)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn solver(&self) -> SolverConfig {
        self.solver
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn content(&self) -> &Constraint {
        &self.content
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    /// The empty store with the same configuration.
    pub fn cleared(&self) -> Store {
        Store { content: Constraint::True, consistent: true, ..self.clone() }
    }

    /// `s ∧ c`.
    pub fn conjoin(&self, c: &Constraint) -> Result<Store, ConstraintError> {
        self.registry.check(c)?;
        self.domain.check(c)?;
        let content = self.content.and(c);
        let consistent = self.consistent && self.satisfiable_content(&content)?;
        Ok(Store { content, consistent, ..self.clone() })
    }

    /// `s ⊢ c`. An inconsistent store entails everything.
    pub fn entails(&self, c: &Constraint) -> Result<bool, ConstraintError> {
        if !self.consistent {
            return Ok(true);
        }
        solver::entails_consistent(
            &self.content,
            c,
            self.solver.procedure,
            self.domain.max(),
            self.solver.budget,
        )
    }

    /// Recomputes satisfiability of the content.
    pub fn satisfiable(&self) -> Result<bool, ConstraintError> {
        self.satisfiable_content(&self.content)
    }

    fn satisfiable_content(&self, c: &Constraint) -> Result<bool, ConstraintError> {
        solver::satisfiable(c, self.solver.procedure, self.domain.max(), self.solver.budget)
    }

    /// The value the store forces on `var`, if any.
    pub fn value_of(&self, var: &str) -> Result<Option<i64>, ConstraintError> {
        if !self.consistent {
            return Ok(None);
        }
        solver::determined_value(&self.content, var, self.domain.max(), self.solver.budget)
    }
}
