//! The FD[max] constraint system.
//!
//! Constraints are the `∃`/`∧` fragment over atoms `t rel t'` where a term
//! is a constant, a variable, or a variable plus a constant offset. Values
//! range over `0..max`; a term whose value falls outside that range makes
//! the atom it appears in false for that valuation.
//!
//! [`Store`] carries a canonical conjunction together with its consistency
//! flag, and answers entailment queries through the configured decision
//! procedure. [`oracle`] holds the exhaustive-enumeration reference.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod oracle;
mod solver;
mod store;

pub use solver::Procedure;
pub use store::{Domain, Registry, SolverConfig, Store, DEFAULT_MAX};

/// Errors raised by the constraint layer.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} is outside the domain 0..{max}")]
    ValueOutOfDomain { value: i64, max: i64 },
    #[error("search space too large: {what} exceeds budget {budget}")]
    DomainTooLarge { what: String, budget: u64 },
    #[error("invalid domain bound {0}: max must be at least 2")]
    InvalidDomain(i64),
    #[error("{0}")]
    Parse(String),
}

/// A term of the signature: `5`, `x`, or `x + 5`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Const(i64),
    Var(String),
    Add(String, i64),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    /// `name + offset`, collapsing a zero offset to a plain variable.
    pub fn offset(name: impl Into<String>, offset: i64) -> Term {
        if offset == 0 {
            Term::Var(name.into())
        } else {
            Term::Add(name.into(), offset)
        }
    }

    pub fn variable(&self) -> Option<&str> {
        match self {
            Term::Const(_) => None,
            Term::Var(v) | Term::Add(v, _) => Some(v),
        }
    }

    /// Offset added to the variable (or the value, for a constant).
    pub fn shift(&self) -> i64 {
        match self {
            Term::Const(c) => *c,
            Term::Var(_) => 0,
            Term::Add(_, k) => *k,
        }
    }

    fn mentions(&self, x: &str) -> bool {
        self.variable() == Some(x)
    }

    fn substitute(&self, x: &str, by: &Term) -> Term {
        match self {
            Term::Var(v) if v == x => by.clone(),
            Term::Add(v, k) if v == x => match by {
                Term::Const(c) => Term::Const(c + k),
                Term::Var(y) => Term::offset(y.clone(), *k),
                Term::Add(y, j) => Term::offset(y.clone(), j + k),
            },
            other => other.clone(),
        }
    }

    fn rename(&self, f: &mut impl FnMut(&str) -> Option<String>) -> Term {
        match self {
            Term::Const(c) => Term::Const(*c),
            Term::Var(v) => Term::Var(f(v).unwrap_or_else(|| v.clone())),
            Term::Add(v, k) => Term::Add(f(v).unwrap_or_else(|| v.clone()), *k),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Add(v, k) if *k < 0 => write!(f, "{v} - {}", -k),
            Term::Add(v, k) => write!(f, "{v} + {k}"),
        }
    }
}

/// The relation symbols `=, ≠, <, ≤, >, ≥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    pub const ALL: [Rel; 6] = [Rel::Eq, Rel::Ne, Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }

    /// The complementary relation: `a rel b` is false iff `a rel.negate() b`.
    pub fn negate(self) -> Rel {
        match self {
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
        }
    }

    /// The relation with its operands swapped: `a rel b` iff `b rel.flip() a`.
    pub fn flip(self) -> Rel {
        match self {
            Rel::Eq => Rel::Eq,
            Rel::Ne => Rel::Ne,
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Gt => Rel::Lt,
            Rel::Ge => Rel::Le,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Rel::Eq => a == b,
            Rel::Ne => a != b,
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Gt => a > b,
            Rel::Ge => a >= b,
        }
    }
}

/// `lhs rel rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub lhs: Term,
    pub rel: Rel,
    pub rhs: Term,
}

impl Atom {
    pub fn new(lhs: Term, rel: Rel, rhs: Term) -> Atom {
        Atom { lhs, rel, rhs }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.lhs.variable().into_iter().chain(self.rhs.variable())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.rel.symbol(), self.rhs)
    }
}

/// A constraint of the `{true, false, atom, ∧, ∃}` fragment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    True,
    False,
    Atom(Atom),
    Conj(Vec<Constraint>),
    Exists(String, Box<Constraint>),
}

impl Constraint {
    pub fn atom(lhs: Term, rel: Rel, rhs: Term) -> Constraint {
        Constraint::Atom(Atom::new(lhs, rel, rhs))
    }

    /// `x = value`
    pub fn eq_const(x: impl Into<String>, value: i64) -> Constraint {
        Constraint::atom(Term::var(x), Rel::Eq, Term::Const(value))
    }

    /// Canonical conjunction of `items`.
    pub fn and_all(items: impl IntoIterator<Item = Constraint>) -> Constraint {
        Constraint::Conj(items.into_iter().collect()).canonical()
    }

    pub fn and(&self, other: &Constraint) -> Constraint {
        Constraint::and_all([self.clone(), other.clone()])
    }

    pub fn exists(x: impl Into<String>, body: Constraint) -> Constraint {
        Constraint::Exists(x.into(), Box::new(body.canonical()))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Constraint::True)
    }

    /// Canonical form: conjunctions flattened, `true` conjuncts dropped,
    /// conjuncts sorted by printed text and deduplicated. A conjunction
    /// containing `false` collapses to `false`, as does any atom holding a
    /// negative constant (never a domain value).
    pub fn canonical(&self) -> Constraint {
        match self {
            Constraint::True | Constraint::False => self.clone(),
            Constraint::Atom(a) => {
                let negative = |t: &Term| matches!(t, Term::Const(c) if *c < 0);
                if negative(&a.lhs) || negative(&a.rhs) {
                    Constraint::False
                } else {
                    self.clone()
                }
            }
            Constraint::Exists(x, body) => Constraint::Exists(x.clone(), Box::new(body.canonical())),
            Constraint::Conj(items) => {
                let mut flat = Vec::new();
                for item in items {
                    match item.canonical() {
                        Constraint::True => {}
                        Constraint::False => return Constraint::False,
                        Constraint::Conj(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                let mut keyed: Vec<(String, Constraint)> =
                    flat.into_iter().map(|c| (c.to_string(), c)).collect();
                keyed.sort_by(|a, b| a.0.cmp(&b.0));
                keyed.dedup_by(|a, b| a.0 == b.0);
                match keyed.len() {
                    0 => Constraint::True,
                    1 => keyed.pop().map(|(_, c)| c).unwrap_or(Constraint::True),
                    _ => Constraint::Conj(keyed.into_iter().map(|(_, c)| c).collect()),
                }
            }
        }
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct;
    /// `true` has none).
    pub fn conjuncts(&self) -> Vec<&Constraint> {
        match self {
            Constraint::True => Vec::new(),
            Constraint::Conj(items) => items.iter().collect(),
            other => vec![other],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Atom(a) => {
                for v in a.vars() {
                    if !bound.iter().any(|b| b == v) {
                        out.insert(v.to_string());
                    }
                }
            }
            Constraint::Conj(items) => items.iter().for_each(|c| c.collect_free(bound, out)),
            Constraint::Exists(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// All constants appearing in the constraint.
    pub fn constants(&self) -> Vec<i64> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| {
            for t in [&a.lhs, &a.rhs] {
                if let Term::Const(c) = t {
                    out.push(*c);
                }
            }
        });
        out
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(&Atom)) {
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Atom(a) => f(a),
            Constraint::Conj(items) => items.iter().for_each(|c| c.visit_atoms(f)),
            Constraint::Exists(_, body) => body.visit_atoms(f),
        }
    }

    /// Replaces free occurrences of `x` by `by`. Returns `None` when the
    /// replacement would be captured by an inner `∃`.
    pub fn substitute(&self, x: &str, by: &Term) -> Option<Constraint> {
        Some(match self {
            Constraint::True | Constraint::False => self.clone(),
            Constraint::Atom(a) => Constraint::Atom(Atom::new(
                a.lhs.substitute(x, by),
                a.rel,
                a.rhs.substitute(x, by),
            )),
            Constraint::Conj(items) => Constraint::Conj(
                items
                    .iter()
                    .map(|c| c.substitute(x, by))
                    .collect::<Option<Vec<_>>>()?,
            ),
            Constraint::Exists(y, _) if y == x => self.clone(),
            Constraint::Exists(y, body) => {
                if by.variable() == Some(y.as_str()) && body.free_vars().contains(x) {
                    return None;
                }
                Constraint::Exists(y.clone(), Box::new(body.substitute(x, by)?))
            }
        })
    }

    /// Renames free variables through `f` (returning `None` keeps a name).
    pub fn rename_free(&self, f: &mut impl FnMut(&str) -> Option<String>) -> Constraint {
        self.rename_inner(&mut Vec::new(), f)
    }

    fn rename_inner(
        &self,
        bound: &mut Vec<String>,
        f: &mut impl FnMut(&str) -> Option<String>,
    ) -> Constraint {
        match self {
            Constraint::True | Constraint::False => self.clone(),
            Constraint::Atom(a) => {
                let mut g = |v: &str| {
                    if bound.iter().any(|b| b == v) {
                        None
                    } else {
                        f(v)
                    }
                };
                Constraint::Atom(Atom::new(a.lhs.rename(&mut g), a.rel, a.rhs.rename(&mut g)))
            }
            Constraint::Conj(items) => {
                Constraint::Conj(items.iter().map(|c| c.rename_inner(bound, f)).collect())
            }
            Constraint::Exists(x, body) => {
                bound.push(x.clone());
                let body = body.rename_inner(bound, f);
                bound.pop();
                Constraint::Exists(x.clone(), Box::new(body))
            }
        }
    }
}

/// Existential hiding `∃x. c`.
///
/// When `x` is not free the constraint is returned unchanged. When a
/// top-level conjunct defines `x` by an equality `x = t` (with `x` not in
/// `t`) the variable is eliminated by substitution, keeping the requirement
/// that `t` be a domain value; otherwise the quantifier is kept.
pub fn hide(x: &str, c: &Constraint) -> Constraint {
    let c = c.canonical();
    if !c.free_vars().contains(x) {
        return c;
    }
    let conjuncts = c.conjuncts();
    for (i, item) in conjuncts.iter().enumerate() {
        let Constraint::Atom(a) = item else { continue };
        if a.rel != Rel::Eq {
            continue;
        }
        let definition = if a.lhs == Term::Var(x.to_string()) && !a.rhs.mentions(x) {
            &a.rhs
        } else if a.rhs == Term::Var(x.to_string()) && !a.lhs.mentions(x) {
            &a.lhs
        } else {
            continue;
        };
        let rest: Option<Vec<Constraint>> = conjuncts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, other)| other.substitute(x, definition))
            .collect();
        let Some(mut rest) = rest else { continue };
        rest.push(match definition {
            Term::Const(k) if *k < 0 => Constraint::False,
            Term::Const(_) | Term::Var(_) => Constraint::True,
            Term::Add(y, k) => {
                Constraint::atom(Term::Add(y.clone(), *k), Rel::Ge, Term::Const(0))
            }
        });
        return Constraint::and_all(rest);
    }
    Constraint::Exists(x.to_string(), Box::new(c))
}

/// Hides every variable of `xs`, in order.
pub fn hide_all<'a>(xs: impl IntoIterator<Item = &'a str>, c: &Constraint) -> Constraint {
    xs.into_iter().fold(c.canonical(), |acc, x| hide(x, &acc))
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::True => f.write_str("true"),
            Constraint::False => f.write_str("false"),
            Constraint::Atom(a) => write!(f, "{a}"),
            Constraint::Conj(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    write!(f, "{item}")?;
                }
                Ok(())
            }
            Constraint::Exists(x, body) => write!(f, "exists {x}. ({body})"),
        }
    }
}

impl FromStr for Constraint {
    type Err = crate::dsl::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::dsl::parse_constraint(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Constraint {
        s.parse().unwrap()
    }

    #[test]
    fn canonical_sorts_and_dedups() {
        let got = Constraint::and_all([c("y = 2"), c("x = 1 & true"), c("y = 2")]);
        assert_eq!(got.to_string(), "x = 1 & y = 2");
        assert_eq!(Constraint::and_all([c("x = 1"), Constraint::False]), Constraint::False);
        assert_eq!(Constraint::and_all([]), Constraint::True);
    }

    #[test]
    fn printing_matches_textual_syntax() {
        assert_eq!(c("x=y+1").to_string(), "x = y + 1");
        assert_eq!(c("x != y").to_string(), "x != y");
        assert_eq!(c("exists x. (x = 3 & y = x)").to_string(), "exists x. (x = 3 & y = x)");
        assert_eq!(Constraint::atom(Term::var("a"), Rel::Le, Term::offset("b", -2)).to_string(), "a <= b - 2");
    }

    #[test]
    fn hide_eliminates_defined_variable() {
        assert_eq!(hide("x", &c("x = 3 & y = x")), c("y = 3"));
        assert_eq!(hide("x", &c("y = 2")), c("y = 2"));
        assert_eq!(hide("x", &c("x = 1")), Constraint::True);
        assert_eq!(hide("x", &c("x = y + 2 & z < x")).to_string(), "y + 2 >= 0 & z < y + 2");
        assert_eq!(hide("x", &c("x < y")).to_string(), "exists x. (x < y)");
    }

    #[test]
    fn substitution_refuses_capture() {
        let e = c("exists y. (y < x)");
        assert!(e.substitute("x", &Term::var("y")).is_none());
        assert_eq!(e.substitute("x", &Term::Const(4)).unwrap().to_string(), "exists y. (y < 4)");
    }

    #[test]
    fn free_vars_respect_binders() {
        let e = c("exists x. (x = y) & x > 1");
        assert_eq!(e.free_vars().into_iter().collect::<Vec<_>>(), vec!["x", "y"]);
    }
}
