//! Reference semantics by exhaustive valuation enumeration.
//!
//! Nothing here shares code with the decision procedures of
//! [`Store`](super::Store): constraints are evaluated directly on
//! valuations, and `∃` is evaluated by trying every domain value. The only
//! pruning is the obvious one: a conjunct already false under a partial
//! valuation stays false, and an equation fixing the next variable in terms
//! of assigned ones leaves a single value to try. Use it to cross-check the
//! solver.

use std::collections::{BTreeMap, BTreeSet};

use super::{Constraint, ConstraintError, Rel, Store, Term};

/// Largest number of search nodes the oracle will visit by default (`64^4`).
pub const DEFAULT_ORACLE_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone)]
enum Val {
    Const(i64),
    Slot(usize, i64),
}

#[derive(Debug, Clone)]
enum Expr {
    True,
    False,
    Atom(Val, Rel, Val),
    And(Vec<Expr>),
    Exists(usize, Box<Expr>),
}

struct Compiler<'a> {
    free: &'a BTreeMap<String, usize>,
    scopes: Vec<(String, usize)>,
    next_slot: usize,
}

impl Compiler<'_> {
    fn slot_of(&self, name: &str) -> usize {
        self.scopes
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
            .unwrap_or_else(|| self.free[name])
    }

    fn term(&self, t: &Term) -> Val {
        match t {
            Term::Const(c) => Val::Const(*c),
            Term::Var(v) => Val::Slot(self.slot_of(v), 0),
            Term::Add(v, k) => Val::Slot(self.slot_of(v), *k),
        }
    }

    fn compile(&mut self, c: &Constraint) -> Expr {
        match c {
            Constraint::True => Expr::True,
            Constraint::False => Expr::False,
            Constraint::Atom(a) => Expr::Atom(self.term(&a.lhs), a.rel, self.term(&a.rhs)),
            Constraint::Conj(items) => Expr::And(items.iter().map(|i| self.compile(i)).collect()),
            Constraint::Exists(x, body) => {
                let slot = self.next_slot;
                self.next_slot += 1;
                self.scopes.push((x.clone(), slot));
                let body = self.compile(body);
                self.scopes.pop();
                Expr::Exists(slot, Box::new(body))
            }
        }
    }
}

fn value(v: &Val, vals: &[i64]) -> i64 {
    match v {
        Val::Const(c) => *c,
        Val::Slot(i, k) => vals[*i] + k,
    }
}

fn eval(e: &Expr, vals: &mut Vec<i64>, max: i64) -> bool {
    match e {
        Expr::True => true,
        Expr::False => false,
        Expr::Atom(l, rel, r) => {
            let (a, b) = (value(l, vals), value(r, vals));
            (0..max).contains(&a) && (0..max).contains(&b) && rel.holds(a, b)
        }
        Expr::And(items) => items.iter().all(|i| eval(i, vals, max)),
        Expr::Exists(slot, body) => (0..max).any(|v| {
            vals[*slot] = v;
            eval(body, vals, max)
        }),
    }
}

/// Truth of `c` under a valuation of its free variables.
pub fn holds(c: &Constraint, valuation: &BTreeMap<String, i64>, max: i64) -> bool {
    let free: BTreeMap<String, usize> = valuation.keys().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let mut compiler = Compiler { free: &free, scopes: Vec::new(), next_slot: free.len() };
    let expr = compiler.compile(c);
    let mut vals: Vec<i64> = valuation.values().copied().collect();
    vals.resize(compiler.next_slot, 0);
    eval(&expr, &mut vals, max)
}

struct Enumeration {
    max: i64,
    vals: Vec<i64>,
    n_free: usize,
    /// Store conjuncts grouped by the depth at which they become ground.
    ready: Vec<Vec<Expr>>,
    goal: Option<(usize, Expr)>,
    visited: u64,
    budget: u64,
}

impl Enumeration {
    fn new(
        store: &Constraint,
        goal: Option<&Constraint>,
        max: i64,
        budget: u64,
    ) -> Result<Enumeration, ConstraintError> {
        let goal_vars: BTreeSet<String> = goal.map(Constraint::free_vars).unwrap_or_default();
        let mut order: Vec<String> = goal_vars.iter().cloned().collect();
        order.extend(store.free_vars().into_iter().filter(|v| !goal_vars.contains(v)));
        let n = order.len();
        let free: BTreeMap<String, usize> = order.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let mut compiler = Compiler { free: &free, scopes: Vec::new(), next_slot: n };
        let mut ready = vec![Vec::new(); n + 1];
        for conjunct in store.conjuncts() {
            let depth = conjunct.free_vars().iter().map(|v| free[v] + 1).max().unwrap_or(0);
            ready[depth].push(compiler.compile(conjunct));
        }
        let goal = goal.map(|g| (goal_vars.len(), compiler.compile(g)));
        Ok(Enumeration { max, vals: vec![0; compiler.next_slot], n_free: n, ready, goal, visited: 0, budget })
    }

    fn ready_ok(&mut self, depth: usize) -> bool {
        let Enumeration { ready, vals, max, .. } = self;
        ready[depth].iter().all(|e| eval(e, vals, *max))
    }

    /// The value an equation among the conjuncts that become ground at
    /// `depth + 1` forces on variable `depth`.
    fn pinned(&self, depth: usize) -> Option<i64> {
        let known = |v: &Val| match v {
            Val::Const(c) => Some(*c),
            Val::Slot(i, k) if *i < depth => Some(self.vals[*i] + k),
            Val::Slot(..) => None,
        };
        self.ready[depth + 1].iter().find_map(|e| match e {
            Expr::Atom(Val::Slot(i, k), Rel::Eq, other) | Expr::Atom(other, Rel::Eq, Val::Slot(i, k)) if *i == depth => {
                known(other).map(|c| c - k)
            }
            _ => None,
        })
    }

    /// Whether some valuation satisfies the store (and, with a goal,
    /// falsifies it).
    fn find(&mut self, depth: usize) -> Result<bool, ConstraintError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(ConstraintError::DomainTooLarge {
                what: format!("search over {} variables in 0..{}", self.n_free, self.max),
                budget: self.budget,
            });
        }
        if !self.ready_ok(depth) {
            return Ok(false);
        }
        if let Some((k, goal)) = &self.goal {
            if *k == depth {
                let goal = goal.clone();
                if eval(&goal, &mut self.vals, self.max) {
                    return Ok(false);
                }
            }
        }
        if depth == self.n_free {
            return Ok(true);
        }
        let candidates = match self.pinned(depth) {
            Some(v) if (0..self.max).contains(&v) => v..v + 1,
            Some(_) => return Ok(false),
            None => 0..self.max,
        };
        for v in candidates {
            self.vals[depth] = v;
            if self.find(depth + 1)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Ground-truth satisfiability of `content`.
pub fn satisfiable_oracle(content: &Constraint, max: i64, budget: u64) -> Result<bool, ConstraintError> {
    Enumeration::new(content, None, max, budget)?.find(0)
}

/// Ground-truth `content ⊢ c`.
pub fn entails_oracle_with(
    content: &Constraint,
    c: &Constraint,
    max: i64,
    budget: u64,
) -> Result<bool, ConstraintError> {
    Ok(!Enumeration::new(content, Some(c), max, budget)?.find(0)?)
}

/// Ground-truth `s ⊢ c` over the store's domain.
pub fn entails_oracle(s: &Store, c: &Constraint) -> Result<bool, ConstraintError> {
    entails_oracle_with(s.content(), c, s.domain().max(), DEFAULT_ORACLE_BUDGET)
}

/// The conjuncts of `content` connected to `c` through shared variables.
pub fn relevant_slice(content: &Constraint, c: &Constraint) -> Constraint {
    let conjuncts: Vec<(&Constraint, BTreeSet<String>)> =
        content.conjuncts().into_iter().map(|k| (k, k.free_vars())).collect();
    let mut reached = c.free_vars();
    let mut taken = vec![false; conjuncts.len()];
    loop {
        let mut grew = false;
        for (i, (k, vars)) in conjuncts.iter().enumerate() {
            let ground_false = vars.is_empty() && matches!(k, Constraint::False);
            if !taken[i] && (ground_false || vars.iter().any(|v| reached.contains(v))) {
                taken[i] = true;
                reached.extend(vars.iter().cloned());
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    Constraint::and_all(conjuncts.iter().zip(taken).filter(|(_, t)| *t).map(|((k, _), _)| (*k).clone()))
}

/// `content ⊢ c` by enumerating only the part of `content` connected to
/// `c`. Exact provided the remainder of `content` is satisfiable.
pub fn entails_oracle_sliced(
    content: &Constraint,
    c: &Constraint,
    max: i64,
    budget: u64,
) -> Result<bool, ConstraintError> {
    entails_oracle_with(&relevant_slice(content, c), c, max, budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Constraint {
        s.parse().unwrap()
    }

    fn ent(s: &str, g: &str, max: i64) -> bool {
        entails_oracle_with(&c(s), &c(g), max, DEFAULT_ORACLE_BUDGET).unwrap()
    }

    #[test]
    fn oracle_examples() {
        assert!(ent("x = 5", "x > 3", 64));
        assert!(!ent("true", "x > 3", 64));
        assert!(ent("x > 2 & x < 4", "x = 3", 64));
        assert!(ent("wpId1 > 0 & sw11 = wpId1", "sw11 > 0", 64));
        assert!(ent("x = 1 & x = 2", "y = 3", 64));
        assert!(!satisfiable_oracle(&c("x < 0"), 64, DEFAULT_ORACLE_BUDGET).unwrap());
    }

    #[test]
    fn hide_agrees_with_quantifier() {
        let plain = c("y = 3");
        let hidden = super::super::hide("x", &c("x = 3 & y = x"));
        let quantified = c("exists x. (x = 3 & y = x)");
        for g in [&hidden, &quantified] {
            assert!(ent(&plain.to_string(), &g.to_string(), 16));
            assert!(entails_oracle_with(g, &plain, 16, DEFAULT_ORACLE_BUDGET).unwrap());
        }
    }

    #[test]
    fn budget_is_enforced() {
        let err = entails_oracle_with(&c("a < b & b < c & c < a"), &c("a < 9"), 64, 1000);
        assert!(matches!(err, Err(ConstraintError::DomainTooLarge { .. })));
    }

    #[test]
    fn slice_keeps_connected_conjuncts() {
        let s = relevant_slice(&c("a = 1 & b = a & c = 4 & d < c"), &c("b > 0"));
        assert_eq!(s, c("a = 1 & b = a"));
    }

    #[test]
    fn holds_evaluates_exists() {
        let v: BTreeMap<String, i64> = [("y".to_string(), 3)].into_iter().collect();
        assert!(holds(&c("exists x. (x = y + 1)"), &v, 5));
        assert!(!holds(&c("exists x. (x = y + 2)"), &v, 5));
    }
}
