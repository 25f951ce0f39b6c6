//! Decision procedures behind [`Store`](super::Store).
//!
//! `Enumerate` is exact: interval propagation prunes the space, and the
//! remaining boxes are bisected until every literal is decided, so the
//! answer matches full valuation enumeration. `Bounds` stops after root
//! propagation; it never claims an entailment that does not hold but may
//! miss some.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{hide, Atom, Constraint, ConstraintError, Rel, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Procedure {
    #[default]
    Enumerate,
    Bounds,
}

impl std::str::FromStr for Procedure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "enumerate" => Ok(Procedure::Enumerate),
            "bounds" => Ok(Procedure::Bounds),
            other => Err(format!("unknown decision procedure `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LinTerm {
    var: Option<usize>,
    k: i64,
}

#[derive(Debug, Clone)]
struct Lit {
    lhs: LinTerm,
    rel: Rel,
    rhs: LinTerm,
    positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    True,
    False,
    Unknown,
}

type Interval = (i64, i64);

/// A conjunction of literals over indexed variables.
#[derive(Debug, Clone, Default)]
pub(crate) struct Problem {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    lits: Vec<Lit>,
    trivially_false: bool,
    fresh: usize,
}

impl Problem {
    pub(crate) fn from_constraint(c: &Constraint) -> Problem {
        let mut p = Problem::default();
        p.add(c);
        p
    }

    fn var(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    fn term(&mut self, t: &Term) -> LinTerm {
        match t {
            Term::Const(c) => LinTerm { var: None, k: *c },
            Term::Var(v) => LinTerm { var: Some(self.var(v)), k: 0 },
            Term::Add(v, k) => LinTerm { var: Some(self.var(v)), k: *k },
        }
    }

    /// Adds a constraint in positive position; `∃`-bound variables become
    /// fresh variables of the problem.
    pub(crate) fn add(&mut self, c: &Constraint) {
        match c {
            Constraint::True => {}
            Constraint::False => self.trivially_false = true,
            Constraint::Atom(a) => self.add_atom(a, true),
            Constraint::Conj(items) => items.iter().for_each(|i| self.add(i)),
            Constraint::Exists(x, body) => {
                self.fresh += 1;
                let fresh = format!("{x}\u{1}{}", self.fresh);
                let renamed = body.rename_free(&mut |v| (v == x).then(|| fresh.clone()));
                self.add(&renamed);
            }
        }
    }

    pub(crate) fn add_atom(&mut self, a: &Atom, positive: bool) {
        let lhs = self.term(&a.lhs);
        let rhs = self.term(&a.rhs);
        self.lits.push(Lit { lhs, rel: a.rel, rhs, positive });
    }

    fn with_negated(&self, a: &Atom) -> Problem {
        let mut p = self.clone();
        p.add_atom(a, false);
        p
    }

    fn with_fixed(&self, assignment: &[(String, i64)]) -> Problem {
        let mut p = self.clone();
        for (name, v) in assignment {
            let var = p.var(name);
            p.lits.push(Lit {
                lhs: LinTerm { var: Some(var), k: 0 },
                rel: Rel::Eq,
                rhs: LinTerm { var: None, k: *v },
                positive: true,
            });
        }
        p
    }
}

fn range(t: LinTerm, bx: &[Interval]) -> Interval {
    match t.var {
        Some(v) => (bx[v].0 + t.k, bx[v].1 + t.k),
        None => (t.k, t.k),
    }
}

fn rel_status(rel: Rel, a: Interval, b: Interval) -> Status {
    let (certain, impossible) = match rel {
        Rel::Lt => (a.1 < b.0, a.0 >= b.1),
        Rel::Le => (a.1 <= b.0, a.0 > b.1),
        Rel::Gt => (a.0 > b.1, a.1 <= b.0),
        Rel::Ge => (a.0 >= b.1, a.1 < b.0),
        Rel::Eq => (a.0 == a.1 && b.0 == b.1 && a.0 == b.0, a.1 < b.0 || b.1 < a.0),
        Rel::Ne => (a.1 < b.0 || b.1 < a.0, a.0 == a.1 && b.0 == b.1 && a.0 == b.0),
    };
    if certain {
        Status::True
    } else if impossible {
        Status::False
    } else {
        Status::Unknown
    }
}

fn lit_status(lit: &Lit, bx: &[Interval], max: i64) -> Status {
    let l = range(lit.lhs, bx);
    let r = range(lit.rhs, bx);
    let clip = |i: Interval| (i.0.max(0), i.1.min(max - 1));
    let (lc, rc) = (clip(l), clip(r));
    let truth = if lc.0 > lc.1 || rc.0 > rc.1 {
        Status::False
    } else {
        let always_valid = l == lc && r == rc;
        match rel_status(lit.rel, lc, rc) {
            Status::True if always_valid => Status::True,
            Status::True => Status::Unknown,
            other => other,
        }
    };
    match (lit.positive, truth) {
        (true, s) => s,
        (false, Status::True) => Status::False,
        (false, Status::False) => Status::True,
        (false, Status::Unknown) => Status::Unknown,
    }
}

/// Restricts the value of `t` to `[lo, hi]`. Returns `Err(())` on wipe-out.
fn restrict(t: LinTerm, lo: i64, hi: i64, bx: &mut [Interval], changed: &mut bool) -> Result<(), ()> {
    match t.var {
        None => {
            if t.k < lo || t.k > hi {
                Err(())
            } else {
                Ok(())
            }
        }
        Some(v) => {
            let (old_lo, old_hi) = bx[v];
            let new = (old_lo.max(lo - t.k), old_hi.min(hi - t.k));
            if new.0 > new.1 {
                return Err(());
            }
            if new != (old_lo, old_hi) {
                bx[v] = new;
                *changed = true;
            }
            Ok(())
        }
    }
}

const SWEEP_CAP: usize = 128;

/// Bounds propagation to a fixpoint (or the sweep cap). `false` on wipe-out.
fn propagate(lits: &[&Lit], bx: &mut [Interval], max: i64) -> bool {
    for _ in 0..SWEEP_CAP {
        let mut changed = false;
        for lit in lits {
            if propagate_one(lit, bx, max, &mut changed).is_err() {
                return false;
            }
        }
        if !changed {
            break;
        }
    }
    true
}

fn propagate_one(lit: &Lit, bx: &mut [Interval], max: i64, changed: &mut bool) -> Result<(), ()> {
    let rel = if lit.positive {
        lit.rel
    } else {
        // A negated atom whose terms are always domain values is the atom
        // with the complementary relation; anything else is left to search.
        let l = range(lit.lhs, bx);
        let r = range(lit.rhs, bx);
        let valid = |i: Interval| i.0 >= 0 && i.1 < max;
        if !(valid(l) && valid(r)) {
            return Ok(());
        }
        lit.rel.negate()
    };
    restrict(lit.lhs, 0, max - 1, bx, changed)?;
    restrict(lit.rhs, 0, max - 1, bx, changed)?;
    if lit.lhs.var.is_some() && lit.lhs.var == lit.rhs.var {
        return Ok(());
    }
    let l = range(lit.lhs, bx);
    let r = range(lit.rhs, bx);
    match rel {
        Rel::Eq => {
            restrict(lit.lhs, r.0, r.1, bx, changed)?;
            let l = range(lit.lhs, bx);
            restrict(lit.rhs, l.0, l.1, bx, changed)?;
        }
        Rel::Lt => {
            restrict(lit.lhs, i64::MIN / 4, r.1 - 1, bx, changed)?;
            restrict(lit.rhs, l.0 + 1, i64::MAX / 4, bx, changed)?;
        }
        Rel::Le => {
            restrict(lit.lhs, i64::MIN / 4, r.1, bx, changed)?;
            restrict(lit.rhs, l.0, i64::MAX / 4, bx, changed)?;
        }
        Rel::Gt => {
            restrict(lit.rhs, i64::MIN / 4, l.1 - 1, bx, changed)?;
            restrict(lit.lhs, r.0 + 1, i64::MAX / 4, bx, changed)?;
        }
        Rel::Ge => {
            restrict(lit.rhs, i64::MIN / 4, l.1, bx, changed)?;
            restrict(lit.lhs, r.0, i64::MAX / 4, bx, changed)?;
        }
        Rel::Ne => {
            if l.0 == l.1 {
                shave(lit.rhs, l.0, bx, changed)?;
            }
            let r = range(lit.rhs, bx);
            if r.0 == r.1 {
                shave(lit.lhs, r.0, bx, changed)?;
            }
        }
    }
    Ok(())
}

/// Removes `value` from the term's range when it sits on a bound.
fn shave(t: LinTerm, value: i64, bx: &mut [Interval], changed: &mut bool) -> Result<(), ()> {
    let (lo, hi) = range(t, bx);
    if lo == value {
        restrict(t, value + 1, hi, bx, changed)
    } else if hi == value {
        restrict(t, lo, value - 1, bx, changed)
    } else {
        Ok(())
    }
}

struct Search<'a> {
    lits: Vec<&'a Lit>,
    max: i64,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    fn run(&mut self, mut bx: Vec<Interval>) -> Result<Option<Vec<Interval>>, ConstraintError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(ConstraintError::DomainTooLarge {
                what: format!("search beyond {} nodes", self.budget),
                budget: self.budget,
            });
        }
        if !propagate(&self.lits, &mut bx, self.max) {
            return Ok(None);
        }
        let mut split: Option<usize> = None;
        for lit in &self.lits {
            match lit_status(lit, &bx, self.max) {
                Status::False => return Ok(None),
                Status::True => {}
                Status::Unknown => {
                    for v in [lit.lhs.var, lit.rhs.var].into_iter().flatten() {
                        let width = bx[v].1 - bx[v].0;
                        if width > 0 && split.is_none_or(|s| width > bx[s].1 - bx[s].0) {
                            split = Some(v);
                        }
                    }
                }
            }
        }
        let Some(v) = split else {
            return Ok(Some(bx));
        };
        let (lo, hi) = bx[v];
        let mid = lo + (hi - lo) / 2;
        for half in [(lo, mid), (mid + 1, hi)] {
            let mut child = bx.clone();
            child[v] = half;
            if let Some(found) = self.run(child)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }
}

/// Exact satisfiability. On success returns a witness valuation (indexed
/// like the problem's variables).
pub(crate) fn solve(p: &Problem, max: i64, budget: u64) -> Result<Option<Vec<i64>>, ConstraintError> {
    if p.trivially_false {
        return Ok(None);
    }
    let n = p.names.len();
    // Independent components are solved separately.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    let mut ground = Vec::new();
    for lit in &p.lits {
        match (lit.lhs.var, lit.rhs.var) {
            (Some(a), Some(b)) => {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
            (None, None) => ground.push(lit),
            _ => {}
        }
    }
    let full: Vec<Interval> = vec![(0, max - 1); n];
    for lit in ground {
        if lit_status(lit, &full, max) != Status::True {
            return Ok(None);
        }
    }
    let mut groups: BTreeMap<usize, Vec<&Lit>> = BTreeMap::new();
    for lit in &p.lits {
        if let Some(v) = lit.lhs.var.or(lit.rhs.var) {
            let root = find(&mut parent, v);
            groups.entry(root).or_default().push(lit);
        }
    }
    let mut witness = vec![0; n];
    let mut nodes = 0;
    for lits in groups.into_values() {
        let mut search = Search { lits, max, nodes, budget };
        match search.run(full.clone())? {
            None => return Ok(None),
            Some(bx) => {
                for lit in &search.lits {
                    for v in [lit.lhs.var, lit.rhs.var].into_iter().flatten() {
                        witness[v] = bx[v].0;
                    }
                }
            }
        }
        nodes = search.nodes;
    }
    Ok(Some(witness))
}

fn root_box(p: &Problem, max: i64) -> Option<Vec<Interval>> {
    if p.trivially_false {
        return None;
    }
    let mut bx = vec![(0, max - 1); p.names.len()];
    let lits: Vec<&Lit> = p.lits.iter().collect();
    if !propagate(&lits, &mut bx, max) {
        return None;
    }
    if p.lits.iter().any(|l| lit_status(l, &bx, max) == Status::False) {
        return None;
    }
    Some(bx)
}

pub(crate) fn satisfiable(
    c: &Constraint,
    procedure: Procedure,
    max: i64,
    budget: u64,
) -> Result<bool, ConstraintError> {
    let p = Problem::from_constraint(c);
    match procedure {
        Procedure::Enumerate => Ok(solve(&p, max, budget)?.is_some()),
        Procedure::Bounds => Ok(root_box(&p, max).is_some()),
    }
}

/// `store ⊢ c`, given that `store` is satisfiable.
pub(crate) fn entails_consistent(
    store: &Constraint,
    c: &Constraint,
    procedure: Procedure,
    max: i64,
    budget: u64,
) -> Result<bool, ConstraintError> {
    let base = Problem::from_constraint(store);
    entails_with(&base, &c.canonical(), procedure, max, budget)
}

fn entails_with(
    base: &Problem,
    c: &Constraint,
    procedure: Procedure,
    max: i64,
    budget: u64,
) -> Result<bool, ConstraintError> {
    match c {
        Constraint::True => Ok(true),
        Constraint::False => Ok(false),
        Constraint::Conj(items) => {
            for item in items {
                if !entails_with(base, item, procedure, max, budget)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Constraint::Atom(a) => match procedure {
            Procedure::Enumerate => Ok(solve(&base.with_negated(a), max, budget)?.is_none()),
            Procedure::Bounds => {
                let Some(bx) = root_box(base, max) else {
                    return Ok(true);
                };
                let mut probe = base.clone();
                probe.add_atom(a, true);
                let lit = probe.lits.last().expect("literal just added");
                let mut bx = bx;
                bx.resize(probe.names.len(), (0, max - 1));
                Ok(lit_status(lit, &bx, max) == Status::True)
            }
        },
        Constraint::Exists(x, body) => {
            let simplified = hide(x, body);
            if !matches!(simplified, Constraint::Exists(..)) {
                return entails_with(base, &simplified, procedure, max, budget);
            }
            match procedure {
                Procedure::Bounds => Ok(false),
                Procedure::Enumerate => entails_exists(base, &simplified, max, budget),
            }
        }
    }
}

/// `base ⊢ ∃x. φ` by enumerating the free variables of the goal over the
/// box left by propagating `base`, looking for a valuation of `base` under
/// which no witness for `x` exists.
fn entails_exists(base: &Problem, goal: &Constraint, max: i64, budget: u64) -> Result<bool, ConstraintError> {
    let Constraint::Exists(_, _) = goal else {
        unreachable!("entails_exists called on non-existential goal")
    };
    let free: Vec<String> = goal.free_vars().into_iter().collect();
    let Some(bx) = root_box(base, max) else {
        return Ok(true);
    };
    let ranges: Vec<Interval> = free
        .iter()
        .map(|v| base.index.get(v).map_or((0, max - 1), |&i| bx[i]))
        .collect();
    let size = ranges
        .iter()
        .try_fold(1u64, |acc, r| acc.checked_mul((r.1 - r.0 + 1) as u64))
        .unwrap_or(u64::MAX);
    if size > budget {
        return Err(ConstraintError::DomainTooLarge {
            what: format!("{size} valuations of {:?}", free),
            budget,
        });
    }
    let mut point: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let assignment: Vec<(String, i64)> = free.iter().cloned().zip(point.iter().copied()).collect();
        if solve(&base.with_fixed(&assignment), max, budget)?.is_some() {
            let mut inner = Problem::from_constraint(goal);
            inner = inner.with_fixed(&assignment);
            if solve(&inner, max, budget)?.is_none() {
                return Ok(false);
            }
        }
        // Advance the odometer.
        let mut i = 0;
        loop {
            if i == point.len() {
                return Ok(true);
            }
            if point[i] < ranges[i].1 {
                point[i] += 1;
                break;
            }
            point[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// The value of `var` when the store pins it down, by finding one witness
/// and checking that no other value is possible.
pub(crate) fn determined_value(
    store: &Constraint,
    var: &str,
    max: i64,
    budget: u64,
) -> Result<Option<i64>, ConstraintError> {
    let p = Problem::from_constraint(store);
    let Some(&idx) = p.index.get(var) else {
        return Ok(None);
    };
    let Some(witness) = solve(&p, max, budget)? else {
        return Ok(None);
    };
    let value = witness[idx];
    let probe = Atom::new(Term::var(var), Rel::Eq, Term::Const(value));
    if solve(&p.with_negated(&probe), max, budget)?.is_none() {
        Ok(Some(value))
    } else {
        Ok(None)
    }
}
