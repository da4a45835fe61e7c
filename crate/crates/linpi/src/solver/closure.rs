//! Closure of a constraint set under the deduction rules, by unification
//! over a table of hash-consed terms, plus completion and extraction of
//! use constraints.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::IndexSet;
use thiserror::Error;

use super::UseEq;
use crate::constraintgen::{Constraint, ConstraintSet, TypeExpr, TypeVar, UseExpr, VarSupply};

pub(crate) type TermId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Term {
    Int,
    Chan(UseExpr, UseExpr, TermId),
    Prod(TermId, TermId),
    Sum(TermId, TermId),
    Var(TypeVar),
}

impl Term {
    fn is_proper(&self) -> bool {
        !matches!(self, Term::Var(_))
    }
}

/// Two proper terms with different outermost constructors were found to
/// be coherent.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("type clash: {left} ~ {right} ({} vs {})", left.constructor_name(), right.constructor_name())]
pub struct Clash {
    pub left: Box<TypeExpr>,
    pub right: Box<TypeExpr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `≐`
    Eq,
    /// `∼`
    Coh,
}

/// Union-find whose roots remember the least member of their class.
#[derive(Clone, Debug, Default)]
struct Classes {
    parent: Vec<usize>,
    least: Vec<TermId>,
}

impl Classes {
    fn push(&mut self) {
        let n = self.parent.len();
        self.parent.push(n);
        self.least.push(n);
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn find_const(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }
}

enum Pending {
    Eq(TermId, TermId),
    Coh(TermId, TermId),
}

#[derive(Clone, Debug, Default)]
pub struct ClosureState {
    terms: Vec<Term>,
    index: HashMap<Term, TermId>,
    eq: Classes,
    coh: Classes,
    /// Use equalities given in the input or obtained by unifying channels.
    use_eqs: IndexSet<UseEq>,
    combs: Vec<(TermId, TermId, TermId)>,
}

/// Computes the `≐` and `∼` classes of every type expression in `c`.
pub fn close(c: &ConstraintSet) -> Result<ClosureState, Clash> {
    let mut s = ClosureState::default();
    let mut work = Vec::new();
    for k in c {
        match k {
            Constraint::TEq(a, b) => {
                let (a, b) = (s.intern(a), s.intern(b));
                work.push(Pending::Eq(a, b));
            }
            Constraint::TCoh(a, b) => {
                let (a, b) = (s.intern(a), s.intern(b));
                work.push(Pending::Coh(a, b));
            }
            Constraint::TComb(t, s1, s2) => {
                let (t, s1, s2) = (s.intern(t), s.intern(s1), s.intern(s2));
                s.combs.push((t, s1, s2));
                work.push(Pending::Coh(t, s1));
                work.push(Pending::Coh(t, s2));
            }
            Constraint::UEq(u, v) => {
                s.add_use_eq(u.clone(), v.clone());
            }
        }
        s.drain(&mut work)?;
    }
    Ok(s)
}

impl ClosureState {
    fn intern(&mut self, t: &TypeExpr) -> TermId {
        let term = match t {
            TypeExpr::Var(v) => Term::Var(v.clone()),
            TypeExpr::Int => Term::Int,
            TypeExpr::Chan(u, v, p) => Term::Chan(u.clone(), v.clone(), self.intern(p)),
            TypeExpr::Prod(a, b) => Term::Prod(self.intern(a), self.intern(b)),
            TypeExpr::Sum(a, b) => Term::Sum(self.intern(a), self.intern(b)),
        };
        if let Some(&id) = self.index.get(&term) {
            return id;
        }
        let id = self.terms.len();
        self.terms.push(term.clone());
        self.index.insert(term, id);
        self.eq.push();
        self.coh.push();
        id
    }

    fn add_use_eq(&mut self, lhs: UseExpr, rhs: UseExpr) {
        if lhs != rhs {
            self.use_eqs.insert(UseEq { lhs, rhs });
        }
    }

    /// The total order on terms: proper terms first, in creation order;
    /// then variables, by name.
    fn compare(&self, a: TermId, b: TermId) -> Ordering {
        match (&self.terms[a], &self.terms[b]) {
            (Term::Var(x), Term::Var(y)) => x.cmp(y),
            (Term::Var(_), _) => Ordering::Greater,
            (_, Term::Var(_)) => Ordering::Less,
            _ => a.cmp(&b),
        }
    }

    fn classes(&mut self, rel: Relation) -> &mut Classes {
        match rel {
            Relation::Eq => &mut self.eq,
            Relation::Coh => &mut self.coh,
        }
    }

    /// Merges the classes of `a` and `b`, returning their previous least
    /// proper members when both had one.
    fn union(&mut self, rel: Relation, a: TermId, b: TermId) -> Option<(TermId, TermId)> {
        let ra = self.classes(rel).find(a);
        let rb = self.classes(rel).find(b);
        if ra == rb {
            return None;
        }
        let (la, lb) = (self.classes(rel).least[ra], self.classes(rel).least[rb]);
        let least = if self.compare(la, lb) == Ordering::Greater {
            lb
        } else {
            la
        };
        let classes = self.classes(rel);
        classes.parent[rb] = ra;
        classes.least[ra] = least;
        (self.terms[la].is_proper() && self.terms[lb].is_proper()).then_some((la, lb))
    }

    fn drain(&mut self, work: &mut Vec<Pending>) -> Result<(), Clash> {
        while let Some(p) = work.pop() {
            let (rel, a, b) = match p {
                Pending::Eq(a, b) => (Relation::Eq, a, b),
                Pending::Coh(a, b) => (Relation::Coh, a, b),
            };
            if rel == Relation::Eq {
                work.push(Pending::Coh(a, b));
            }
            let Some((pa, pb)) = self.union(rel, a, b) else {
                continue;
            };
            match (self.terms[pa].clone(), self.terms[pb].clone()) {
                (Term::Int, Term::Int) => {}
                (Term::Chan(u1, u2, p), Term::Chan(v1, v2, q)) => {
                    if rel == Relation::Eq {
                        self.add_use_eq(u1, v1);
                        self.add_use_eq(u2, v2);
                    }
                    work.push(Pending::Eq(p, q));
                }
                (Term::Prod(a1, a2), Term::Prod(b1, b2)) | (Term::Sum(a1, a2), Term::Sum(b1, b2)) => {
                    let mk = if rel == Relation::Eq { Pending::Eq } else { Pending::Coh };
                    work.push(mk(a2, b2));
                    work.push(mk(a1, b1));
                }
                _ => {
                    return Err(Clash {
                        left: Box::new(self.expr(pa)),
                        right: Box::new(self.expr(pb)),
                    })
                }
            }
        }
        Ok(())
    }

    fn lookup(&self, t: &TypeExpr) -> Option<TermId> {
        let term = match t {
            TypeExpr::Var(v) => Term::Var(v.clone()),
            TypeExpr::Int => Term::Int,
            TypeExpr::Chan(u, v, p) => Term::Chan(u.clone(), v.clone(), self.lookup(p)?),
            TypeExpr::Prod(a, b) => Term::Prod(self.lookup(a)?, self.lookup(b)?),
            TypeExpr::Sum(a, b) => Term::Sum(self.lookup(a)?, self.lookup(b)?),
        };
        self.index.get(&term).copied()
    }

    pub(crate) fn term(&self, id: TermId) -> &Term {
        &self.terms[id]
    }

    pub(crate) fn expr(&self, id: TermId) -> TypeExpr {
        match &self.terms[id] {
            Term::Int => TypeExpr::Int,
            Term::Var(v) => TypeExpr::Var(v.clone()),
            Term::Chan(u, v, p) => TypeExpr::chan(u.clone(), v.clone(), self.expr(*p)),
            Term::Prod(a, b) => TypeExpr::prod(self.expr(*a), self.expr(*b)),
            Term::Sum(a, b) => TypeExpr::sum(self.expr(*a), self.expr(*b)),
        }
    }

    pub(crate) fn least(&self, rel: Relation, id: TermId) -> TermId {
        let classes = match rel {
            Relation::Eq => &self.eq,
            Relation::Coh => &self.coh,
        };
        classes.least[classes.find_const(id)]
    }

    /// The canonical representative of `t`, if `t` occurs in the set.
    pub fn representative(&self, rel: Relation, t: &TypeExpr) -> Option<TypeExpr> {
        self.lookup(t).map(|id| self.expr(self.least(rel, id)))
    }

    pub fn related(&self, rel: Relation, t: &TypeExpr, s: &TypeExpr) -> bool {
        match (self.lookup(t), self.lookup(s)) {
            (Some(a), Some(b)) => self.least(rel, a) == self.least(rel, b),
            _ => false,
        }
    }

    pub(crate) fn var_terms(&self) -> impl Iterator<Item = (&TypeVar, TermId)> + '_ {
        self.terms.iter().enumerate().filter_map(|(id, t)| match t {
            Term::Var(v) => Some((v, id)),
            _ => None,
        })
    }

    /// Every class with more than one member, rendered as
    /// `rep : member, member, …`.
    pub fn describe(&self, rel: Relation) -> Vec<String> {
        let mut groups: std::collections::BTreeMap<TermId, Vec<TermId>> = Default::default();
        for id in 0..self.terms.len() {
            groups.entry(self.least(rel, id)).or_default().push(id);
        }
        groups
            .into_iter()
            .filter(|(_, members)| members.len() > 1)
            .map(|(rep, members)| {
                let rest: Vec<String> = members
                    .into_iter()
                    .filter(|m| *m != rep)
                    .map(|m| self.expr(m).to_string())
                    .collect();
                format!("{} : {}", self.expr(rep), rest.join(", "))
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub defined_eq: BTreeSet<TypeVar>,
    pub undefined_eq: BTreeSet<TypeVar>,
    pub defined_coh: BTreeSet<TypeVar>,
    pub undefined_coh: BTreeSet<TypeVar>,
}

/// Splits the type variables by whether their canonical representatives
/// are proper.
pub fn classify_variables(s: &ClosureState) -> Classification {
    let mut out = Classification::default();
    for (v, id) in s.var_terms() {
        let eq = s.term(s.least(Relation::Eq, id)).is_proper();
        let coh = s.term(s.least(Relation::Coh, id)).is_proper();
        if eq { &mut out.defined_eq } else { &mut out.undefined_eq }.insert(v.clone());
        if coh {
            &mut out.defined_coh
        } else {
            &mut out.undefined_coh
        }
        .insert(v.clone());
    }
    out
}

/// Adds a proper definition for every `≐`-undefined variable of `c`,
/// instantiating the `∼`-representatives with fresh use variables. Every
/// variable must already be `∼`-defined.
pub fn complete(c: &ConstraintSet, s: &ClosureState, supply: &mut VarSupply) -> ConstraintSet {
    complete_only(c, s, supply, &classify_variables(s).undefined_eq)
}

/// [`complete`] restricted to the given variables.
pub fn complete_only(
    c: &ConstraintSet,
    s: &ClosureState,
    supply: &mut VarSupply,
    vars: &BTreeSet<TypeVar>,
) -> ConstraintSet {
    let mut out = c.clone();
    let mut done = HashSet::new();
    for alpha in vars {
        let t_aa = supply.inst(alpha, alpha);
        out.insert(Constraint::TEq(alpha.clone().into(), t_aa.into()));
        let mut queue = VecDeque::from([alpha.clone()]);
        while let Some(beta) = queue.pop_front() {
            if !done.insert((alpha.clone(), beta.clone())) {
                continue;
            }
            let Some(id) = s.lookup(&beta.clone().into()) else {
                continue;
            };
            let rep = s.least(Relation::Coh, id);
            let body = instantiate(s, alpha, rep, supply, &mut queue);
            out.insert(Constraint::TEq(supply.inst(alpha, &beta).into(), body));
        }
    }
    out
}

/// Variables that are `≐`-undefined and do not stand for the combination
/// of other terms, other than themselves.
pub fn undefined_leaves(s: &ClosureState) -> BTreeSet<TypeVar> {
    let results: HashSet<TermId> = s
        .combs
        .iter()
        .map(|&(t, a, b)| {
            (
                s.least(Relation::Eq, t),
                s.least(Relation::Eq, a),
                s.least(Relation::Eq, b),
            )
        })
        .filter(|&(t, a, b)| !(t == a && t == b))
        .map(|(t, _, _)| t)
        .collect();
    s.var_terms()
        .filter(|&(_, id)| {
            let rep = s.least(Relation::Eq, id);
            !s.term(rep).is_proper() && !results.contains(&rep)
        })
        .map(|(v, _)| v.clone())
        .collect()
}

/// A combination of `≐`-classes, as a multiset with multiplicities capped
/// at 2 (`t + t + t = t + t` for every type `t`).
type Multiset = Vec<(TermId, u8)>;

fn add_to(m: &mut BTreeMap<TermId, u8>, id: TermId, times: u8) {
    let e = m.entry(id).or_insert(0);
    *e = (*e + times).min(2);
}

/// Variables introduced by [`Propagator`], kept across rounds so that a
/// combination of the same classes is always named by the same variable.
#[derive(Clone, Debug, Default)]
pub(crate) struct Propagator {
    /// `v ↦ (a, b)` for `v ≐ a + b`.
    ours: HashMap<TypeVar, (TypeExpr, TypeExpr)>,
}

impl Propagator {
    /// Pushes combinations through constructors. A combination of proper
    /// terms yields the combinations of their children; an `≐`-undefined
    /// variable standing for a combination of proper terms with the same
    /// constructor gets the combined structure, with fresh use variables
    /// in channel slots and combined children. Nested combinations are
    /// flattened, so that each multiset of classes is named once. Unlike
    /// completion, everything added is a consequence of the constraints.
    pub(crate) fn round(&mut self, s: &ClosureState, supply: &mut VarSupply) -> ConstraintSet {
        let reps = |(t, a, b): (TermId, TermId, TermId)| {
            (
                s.least(Relation::Eq, t),
                s.least(Relation::Eq, a),
                s.least(Relation::Eq, b),
            )
        };
        let mut out = ConstraintSet::new();
        // Combinations of proper terms hold for their children too.
        let mut seen: HashSet<(TermId, TermId, TermId)> = s.combs.iter().map(|&k| reps(k)).collect();
        let mut work: Vec<(TermId, TermId, TermId)> = s.combs.to_vec();
        let mut visited = HashSet::new();
        while let Some(k) = work.pop() {
            let (rt, ra, rb) = reps(k);
            if !visited.insert((rt, ra, rb)) {
                continue;
            }
            if let (Term::Prod(t1, t2), Term::Prod(a1, a2), Term::Prod(b1, b2))
            | (Term::Sum(t1, t2), Term::Sum(a1, a2), Term::Sum(b1, b2)) = (s.term(rt), s.term(ra), s.term(rb))
            {
                for child in [(*t1, *a1, *b1), (*t2, *a2, *b2)] {
                    if seen.insert(reps(child)) {
                        let (t, a, b) = child;
                        out.insert(Constraint::TComb(s.expr(t), s.expr(a), s.expr(b)));
                    }
                    work.push(child);
                }
            }
        }

        let mut split: HashMap<TermId, (TermId, TermId)> = HashMap::new();
        for (v, (a, b)) in &self.ours {
            if let (Some(t), Some(a), Some(b)) = (s.lookup(&v.clone().into()), s.lookup(a), s.lookup(b)) {
                split.entry(s.least(Relation::Eq, t)).or_insert((a, b));
            }
        }
        for &k in &s.combs {
            let (rt, ra, rb) = reps(k);
            if !s.term(rt).is_proper() && rt != ra && rt != rb {
                split.entry(rt).or_insert((ra, rb));
            }
        }
        let mut r = Round {
            s,
            supply,
            split: &split,
            ours: &mut self.ours,
            memo: HashMap::new(),
            pending: Vec::new(),
            out,
        };
        let mut roots: Vec<TermId> = split.keys().copied().collect();
        roots.sort_unstable();
        for rt in roots {
            let key = r.expand_class(rt);
            let here = s.expr(rt);
            match r.memo.get(&key) {
                Some(e) if s.lookup(e).map(|id| s.least(Relation::Eq, id)) != Some(rt) => {
                    r.out.insert(Constraint::TEq(e.clone(), here));
                }
                Some(_) => {}
                None => {
                    r.memo.insert(key.clone(), here);
                    r.pending.push(key);
                }
            }
        }
        while let Some(key) = r.pending.pop() {
            r.define(&key);
        }
        r.out
    }
}

struct Round<'a> {
    s: &'a ClosureState,
    supply: &'a mut VarSupply,
    split: &'a HashMap<TermId, (TermId, TermId)>,
    ours: &'a mut HashMap<TypeVar, (TypeExpr, TypeExpr)>,
    memo: HashMap<Multiset, TypeExpr>,
    pending: Vec<Multiset>,
    out: ConstraintSet,
}

impl Round<'_> {
    fn expand_class(&self, rt: TermId) -> Multiset {
        let mut m = BTreeMap::new();
        let (a, b) = self.split[&rt];
        let mut visiting = HashSet::from([rt]);
        self.expand(a, 1, &mut m, &mut visiting);
        self.expand(b, 1, &mut m, &mut visiting);
        m.into_iter().collect()
    }

    /// Adds the classes that `id` combines, `times` times, to `m`.
    fn expand(&self, id: TermId, times: u8, m: &mut BTreeMap<TermId, u8>, visiting: &mut HashSet<TermId>) {
        let r = self.s.least(Relation::Eq, id);
        match self.split.get(&r) {
            Some(&(a, b)) if visiting.insert(r) => {
                self.expand(a, times, m, visiting);
                self.expand(b, times, m, visiting);
                visiting.remove(&r);
            }
            _ => add_to(m, r, times),
        }
    }

    /// The term naming the combination `key`.
    fn name(&mut self, key: Multiset) -> TypeExpr {
        if let [(only, 1)] = key[..] {
            return self.s.expr(only);
        }
        if let Some(e) = self.memo.get(&key) {
            return e.clone();
        }
        let (first, n) = key[0];
        let mut rest = key.clone();
        if n == 1 {
            rest.remove(0);
        } else {
            rest[0].1 = n - 1;
        }
        let v = self.supply.fresh_type();
        let (a, b) = (self.s.expr(first), self.name(rest));
        self.out
            .insert(Constraint::TComb(v.clone().into(), a.clone(), b.clone()));
        self.ours.insert(v.clone(), (a, b));
        self.memo.insert(key.clone(), v.clone().into());
        self.pending.push(key);
        v.into()
    }

    fn define(&mut self, key: &Multiset) {
        let s = self.s;
        let target = self.memo[key].clone();
        if s.lookup(&target)
            .is_some_and(|id| s.term(s.least(Relation::Eq, id)).is_proper())
        {
            return;
        }
        let terms: Vec<(&Term, u8)> = key.iter().map(|&(id, n)| (s.term(id), n)).collect();
        let head = match terms[0].0 {
            Term::Int if terms.iter().all(|(t, _)| matches!(t, Term::Int)) => TypeExpr::Int,
            Term::Chan(_, _, p) if terms.iter().all(|(t, _)| matches!(t, Term::Chan(..))) => {
                let (r1, r2) = (self.supply.fresh_use(), self.supply.fresh_use());
                TypeExpr::chan(UseExpr::var(r1), UseExpr::var(r2), s.expr(*p))
            }
            Term::Prod(..) | Term::Sum(..) => {
                let mut left = BTreeMap::new();
                let mut right = BTreeMap::new();
                let mut visiting = HashSet::new();
                for &(t, n) in &terms {
                    let ((Term::Prod(a, b), Term::Prod(..)) | (Term::Sum(a, b), Term::Sum(..))) = (t, terms[0].0)
                    else {
                        return;
                    };
                    self.expand(*a, n, &mut left, &mut visiting);
                    self.expand(*b, n, &mut right, &mut visiting);
                }
                let l = self.name(left.into_iter().collect());
                let r = self.name(right.into_iter().collect());
                if matches!(terms[0].0, Term::Prod(..)) {
                    TypeExpr::prod(l, r)
                } else {
                    TypeExpr::sum(l, r)
                }
            }
            _ => return,
        };
        self.out.insert(Constraint::TEq(target, head));
    }
}

fn instantiate(
    s: &ClosureState,
    alpha: &TypeVar,
    id: TermId,
    supply: &mut VarSupply,
    queue: &mut VecDeque<TypeVar>,
) -> TypeExpr {
    match s.term(id) {
        Term::Var(beta) => {
            queue.push_back(beta.clone());
            supply.inst(alpha, beta).into()
        }
        Term::Int => TypeExpr::Int,
        Term::Chan(_, _, p) => {
            let (r1, r2) = (supply.fresh_use(), supply.fresh_use());
            TypeExpr::chan(UseExpr::var(r1), UseExpr::var(r2), s.expr(*p))
        }
        Term::Prod(a, b) => {
            let l = instantiate(s, alpha, *a, supply, queue);
            TypeExpr::prod(l, instantiate(s, alpha, *b, supply, queue))
        }
        Term::Sum(a, b) => {
            let l = instantiate(s, alpha, *a, supply, queue);
            TypeExpr::sum(l, instantiate(s, alpha, *b, supply, queue))
        }
    }
}

/// Decomposes every combination down to channel types through the
/// `≐`-representatives, yielding one use equality per use slot. The
/// result also holds the use equalities gathered while closing.
pub fn extract_use_constraints(s: &ClosureState) -> Vec<UseEq> {
    let mut out: IndexSet<UseEq> = IndexSet::new();
    let mut seen = HashSet::new();
    let mut stack: Vec<(TermId, TermId, TermId)> = s.combs.iter().rev().copied().collect();
    while let Some((t, s1, s2)) = stack.pop() {
        let key = (
            s.least(Relation::Eq, t),
            s.least(Relation::Eq, s1),
            s.least(Relation::Eq, s2),
        );
        if !seen.insert(key) {
            continue;
        }
        match (s.term(key.0), s.term(key.1), s.term(key.2)) {
            (Term::Chan(u1, u2, _), Term::Chan(v1, v2, _), Term::Chan(v3, v4, _)) => {
                for (lhs, rhs) in [(u1, v1.plus(v3)), (u2, v2.plus(v4))] {
                    if *lhs != rhs {
                        out.insert(UseEq { lhs: lhs.clone(), rhs });
                    }
                }
            }
            (Term::Prod(a1, a2), Term::Prod(b1, b2), Term::Prod(c1, c2))
            | (Term::Sum(a1, a2), Term::Sum(b1, b2), Term::Sum(c1, c2)) => {
                stack.push((*a2, *b2, *c2));
                stack.push((*a1, *b1, *c1));
            }
            _ => {}
        }
    }
    out.extend(s.use_eqs.iter().cloned());
    out.into_iter().collect()
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Coh => "~",
        })
    }
}
