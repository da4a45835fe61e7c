//! Deciding `Γ ⊢ P` for a ground environment `Γ`.
//!
//! Checking goes through reconstruction: the constraints generated for
//! `P` are extended with constraints pinning each synthesized type to its
//! type in `Γ`, and the result is handed to the solver. Names of `Γ` that
//! `P` does not use must have unlimited types.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::ast::{Expression, Name, Process};
use crate::constraintgen::{
    gen_expression, gen_process, Constraint, ConstraintSet, SynthEnv, TypeExpr, TypeVar, UseExpr, UseVar, VarSupply,
};
use crate::semantics::Label;
use crate::solver::{solve_with, SolveOptions};
use crate::types::{env_reduce, TypeEnv, TypeId, TypeNode, TypeStore, Use};

/// A ground substitution for type and use variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundSubstitution {
    pub type_bindings: BTreeMap<TypeVar, TypeId>,
    pub use_bindings: BTreeMap<UseVar, Use>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("substitution does not bind `{0}`")]
    NotCovering(String),
    #[error("`{0}` is free in the process but not in the environment")]
    UnboundName(Name),
}

impl GroundSubstitution {
    pub fn apply_use(&self, u: &UseExpr) -> Result<Use, CheckError> {
        u.eval(|r| self.use_bindings.get(&r).copied()).ok_or_else(|| {
            let missing = u.vars.keys().find(|r| !self.use_bindings.contains_key(r));
            CheckError::NotCovering(missing.map(|r| r.to_string()).unwrap_or_default())
        })
    }

    pub fn apply(&self, store: &mut TypeStore, t: &TypeExpr) -> Result<TypeId, CheckError> {
        Ok(match t {
            TypeExpr::Var(v) => *self
                .type_bindings
                .get(v)
                .ok_or_else(|| CheckError::NotCovering(v.to_string()))?,
            TypeExpr::Int => store.int(),
            TypeExpr::Chan(u, v, p) => {
                let (i, o) = (self.apply_use(u)?, self.apply_use(v)?);
                let p = self.apply(store, p)?;
                store.chan(i, o, p)
            }
            TypeExpr::Prod(a, b) => {
                let (a, b) = (self.apply(store, a)?, self.apply(store, b)?);
                store.prod(a, b)
            }
            TypeExpr::Sum(a, b) => {
                let (a, b) = (self.apply(store, a)?, self.apply(store, b)?);
                store.sum(a, b)
            }
        })
    }

    pub fn apply_env(&self, store: &mut TypeStore, d: &SynthEnv) -> Result<TypeEnv, CheckError> {
        d.iter().map(|(u, t)| Ok((u.clone(), self.apply(store, t)?))).collect()
    }
}

/// Whether `s` satisfies every constraint of `c`.
pub fn verify_solution(store: &mut TypeStore, c: &ConstraintSet, s: &GroundSubstitution) -> Result<bool, CheckError> {
    for k in c {
        let ok = match k {
            Constraint::TEq(a, b) => {
                let (a, b) = (s.apply(store, a)?, s.apply(store, b)?);
                store.type_equal(a, b)
            }
            Constraint::TComb(t, s1, s2) => {
                let (t, s1, s2) = (s.apply(store, t)?, s.apply(store, s1)?, s.apply(store, s2)?);
                store.type_combine(s1, s2).is_some_and(|r| store.type_equal(r, t))
            }
            Constraint::TCoh(a, b) => {
                let (a, b) = (s.apply(store, a)?, s.apply(store, b)?);
                store.coherent(a, b)
            }
            Constraint::UEq(u, v) => s.apply_use(u)? == s.apply_use(v)?,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Constraints forcing type expressions to given ground types.
struct Pins<'a> {
    store: &'a TypeStore,
    supply: &'a mut VarSupply,
    node_vars: HashMap<TypeId, TypeVar>,
    out: ConstraintSet,
}

impl Pins<'_> {
    fn var_for(&mut self, t: TypeId) -> TypeVar {
        if let Some(v) = self.node_vars.get(&t) {
            return v.clone();
        }
        let v = self.supply.fresh_type();
        self.node_vars.insert(t, v.clone());
        let lit = |u: Use| UseExpr::lit(u);
        let rhs = match self.store.node(t) {
            TypeNode::Int => TypeExpr::Int,
            TypeNode::Chan(i, o, p) => TypeExpr::chan(lit(i), lit(o), self.var_for(p).into()),
            TypeNode::Prod(a, b) => TypeExpr::prod(self.var_for(a).into(), self.var_for(b).into()),
            TypeNode::Sum(a, b) => TypeExpr::sum(self.var_for(a).into(), self.var_for(b).into()),
        };
        self.out.insert(Constraint::TEq(v.clone().into(), rhs));
        v
    }

    fn pin(&mut self, e: &TypeExpr, t: TypeId) {
        let v = self.var_for(t);
        self.out.insert(Constraint::TEq(e.clone(), v.into()));
    }
}

fn unused_are_unlimited(store: &mut TypeStore, g: &TypeEnv, delta: &SynthEnv) -> bool {
    g.iter()
        .filter(|(u, _)| !delta.contains_key(*u))
        .all(|(_, &t)| store.is_unlimited(t))
}

fn check_names<'a>(g: &TypeEnv, names: impl IntoIterator<Item = &'a Name>) -> Result<(), CheckError> {
    match names.into_iter().find(|u| !g.contains_key(*u)) {
        Some(u) => Err(CheckError::UnboundName(u.clone())),
        None => Ok(()),
    }
}

fn solvable_with_pins(
    store: &mut TypeStore,
    mut supply: VarSupply,
    mut c: ConstraintSet,
    pairs: &[(TypeExpr, TypeId)],
) -> bool {
    supply.reserve(&c);
    let mut pins = Pins {
        store,
        supply: &mut supply,
        node_vars: HashMap::new(),
        out: ConstraintSet::new(),
    };
    for (e, t) in pairs {
        pins.pin(e, *t);
    }
    c.extend(pins.out);
    let opts = SolveOptions { omega_fallback: true };
    match solve_with(&c, store, &mut supply, opts) {
        Ok((sigma, _)) => pairs
            .iter()
            .all(|(e, t)| sigma.apply(store, e).is_ok_and(|s| store.type_equal(s, *t))),
        Err(_) => false,
    }
}

/// Whether `g ⊢ p`.
pub fn check_process(store: &mut TypeStore, g: &TypeEnv, p: &Process) -> Result<bool, CheckError> {
    check_names(g, &p.free_names())?;
    let mut supply = VarSupply::new();
    let (delta, c) = gen_process(p, &mut supply);
    if !unused_are_unlimited(store, g, &delta) {
        return Ok(false);
    }
    let pairs: Vec<(TypeExpr, TypeId)> = delta.iter().map(|(u, e)| (e.clone(), g[u])).collect();
    Ok(solvable_with_pins(store, supply, c, &pairs))
}

/// Whether `g ⊢ e : t`.
pub fn check_expression(store: &mut TypeStore, g: &TypeEnv, e: &Expression, t: TypeId) -> Result<bool, CheckError> {
    check_names(g, &e.free_names())?;
    let mut supply = VarSupply::new();
    let (ty, delta, c) = gen_expression(e, &mut supply);
    if !unused_are_unlimited(store, g, &delta) {
        return Ok(false);
    }
    let mut pairs: Vec<(TypeExpr, TypeId)> = delta.iter().map(|(u, e)| (e.clone(), g[u])).collect();
    pairs.push((ty, t));
    Ok(solvable_with_pins(store, supply, c, &pairs))
}

/// Whether the residual `q` of a step labelled `label` from a process
/// typed by `g` is typed by some environment `g'` with `g →label g'`.
///
/// The canonical `g'` subtracts one input and one output use from the
/// channel; when a slot of `g` is ω, the remaining use may also be 1.
pub fn check_reduct(store: &mut TypeStore, g: &TypeEnv, label: &Label, q: &Process) -> bool {
    let Ok(reduced) = env_reduce(store, g, label) else {
        return false;
    };
    if check_process(store, &reduced, q).unwrap_or(false) {
        return true;
    }
    let Label::Comm(a) = label else {
        return false;
    };
    let TypeNode::Chan(i, o, p) = store.node(g[a]) else {
        return false;
    };
    let options = |u: Use| match u {
        Use::Omega => vec![Use::One, Use::Omega],
        other => vec![other.sub_one().expect("env_reduce succeeded")],
    };
    for ri in options(i) {
        for ro in options(o) {
            let mut variant = reduced.clone();
            variant.insert(a.clone(), store.chan(ri, ro, p));
            if variant != reduced && check_process(store, &variant, q).unwrap_or(false) {
                return true;
            }
        }
    }
    false
}
