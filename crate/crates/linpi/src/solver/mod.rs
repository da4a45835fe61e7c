//! Constraint solving: closure and clash detection, defaulting of
//! structureless variables to `int`, completion, use-constraint solving
//! and synthesis of regular types.
//!
//! ```
//! use linpi::ast::parse_process;
//! use linpi::constraintgen::{gen_process, VarSupply};
//! use linpi::solver::solve;
//! use linpi::types::TypeStore;
//!
//! let p = parse_process("new a in (a!3 | a?(x).idle)").unwrap();
//! let mut supply = VarSupply::new();
//! let (env, c) = gen_process(&p, &mut supply);
//! assert!(env.is_empty());
//! let mut store = TypeStore::new();
//! let sigma = solve(&c, &mut store, &mut supply).unwrap();
//! assert!(sigma.use_bindings.values().all(|u| u.rank() <= 1));
//! ```

mod closure;
mod uses;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use closure::{
    classify_variables, close, complete, complete_only, extract_use_constraints, undefined_leaves, Clash,
    Classification, ClosureState, Relation,
};
pub use uses::{eliminate_determined, partition_uses, solve_uses, UseAssignment, UseEq, UseError, MAX_SEARCH_VARS};

use crate::ast::Process;
use crate::constraintgen::{
    gen_process_with, Constraint, ConstraintSet, GenOptions, SynthEnv, TypeExpr, TypeVar, VarSupply,
};
use crate::typecheck::GroundSubstitution;
use crate::types::{Shape, TypeEnv, TypeStore, Use};
use closure::Term;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Assign ω to every variable of a partition too large to search.
    pub omega_fallback: bool,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Unsatisfiable(#[from] Clash),
    #[error(transparent)]
    NoSolution(#[from] UseError),
}

/// Intermediate results, for diagnostics.
#[derive(Clone, Debug, Default)]
pub struct SolveReport {
    /// `α ≐ int` for every variable without structure.
    pub defaults: Vec<Constraint>,
    /// Constraints added by combination propagation and completion.
    pub completion: Vec<Constraint>,
    pub use_constraints: Vec<UseEq>,
    pub partitions: Vec<Vec<UseEq>>,
    pub closure: ClosureState,
}

pub fn solve(
    c: &ConstraintSet,
    store: &mut TypeStore,
    supply: &mut VarSupply,
) -> Result<GroundSubstitution, SolveError> {
    solve_with(c, store, supply, SolveOptions::default()).map(|(s, _)| s)
}

pub fn solve_with(
    c: &ConstraintSet,
    store: &mut TypeStore,
    supply: &mut VarSupply,
    opts: SolveOptions,
) -> Result<(GroundSubstitution, SolveReport), SolveError> {
    supply.reserve(c);
    let first = close(c)?;
    let defaults: Vec<Constraint> = classify_variables(&first)
        .undefined_coh
        .into_iter()
        .map(|v| Constraint::TEq(v.into(), TypeExpr::Int))
        .collect();
    let mut defaulted = c.clone();
    defaulted.extend(defaults.iter().cloned().collect());
    let (refined, state) = refine(defaulted.clone(), close(&defaulted)?, supply)?;
    let completed = complete(&refined, &state, supply);
    let closure = close(&completed)?;
    let use_constraints = extract_use_constraints(&closure);
    let mut uses = solve_uses(&use_constraints, opts.omega_fallback)?;
    for r in completed.use_vars() {
        uses.entry(r).or_insert(Use::Zero);
    }
    let substitution = synthesize(&closure, &uses, store);
    let report = SolveReport {
        defaults,
        completion: completed.iter().skip(defaulted.len()).cloned().collect(),
        partitions: partition_uses(&use_constraints),
        use_constraints,
        closure,
    };
    Ok((substitution, report))
}

/// Rounds of [`refine`] before falling back to plain completion.
const MAX_REFINE_ROUNDS: usize = 64;

/// Alternates combination propagation with the completion of variables
/// that are not combinations, so that completion instantiates as few
/// combined variables as possible.
fn refine(
    mut c: ConstraintSet,
    mut state: ClosureState,
    supply: &mut VarSupply,
) -> Result<(ConstraintSet, ClosureState), SolveError> {
    let mut propagator = closure::Propagator::default();
    for _ in 0..MAX_REFINE_ROUNDS {
        let added = propagator.round(&state, supply);
        if added.iter().any(|k| !c.contains(k)) {
            c.extend(added);
            state = close(&c)?;
            continue;
        }
        let leaves = undefined_leaves(&state);
        if leaves.is_empty() {
            break;
        }
        c = complete_only(&c, &state, supply, &leaves);
        state = close(&c)?;
    }
    Ok((c, state))
}

/// Everything inferred for a process.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// The type of every free name.
    pub env: TypeEnv,
    pub synthesized: SynthEnv,
    pub constraints: ConstraintSet,
    pub substitution: GroundSubstitution,
    pub report: SolveReport,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InferOptions {
    pub generation: GenOptions,
    pub solving: SolveOptions,
}

/// Generates and solves the constraints of `p`. Names whose synthesized
/// type has no variable in the constraints get `int`.
pub fn reconstruct(p: &Process, store: &mut TypeStore, opts: InferOptions) -> Result<Reconstruction, SolveError> {
    let mut supply = VarSupply::new();
    let (synthesized, constraints) = gen_process_with(p, &mut supply, opts.generation);
    let (mut substitution, report) = solve_with(&constraints, store, &mut supply, opts.solving)?;
    let mut free = BTreeSet::new();
    for t in synthesized.values() {
        t.type_vars(&mut free);
    }
    let int = store.int();
    for v in free {
        substitution.type_bindings.entry(v).or_insert(int);
    }
    let env = substitution
        .apply_env(store, &synthesized)
        .expect("every variable is bound");
    Ok(Reconstruction {
        env,
        synthesized,
        constraints,
        substitution,
        report,
    })
}

/// Builds the regular types denoted by the use-evaluated
/// `≐`-representatives of every variable of a completed, closed set.
pub fn synthesize(s: &ClosureState, ua: &UseAssignment, store: &mut TypeStore) -> GroundSubstitution {
    let mut equations: BTreeMap<TypeVar, Shape<TypeVar>> = BTreeMap::new();
    for (v, id) in s.var_terms() {
        let rep = s.least(Relation::Eq, id);
        let shape = match s.term(rep) {
            Term::Var(_) => Shape::Int,
            _ => shape_of(s, rep, ua),
        };
        equations.insert(v.clone(), shape);
    }
    let type_bindings = store
        .make_type(&equations)
        .expect("representatives of a completed set are proper");
    GroundSubstitution {
        type_bindings,
        use_bindings: ua.clone(),
    }
}

fn shape_of(s: &ClosureState, id: closure::TermId, ua: &UseAssignment) -> Shape<TypeVar> {
    let eval = |u: &crate::constraintgen::UseExpr| {
        u.eval(|r| Some(ua.get(&r).copied().unwrap_or(Use::Zero)))
            .expect("total assignment")
    };
    match s.term(id) {
        Term::Var(v) => Shape::Unknown(v.clone()),
        Term::Int => Shape::Int,
        Term::Chan(u, v, p) => Shape::chan(eval(u), eval(v), shape_of(s, *p, ua)),
        Term::Prod(a, b) => Shape::prod(shape_of(s, *a, ua), shape_of(s, *b, ua)),
        Term::Sum(a, b) => Shape::sum(shape_of(s, *a, ua), shape_of(s, *b, ua)),
    }
}

#[cfg(test)]
mod tests;
