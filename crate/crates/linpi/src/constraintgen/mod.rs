//! Syntax-directed constraint generation.
//!
//! Every name occurrence gets a fresh type variable; environments produced
//! by sub-terms are combined (shared names get a combination constraint)
//! or merged (the branches of a `case` must agree). Weakening is inserted
//! at binders whose name does not occur in the body and before merging
//! branch environments with different domains.

mod terms;

use std::collections::BTreeMap;

use thiserror::Error;

pub use terms::{Constraint, ConstraintSet, TypeExpr, TypeVar, UseExpr, UseVar, VarSupply};

use crate::ast::{Expression, Name, Process};

/// Names with their type expressions.
pub type SynthEnv = BTreeMap<Name, TypeExpr>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("environments to merge have different domains")]
    DomainMismatch,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenOptions {
    /// Lets a restricted channel have independent input and output uses.
    pub unbalanced_new: bool,
}

/// Shared names get a fresh `α` with `α ≐ Δ1(u) + Δ2(u)`.
pub fn combine_envs(d1: &SynthEnv, d2: &SynthEnv, supply: &mut VarSupply) -> (SynthEnv, ConstraintSet) {
    let mut env = d1.clone();
    let mut cs = ConstraintSet::new();
    for (u, t) in d2 {
        match d1.get(u) {
            Some(s) => {
                let alpha = TypeExpr::Var(supply.fresh_type());
                cs.insert(Constraint::TComb(alpha.clone(), s.clone(), t.clone()));
                env.insert(u.clone(), alpha);
            }
            None => {
                env.insert(u.clone(), t.clone());
            }
        }
    }
    (env, cs)
}

/// Both environments must have the same domain; each name contributes
/// `Δ1(u) ≐ Δ2(u)`.
pub fn merge_envs(d1: &SynthEnv, d2: &SynthEnv) -> Result<(SynthEnv, ConstraintSet), GenError> {
    if d1.len() != d2.len() || d1.keys().any(|u| !d2.contains_key(u)) {
        return Err(GenError::DomainMismatch);
    }
    let cs = d1
        .iter()
        .map(|(u, t)| Constraint::TEq(t.clone(), d2[u].clone()))
        .collect();
    Ok((d1.clone(), cs))
}

pub fn gen_expression(e: &Expression, supply: &mut VarSupply) -> (TypeExpr, SynthEnv, ConstraintSet) {
    match e {
        Expression::IntLit(_) => (TypeExpr::Int, SynthEnv::new(), ConstraintSet::new()),
        Expression::Name(u) => {
            let alpha = TypeExpr::Var(supply.fresh_type());
            (
                alpha.clone(),
                SynthEnv::from([(u.clone(), alpha)]),
                ConstraintSet::new(),
            )
        }
        Expression::Pair(a, b) => {
            let (t1, d1, mut c) = gen_expression(a, supply);
            let (t2, d2, c2) = gen_expression(b, supply);
            let (d, c3) = combine_envs(&d1, &d2, supply);
            c.extend(c2);
            c.extend(c3);
            (TypeExpr::prod(t1, t2), d, c)
        }
        Expression::Fst(a) | Expression::Snd(a) => {
            let (t, d, mut c) = gen_expression(a, supply);
            let alpha = TypeExpr::Var(supply.fresh_type());
            let beta = TypeExpr::Var(supply.fresh_type());
            c.insert(Constraint::TEq(t, TypeExpr::prod(alpha.clone(), beta.clone())));
            let (kept, dropped) = if matches!(e, Expression::Fst(_)) {
                (alpha, beta)
            } else {
                (beta, alpha)
            };
            c.insert(Constraint::un(dropped));
            (kept, d, c)
        }
        Expression::Inl(a) | Expression::Inr(a) => {
            let (t, d, c) = gen_expression(a, supply);
            let other = TypeExpr::Var(supply.fresh_type());
            let ty = if matches!(e, Expression::Inl(_)) {
                TypeExpr::sum(t, other)
            } else {
                TypeExpr::sum(other, t)
            };
            (ty, d, c)
        }
        Expression::Add(a, b) => {
            let (t1, d1, mut c) = gen_expression(a, supply);
            let (t2, d2, c2) = gen_expression(b, supply);
            let (d, c3) = combine_envs(&d1, &d2, supply);
            c.extend(c2);
            c.extend(c3);
            for t in [t1, t2] {
                if t != TypeExpr::Int {
                    c.insert(Constraint::TEq(t, TypeExpr::Int));
                }
            }
            (TypeExpr::Int, d, c)
        }
    }
}

pub fn gen_process(p: &Process, supply: &mut VarSupply) -> (SynthEnv, ConstraintSet) {
    gen_process_with(p, supply, GenOptions::default())
}

pub fn gen_process_with(p: &Process, supply: &mut VarSupply, opts: GenOptions) -> (SynthEnv, ConstraintSet) {
    Generator { supply, opts }.process(p)
}

struct Generator<'a> {
    supply: &'a mut VarSupply,
    opts: GenOptions,
}

impl Generator<'_> {
    /// Removes `x` from `env`, weakening when it does not occur.
    fn take(&mut self, env: &mut SynthEnv, x: &Name, cs: &mut ConstraintSet) -> TypeExpr {
        match env.remove(x) {
            Some(t) => t,
            None => self.weak(cs),
        }
    }

    fn weak(&mut self, cs: &mut ConstraintSet) -> TypeExpr {
        let alpha = TypeExpr::Var(self.supply.fresh_type());
        cs.insert(Constraint::un(alpha.clone()));
        alpha
    }

    fn combine(&mut self, d1: &SynthEnv, d2: &SynthEnv, cs: &mut ConstraintSet) -> SynthEnv {
        let (d, c) = combine_envs(d1, d2, self.supply);
        cs.extend(c);
        d
    }

    fn process(&mut self, p: &Process) -> (SynthEnv, ConstraintSet) {
        match p {
            Process::Idle => (SynthEnv::new(), ConstraintSet::new()),
            Process::Input { subject, binder, body } => {
                let (t, d1, mut cs) = gen_expression(subject, self.supply);
                let (mut d2, c2) = self.process(body);
                cs.extend(c2);
                let s = self.take(&mut d2, binder, &mut cs);
                let r1 = self.supply.fresh_use();
                let r2 = self.supply.fresh_use();
                let d = self.combine(&d1, &d2, &mut cs);
                cs.insert(Constraint::TEq(
                    t,
                    TypeExpr::chan(UseExpr::one_plus(r1), UseExpr::twice(r2), s),
                ));
                (d, cs)
            }
            Process::Output { subject, object } => {
                let (t, d1, mut cs) = gen_expression(subject, self.supply);
                let (s, d2, c2) = gen_expression(object, self.supply);
                cs.extend(c2);
                let r1 = self.supply.fresh_use();
                let r2 = self.supply.fresh_use();
                let d = self.combine(&d1, &d2, &mut cs);
                cs.insert(Constraint::TEq(
                    t,
                    TypeExpr::chan(UseExpr::twice(r1), UseExpr::one_plus(r2), s),
                ));
                (d, cs)
            }
            Process::Par(l, r) => {
                let (d1, mut cs) = self.process(l);
                let (d2, c2) = self.process(r);
                cs.extend(c2);
                let d = self.combine(&d1, &d2, &mut cs);
                (d, cs)
            }
            Process::Repl(body) => {
                let (d, mut cs) = self.process(body);
                let d = self.combine(&d, &d, &mut cs);
                (d, cs)
            }
            Process::New { binder, body } => {
                let (mut d, mut cs) = self.process(body);
                let t = self.take(&mut d, binder, &mut cs);
                let payload = TypeExpr::Var(self.supply.fresh_type());
                let r1 = self.supply.fresh_use();
                let r2 = if self.opts.unbalanced_new {
                    self.supply.fresh_use()
                } else {
                    r1
                };
                cs.insert(Constraint::TEq(
                    t,
                    TypeExpr::chan(UseExpr::var(r1), UseExpr::var(r2), payload),
                ));
                (d, cs)
            }
            Process::Case {
                scrutinee,
                left_binder,
                left_body,
                right_binder,
                right_body,
            } => {
                let (t, d1, mut cs) = gen_expression(scrutinee, self.supply);
                let (mut dl, cl) = self.process(left_body);
                cs.extend(cl);
                let tl = self.take(&mut dl, left_binder, &mut cs);
                let (mut dr, cr) = self.process(right_body);
                cs.extend(cr);
                let tr = self.take(&mut dr, right_binder, &mut cs);
                let missing_right: Vec<Name> = dl.keys().filter(|u| !dr.contains_key(*u)).cloned().collect();
                let missing_left: Vec<Name> = dr.keys().filter(|u| !dl.contains_key(*u)).cloned().collect();
                for u in missing_right {
                    let w = self.weak(&mut cs);
                    dr.insert(u, w);
                }
                for u in missing_left {
                    let w = self.weak(&mut cs);
                    dl.insert(u, w);
                }
                let (d2, cm) = merge_envs(&dl, &dr).expect("domains were equalized");
                cs.extend(cm);
                let d = self.combine(&d1, &d2, &mut cs);
                cs.insert(Constraint::TEq(t, TypeExpr::sum(tl, tr)));
                (d, cs)
            }
            Process::Split {
                scrutinee,
                fst_binder,
                snd_binder,
                body,
            } => {
                let (t, d1, mut cs) = gen_expression(scrutinee, self.supply);
                let (mut d2, c2) = self.process(body);
                cs.extend(c2);
                let tx = self.take(&mut d2, fst_binder, &mut cs);
                let ty = self.take(&mut d2, snd_binder, &mut cs);
                let d = self.combine(&d1, &d2, &mut cs);
                cs.insert(Constraint::TEq(t, TypeExpr::prod(tx, ty)));
                (d, cs)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse_expression, parse_process};

    fn v(n: u32) -> TypeExpr {
        TypeExpr::Var(TypeVar::Gen(n))
    }

    #[test]
    fn combining_and_merging() {
        let a = Name::var("a");
        let b = Name::var("b");
        let mut s = VarSupply::starting_at(10, 0);
        let (d, c) = combine_envs(
            &SynthEnv::from([(a.clone(), v(1))]),
            &SynthEnv::from([(a.clone(), v(2))]),
            &mut s,
        );
        assert_eq!(d, SynthEnv::from([(a.clone(), v(10))]));
        assert_eq!(
            c.iter().collect::<Vec<_>>(),
            vec![&Constraint::TComb(v(10), v(1), v(2))]
        );
        let (d, c) = combine_envs(
            &SynthEnv::from([(a.clone(), v(1))]),
            &SynthEnv::from([(b.clone(), v(2))]),
            &mut s,
        );
        assert_eq!(d.len(), 2);
        assert!(c.is_empty());
        let (d, c) = combine_envs(&SynthEnv::new(), &SynthEnv::new(), &mut s);
        assert!(d.is_empty() && c.is_empty());

        let (d, c) = merge_envs(
            &SynthEnv::from([(a.clone(), v(1))]),
            &SynthEnv::from([(a.clone(), v(2))]),
        )
        .unwrap();
        assert_eq!(d, SynthEnv::from([(a.clone(), v(1))]));
        assert!(c.contains(&Constraint::TEq(v(1), v(2))));
        assert!(merge_envs(&SynthEnv::new(), &SynthEnv::new()).unwrap().1.is_empty());
        assert_eq!(
            merge_envs(&SynthEnv::from([(a, v(1))]), &SynthEnv::new()),
            Err(GenError::DomainMismatch)
        );
    }

    #[test]
    fn name_and_projection() {
        let mut s = VarSupply::new();
        let (t, d, c) = gen_expression(&parse_expression("u").unwrap(), &mut s);
        assert_eq!(t, v(0));
        assert_eq!(d[&Name::var("u")], v(0));
        assert!(c.is_empty());

        let mut s = VarSupply::new();
        let (t, d, c) = gen_expression(&parse_expression("fst x").unwrap(), &mut s);
        assert_eq!(t, v(1));
        assert_eq!(d[&Name::var("x")], v(0));
        assert!(c.contains(&Constraint::TEq(v(0), TypeExpr::prod(v(1), v(2)))));
        assert!(c.contains(&Constraint::un(v(2))));
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn pair_of_projections_combines() {
        let mut s = VarSupply::new();
        let (t, d, c) = gen_expression(&parse_expression("(fst x, snd x)").unwrap(), &mut s);
        assert!(matches!(t, TypeExpr::Prod(..)));
        let TypeExpr::Var(x) = &d[&Name::var("x")] else {
            panic!()
        };
        assert!(c
            .iter()
            .any(|k| matches!(k, Constraint::TComb(TypeExpr::Var(a), _, _) if a == x)));
    }

    #[test]
    fn generated_sets_have_only_equalities_and_combinations() {
        let p = parse_process("*a?(x). case x of { inl(y) => y!1; inr(z) => let (u, w) = z in u!w } | new c in c!3")
            .unwrap();
        let (d, c) = gen_process(&p, &mut VarSupply::new());
        assert!(c
            .iter()
            .all(|k| matches!(k, Constraint::TEq(..) | Constraint::TComb(..))));
        assert_eq!(
            d.keys().cloned().collect::<std::collections::BTreeSet<_>>(),
            p.free_names()
        );
    }

    #[test]
    fn unbalanced_restriction_uses_two_variables() {
        let p = parse_process("new a in a!1").unwrap();
        let (_, c) = gen_process_with(&p, &mut VarSupply::new(), GenOptions { unbalanced_new: true });
        let balanced = c.iter().any(|k| match k {
            Constraint::TEq(_, TypeExpr::Chan(i, o, _)) => i.as_var().is_some() && i == o,
            _ => false,
        });
        assert!(!balanced);
    }
}
