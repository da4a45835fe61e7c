//! Evaluation of expressions and labelled reduction of processes.
//!
//! A process is first normalized into a flat parallel composition under a
//! list of restrictions, renaming restricted names to fresh channels. Each
//! replicated component may additionally be unfolded once (up to a fuel
//! bound) to expose redexes in a copy of its body. The rule that would
//! absorb a copy back into a replication is never applied.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{fresh_name, Expression, Name, NameKind, Process};

/// Replication unfoldings allowed per step by [`run`].
pub const DEFAULT_FUEL: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Tau,
    Comm(Name),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("tau"),
            Label::Comm(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Redex {
    pub label: Label,
    pub residual: Process,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("stuck expression: {0}")]
    StuckExpression(String),
}

pub fn eval(e: &Expression) -> Result<Expression, EvalError> {
    let stuck = || EvalError::StuckExpression(e.to_string());
    match e {
        Expression::IntLit(n) => Ok(Expression::IntLit(*n)),
        Expression::Name(n) if n.is_channel() => Ok(e.clone()),
        Expression::Name(_) => Err(stuck()),
        Expression::Pair(a, b) => Ok(Expression::pair(eval(a)?, eval(b)?)),
        Expression::Fst(a) | Expression::Snd(a) => match eval(a)? {
            Expression::Pair(x, y) => Ok(if matches!(e, Expression::Fst(_)) { *x } else { *y }),
            _ => Err(stuck()),
        },
        Expression::Inl(a) => Ok(Expression::inl(eval(a)?)),
        Expression::Inr(a) => Ok(Expression::inr(eval(a)?)),
        Expression::Add(a, b) => match (eval(a)?, eval(b)?) {
            (Expression::IntLit(x), Expression::IntLit(y)) => {
                x.checked_add(y).map(Expression::IntLit).ok_or_else(stuck)
            }
            _ => Err(stuck()),
        },
    }
}

/// Turns every free variable into the channel with the same text, so
/// that a parsed program can run.
pub fn close_free_variables(p: &Process) -> Process {
    let mut out = p.clone();
    for x in p.free_names() {
        if x.kind == NameKind::Variable {
            let c = Expression::Name(x.with_kind(NameKind::Channel));
            out = out.substitute(&x, &c).expect("channels are values");
        }
    }
    out
}

struct Comp {
    proc_: Process,
    /// `None` for the base composition, otherwise the unfolding it came from.
    group: Option<usize>,
}

struct Soup {
    binders: Vec<(Name, Option<usize>)>,
    comps: Vec<Comp>,
    avoid: BTreeSet<Name>,
}

impl Soup {
    fn flatten(&mut self, p: &Process, group: Option<usize>) {
        match p {
            Process::Idle => {}
            Process::Par(l, r) => {
                self.flatten(l, group);
                self.flatten(r, group);
            }
            Process::New { binder, body } => {
                let c = fresh_name(&binder.with_kind(NameKind::Channel), &self.avoid);
                self.avoid.insert(c.clone());
                let body = if &c == binder {
                    (**body).clone()
                } else {
                    body.rename(binder, &c)
                };
                self.binders.push((c, group));
                self.flatten(&body, group);
            }
            _ => self.comps.push(Comp {
                proc_: p.clone(),
                group,
            }),
        }
    }

    fn residual(&self, replaced: &[(usize, Option<Process>)], label_chan: Option<&Name>) -> Redex {
        let groups: BTreeSet<usize> = replaced.iter().filter_map(|(i, _)| self.comps[*i].group).collect();
        let keep = |g: Option<usize>| g.is_none_or(|g| groups.contains(&g));
        let mut parts = Vec::new();
        for (i, comp) in self.comps.iter().enumerate() {
            if !keep(comp.group) {
                continue;
            }
            match replaced.iter().find(|(j, _)| *j == i) {
                Some((_, Some(q))) => parts.push(q.clone()),
                Some((_, None)) => {}
                None => parts.push(comp.proc_.clone()),
            }
        }
        let binders: Vec<&Name> = self.binders.iter().filter(|(_, g)| keep(*g)).map(|(n, _)| n).collect();
        let mut body = parts
            .into_iter()
            .filter(|p| *p != Process::Idle)
            .reduce(Process::par)
            .unwrap_or(Process::Idle);
        for b in binders.iter().rev() {
            body = Process::new_chan((*b).clone(), body);
        }
        let label = match label_chan {
            Some(c) if !binders.contains(&c) => Label::Comm(c.clone()),
            _ => Label::Tau,
        };
        Redex { label, residual: body }
    }
}

/// All one-step successors of `p`, in a fixed order. At most `fuel_repl`
/// replications are unfolded.
pub fn step(p: &Process, fuel_repl: usize) -> Vec<Redex> {
    let mut soup = Soup {
        binders: Vec::new(),
        comps: Vec::new(),
        avoid: p.free_names(),
    };
    soup.flatten(p, None);
    let mut fuel = fuel_repl;
    let mut next = 0;
    let mut group = 0;
    while fuel > 0 && next < soup.comps.len() {
        if let Process::Repl(body) = &soup.comps[next].proc_ {
            let body = (**body).clone();
            soup.flatten(&body, Some(group));
            group += 1;
            fuel -= 1;
        }
        next += 1;
    }

    let mut out = Vec::new();
    for i in 0..soup.comps.len() {
        match &soup.comps[i].proc_ {
            Process::Case {
                scrutinee,
                left_binder,
                left_body,
                right_binder,
                right_body,
            } => {
                let q = match eval(scrutinee) {
                    Ok(Expression::Inl(v)) => left_body.substitute(left_binder, &v),
                    Ok(Expression::Inr(v)) => right_body.substitute(right_binder, &v),
                    _ => continue,
                };
                out.push(soup.residual(&[(i, Some(q.expect("evaluated to a value")))], None));
            }
            Process::Split {
                scrutinee,
                fst_binder,
                snd_binder,
                body,
            } => {
                let Ok(Expression::Pair(v, w)) = eval(scrutinee) else {
                    continue;
                };
                let q = body
                    .substitute(fst_binder, &v)
                    .and_then(|b| b.substitute(snd_binder, &w))
                    .expect("evaluated to values");
                out.push(soup.residual(&[(i, Some(q))], None));
            }
            Process::Output { subject, object } => {
                let (Ok(Expression::Name(c)), Ok(v)) = (eval(subject), eval(object)) else {
                    continue;
                };
                for j in 0..soup.comps.len() {
                    let Process::Input {
                        subject: s2,
                        binder,
                        body,
                    } = &soup.comps[j].proc_
                    else {
                        continue;
                    };
                    if eval(s2).ok() != Some(Expression::Name(c.clone())) {
                        continue;
                    }
                    let q = body.substitute(binder, &v).expect("evaluated to a value");
                    out.push(soup.residual(&[(i, None), (j, Some(q))], Some(&c)));
                }
            }
            _ => {}
        }
    }
    out
}

/// Reduces `p` (after closing its free variables) by picking a redex at
/// random at each step, until none is left or `max_steps` is reached.
pub fn run(p: &Process, max_steps: usize, seed: u64) -> Vec<(Label, Process)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = close_free_variables(p);
    let mut trace = Vec::new();
    for _ in 0..max_steps {
        let mut redexes = step(&current, DEFAULT_FUEL);
        if redexes.is_empty() {
            break;
        }
        let Redex { label, residual } = redexes.swap_remove(rng.random_range(0..redexes.len()));
        trace.push((label, residual.clone()));
        current = residual;
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_process;

    fn closed(src: &str) -> Process {
        close_free_variables(&parse_process(src).unwrap())
    }

    #[test]
    fn evaluation() {
        let e = Expression::fst(Expression::pair(Expression::IntLit(3), Expression::chan("a")));
        assert_eq!(eval(&e), Ok(Expression::IntLit(3)));
        let e = Expression::inr(Expression::IntLit(5));
        assert_eq!(eval(&e), Ok(e.clone()));
        assert!(eval(&Expression::snd(Expression::IntLit(3))).is_err());
        assert!(eval(&Expression::var("x")).is_err());
        let e = Expression::add(Expression::IntLit(39), Expression::IntLit(1));
        assert_eq!(eval(&e), Ok(Expression::IntLit(40)));
    }

    #[test]
    fn communication() {
        let r = step(&closed("a!3 | a?(x).idle"), 4);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].label, Label::Comm(Name::chan("a")));
        assert_eq!(r[0].residual, Process::Idle);
    }

    #[test]
    fn case_selects_branch() {
        let r = step(&closed("case inl 3 of { inl(x) => y!x; inr(z) => idle }"), 4);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].label, Label::Tau);
        assert!(r[0].residual.alpha_equal(&closed("y!3")));
    }

    #[test]
    fn restriction_hides_label() {
        let r = step(&closed("new a in (a!3 | a?(x).idle)"), 4);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].label, Label::Tau);
        assert!(r[0]
            .residual
            .alpha_equal(&Process::new_chan(Name::chan("a"), Process::Idle)));
    }

    #[test]
    fn split_projects_pairs() {
        let r = step(&closed("let (x, y) = (1, c) in y!x"), 0);
        assert_eq!(r.len(), 1);
        assert!(r[0].residual.alpha_equal(&closed("c!1")));
    }

    #[test]
    fn replication_is_unfolded_not_absorbed() {
        let p = closed("*a?(x).b!x | a!1");
        let r = step(&p, 4);
        assert_eq!(r.len(), 1);
        assert!(r[0].residual.alpha_equal(&closed("*a?(x).b!x | b!1")));
        assert!(step(&p, 0).is_empty());
        // A spare copy next to the replication stays where it is.
        let q = closed("*c?(y).c!y | c?(y).c!y");
        assert!(step(&q, 4).is_empty());
    }

    #[test]
    fn successor_program_prints_forty() {
        let p = parse_process("*succ?(p). (snd p)!((fst p)+1) | new a in (succ!(39, a) | a?(c). print!c)").unwrap();
        let trace = run(&p, 10, 7);
        let last = &trace.last().unwrap().1;
        assert!(last.to_string().contains("print!40"), "{last}");
        assert_eq!(trace, run(&p, 10, 7));
    }

    #[test]
    fn idle_has_empty_trace() {
        assert!(run(&Process::Idle, 10, 0).is_empty());
    }
}
