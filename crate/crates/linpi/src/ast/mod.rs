//! Processes and expressions of the linear π-calculus.
//!
//! Names are either variables, which the parser produces, or channels,
//! which only the interpreter mints. The two kinds never compare equal
//! even when they share the same text.

pub(crate) mod parse;
mod render;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use parse::{parse_expression, parse_process, ParseError};
pub use render::{render_expression, render_process};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NameKind {
    Variable,
    Channel,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    pub kind: NameKind,
    pub text: String,
}

impl Name {
    pub fn var(text: impl Into<String>) -> Name {
        Name {
            kind: NameKind::Variable,
            text: text.into(),
        }
    }

    pub fn chan(text: impl Into<String>) -> Name {
        Name {
            kind: NameKind::Channel,
            text: text.into(),
        }
    }

    pub fn is_channel(&self) -> bool {
        self.kind == NameKind::Channel
    }

    /// The same text, as the other kind.
    pub fn with_kind(&self, kind: NameKind) -> Name {
        Name {
            kind,
            text: self.text.clone(),
        }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expression {
    IntLit(i64),
    Name(Name),
    Pair(Box<Expression>, Box<Expression>),
    Fst(Box<Expression>),
    Snd(Box<Expression>),
    Inl(Box<Expression>),
    Inr(Box<Expression>),
    Add(Box<Expression>, Box<Expression>),
}

impl Expression {
    pub fn var(text: &str) -> Expression {
        Expression::Name(Name::var(text))
    }

    pub fn chan(text: &str) -> Expression {
        Expression::Name(Name::chan(text))
    }

    pub fn pair(a: Expression, b: Expression) -> Expression {
        Expression::Pair(Box::new(a), Box::new(b))
    }

    pub fn fst(a: Expression) -> Expression {
        Expression::Fst(Box::new(a))
    }

    pub fn snd(a: Expression) -> Expression {
        Expression::Snd(Box::new(a))
    }

    pub fn inl(a: Expression) -> Expression {
        Expression::Inl(Box::new(a))
    }

    pub fn inr(a: Expression) -> Expression {
        Expression::Inr(Box::new(a))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expression, b: Expression) -> Expression {
        Expression::Add(Box::new(a), Box::new(b))
    }

    /// Values are integers, channels, and pairs or injections of values.
    pub fn is_value(&self) -> bool {
        match self {
            Expression::IntLit(_) => true,
            Expression::Name(n) => n.is_channel(),
            Expression::Pair(a, b) => a.is_value() && b.is_value(),
            Expression::Inl(a) | Expression::Inr(a) => a.is_value(),
            Expression::Fst(_) | Expression::Snd(_) | Expression::Add(..) => false,
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Expression::IntLit(_) => {}
            Expression::Name(n) => {
                out.insert(n.clone());
            }
            Expression::Pair(a, b) | Expression::Add(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Expression::Fst(a) | Expression::Snd(a) | Expression::Inl(a) | Expression::Inr(a) => a.collect_names(out),
        }
    }

    /// Replaces every occurrence of `x` by `v`. Expressions bind nothing.
    pub fn substitute(&self, x: &Name, v: &Expression) -> Expression {
        match self {
            Expression::IntLit(n) => Expression::IntLit(*n),
            Expression::Name(n) if n == x => v.clone(),
            Expression::Name(n) => Expression::Name(n.clone()),
            Expression::Pair(a, b) => Expression::pair(a.substitute(x, v), b.substitute(x, v)),
            Expression::Add(a, b) => Expression::add(a.substitute(x, v), b.substitute(x, v)),
            Expression::Fst(a) => Expression::fst(a.substitute(x, v)),
            Expression::Snd(a) => Expression::snd(a.substitute(x, v)),
            Expression::Inl(a) => Expression::inl(a.substitute(x, v)),
            Expression::Inr(a) => Expression::inr(a.substitute(x, v)),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_expression(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Process {
    Idle,
    Input {
        subject: Expression,
        binder: Name,
        body: Box<Process>,
    },
    Output {
        subject: Expression,
        object: Expression,
    },
    Par(Box<Process>, Box<Process>),
    Repl(Box<Process>),
    New {
        binder: Name,
        body: Box<Process>,
    },
    Case {
        scrutinee: Expression,
        left_binder: Name,
        left_body: Box<Process>,
        right_binder: Name,
        right_body: Box<Process>,
    },
    Split {
        scrutinee: Expression,
        fst_binder: Name,
        snd_binder: Name,
        body: Box<Process>,
    },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AstError {
    #[error("`{0}` is not a value")]
    NotAValue(String),
}

impl Process {
    pub fn input(subject: Expression, binder: Name, body: Process) -> Process {
        Process::Input {
            subject,
            binder,
            body: Box::new(body),
        }
    }

    pub fn output(subject: Expression, object: Expression) -> Process {
        Process::Output { subject, object }
    }

    pub fn par(l: Process, r: Process) -> Process {
        Process::Par(Box::new(l), Box::new(r))
    }

    pub fn repl(p: Process) -> Process {
        Process::Repl(Box::new(p))
    }

    pub fn new_chan(binder: Name, body: Process) -> Process {
        Process::New {
            binder,
            body: Box::new(body),
        }
    }

    pub fn case(
        scrutinee: Expression,
        left_binder: Name,
        left_body: Process,
        right_binder: Name,
        right_body: Process,
    ) -> Process {
        Process::Case {
            scrutinee,
            left_binder,
            left_body: Box::new(left_body),
            right_binder,
            right_body: Box::new(right_body),
        }
    }

    pub fn split(scrutinee: Expression, fst_binder: Name, snd_binder: Name, body: Process) -> Process {
        Process::Split {
            scrutinee,
            fst_binder,
            snd_binder,
            body: Box::new(body),
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Name>) {
        let without = |p: &Process, bound: &[&Name], out: &mut BTreeSet<Name>| {
            let mut inner = p.free_names();
            for b in bound {
                inner.remove(*b);
            }
            out.extend(inner);
        };
        match self {
            Process::Idle => {}
            Process::Input { subject, binder, body } => {
                subject.collect_names(out);
                without(body, &[binder], out);
            }
            Process::Output { subject, object } => {
                subject.collect_names(out);
                object.collect_names(out);
            }
            Process::Par(l, r) => {
                l.collect_free(out);
                r.collect_free(out);
            }
            Process::Repl(p) => p.collect_free(out),
            Process::New { binder, body } => without(body, &[binder], out),
            Process::Case {
                scrutinee,
                left_binder,
                left_body,
                right_binder,
                right_body,
            } => {
                scrutinee.collect_names(out);
                without(left_body, &[left_binder], out);
                without(right_body, &[right_binder], out);
            }
            Process::Split {
                scrutinee,
                fst_binder,
                snd_binder,
                body,
            } => {
                scrutinee.collect_names(out);
                without(body, &[fst_binder, snd_binder], out);
            }
        }
    }

    /// Capture-avoiding substitution `P{v/x}`; `v` must be a value.
    pub fn substitute(&self, x: &Name, v: &Expression) -> Result<Process, AstError> {
        if !v.is_value() {
            return Err(AstError::NotAValue(render_expression(v)));
        }
        Ok(self.subst(x, v, &v.free_names()))
    }

    /// Renames free occurrences of `from` to `to`, avoiding capture.
    pub fn rename(&self, from: &Name, to: &Name) -> Process {
        let v = Expression::Name(to.clone());
        self.subst(from, &v, &BTreeSet::from([to.clone()]))
    }

    fn subst(&self, x: &Name, v: &Expression, fv: &BTreeSet<Name>) -> Process {
        match self {
            Process::Idle => Process::Idle,
            Process::Input { subject, binder, body } => {
                let (binder, body) = subst_under(binder, body, x, v, fv);
                Process::input(subject.substitute(x, v), binder, body)
            }
            Process::Output { subject, object } => Process::output(subject.substitute(x, v), object.substitute(x, v)),
            Process::Par(l, r) => Process::par(l.subst(x, v, fv), r.subst(x, v, fv)),
            Process::Repl(p) => Process::repl(p.subst(x, v, fv)),
            Process::New { binder, body } => {
                let (binder, body) = subst_under(binder, body, x, v, fv);
                Process::new_chan(binder, body)
            }
            Process::Case {
                scrutinee,
                left_binder,
                left_body,
                right_binder,
                right_body,
            } => {
                let (lb, lp) = subst_under(left_binder, left_body, x, v, fv);
                let (rb, rp) = subst_under(right_binder, right_body, x, v, fv);
                Process::case(scrutinee.substitute(x, v), lb, lp, rb, rp)
            }
            Process::Split {
                scrutinee,
                fst_binder,
                snd_binder,
                body,
            } => {
                let scrutinee = scrutinee.substitute(x, v);
                if fst_binder == x || snd_binder == x || !body.free_names().contains(x) {
                    return Process::split(scrutinee, fst_binder.clone(), snd_binder.clone(), (**body).clone());
                }
                let mut avoid = body.free_names();
                avoid.extend(fv.iter().cloned());
                avoid.insert(x.clone());
                let mut body = (**body).clone();
                let mut binders = [fst_binder.clone(), snd_binder.clone()];
                for i in 0..2 {
                    if fv.contains(&binders[i]) {
                        avoid.insert(binders[1 - i].clone());
                        let fresh = fresh_name(&binders[i], &avoid);
                        body = body.rename(&binders[i], &fresh);
                        avoid.insert(fresh.clone());
                        binders[i] = fresh;
                    }
                }
                let [f, s] = binders;
                Process::split(scrutinee, f, s, body.subst(x, v, fv))
            }
        }
    }

    pub fn alpha_equal(&self, other: &Process) -> bool {
        alpha_proc(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_process(self))
    }
}

fn subst_under(binder: &Name, body: &Process, x: &Name, v: &Expression, fv: &BTreeSet<Name>) -> (Name, Process) {
    if binder == x {
        return (binder.clone(), body.clone());
    }
    let body_fn = body.free_names();
    if !body_fn.contains(x) {
        return (binder.clone(), body.clone());
    }
    if fv.contains(binder) {
        let mut avoid = body_fn;
        avoid.extend(fv.iter().cloned());
        avoid.insert(x.clone());
        let fresh = fresh_name(binder, &avoid);
        let renamed = body.rename(binder, &fresh);
        return (fresh, renamed.subst(x, v, fv));
    }
    (binder.clone(), body.subst(x, v, fv))
}

/// Primes `base` until it avoids every name in `avoid`.
pub fn fresh_name(base: &Name, avoid: &BTreeSet<Name>) -> Name {
    let mut candidate = base.clone();
    while avoid.contains(&candidate) {
        candidate.text.push('\'');
    }
    candidate
}

fn lookup(stack: &[Name], n: &Name) -> Option<usize> {
    stack.iter().rposition(|m| m == n)
}

fn alpha_name(a: &Name, b: &Name, sa: &[Name], sb: &[Name]) -> bool {
    match (lookup(sa, a), lookup(sb, b)) {
        (Some(i), Some(j)) => i == j,
        (None, None) => a == b,
        _ => false,
    }
}

fn alpha_expr(a: &Expression, b: &Expression, sa: &[Name], sb: &[Name]) -> bool {
    use Expression as E;
    match (a, b) {
        (E::IntLit(x), E::IntLit(y)) => x == y,
        (E::Name(x), E::Name(y)) => alpha_name(x, y, sa, sb),
        (E::Pair(a1, a2), E::Pair(b1, b2)) | (E::Add(a1, a2), E::Add(b1, b2)) => {
            alpha_expr(a1, b1, sa, sb) && alpha_expr(a2, b2, sa, sb)
        }
        (E::Fst(x), E::Fst(y)) | (E::Snd(x), E::Snd(y)) | (E::Inl(x), E::Inl(y)) | (E::Inr(x), E::Inr(y)) => {
            alpha_expr(x, y, sa, sb)
        }
        _ => false,
    }
}

fn alpha_bind(
    binders: (&[&Name], &[&Name]),
    bodies: (&Process, &Process),
    sa: &mut Vec<Name>,
    sb: &mut Vec<Name>,
) -> bool {
    for (x, y) in binders.0.iter().zip(binders.1) {
        sa.push((*x).clone());
        sb.push((*y).clone());
    }
    let ok = alpha_proc(bodies.0, bodies.1, sa, sb);
    for _ in binders.0 {
        sa.pop();
        sb.pop();
    }
    ok
}

fn alpha_proc(p: &Process, q: &Process, sa: &mut Vec<Name>, sb: &mut Vec<Name>) -> bool {
    use Process as P;
    match (p, q) {
        (P::Idle, P::Idle) => true,
        (
            P::Input {
                subject: s1,
                binder: x1,
                body: b1,
            },
            P::Input {
                subject: s2,
                binder: x2,
                body: b2,
            },
        ) => alpha_expr(s1, s2, sa, sb) && alpha_bind((&[x1], &[x2]), (b1, b2), sa, sb),
        (
            P::Output {
                subject: s1,
                object: o1,
            },
            P::Output {
                subject: s2,
                object: o2,
            },
        ) => alpha_expr(s1, s2, sa, sb) && alpha_expr(o1, o2, sa, sb),
        (P::Par(l1, r1), P::Par(l2, r2)) => alpha_proc(l1, l2, sa, sb) && alpha_proc(r1, r2, sa, sb),
        (P::Repl(a), P::Repl(b)) => alpha_proc(a, b, sa, sb),
        (P::New { binder: x1, body: b1 }, P::New { binder: x2, body: b2 }) => {
            alpha_bind((&[x1], &[x2]), (b1, b2), sa, sb)
        }
        (
            P::Case {
                scrutinee: e1,
                left_binder: l1,
                left_body: lp1,
                right_binder: r1,
                right_body: rp1,
            },
            P::Case {
                scrutinee: e2,
                left_binder: l2,
                left_body: lp2,
                right_binder: r2,
                right_body: rp2,
            },
        ) => {
            alpha_expr(e1, e2, sa, sb)
                && alpha_bind((&[l1], &[l2]), (lp1, lp2), sa, sb)
                && alpha_bind((&[r1], &[r2]), (rp1, rp2), sa, sb)
        }
        (
            P::Split {
                scrutinee: e1,
                fst_binder: x1,
                snd_binder: y1,
                body: b1,
            },
            P::Split {
                scrutinee: e2,
                fst_binder: x2,
                snd_binder: y2,
                body: b2,
            },
        ) => alpha_expr(e1, e2, sa, sb) && alpha_bind((&[x1, y1], &[x2, y2]), (b1, b2), sa, sb),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn out(s: &str, n: i64) -> Process {
        Process::output(Expression::var(s), Expression::IntLit(n))
    }

    #[test]
    fn free_names_respect_binders() {
        assert!(Process::Idle.free_names().is_empty());
        let p = Process::new_chan(Name::var("a"), out("a", 3));
        assert!(p.free_names().is_empty());
        let q = Process::par(Process::output(Expression::var("b"), Expression::var("a")), out("a", 3));
        assert_eq!(q.free_names(), BTreeSet::from([Name::var("a"), Name::var("b")]));
    }

    #[test]
    fn substitution_replaces_free_occurrences() {
        let p = Process::output(Expression::var("x"), Expression::IntLit(1));
        let r = p.substitute(&Name::var("x"), &Expression::chan("a")).unwrap();
        assert_eq!(r, Process::output(Expression::chan("a"), Expression::IntLit(1)));
    }

    #[test]
    fn substitution_stops_at_rebinding() {
        let p = Process::input(
            Expression::var("a"),
            Name::var("x"),
            Process::output(Expression::var("a"), Expression::var("x")),
        );
        let r = p.substitute(&Name::var("x"), &Expression::IntLit(5)).unwrap();
        assert_eq!(r, p);
    }

    #[test]
    fn substitution_avoids_capture() {
        let p = Process::new_chan(
            Name::chan("a"),
            Process::output(Expression::var("b"), Expression::var("y")),
        );
        let r = p.substitute(&Name::var("y"), &Expression::chan("a")).unwrap();
        match &r {
            Process::New { binder, body } => {
                assert_ne!(binder, &Name::chan("a"));
                assert_eq!(**body, Process::output(Expression::var("b"), Expression::chan("a")));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(r.free_names(), BTreeSet::from([Name::var("b"), Name::chan("a")]));
    }

    #[test]
    fn substitution_requires_value() {
        let err = Process::Idle.substitute(&Name::var("x"), &Expression::var("y"));
        assert!(matches!(err, Err(AstError::NotAValue(_))));
    }

    #[test]
    fn alpha_equality() {
        let a = Process::new_chan(Name::var("a"), out("a", 3));
        let b = Process::new_chan(Name::var("b"), out("b", 3));
        let c = Process::new_chan(Name::var("a"), out("a", 4));
        assert!(a.alpha_equal(&b));
        assert!(!a.alpha_equal(&c));
        let i1 = Process::input(Expression::var("c"), Name::var("x"), out("x", 1));
        let i2 = Process::input(Expression::var("c"), Name::var("y"), out("y", 1));
        assert!(i1.alpha_equal(&i2));
        let free = Process::input(Expression::var("c"), Name::var("y"), out("x", 1));
        assert!(!i1.alpha_equal(&free));
    }

    #[test]
    fn values() {
        assert!(Expression::pair(Expression::IntLit(1), Expression::chan("a")).is_value());
        assert!(!Expression::var("x").is_value());
        assert!(!Expression::fst(Expression::IntLit(1)).is_value());
    }
}
