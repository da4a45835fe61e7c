//! Shared test support: a generator of well-sorted processes and an
//! independent brute-force check of use minimality.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use linpi::ast::{parse_process, Process};
use linpi::constraintgen::UseVar;
use linpi::solver::{UseAssignment, UseEq};
use linpi::types::Use;

/// The shape of the values a name carries. Generating against sorts keeps
/// programs free of structural clashes while leaving uses unconstrained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sort {
    Int,
    Chan(Box<Sort>),
    Pair(Box<Sort>, Box<Sort>),
    Sum(Box<Sort>, Box<Sort>),
}

impl Sort {
    fn chan(s: Sort) -> Sort {
        Sort::Chan(Box::new(s))
    }
}

pub struct ProcessGen {
    rng: ChaCha8Rng,
    next: usize,
}

impl ProcessGen {
    pub fn new(seed: u64) -> ProcessGen {
        ProcessGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            next: 0,
        }
    }

    /// Three parallel components of nesting depth below `depth` over
    /// three free channels, as source text and as parsed.
    pub fn process(&mut self, depth: usize) -> (String, Process) {
        let mut env = Vec::new();
        for name in ["a", "b", "c"] {
            let s = self.channel_sort(2);
            env.push((name.to_string(), s));
        }
        let parts: Vec<String> = (0..3).map(|_| self.proc(&mut env, depth - 1)).collect();
        let text = parts.join(" | ");
        let p = parse_process(&text).unwrap_or_else(|e| panic!("generated `{text}` does not parse: {e}"));
        (text, p)
    }

    fn fresh(&mut self, base: &str) -> String {
        self.next += 1;
        format!("{base}{}", self.next)
    }

    fn payload_sort(&mut self, depth: usize) -> Sort {
        if depth == 0 {
            return Sort::Int;
        }
        match self.rng.random_range(0..6) {
            0 | 1 => Sort::Int,
            2 | 3 => self.channel_sort(depth - 1),
            4 => Sort::Pair(
                Box::new(self.payload_sort(depth - 1)),
                Box::new(self.payload_sort(depth - 1)),
            ),
            _ => Sort::Sum(
                Box::new(self.payload_sort(depth - 1)),
                Box::new(self.payload_sort(depth - 1)),
            ),
        }
    }

    fn channel_sort(&mut self, depth: usize) -> Sort {
        Sort::chan(self.payload_sort(depth))
    }

    fn pick<T: Clone>(&mut self, xs: &[T]) -> Option<T> {
        (!xs.is_empty()).then(|| xs[self.rng.random_range(0..xs.len())].clone())
    }

    fn names_of(env: &[(String, Sort)], f: impl Fn(&Sort) -> bool) -> Vec<(String, Sort)> {
        env.iter().filter(|(_, s)| f(s)).cloned().collect()
    }

    /// An expression of sort `s`, if the environment allows one.
    fn expr(&mut self, env: &[(String, Sort)], s: &Sort, depth: usize) -> Option<String> {
        let mut options: Vec<String> = Self::names_of(env, |t| t == s).into_iter().map(|(n, _)| n).collect();
        for (n, t) in env {
            if let Sort::Pair(l, r) = t {
                if **l == *s {
                    options.push(format!("fst {n}"));
                }
                if **r == *s {
                    options.push(format!("snd {n}"));
                }
            }
        }
        let built = match s {
            Sort::Int if depth > 0 && self.rng.random_bool(0.3) => {
                let l = self.expr(env, s, depth - 1)?;
                let r = self.expr(env, s, depth - 1)?;
                Some(format!("({l} + {r})"))
            }
            Sort::Int => Some(self.rng.random_range(0..10).to_string()),
            Sort::Pair(l, r) if depth > 0 => {
                let l = self.expr(env, l, depth - 1)?;
                let r = self.expr(env, r, depth - 1)?;
                Some(format!("({l}, {r})"))
            }
            Sort::Sum(l, r) if depth > 0 => {
                if self.rng.random_bool(0.5) {
                    self.expr(env, l, depth - 1).map(|e| format!("inl ({e})"))
                } else {
                    self.expr(env, r, depth - 1).map(|e| format!("inr ({e})"))
                }
            }
            _ => None,
        };
        if let Some(b) = built {
            if options.is_empty() || self.rng.random_bool(0.4) {
                return Some(b);
            }
        }
        self.pick(&options)
    }

    fn proc(&mut self, env: &mut Vec<(String, Sort)>, depth: usize) -> String {
        if depth == 0 {
            return self.leaf(env);
        }
        for _ in 0..8 {
            let made = match self.rng.random_range(0..10) {
                0 => Some(self.leaf(env)),
                1 | 2 => {
                    let l = self.proc(env, depth - 1);
                    let r = self.proc(env, depth - 1);
                    Some(format!("({l} | {r})"))
                }
                3 | 4 => self.input(env, depth, false),
                5 => self.input(env, depth, true),
                6 => {
                    let x = self.fresh("n");
                    let s = self.channel_sort(2);
                    env.push((x.clone(), s));
                    let body = self.proc(env, depth - 1);
                    env.pop();
                    Some(format!("new {x} in ({body})"))
                }
                7 => self.split(env, depth),
                8 => self.case(env, depth),
                _ => self.output(env),
            };
            if let Some(p) = made {
                return p;
            }
        }
        self.leaf(env)
    }

    fn leaf(&mut self, env: &[(String, Sort)]) -> String {
        if self.rng.random_bool(0.8) {
            if let Some(p) = self.output(env) {
                return p;
            }
        }
        "idle".into()
    }

    fn output(&mut self, env: &[(String, Sort)]) -> Option<String> {
        let (c, s) = self.pick(&Self::names_of(env, |s| matches!(s, Sort::Chan(_))))?;
        let Sort::Chan(payload) = s else { unreachable!() };
        let e = self.expr(env, &payload, 2)?;
        Some(format!("{c}!{e}"))
    }

    fn input(&mut self, env: &mut Vec<(String, Sort)>, depth: usize, replicated: bool) -> Option<String> {
        let (c, s) = self.pick(&Self::names_of(env, |s| matches!(s, Sort::Chan(_))))?;
        let Sort::Chan(payload) = s else { unreachable!() };
        let x = self.fresh("x");
        env.push((x.clone(), *payload));
        let body = self.proc(env, depth - 1);
        env.pop();
        let star = if replicated { "*" } else { "" };
        Some(format!("{star}{c}?({x}). ({body})"))
    }

    fn split(&mut self, env: &mut Vec<(String, Sort)>, depth: usize) -> Option<String> {
        let (p, s) = self.pick(&Self::names_of(env, |s| matches!(s, Sort::Pair(..))))?;
        let Sort::Pair(l, r) = s else { unreachable!() };
        let (x, y) = (self.fresh("y"), self.fresh("y"));
        env.push((x.clone(), *l));
        env.push((y.clone(), *r));
        let body = self.proc(env, depth - 1);
        env.truncate(env.len() - 2);
        Some(format!("let ({x}, {y}) = {p} in ({body})"))
    }

    fn case(&mut self, env: &mut Vec<(String, Sort)>, depth: usize) -> Option<String> {
        let (v, s) = self.pick(&Self::names_of(env, |s| matches!(s, Sort::Sum(..))))?;
        let Sort::Sum(l, r) = s else { unreachable!() };
        let x = self.fresh("z");
        env.push((x.clone(), *l));
        let left = self.proc(env, depth - 1);
        env.pop();
        let y = self.fresh("z");
        env.push((y.clone(), *r));
        let right = self.proc(env, depth - 1);
        env.pop();
        Some(format!("case {v} of {{ inl({x}) => {left}; inr({y}) => {right} }}"))
    }
}

/// Partitions with more variables than this are not re-enumerated.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Checks by exhaustive enumeration that no assignment of the variables
/// of `part` with a smaller total rank than `found` satisfies `part`.
/// Returns `None` when the partition is too large to enumerate.
pub fn minimal_by_enumeration(part: &[UseEq], found: &UseAssignment) -> Option<bool> {
    let vars: Vec<UseVar> = part
        .iter()
        .flat_map(|e| e.vars())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vars.len() > BRUTE_FORCE_LIMIT {
        return None;
    }
    let rank = |u: Use| match u {
        Use::Zero => 0,
        Use::One => 1,
        Use::Omega => 2,
    };
    let target: u32 = vars
        .iter()
        .map(|r| rank(found.get(r).copied().unwrap_or(Use::Zero)))
        .sum();
    let mut digits = vec![0u8; vars.len()];
    loop {
        let total: u32 = digits.iter().map(|&d| d as u32).sum();
        if total < target {
            let a: UseAssignment = vars
                .iter()
                .zip(&digits)
                .map(|(r, &d)| (*r, [Use::Zero, Use::One, Use::Omega][d as usize]))
                .collect();
            if part.iter().all(|e| e.holds(&a)) {
                return Some(false);
            }
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Some(true);
            }
            digits[i] += 1;
            if digits[i] < 3 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

pub mod oracles {
    use std::collections::BTreeSet;

    use linpi::ast::{NameKind, Process};
    use linpi::constraintgen::UseVar;
    use linpi::semantics::{close_free_variables, step};
    use linpi::solver::{reconstruct, synthesize, InferOptions, Reconstruction, SolveOptions, UseAssignment};
    use linpi::typecheck::{check_process, check_reduct, verify_solution};
    use linpi::types::{TypeEnv, TypeStore, Use};

    use super::minimal_by_enumeration;

    /// Reductions of each process checked for subject reduction.
    pub const REDEXES_PER_PROCESS: usize = 6;

    pub fn infer(p: &Process, store: &mut TypeStore) -> Option<Reconstruction> {
        reconstruct(p, store, InferOptions::default()).ok()
    }

    /// The solution satisfies every generated constraint and its
    /// environment types the process.
    pub fn sound(p: &Process, store: &mut TypeStore, r: &Reconstruction) -> Result<(), String> {
        if verify_solution(store, &r.constraints, &r.substitution) != Ok(true) {
            return Err("solution violates a generated constraint".into());
        }
        match check_process(store, &r.env, p) {
            Ok(true) => Ok(()),
            other => Err(format!("inferred environment rejected: {other:?}")),
        }
    }

    /// Every one-step reduct of the closed process is typed by a reduced
    /// environment.
    pub fn subject_reduction(p: &Process, store: &mut TypeStore, r: &Reconstruction) -> Result<usize, String> {
        let env: TypeEnv = r
            .env
            .iter()
            .map(|(u, &t)| (u.with_kind(NameKind::Channel), t))
            .collect();
        let redexes = step(&close_free_variables(p), 4);
        let mut n = 0;
        for redex in redexes.into_iter().take(REDEXES_PER_PROCESS) {
            if !check_reduct(store, &env, &redex.label, &redex.residual) {
                return Err(format!("untyped reduct on {}: {}", redex.label, redex.residual));
            }
            n += 1;
        }
        Ok(n)
    }

    /// Giving ω to every use variable solves the generated constraints.
    pub fn omega_everywhere(p: &Process, store: &mut TypeStore) -> Result<bool, String> {
        let opts = InferOptions {
            solving: SolveOptions { omega_fallback: true },
            ..InferOptions::default()
        };
        let Ok(r) = reconstruct(p, store, opts) else {
            return Ok(false);
        };
        let vars: BTreeSet<UseVar> = r
            .constraints
            .use_vars()
            .into_iter()
            .chain(r.report.completion.iter().flat_map(|k| {
                let mut c = linpi::constraintgen::ConstraintSet::new();
                c.insert(k.clone());
                c.use_vars()
            }))
            .collect();
        let all: UseAssignment = vars.into_iter().map(|v| (v, Use::Omega)).collect();
        let sigma = synthesize(&r.report.closure, &all, store);
        match verify_solution(store, &r.constraints, &sigma) {
            Ok(true) => Ok(true),
            other => Err(format!("all-ω assignment fails: {other:?}")),
        }
    }

    /// Number of partitions certified minimal by enumeration.
    pub fn minimal(r: &Reconstruction) -> Result<usize, String> {
        let mut n = 0;
        for part in &r.report.partitions {
            match minimal_by_enumeration(part, &r.substitution.use_bindings) {
                Some(true) => n += 1,
                Some(false) => {
                    let lines: Vec<String> = part.iter().map(|e| e.to_string()).collect();
                    return Err(format!("a cheaper assignment satisfies {}", lines.join(", ")));
                }
                None => {}
            }
        }
        Ok(n)
    }
}

pub mod renaming {
    //! Equality of constraint sets up to a bijective renaming of type and
    //! use variables, found by backtracking.

    use std::collections::HashMap;

    use linpi::constraintgen::{Constraint, TypeExpr, TypeVar, UseExpr, UseVar};

    #[derive(Clone, Default)]
    struct Ren {
        types: HashMap<TypeVar, TypeVar>,
        types_back: HashMap<TypeVar, TypeVar>,
        uses: HashMap<UseVar, UseVar>,
        uses_back: HashMap<UseVar, UseVar>,
    }

    impl Ren {
        fn bind_type(&mut self, a: &TypeVar, b: &TypeVar) -> bool {
            match (self.types.get(a), self.types_back.get(b)) {
                (None, None) => {
                    self.types.insert(a.clone(), b.clone());
                    self.types_back.insert(b.clone(), a.clone());
                    true
                }
                (Some(x), Some(y)) => x == b && y == a,
                _ => false,
            }
        }

        fn bind_use(&mut self, a: UseVar, b: UseVar) -> bool {
            match (self.uses.get(&a), self.uses_back.get(&b)) {
                (None, None) => {
                    self.uses.insert(a, b);
                    self.uses_back.insert(b, a);
                    true
                }
                (Some(x), Some(y)) => *x == b && *y == a,
                _ => false,
            }
        }
    }

    /// All renamings extending `ren` that map `a` to `b`.
    fn uses(ren: &Ren, a: &UseExpr, b: &UseExpr) -> Vec<Ren> {
        if a.literal != b.literal || a.vars.len() != b.vars.len() {
            return vec![];
        }
        let xs: Vec<(UseVar, u8)> = a.vars.iter().map(|(r, m)| (*r, *m)).collect();
        let ys: Vec<(UseVar, u8)> = b.vars.iter().map(|(r, m)| (*r, *m)).collect();
        let mut out = vec![];
        fn go(ren: Ren, xs: &[(UseVar, u8)], ys: &[(UseVar, u8)], used: &mut Vec<bool>, out: &mut Vec<Ren>) {
            let Some(&(x, m)) = xs.first() else {
                out.push(ren);
                return;
            };
            for (j, &(y, n)) in ys.iter().enumerate() {
                if used[j] || m != n {
                    continue;
                }
                let mut next = ren.clone();
                if next.bind_use(x, y) {
                    used[j] = true;
                    go(next, &xs[1..], ys, used, out);
                    used[j] = false;
                }
            }
        }
        go(ren.clone(), &xs, &ys, &mut vec![false; ys.len()], &mut out);
        out
    }

    fn types(ren: &Ren, a: &TypeExpr, b: &TypeExpr) -> Vec<Ren> {
        match (a, b) {
            (TypeExpr::Var(x), TypeExpr::Var(y)) => {
                let mut next = ren.clone();
                if next.bind_type(x, y) {
                    vec![next]
                } else {
                    vec![]
                }
            }
            (TypeExpr::Int, TypeExpr::Int) => vec![ren.clone()],
            (TypeExpr::Chan(i, o, p), TypeExpr::Chan(j, q, r)) => uses(ren, i, j)
                .iter()
                .flat_map(|x| uses(x, o, q))
                .flat_map(|x| types(&x, p, r))
                .collect(),
            (TypeExpr::Prod(a1, a2), TypeExpr::Prod(b1, b2)) | (TypeExpr::Sum(a1, a2), TypeExpr::Sum(b1, b2)) => {
                types(ren, a1, b1).iter().flat_map(|x| types(x, a2, b2)).collect()
            }
            _ => vec![],
        }
    }

    fn pairs(ren: &Ren, pairs: &[(&TypeExpr, &TypeExpr)]) -> Vec<Ren> {
        let mut current = vec![ren.clone()];
        for (a, b) in pairs {
            current = current.iter().flat_map(|r| types(r, a, b)).collect();
        }
        current
    }

    fn constraint(ren: &Ren, a: &Constraint, b: &Constraint) -> Vec<Ren> {
        match (a, b) {
            (Constraint::TEq(a1, a2), Constraint::TEq(b1, b2))
            | (Constraint::TCoh(a1, a2), Constraint::TCoh(b1, b2)) => {
                let mut out = pairs(ren, &[(a1, b1), (a2, b2)]);
                out.extend(pairs(ren, &[(a1, b2), (a2, b1)]));
                out
            }
            (Constraint::TComb(t, a1, a2), Constraint::TComb(s, b1, b2)) => {
                let mut out = pairs(ren, &[(t, s), (a1, b1), (a2, b2)]);
                out.extend(pairs(ren, &[(t, s), (a1, b2), (a2, b1)]));
                out
            }
            (Constraint::UEq(u1, u2), Constraint::UEq(v1, v2)) => {
                let mut out: Vec<Ren> = uses(ren, u1, v1).iter().flat_map(|r| uses(r, u2, v2)).collect();
                out.extend(uses(ren, u1, v2).iter().flat_map(|r| uses(r, u2, v1)));
                out
            }
            _ => vec![],
        }
    }

    fn matches(ren: Ren, a: &[Constraint], b: &[Constraint], used: &mut Vec<bool>) -> bool {
        let Some(first) = a.first() else {
            return true;
        };
        for j in 0..b.len() {
            if used[j] {
                continue;
            }
            for next in constraint(&ren, first, &b[j]) {
                used[j] = true;
                let ok = matches(next, &a[1..], b, used);
                used[j] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }

    /// Whether the two sets are equal after renaming variables bijectively.
    pub fn equal_up_to_renaming<'a>(
        a: impl IntoIterator<Item = &'a Constraint>,
        b: impl IntoIterator<Item = &'a Constraint>,
    ) -> bool {
        let a: Vec<Constraint> = a.into_iter().cloned().collect();
        let b: Vec<Constraint> = b.into_iter().cloned().collect();
        a.len() == b.len() && matches(Ren::default(), &a, &b, &mut vec![false; b.len()])
    }
}

/// Random session types: graphs of steps over a few nodes, so that
/// recursion arises from back edges.
pub mod session_gen {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use linpi::sessions::{Payload, SessionId, SessionNode, Sessions};
    use linpi::types::{TypeStore, Use};

    /// A session of up to six steps. Payloads are `int`, an unlimited
    /// channel, or a nested non-terminated session: those are the payloads
    /// that survive decoding unchanged.
    pub fn session(seed: u64, arena: &mut Sessions, store: &mut TypeStore) -> SessionId {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6);
        let ids: Vec<SessionId> = (0..n).map(|_| arena.end()).collect();
        // Node 0 always communicates; the last may end.
        let ends: Vec<bool> = (0..n).map(|i| i > 0 && rng.random_bool(0.25)).collect();
        let live: Vec<SessionId> = ids.iter().zip(&ends).filter(|(_, e)| !**e).map(|(s, _)| *s).collect();
        let int = store.int();
        let shared = store.chan(Use::Omega, Use::Omega, int);
        for i in 0..n {
            if ends[i] {
                continue;
            }
            let payload = match rng.random_range(0..4) {
                0 | 1 => Payload::Type(int),
                2 => Payload::Type(shared),
                _ => Payload::Session(live[rng.random_range(0..live.len())]),
            };
            let k = ids[rng.random_range(0..n)];
            let node = if rng.random_bool(0.5) {
                SessionNode::In(payload, k)
            } else {
                SessionNode::Out(payload, k)
            };
            arena.set(ids[i], node);
        }
        ids[0]
    }
}
