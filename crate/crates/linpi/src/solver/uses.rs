//! Use constraints: partitioning, elimination of determined variables and
//! exhaustive search for an assignment of least total rank.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::constraintgen::{UseExpr, UseVar};
use crate::types::Use;

/// Residual variables above which a partition is not searched.
pub const MAX_SEARCH_VARS: usize = 24;

/// `U ≐ V`
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UseEq {
    pub lhs: UseExpr,
    pub rhs: UseExpr,
}

impl UseEq {
    pub fn new(lhs: UseExpr, rhs: UseExpr) -> UseEq {
        UseEq { lhs, rhs }
    }

    pub fn vars(&self) -> BTreeSet<UseVar> {
        self.lhs.vars.keys().chain(self.rhs.vars.keys()).copied().collect()
    }

    pub fn holds(&self, assign: &UseAssignment) -> bool {
        let get = |r| Some(assign.get(&r).copied().unwrap_or(Use::Zero));
        self.lhs.eval(get) == self.rhs.eval(get)
    }

    fn substitute(&self, r: UseVar, u: &UseExpr) -> UseEq {
        UseEq::new(self.lhs.substitute(r, u), self.rhs.substitute(r, u))
    }
}

impl fmt::Display for UseEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

pub type UseAssignment = BTreeMap<UseVar, Use>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum UseError {
    #[error("no use assignment satisfies: {}", .0.join(", "))]
    NoSolution(Vec<String>),
    #[error("{count} use variables left after elimination (limit {MAX_SEARCH_VARS}); try --omega-fallback")]
    TooManyVariables { count: usize },
}

/// Groups constraints that share use variables, directly or through
/// other constraints. Constraints without variables form one group each.
pub fn partition_uses(ueqs: &[UseEq]) -> Vec<Vec<UseEq>> {
    let mut owner: BTreeMap<UseVar, usize> = BTreeMap::new();
    let mut parent: Vec<usize> = (0..ueqs.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, e) in ueqs.iter().enumerate() {
        for r in e.vars() {
            match owner.get(&r) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
                None => {
                    owner.insert(r, i);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<UseEq>> = BTreeMap::new();
    for (i, e) in ueqs.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(e.clone());
    }
    groups.into_values().collect()
}

/// Repeatedly removes a constraint `ρ ≐ U` (either orientation) with `ρ`
/// not in `U`, substituting `U` for `ρ` in the rest. Replaying the
/// returned substitutions backwards recovers the eliminated variables.
pub fn eliminate_determined(ueqs: &[UseEq]) -> (Vec<UseEq>, Vec<(UseVar, UseExpr)>) {
    let mut rest: Vec<UseEq> = ueqs.to_vec();
    let mut subst = Vec::new();
    loop {
        let found = rest.iter().enumerate().find_map(|(i, e)| {
            let pick = |x: &UseExpr, y: &UseExpr| x.as_var().filter(|r| !y.contains(*r)).map(|r| (r, y.clone()));
            pick(&e.lhs, &e.rhs).or_else(|| pick(&e.rhs, &e.lhs)).map(|p| (i, p))
        });
        let Some((i, (r, u))) = found else {
            break;
        };
        rest.remove(i);
        rest = rest
            .into_iter()
            .map(|e| e.substitute(r, &u))
            .filter(|e| e.lhs != e.rhs)
            .collect();
        subst.push((r, u));
    }
    (rest, subst)
}

fn back_substitute(assign: &mut UseAssignment, subst: &[(UseVar, UseExpr)]) {
    for (r, u) in subst.iter().rev() {
        let v = u
            .eval(|x| Some(assign.get(&x).copied().unwrap_or(Use::Zero)))
            .expect("total assignment");
        assign.insert(*r, v);
    }
}

/// Solves one partition. The result has least total rank over every
/// variable of the partition, eliminated ones included; among those, least
/// rank over the residual variables, then lexicographically least by
/// variable index.
fn solve_partition(part: &[UseEq], omega_fallback: bool) -> Result<UseAssignment, UseError> {
    let all_vars: BTreeSet<UseVar> = part.iter().flat_map(UseEq::vars).collect();
    let (residual, subst) = eliminate_determined(part);
    let mut vars: Vec<UseVar> = residual
        .iter()
        .flat_map(UseEq::vars)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // Variables that vanished during elimination are free; they stay 0.
    let no_solution = || UseError::NoSolution(part.iter().map(|e| e.to_string()).collect());
    let finish = |residual_assign: &UseAssignment| -> Option<UseAssignment> {
        let mut a: UseAssignment = all_vars.iter().map(|r| (*r, Use::Zero)).collect();
        a.extend(residual_assign.iter().map(|(r, u)| (*r, *u)));
        back_substitute(&mut a, &subst);
        part.iter().all(|e| e.holds(&a)).then_some(a)
    };
    if vars.len() > MAX_SEARCH_VARS {
        if !omega_fallback {
            return Err(UseError::TooManyVariables { count: vars.len() });
        }
        let omega = vars.iter().map(|r| (*r, Use::Omega)).collect();
        return finish(&omega).ok_or_else(no_solution);
    }

    vars.sort();
    let position: BTreeMap<UseVar, usize> = vars.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    let compiled: Vec<Compiled> = residual.iter().map(|e| Compiled::new(e, &position)).collect();
    // Eliminated variables as sums over the residual ones.
    let mut expanded: BTreeMap<UseVar, UseExpr> = BTreeMap::new();
    for (r, u) in subst.iter().rev() {
        let e = expanded.iter().fold(u.clone(), |e, (x, ux)| e.substitute(*x, ux));
        expanded.insert(*r, e);
    }
    let derived: Vec<Sum> = expanded.values().map(|e| Sum::new(e, &position)).collect();
    let mut search = Search {
        cons: &compiled,
        derived: &derived,
        best: None,
    };
    let mut root = vec![ALL; vars.len()];
    if !search.propagate(&mut root) {
        return Err(no_solution());
    }
    search.run(0, root);
    let (_, ranks) = search.best.ok_or_else(no_solution)?;
    let candidate: UseAssignment = vars.iter().zip(ranks).map(|(r, k)| (*r, Use::from_rank(k))).collect();
    finish(&candidate).ok_or_else(no_solution)
}

/// Possible ranks of a variable, as a bit set.
type Domain = u8;
const ALL: Domain = 0b111;

fn lowest(d: Domain) -> u32 {
    d.trailing_zeros()
}

/// A literal plus variables (by position) with multiplicities.
struct Sum {
    literal: Use,
    vars: Vec<(usize, u8)>,
}

impl Sum {
    /// Variables without a position are free and count as 0.
    fn new(u: &UseExpr, position: &BTreeMap<UseVar, usize>) -> Sum {
        Sum {
            literal: u.literal,
            vars: u
                .vars
                .iter()
                .filter_map(|(r, m)| position.get(r).map(|&i| (i, *m)))
                .collect(),
        }
    }

    fn eval(&self, rank_of: impl Fn(usize) -> u32) -> Use {
        self.vars.iter().fold(self.literal, |acc, &(i, m)| {
            let k = Use::from_rank(rank_of(i));
            if m == 2 {
                acc + k + k
            } else {
                acc + k
            }
        })
    }
}

/// A residual constraint over variable positions.
struct Compiled {
    lhs: Sum,
    rhs: Sum,
    vars: Vec<usize>,
}

impl Compiled {
    fn new(e: &UseEq, position: &BTreeMap<UseVar, usize>) -> Compiled {
        Compiled {
            lhs: Sum::new(&e.lhs, position),
            rhs: Sum::new(&e.rhs, position),
            vars: e.vars().iter().map(|r| position[r]).collect(),
        }
    }

    fn holds(&self, ranks: &[u32]) -> bool {
        self.lhs.eval(|i| ranks[i]) == self.rhs.eval(|i| ranks[i])
    }
}

/// Products of domains above this size are not used for pruning.
const PROPAGATION_LIMIT: usize = 729;

/// Ordering key of a solution: total rank, residual rank, then the
/// residual ranks lexicographically (implicit in the search order).
type Key = (u32, u32);

struct Search<'a> {
    cons: &'a [Compiled],
    derived: &'a [Sum],
    best: Option<(Key, Vec<u32>)>,
}
impl Search<'_> {
    /// Removes from `d` the values without support in some constraint.
    /// Returns false when a domain becomes empty.
    fn propagate(&self, d: &mut [Domain]) -> bool {
        let mut ranks = vec![0u32; d.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for c in self.cons {
                let size: usize = c.vars.iter().map(|&i| d[i].count_ones() as usize).product();
                if size > PROPAGATION_LIMIT {
                    continue;
                }
                let mut support = vec![0 as Domain; c.vars.len()];
                let mut idx = vec![0u32; c.vars.len()];
                'combos: loop {
                    let mut valid = true;
                    for (slot, &i) in c.vars.iter().enumerate() {
                        let k = idx[slot];
                        valid &= d[i] & (1 << k) != 0;
                        ranks[i] = k;
                    }
                    if valid && c.holds(&ranks) {
                        for (slot, &k) in idx.iter().enumerate() {
                            support[slot] |= 1 << k;
                        }
                    }
                    for k in idx.iter_mut() {
                        *k += 1;
                        if *k < 3 {
                            continue 'combos;
                        }
                        *k = 0;
                    }
                    break;
                }
                for (slot, &i) in c.vars.iter().enumerate() {
                    if d[i] & support[slot] != d[i] {
                        d[i] &= support[slot];
                        if d[i] == 0 {
                            return false;
                        }
                        changed = true;
                    }
                }
            }
        }
        true
    }

    /// Least key of any completion of `d`; addition is monotone, so
    /// every variable at its lowest rank gives a lower bound.
    fn bound(&self, d: &[Domain]) -> Key {
        let residual: u32 = d.iter().map(|&x| lowest(x)).sum();
        let derived: u32 = self.derived.iter().map(|e| e.eval(|i| lowest(d[i])).rank()).sum();
        (residual + derived, residual)
    }

    /// Depth-first search by increasing rank per position, so leaves come
    /// in lexicographic order; keeps the first leaf of least key.
    fn run(&mut self, i: usize, d: Vec<Domain>) {
        let key = self.bound(&d);
        if self.best.as_ref().is_some_and(|(b, _)| key >= *b) {
            return;
        }
        if i == d.len() {
            self.best = Some((key, d.iter().map(|&x| lowest(x)).collect()));
            return;
        }
        for k in 0..3 {
            if d[i] & (1 << k) == 0 {
                continue;
            }
            let mut next = d.clone();
            next[i] = 1 << k;
            if self.propagate(&mut next) {
                self.run(i + 1, next);
            }
        }
    }
}

/// Solves every partition independently and merges the results.
pub fn solve_uses(ueqs: &[UseEq], omega_fallback: bool) -> Result<UseAssignment, UseError> {
    let mut out = UseAssignment::new();
    for part in partition_uses(ueqs) {
        out.extend(solve_partition(&part, omega_fallback)?);
    }
    Ok(out)
}
