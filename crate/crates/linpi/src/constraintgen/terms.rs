use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::rc::Rc;

use indexmap::IndexSet;

use crate::types::render::Ctx;
use crate::types::Use;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UseVar(pub u32);

impl fmt::Display for UseVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// A type variable: either generated, or the instantiation variable
/// `t(α, β)` introduced while completing a constraint set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeVar {
    Gen(u32),
    Inst(Rc<(TypeVar, TypeVar)>),
}

impl fmt::Display for TypeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeVar::Gen(n) => write!(f, "a{n}"),
            TypeVar::Inst(pair) => write!(f, "i({},{})", pair.0, pair.1),
        }
    }
}

/// A sum of a literal use and use variables; `2ρ` is a variable with
/// multiplicity 2. Multiplicities stop at 2 because `κ + κ + κ = κ + κ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UseExpr {
    pub literal: Use,
    pub vars: BTreeMap<UseVar, u8>,
}

impl UseExpr {
    pub fn lit(u: Use) -> UseExpr {
        UseExpr {
            literal: u,
            vars: BTreeMap::new(),
        }
    }

    pub fn var(r: UseVar) -> UseExpr {
        UseExpr {
            literal: Use::Zero,
            vars: BTreeMap::from([(r, 1)]),
        }
    }

    /// `1 + ρ`
    pub fn one_plus(r: UseVar) -> UseExpr {
        UseExpr {
            literal: Use::One,
            vars: BTreeMap::from([(r, 1)]),
        }
    }

    /// `2ρ`
    pub fn twice(r: UseVar) -> UseExpr {
        UseExpr {
            literal: Use::Zero,
            vars: BTreeMap::from([(r, 2)]),
        }
    }

    pub fn plus(&self, other: &UseExpr) -> UseExpr {
        let mut out = self.clone();
        out.literal = out.literal + other.literal;
        for (&r, &m) in &other.vars {
            let e = out.vars.entry(r).or_insert(0);
            *e = (*e + m).min(2);
        }
        out
    }

    /// The variable, when the expression is exactly one variable.
    pub fn as_var(&self) -> Option<UseVar> {
        match (self.literal, self.vars.iter().next()) {
            (Use::Zero, Some((&r, &1))) if self.vars.len() == 1 => Some(r),
            _ => None,
        }
    }

    pub fn contains(&self, r: UseVar) -> bool {
        self.vars.contains_key(&r)
    }

    /// Replaces `r` by `u` (scaled by the multiplicity of `r`).
    pub fn substitute(&self, r: UseVar, u: &UseExpr) -> UseExpr {
        let Some(&m) = self.vars.get(&r) else {
            return self.clone();
        };
        let mut rest = self.clone();
        rest.vars.remove(&r);
        let mut out = rest.plus(u);
        if m == 2 {
            out = out.plus(u);
        }
        out
    }

    /// Evaluates under `assign`; `None` when a variable is unassigned.
    pub fn eval(&self, assign: impl Fn(UseVar) -> Option<Use>) -> Option<Use> {
        let mut acc = self.literal;
        for (&r, &m) in &self.vars {
            let k = assign(r)?;
            acc = acc + k;
            if m == 2 {
                acc = acc + k;
            }
        }
        Some(acc)
    }
}

impl fmt::Display for UseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.literal != Use::Zero || self.vars.is_empty() {
            parts.push(self.literal.to_string());
        }
        for (r, m) in &self.vars {
            parts.push(if *m == 2 { format!("2{r}") } else { r.to_string() });
        }
        f.write_str(&parts.join("+"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Var(TypeVar),
    Int,
    Chan(UseExpr, UseExpr, Box<TypeExpr>),
    Prod(Box<TypeExpr>, Box<TypeExpr>),
    Sum(Box<TypeExpr>, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn chan(i: UseExpr, o: UseExpr, p: TypeExpr) -> TypeExpr {
        TypeExpr::Chan(i, o, Box::new(p))
    }

    pub fn prod(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Prod(Box::new(a), Box::new(b))
    }

    pub fn sum(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Sum(Box::new(a), Box::new(b))
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, TypeExpr::Var(_))
    }

    pub fn type_vars(&self, out: &mut BTreeSet<TypeVar>) {
        match self {
            TypeExpr::Var(v) => {
                out.insert(v.clone());
            }
            TypeExpr::Int => {}
            TypeExpr::Chan(_, _, p) => p.type_vars(out),
            TypeExpr::Prod(a, b) | TypeExpr::Sum(a, b) => {
                a.type_vars(out);
                b.type_vars(out);
            }
        }
    }

    pub fn use_vars(&self, out: &mut BTreeSet<UseVar>) {
        match self {
            TypeExpr::Var(_) | TypeExpr::Int => {}
            TypeExpr::Chan(i, o, p) => {
                out.extend(i.vars.keys());
                out.extend(o.vars.keys());
                p.use_vars(out);
            }
            TypeExpr::Prod(a, b) | TypeExpr::Sum(a, b) => {
                a.use_vars(out);
                b.use_vars(out);
            }
        }
    }

    fn write(&self, ctx: Ctx, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Var(v) => write!(f, "{v}"),
            TypeExpr::Int => f.write_str("int"),
            TypeExpr::Chan(i, o, p) => {
                f.write_str("[")?;
                p.write(Ctx::Top, f)?;
                write!(f, "]{{{i},{o}}}")
            }
            TypeExpr::Prod(a, b) => {
                let wrap = ctx.wraps_prod();
                if wrap {
                    f.write_str("(")?;
                }
                a.write(Ctx::ProdLeft, f)?;
                f.write_str(" * ")?;
                b.write(Ctx::ProdRight, f)?;
                if wrap {
                    f.write_str(")")?;
                }
                Ok(())
            }
            TypeExpr::Sum(a, b) => {
                let wrap = ctx.wraps_sum();
                if wrap {
                    f.write_str("(")?;
                }
                a.write(Ctx::SumLeft, f)?;
                f.write_str(" (+) ")?;
                b.write(Ctx::SumRight, f)?;
                if wrap {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }

    /// The name of the outermost constructor, for diagnostics.
    pub fn constructor_name(&self) -> &'static str {
        match self {
            TypeExpr::Var(_) => "variable",
            TypeExpr::Int => "int",
            TypeExpr::Chan(..) => "channel",
            TypeExpr::Prod(..) => "product",
            TypeExpr::Sum(..) => "sum",
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(Ctx::Top, f)
    }
}

impl From<TypeVar> for TypeExpr {
    fn from(v: TypeVar) -> TypeExpr {
        TypeExpr::Var(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `T ≐ S`
    TEq(TypeExpr, TypeExpr),
    /// `T ≐ S1 + S2`
    TComb(TypeExpr, TypeExpr, TypeExpr),
    /// `T ∼ S`
    TCoh(TypeExpr, TypeExpr),
    /// `U ≐ V`
    UEq(UseExpr, UseExpr),
}

impl Constraint {
    /// `un(T)`, that is `T ≐ T + T`.
    pub fn un(t: TypeExpr) -> Constraint {
        Constraint::TComb(t.clone(), t.clone(), t)
    }

    pub fn type_exprs(&self) -> Vec<&TypeExpr> {
        match self {
            Constraint::TEq(a, b) | Constraint::TCoh(a, b) => vec![a, b],
            Constraint::TComb(a, b, c) => vec![a, b, c],
            Constraint::UEq(..) => vec![],
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::TEq(a, b) => write!(f, "{a} = {b}"),
            Constraint::TComb(a, b, c) => write!(f, "{a} = {b} + {c}"),
            Constraint::TCoh(a, b) => write!(f, "{a} ~ {b}"),
            Constraint::UEq(u, v) => write!(f, "{u} = {v}"),
        }
    }
}

/// A finite set of constraints, iterated in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    items: IndexSet<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> ConstraintSet {
        ConstraintSet::default()
    }

    pub fn insert(&mut self, c: Constraint) -> bool {
        self.items.insert(c)
    }

    pub fn extend(&mut self, other: ConstraintSet) {
        self.items.extend(other.items);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, c: &Constraint) -> bool {
        self.items.contains(c)
    }

    pub fn type_vars(&self) -> BTreeSet<TypeVar> {
        let mut out = BTreeSet::new();
        for c in self.iter() {
            for t in c.type_exprs() {
                t.type_vars(&mut out);
            }
        }
        out
    }

    pub fn use_vars(&self) -> BTreeSet<UseVar> {
        let mut out = BTreeSet::new();
        for c in self.iter() {
            match c {
                Constraint::UEq(u, v) => {
                    out.extend(u.vars.keys());
                    out.extend(v.vars.keys());
                }
                _ => {
                    for t in c.type_exprs() {
                        t.use_vars(&mut out);
                    }
                }
            }
        }
        out
    }
}

impl FromIterator<Constraint> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = Constraint>>(iter: I) -> ConstraintSet {
        ConstraintSet {
            items: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a ConstraintSet {
    type Item = &'a Constraint;
    type IntoIter = indexmap::set::Iter<'a, Constraint>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// Source of fresh variables. Instantiation variables are recorded so
/// that `t(α, β)` is the same variable every time it is requested.
#[derive(Clone, Debug, Default)]
pub struct VarSupply {
    next_type: u32,
    next_use: u32,
    inst_names: HashSet<(TypeVar, TypeVar)>,
}

impl VarSupply {
    pub fn new() -> VarSupply {
        VarSupply::default()
    }

    /// A supply whose counters start at the given indices.
    pub fn starting_at(type_index: u32, use_index: u32) -> VarSupply {
        VarSupply {
            next_type: type_index,
            next_use: use_index,
            inst_names: HashSet::new(),
        }
    }

    pub fn fresh_type(&mut self) -> TypeVar {
        let v = TypeVar::Gen(self.next_type);
        self.next_type += 1;
        v
    }

    pub fn fresh_use(&mut self) -> UseVar {
        let r = UseVar(self.next_use);
        self.next_use += 1;
        r
    }

    /// The variable `t(α, β)`.
    pub fn inst(&mut self, alpha: &TypeVar, beta: &TypeVar) -> TypeVar {
        self.inst_names.insert((alpha.clone(), beta.clone()));
        TypeVar::Inst(Rc::new((alpha.clone(), beta.clone())))
    }

    /// Moves the counters past every variable of `c`, so that variables
    /// of a hand-written set are never handed out again.
    pub fn reserve(&mut self, c: &ConstraintSet) {
        for v in c.type_vars() {
            if let TypeVar::Gen(n) = v {
                self.next_type = self.next_type.max(n + 1);
            }
        }
        for r in c.use_vars() {
            self.next_use = self.next_use.max(r.0 + 1);
        }
    }
}
