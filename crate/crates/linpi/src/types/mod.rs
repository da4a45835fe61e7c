//! Ground types as regular trees.
//!
//! A [`TypeStore`] owns a graph of [`TypeNode`]s. Every [`TypeId`] denotes
//! the (possibly infinite) tree obtained by unfolding the graph from that
//! node. Cyclic graphs are built with [`TypeStore::make_type`], which
//! solves a finite system of equations; equality is bisimilarity of the
//! unfoldings, not identity of ids.

mod env;
mod parse;
pub(crate) mod render;
pub(crate) use render::binder_name;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

pub use env::{env_combine, env_reduce, EnvError, TypeEnv};
pub use parse::{parse_env, parse_type, TypeParseError};

/// How many times a channel may be used for input or output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Use {
    Zero,
    One,
    Omega,
}

/// `0` is neutral, `ω` absorbing and `1 + 1 = ω`.
impl std::ops::Add for Use {
    type Output = Use;

    fn add(self, other: Use) -> Use {
        match (self, other) {
            (Use::Zero, k) | (k, Use::Zero) => k,
            _ => Use::Omega,
        }
    }
}

impl Use {
    pub const ALL: [Use; 3] = [Use::Zero, Use::One, Use::Omega];

    /// Inverse of adding one: `1 - 1 = 0`, `ω - 1 = ω`.
    pub fn sub_one(self) -> Option<Use> {
        match self {
            Use::Zero => None,
            Use::One => Some(Use::Zero),
            Use::Omega => Some(Use::Omega),
        }
    }

    /// Position in the precision order `0 ≤ 1 ≤ ω`.
    pub fn rank(self) -> u32 {
        self as u32
    }

    pub fn from_rank(rank: u32) -> Use {
        Use::ALL[rank as usize]
    }
}

impl fmt::Display for Use {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Use::Zero => "0",
            Use::One => "1",
            Use::Omega => "w",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(u32);

impl TypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TypeNode {
    Int,
    Chan(Use, Use, TypeId),
    Prod(TypeId, TypeId),
    Sum(TypeId, TypeId),
}

impl TypeNode {
    pub fn children(&self) -> Vec<TypeId> {
        match *self {
            TypeNode::Int => vec![],
            TypeNode::Chan(_, _, p) => vec![p],
            TypeNode::Prod(a, b) | TypeNode::Sum(a, b) => vec![a, b],
        }
    }

    fn map_children(self, f: impl Fn(TypeId) -> TypeId) -> TypeNode {
        match self {
            TypeNode::Int => TypeNode::Int,
            TypeNode::Chan(i, o, p) => TypeNode::Chan(i, o, f(p)),
            TypeNode::Prod(a, b) => TypeNode::Prod(f(a), f(b)),
            TypeNode::Sum(a, b) => TypeNode::Sum(f(a), f(b)),
        }
    }
}

/// The right-hand side of an equation handed to [`TypeStore::make_type`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape<V> {
    Unknown(V),
    Known(TypeId),
    Int,
    Chan(Use, Use, Box<Shape<V>>),
    Prod(Box<Shape<V>>, Box<Shape<V>>),
    Sum(Box<Shape<V>>, Box<Shape<V>>),
}

impl<V> Shape<V> {
    pub fn chan(i: Use, o: Use, p: Shape<V>) -> Shape<V> {
        Shape::Chan(i, o, Box::new(p))
    }

    pub fn prod(a: Shape<V>, b: Shape<V>) -> Shape<V> {
        Shape::Prod(Box::new(a), Box::new(b))
    }

    pub fn sum(a: Shape<V>, b: Shape<V>) -> Shape<V> {
        Shape::Sum(Box::new(a), Box::new(b))
    }

    fn unknowns<'a>(&'a self, out: &mut Vec<&'a V>) {
        match self {
            Shape::Unknown(v) => out.push(v),
            Shape::Known(_) | Shape::Int => {}
            Shape::Chan(_, _, p) => p.unknowns(out),
            Shape::Prod(a, b) | Shape::Sum(a, b) => {
                a.unknowns(out);
                b.unknowns(out);
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("ill-formed equation system: {0}")]
    IllFormedSystem(String),
}

#[derive(Clone, Debug, Default)]
pub struct TypeStore {
    nodes: Vec<TypeNode>,
    interned: HashMap<TypeNode, TypeId>,
    combined: HashMap<(TypeId, TypeId), Option<TypeId>>,
}

impl TypeStore {
    pub fn new() -> TypeStore {
        TypeStore::default()
    }

    pub fn node(&self, id: TypeId) -> TypeNode {
        self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn alloc(&mut self, node: TypeNode) -> TypeId {
        let id = TypeId(self.nodes.len() as u32);
        self.nodes.push(node);
        id
    }

    /// Returns the shared id for a node whose children already exist.
    pub fn intern(&mut self, node: TypeNode) -> TypeId {
        if let Some(&id) = self.interned.get(&node) {
            return id;
        }
        let id = self.alloc(node);
        self.interned.insert(node, id);
        id
    }

    pub fn int(&mut self) -> TypeId {
        self.intern(TypeNode::Int)
    }

    pub fn chan(&mut self, input: Use, output: Use, payload: TypeId) -> TypeId {
        self.intern(TypeNode::Chan(input, output, payload))
    }

    pub fn prod(&mut self, a: TypeId, b: TypeId) -> TypeId {
        self.intern(TypeNode::Prod(a, b))
    }

    pub fn sum(&mut self, a: TypeId, b: TypeId) -> TypeId {
        self.intern(TypeNode::Sum(a, b))
    }

    /// Solves a finite system of equations `X = shape`. Every right-hand
    /// side must be a constructor (or an existing type), never a bare
    /// unknown, so that the solution is unique.
    pub fn make_type<V>(&mut self, equations: &BTreeMap<V, Shape<V>>) -> Result<BTreeMap<V, TypeId>, TypeError>
    where
        V: Ord + Clone + fmt::Debug,
    {
        for (v, rhs) in equations {
            if let Shape::Unknown(w) = rhs {
                return Err(TypeError::IllFormedSystem(format!(
                    "{v:?} is defined as the bare unknown {w:?}"
                )));
            }
            let mut refs = Vec::new();
            rhs.unknowns(&mut refs);
            if let Some(w) = refs.into_iter().find(|w| !equations.contains_key(*w)) {
                return Err(TypeError::IllFormedSystem(format!("{w:?} is not defined")));
            }
        }
        let start = self.nodes.len();
        let mut slot: BTreeMap<V, TypeId> = BTreeMap::new();
        for (v, rhs) in equations {
            let id = match rhs {
                Shape::Known(id) => *id,
                _ => self.alloc(TypeNode::Int),
            };
            slot.insert(v.clone(), id);
        }
        for (v, rhs) in equations {
            if matches!(rhs, Shape::Known(_)) {
                continue;
            }
            let node = self.top_node(rhs, &slot);
            self.nodes[slot[v].index()] = node;
        }
        let canon = self.hashcons_from(start);
        Ok(slot
            .into_iter()
            .map(|(v, id)| (v, canon.get(&id).copied().unwrap_or(id)))
            .collect())
    }

    fn top_node<V: Ord>(&mut self, shape: &Shape<V>, slot: &BTreeMap<V, TypeId>) -> TypeNode {
        match shape {
            Shape::Int => TypeNode::Int,
            Shape::Chan(i, o, p) => TypeNode::Chan(*i, *o, self.sub_node(p, slot)),
            Shape::Prod(a, b) => TypeNode::Prod(self.sub_node(a, slot), self.sub_node(b, slot)),
            Shape::Sum(a, b) => TypeNode::Sum(self.sub_node(a, slot), self.sub_node(b, slot)),
            Shape::Unknown(_) | Shape::Known(_) => unreachable!("handled by the caller"),
        }
    }

    fn sub_node<V: Ord>(&mut self, shape: &Shape<V>, slot: &BTreeMap<V, TypeId>) -> TypeId {
        match shape {
            Shape::Unknown(v) => slot[v],
            Shape::Known(id) => *id,
            _ => {
                let node = self.top_node(shape, slot);
                self.alloc(node)
            }
        }
    }

    /// Interns every acyclic node allocated at or after `start`, returning
    /// the replacement map. Nodes on cycles keep their own ids.
    fn hashcons_from(&mut self, start: usize) -> HashMap<TypeId, TypeId> {
        let fresh: Vec<TypeId> = (start..self.nodes.len()).map(|i| TypeId(i as u32)).collect();
        let sccs = tarjan(&fresh, |id| {
            self.nodes[id.index()]
                .children()
                .into_iter()
                .filter(|c| c.index() >= start)
                .collect()
        });
        let mut canon: HashMap<TypeId, TypeId> = HashMap::new();
        for scc in sccs {
            let looped = scc.len() > 1 || self.nodes[scc[0].index()].children().contains(&scc[0]);
            for &id in &scc {
                let node = self.nodes[id.index()].map_children(|c| canon.get(&c).copied().unwrap_or(c));
                self.nodes[id.index()] = node;
            }
            if !looped {
                let id = scc[0];
                let node = self.nodes[id.index()];
                match self.interned.get(&node) {
                    Some(&existing) => {
                        canon.insert(id, existing);
                    }
                    None => {
                        self.interned.insert(node, id);
                    }
                }
            }
        }
        canon
    }

    /// Whether two ids denote the same regular tree.
    pub fn type_equal(&self, a: TypeId, b: TypeId) -> bool {
        let mut parent: HashMap<TypeId, TypeId> = HashMap::new();
        fn find(parent: &mut HashMap<TypeId, TypeId>, x: TypeId) -> TypeId {
            let mut r = x;
            while let Some(&p) = parent.get(&r) {
                r = p;
            }
            let mut y = x;
            while let Some(&p) = parent.get(&y) {
                parent.insert(y, r);
                y = p;
            }
            r
        }
        let mut work = vec![(a, b)];
        while let Some((x, y)) = work.pop() {
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            if rx == ry {
                continue;
            }
            match (self.node(x), self.node(y)) {
                (TypeNode::Int, TypeNode::Int) => {}
                (TypeNode::Chan(i1, o1, p1), TypeNode::Chan(i2, o2, p2)) => {
                    if i1 != i2 || o1 != o2 {
                        return false;
                    }
                    work.push((p1, p2));
                }
                (TypeNode::Prod(a1, b1), TypeNode::Prod(a2, b2)) | (TypeNode::Sum(a1, b1), TypeNode::Sum(a2, b2)) => {
                    work.push((a1, a2));
                    work.push((b1, b2));
                }
                _ => return false,
            }
            parent.insert(rx, ry);
        }
        true
    }

    /// Whether `a + b` is defined.
    pub fn coherent(&self, a: TypeId, b: TypeId) -> bool {
        let mut seen = HashSet::new();
        let mut work = vec![(a, b)];
        while let Some(pair) = work.pop() {
            if !seen.insert(pair) {
                continue;
            }
            match (self.node(pair.0), self.node(pair.1)) {
                (TypeNode::Int, TypeNode::Int) => {}
                (TypeNode::Chan(_, _, p1), TypeNode::Chan(_, _, p2)) => {
                    if !self.type_equal(p1, p2) {
                        return false;
                    }
                }
                (TypeNode::Prod(a1, b1), TypeNode::Prod(a2, b2)) | (TypeNode::Sum(a1, b1), TypeNode::Sum(a2, b2)) => {
                    work.push((a1, a2));
                    work.push((b1, b2));
                }
                _ => return false,
            }
        }
        true
    }

    /// The combination `a + b`, or `None` when the types are not coherent.
    pub fn type_combine(&mut self, a: TypeId, b: TypeId) -> Option<TypeId> {
        if let Some(&r) = self.combined.get(&(a, b)) {
            return r;
        }
        if !self.coherent(a, b) {
            self.combined.insert((a, b), None);
            return None;
        }
        let mut equations: BTreeMap<(TypeId, TypeId), Shape<(TypeId, TypeId)>> = BTreeMap::new();
        let mut work = vec![(a, b)];
        while let Some(pair) = work.pop() {
            if equations.contains_key(&pair) {
                continue;
            }
            let mut child = |x: TypeId, y: TypeId| {
                work.push((x, y));
                Shape::Unknown((x, y))
            };
            let shape = match (self.node(pair.0), self.node(pair.1)) {
                (TypeNode::Int, TypeNode::Int) => Shape::Int,
                (TypeNode::Chan(i1, o1, p), TypeNode::Chan(i2, o2, _)) => {
                    Shape::chan(i1 + i2, o1 + o2, Shape::Known(p))
                }
                (TypeNode::Prod(a1, b1), TypeNode::Prod(a2, b2)) => Shape::prod(child(a1, a2), child(b1, b2)),
                (TypeNode::Sum(a1, b1), TypeNode::Sum(a2, b2)) => Shape::sum(child(a1, a2), child(b1, b2)),
                _ => unreachable!("coherence was checked"),
            };
            equations.insert(pair, shape);
        }
        let solved = self
            .make_type(&equations)
            .expect("combination equations are well formed");
        let result = solved[&(a, b)];
        self.combined.insert((a, b), Some(result));
        Some(result)
    }

    /// Whether `a + a = a`, that is, the type may be used any number of times.
    pub fn is_unlimited(&mut self, a: TypeId) -> bool {
        match self.type_combine(a, a) {
            Some(twice) => self.type_equal(twice, a),
            None => false,
        }
    }

    /// Ids reachable from `root`, root first.
    pub fn reachable(&self, root: TypeId) -> Vec<TypeId> {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut work = vec![root];
        while let Some(id) = work.pop() {
            if seen.insert(id) {
                order.push(id);
                for c in self.node(id).children().into_iter().rev() {
                    work.push(c);
                }
            }
        }
        order
    }

    pub fn render(&self, id: TypeId) -> String {
        render::render_type(self, id)
    }
}

/// Strongly connected components, each emitted after every component it
/// can reach.
pub(crate) fn tarjan<N, F>(nodes: &[N], succ: F) -> Vec<Vec<N>>
where
    N: Copy + Eq + std::hash::Hash,
    F: Fn(N) -> Vec<N>,
{
    struct State<N> {
        index: HashMap<N, usize>,
        low: HashMap<N, usize>,
        on_stack: HashSet<N>,
        stack: Vec<N>,
        out: Vec<Vec<N>>,
        next: usize,
    }
    let mut st = State {
        index: HashMap::new(),
        low: HashMap::new(),
        on_stack: HashSet::new(),
        stack: Vec::new(),
        out: Vec::new(),
        next: 0,
    };
    // Iterative DFS: each frame holds a node and its pending successors.
    for &root in nodes {
        if st.index.contains_key(&root) {
            continue;
        }
        let mut frames: Vec<(N, Vec<N>)> = Vec::new();
        let visit = |st: &mut State<N>, n: N, frames: &mut Vec<(N, Vec<N>)>| {
            st.index.insert(n, st.next);
            st.low.insert(n, st.next);
            st.next += 1;
            st.stack.push(n);
            st.on_stack.insert(n);
            let mut s = succ(n);
            s.reverse();
            frames.push((n, s));
        };
        visit(&mut st, root, &mut frames);
        while let Some((n, pending)) = frames.last_mut() {
            let n = *n;
            if let Some(m) = pending.pop() {
                if !st.index.contains_key(&m) {
                    visit(&mut st, m, &mut frames);
                } else if st.on_stack.contains(&m) {
                    let l = st.low[&n].min(st.index[&m]);
                    st.low.insert(n, l);
                }
                continue;
            }
            frames.pop();
            if let Some((parent, _)) = frames.last() {
                let l = st.low[parent].min(st.low[&n]);
                st.low.insert(*parent, l);
            }
            if st.low[&n] == st.index[&n] {
                let mut comp = Vec::new();
                loop {
                    let m = st.stack.pop().expect("node on stack");
                    st.on_stack.remove(&m);
                    comp.push(m);
                    if m == n {
                        break;
                    }
                }
                st.out.push(comp);
            }
        }
    }
    st.out
}
