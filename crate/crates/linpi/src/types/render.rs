use std::collections::{HashMap, HashSet};

use super::{tarjan, TypeId, TypeNode, TypeStore};

/// Where a rendered type sits, for deciding on parentheses.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ctx {
    Top,
    SumLeft,
    SumRight,
    ProdLeft,
    ProdRight,
}

impl Ctx {
    pub(crate) fn wraps_sum(self) -> bool {
        matches!(self, Ctx::SumLeft | Ctx::ProdLeft | Ctx::ProdRight)
    }

    pub(crate) fn wraps_prod(self) -> bool {
        self == Ctx::ProdLeft
    }

    pub(crate) fn wraps_rec(self) -> bool {
        self != Ctx::Top
    }
}

pub(crate) fn binder_name(i: usize) -> String {
    let letter = ["X", "Y", "Z"][i % 3];
    match i / 3 {
        0 => letter.to_string(),
        n => format!("{letter}{n}"),
    }
}

struct Renderer<'a> {
    store: &'a TypeStore,
    canon: HashMap<TypeId, TypeId>,
    cyclic: HashSet<TypeId>,
    stack: Vec<(TypeId, usize)>,
    pushes: usize,
    referenced: HashSet<usize>,
    names: HashMap<usize, String>,
}

impl Renderer<'_> {
    fn go(&mut self, id: TypeId, ctx: Ctx, out: &mut String) {
        if let Some(&(_, push)) = self.stack.iter().rev().find(|(n, _)| *n == id) {
            self.referenced.insert(push);
            out.push_str(self.names.get(&push).map(String::as_str).unwrap_or("?"));
            return;
        }
        if !self.cyclic.contains(&id) {
            self.body(id, ctx, out);
            return;
        }
        let push = self.pushes;
        self.pushes += 1;
        self.stack.push((id, push));
        let mut inner = String::new();
        let bound = self.names.contains_key(&push);
        self.body(id, if bound { Ctx::Top } else { ctx }, &mut inner);
        self.stack.pop();
        match self.names.get(&push) {
            Some(name) if self.referenced.contains(&push) => {
                if ctx.wraps_rec() {
                    out.push('(');
                }
                out.push_str("rec ");
                out.push_str(name);
                out.push_str(". ");
                out.push_str(&inner);
                if ctx.wraps_rec() {
                    out.push(')');
                }
            }
            _ => out.push_str(&inner),
        }
    }

    fn node(&self, id: TypeId) -> TypeNode {
        self.store.node(id).map_children(|c| self.canon[&c])
    }

    fn body(&mut self, id: TypeId, ctx: Ctx, out: &mut String) {
        match self.node(id) {
            TypeNode::Int => out.push_str("int"),
            TypeNode::Chan(i, o, p) => {
                out.push('[');
                self.go(p, Ctx::Top, out);
                out.push_str(&format!("]{{{i},{o}}}"));
            }
            TypeNode::Prod(a, b) => {
                let wrap = ctx.wraps_prod();
                if wrap {
                    out.push('(');
                }
                self.go(a, Ctx::ProdLeft, out);
                out.push_str(" * ");
                self.go(b, Ctx::ProdRight, out);
                if wrap {
                    out.push(')');
                }
            }
            TypeNode::Sum(a, b) => {
                let wrap = ctx.wraps_sum();
                if wrap {
                    out.push('(');
                }
                self.go(a, Ctx::SumLeft, out);
                out.push_str(" (+) ");
                self.go(b, Ctx::SumRight, out);
                if wrap {
                    out.push(')');
                }
            }
        }
    }
}

/// Maps every node reachable from `root` to the first reachable node
/// bisimilar to it, by partition refinement.
fn minimize(store: &TypeStore, root: TypeId) -> HashMap<TypeId, TypeId> {
    let reach = store.reachable(root);
    let label = |n: TypeId| match store.node(n) {
        TypeNode::Int => (0, None),
        TypeNode::Chan(i, o, _) => (1, Some((i, o))),
        TypeNode::Prod(..) => (2, None),
        TypeNode::Sum(..) => (3, None),
    };
    let mut class: HashMap<TypeId, usize> = HashMap::new();
    let mut count = renumber(&reach, &mut class, |n, _| label(n));
    loop {
        let next = renumber(&reach, &mut class, |n, class| {
            let kids: Vec<usize> = store.node(n).children().iter().map(|c| class[c]).collect();
            (class[&n], kids)
        });
        if next == count {
            break;
        }
        count = next;
    }
    let mut first: HashMap<usize, TypeId> = HashMap::new();
    reach
        .iter()
        .map(|&n| (n, *first.entry(class[&n]).or_insert(n)))
        .collect()
}

fn renumber<K: std::hash::Hash + Eq>(
    reach: &[TypeId],
    class: &mut HashMap<TypeId, usize>,
    key: impl Fn(TypeId, &HashMap<TypeId, usize>) -> K,
) -> usize {
    let mut ids: HashMap<K, usize> = HashMap::new();
    let next: Vec<(TypeId, usize)> = reach
        .iter()
        .map(|&n| {
            let k = key(n, class);
            let fresh = ids.len();
            (n, *ids.entry(k).or_insert(fresh))
        })
        .collect();
    class.extend(next);
    ids.len()
}

/// μ-notation for a regular tree. Binders are introduced only for nodes
/// that are revisited, and named `X`, `Y`, `Z`, `X1`, … in the order in
/// which the traversal enters them.
pub(crate) fn render_type(store: &TypeStore, root: TypeId) -> String {
    let canon = minimize(store, root);
    let node = |n: TypeId| store.node(n).map_children(|c| canon[&c]);
    let mut reach: Vec<TypeId> = canon.values().copied().collect::<HashSet<_>>().into_iter().collect();
    reach.sort_unstable();
    let mut cyclic = HashSet::new();
    for scc in tarjan(&reach, |n| node(n).children()) {
        if scc.len() > 1 || node(scc[0]).children().contains(&scc[0]) {
            cyclic.extend(scc);
        }
    }
    let root = canon[&root];
    let mut r = Renderer {
        store,
        canon,
        cyclic,
        stack: Vec::new(),
        pushes: 0,
        referenced: HashSet::new(),
        names: HashMap::new(),
    };
    let mut scratch = String::new();
    r.go(root, Ctx::Top, &mut scratch);
    let mut used: Vec<usize> = r.referenced.drain().collect();
    used.sort_unstable();
    r.names = used
        .into_iter()
        .enumerate()
        .map(|(i, push)| (push, binder_name(i)))
        .collect();
    r.pushes = 0;
    let mut out = String::new();
    r.go(root, Ctx::Top, &mut out);
    out
}
