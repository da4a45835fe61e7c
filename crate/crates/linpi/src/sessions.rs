//! Session types decoded from linear channel types.
//!
//! A session is encoded by continuation passing: each step uses a fresh
//! linear channel whose message carries the payload and the channel on
//! which the conversation continues.
//!
//! ```text
//! enc(?t.T) = [t * enc(T)]{1,0}
//! enc(!t.T) = [t * enc(dual T)]{0,1}
//! ```
//!
//! The continuation of an output is encoded from the receiver's point of
//! view, hence the dual. A channel with no uses decodes to `end`.
//!
//! ```
//! use linpi::sessions::Sessions;
//! use linpi::types::{parse_type, TypeStore};
//!
//! let mut store = TypeStore::new();
//! let t = parse_type(&mut store, "rec X. [int * [int * X]{0,1}]{0,1}").unwrap();
//! let mut sessions = Sessions::new();
//! let s = sessions.decode(&store, t).unwrap();
//! assert_eq!(sessions.render(&store, s), "rec X. !int.?int.X");
//! let back = sessions.encode(&mut store, s);
//! assert!(store.type_equal(back, t));
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::types::{Shape, TypeId, TypeNode, TypeStore, Use};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(u32);

/// What a session step carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Payload {
    /// A channel that is itself session-shaped.
    Session(SessionId),
    Type(TypeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SessionNode {
    In(Payload, SessionId),
    Out(Payload, SessionId),
    End,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("not session-shaped: {0}")]
    NotSessionShaped(String),
}

/// An arena of possibly cyclic session types.
#[derive(Clone, Debug, Default)]
pub struct Sessions {
    nodes: Vec<SessionNode>,
}

impl Sessions {
    pub fn new() -> Sessions {
        Sessions::default()
    }

    pub fn node(&self, s: SessionId) -> SessionNode {
        self.nodes[s.0 as usize]
    }

    pub fn add(&mut self, n: SessionNode) -> SessionId {
        self.nodes.push(n);
        SessionId(self.nodes.len() as u32 - 1)
    }

    /// Overwrites a node, typically a placeholder made to close a cycle.
    pub fn set(&mut self, s: SessionId, n: SessionNode) {
        self.nodes[s.0 as usize] = n;
    }

    pub fn end(&mut self) -> SessionId {
        self.add(SessionNode::End)
    }

    /// Inverts the encoding. Fails on channels whose uses are neither
    /// `{1,0}`, `{0,1}` nor `{0,0}`, and on non-channels.
    pub fn decode(&mut self, store: &TypeStore, t: TypeId) -> Result<SessionId, SessionError> {
        let mut memo = HashMap::new();
        self.decode_pol(store, t, false, &mut memo)
    }

    /// `decode_pol(t, true)` is `dual(decode(t))`.
    fn decode_pol(
        &mut self,
        store: &TypeStore,
        t: TypeId,
        flip: bool,
        memo: &mut HashMap<(TypeId, bool), SessionId>,
    ) -> Result<SessionId, SessionError> {
        if let Some(&s) = memo.get(&(t, flip)) {
            return Ok(s);
        }
        let bad = |why: &str| Err(SessionError::NotSessionShaped(format!("{} ({why})", store.render(t))));
        let TypeNode::Chan(i, o, p) = store.node(t) else {
            return bad("not a channel");
        };
        let input = match (i, o) {
            (Use::Zero, Use::Zero) => {
                let s = self.end();
                memo.insert((t, flip), s);
                return Ok(s);
            }
            (Use::One, Use::Zero) => true,
            (Use::Zero, Use::One) => false,
            _ => return bad("uses must be {1,0}, {0,1} or {0,0}"),
        };
        let TypeNode::Prod(payload, cont) = store.node(p) else {
            return bad("message is not a pair");
        };
        let s = self.end();
        memo.insert((t, flip), s);
        let payload = self.decode_payload(store, payload, memo);
        let cont = self.decode_pol(store, cont, flip ^ !input, memo)?;
        self.set(
            s,
            if input ^ flip {
                SessionNode::In(payload, cont)
            } else {
                SessionNode::Out(payload, cont)
            },
        );
        Ok(s)
    }

    /// Linear channels become nested sessions; anything else stays a type.
    fn decode_payload(
        &mut self,
        store: &TypeStore,
        t: TypeId,
        memo: &mut HashMap<(TypeId, bool), SessionId>,
    ) -> Payload {
        let linear = matches!(
            store.node(t),
            TypeNode::Chan(Use::One, Use::Zero, _) | TypeNode::Chan(Use::Zero, Use::One, _)
        );
        if linear {
            let mark = self.nodes.len();
            let mut trial = memo.clone();
            if let Ok(s) = self.decode_pol(store, t, false, &mut trial) {
                *memo = trial;
                return Payload::Session(s);
            }
            self.nodes.truncate(mark);
        }
        Payload::Type(t)
    }

    /// Swaps input and output at every step.
    pub fn dual(&mut self, s: SessionId) -> SessionId {
        let mut memo = HashMap::new();
        self.dual_memo(s, &mut memo)
    }

    fn dual_memo(&mut self, s: SessionId, memo: &mut HashMap<SessionId, SessionId>) -> SessionId {
        if let Some(&d) = memo.get(&s) {
            return d;
        }
        let d = self.end();
        memo.insert(s, d);
        let n = match self.node(s) {
            SessionNode::End => SessionNode::End,
            SessionNode::In(p, k) => SessionNode::Out(p, self.dual_memo(k, memo)),
            SessionNode::Out(p, k) => SessionNode::In(p, self.dual_memo(k, memo)),
        };
        self.set(d, n);
        d
    }

    /// Applies the encoding. `end` becomes `[int]{0,0}`.
    pub fn encode(&self, store: &mut TypeStore, s: SessionId) -> TypeId {
        let mut equations: BTreeMap<(SessionId, bool), Shape<(SessionId, bool)>> = BTreeMap::new();
        let mut todo = vec![(s, false)];
        while let Some(key @ (s, flip)) = todo.pop() {
            if equations.contains_key(&key) {
                continue;
            }
            let (input, p, k, kflip) = match self.node(s) {
                SessionNode::End => {
                    equations.insert(key, Shape::chan(Use::Zero, Use::Zero, Shape::Int));
                    continue;
                }
                // enc(dual ?t.T) = enc(!t.dual T) = [t * enc(T)]{0,1}
                SessionNode::In(p, k) => (!flip, p, k, false),
                // enc(dual !t.T) = enc(?t.dual T) = [t * enc(dual T)]{1,0}
                SessionNode::Out(p, k) => (flip, p, k, true),
            };
            let payload = match p {
                Payload::Type(t) => Shape::Known(t),
                Payload::Session(q) => {
                    todo.push((q, false));
                    Shape::Unknown((q, false))
                }
            };
            todo.push((k, kflip));
            let (i, o) = if input {
                (Use::One, Use::Zero)
            } else {
                (Use::Zero, Use::One)
            };
            equations.insert(key, Shape::chan(i, o, Shape::prod(payload, Shape::Unknown((k, kflip)))));
        }
        store
            .make_type(&equations)
            .expect("every reached session has an equation")[&(s, false)]
    }

    /// Bisimilarity, with payload types compared by [`TypeStore::type_equal`].
    pub fn equal(&self, store: &TypeStore, a: SessionId, b: SessionId) -> bool {
        let mut seen = HashSet::new();
        let mut todo = vec![(a, b)];
        while let Some((a, b)) = todo.pop() {
            if !seen.insert((a, b)) {
                continue;
            }
            let (pa, ka, pb, kb) = match (self.node(a), self.node(b)) {
                (SessionNode::End, SessionNode::End) => continue,
                (SessionNode::In(pa, ka), SessionNode::In(pb, kb))
                | (SessionNode::Out(pa, ka), SessionNode::Out(pb, kb)) => (pa, ka, pb, kb),
                _ => return false,
            };
            match (pa, pb) {
                (Payload::Type(x), Payload::Type(y)) if store.type_equal(x, y) => {}
                (Payload::Session(x), Payload::Session(y)) => todo.push((x, y)),
                _ => return false,
            }
            todo.push((ka, kb));
        }
        true
    }

    fn children(&self, s: SessionId) -> Vec<SessionId> {
        match self.node(s) {
            SessionNode::End => vec![],
            SessionNode::In(Payload::Session(p), k) | SessionNode::Out(Payload::Session(p), k) => vec![p, k],
            SessionNode::In(_, k) | SessionNode::Out(_, k) => vec![k],
        }
    }

    fn reachable(&self, root: SessionId) -> Vec<SessionId> {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut todo = vec![root];
        while let Some(s) = todo.pop() {
            if seen.insert(s) {
                order.push(s);
                todo.extend(self.children(s).into_iter().rev());
            }
        }
        order
    }

    /// Maps every node reachable from `root` to the first one bisimilar to it.
    fn minimize(&self, store: &TypeStore, root: SessionId) -> HashMap<SessionId, SessionId> {
        let reach = self.reachable(root);
        let mut canon: HashMap<SessionId, SessionId> = HashMap::new();
        for &s in &reach {
            let rep = reach
                .iter()
                .copied()
                .find(|&r| canon.get(&r) == Some(&r) && self.equal(store, r, s))
                .unwrap_or(s);
            canon.insert(s, rep);
        }
        canon
    }

    /// `?T.S`, `!T.S`, `end` and `rec X. S`, with binders only on revisited steps.
    pub fn render(&self, store: &TypeStore, root: SessionId) -> String {
        let canon = self.minimize(store, root);
        let mut r = Printer {
            sessions: self,
            store,
            canon: &canon,
            stack: Vec::new(),
            names: HashMap::new(),
        };
        r.go(canon[&root])
    }
}

struct Printer<'a> {
    sessions: &'a Sessions,
    store: &'a TypeStore,
    canon: &'a HashMap<SessionId, SessionId>,
    stack: Vec<SessionId>,
    names: HashMap<SessionId, String>,
}

impl Printer<'_> {
    fn go(&mut self, s: SessionId) -> String {
        if self.stack.contains(&s) {
            let fresh = crate::types::binder_name(self.names.len());
            return self.names.entry(s).or_insert(fresh).clone();
        }
        self.stack.push(s);
        let body = match self.sessions.node(s) {
            SessionNode::End => "end".to_string(),
            SessionNode::In(p, k) => format!("?{}.{}", self.payload(p), self.go(self.canon[&k])),
            SessionNode::Out(p, k) => format!("!{}.{}", self.payload(p), self.go(self.canon[&k])),
        };
        self.stack.pop();
        match self.names.remove(&s) {
            Some(x) => format!("rec {x}. {body}"),
            None => body,
        }
    }

    fn payload(&mut self, p: Payload) -> String {
        match p {
            Payload::Session(q) => format!("({})", self.go(self.canon[&q])),
            Payload::Type(t) => match self.store.node(t) {
                TypeNode::Prod(..) | TypeNode::Sum(..) => format!("({})", self.store.render(t)),
                _ => self.store.render(t),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::parse_type;

    fn decode(store: &mut TypeStore, text: &str) -> (Sessions, Result<SessionId, SessionError>) {
        let t = parse_type(store, text).unwrap();
        let mut s = Sessions::new();
        let r = s.decode(store, t);
        (s, r)
    }

    #[test]
    fn alternating_protocol_and_its_dual() {
        let mut store = TypeStore::new();
        let (mut ss, t) = decode(&mut store, "rec X. [int * [int * X]{0,1}]{0,1}");
        let t = t.unwrap();
        assert_eq!(ss.render(&store, t), "rec X. !int.?int.X");
        let d = ss.dual(t);
        assert_eq!(ss.render(&store, d), "rec X. ?int.!int.X");
        let s = parse_type(
            &mut store,
            "[int * [int * rec X. [int * [int * X]{0,1}]{0,1}]{0,1}]{1,0}",
        )
        .unwrap();
        let s = ss.decode(&store, s).unwrap();
        assert!(ss.equal(&store, s, d));
        let dd = ss.dual(d);
        assert!(ss.equal(&store, dd, t));
        assert!(!ss.equal(&store, d, t));
    }

    #[test]
    fn terminated_and_rejected() {
        let mut store = TypeStore::new();
        let (ss, e) = decode(&mut store, "[int]{0,0}");
        assert_eq!(ss.node(e.unwrap()), SessionNode::End);
        let (_, e) = decode(&mut store, "[int * [int]{1,0}]{w,1}");
        assert!(matches!(e, Err(SessionError::NotSessionShaped(_))));
        let (_, e) = decode(&mut store, "[int]{1,0}");
        assert!(e.is_err());
        let (_, e) = decode(&mut store, "int");
        assert!(e.is_err());
    }

    #[test]
    fn nested_sessions_and_round_trip() {
        let mut store = TypeStore::new();
        let text = "[[int * [int]{0,0}]{0,1} * [int * [int]{0,0}]{1,0}]{0,1}";
        let t = parse_type(&mut store, text).unwrap();
        let mut ss = Sessions::new();
        let s = ss.decode(&store, t).unwrap();
        assert_eq!(ss.render(&store, s), "!(!int.end).!int.end");
        let back = ss.encode(&mut store, s);
        assert!(store.type_equal(back, t));
        let (ss, e) = decode(&mut store, "[([int]{w,w} * (int * int)) * [int]{0,0}]{1,0}");
        assert_eq!(ss.render(&store, e.unwrap()), "?([int]{w,w} * int * int).end");
    }
}
