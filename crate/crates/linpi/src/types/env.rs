use std::collections::BTreeMap;

use thiserror::Error;

use super::{TypeId, TypeNode, TypeStore};
use crate::ast::Name;
use crate::semantics::Label;

/// A typing environment: finitely many names with their types.
pub type TypeEnv = BTreeMap<Name, TypeId>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("channel `{0}` is not in the environment")]
    MissingChannel(Name),
    #[error("channel `{0}` has no use left for the communication")]
    InsufficientUse(Name),
}

/// `Γ1 + Γ2`: names in both environments get the combination of their
/// types. Returns `None` when some combination is undefined.
pub fn env_combine(store: &mut TypeStore, g1: &TypeEnv, g2: &TypeEnv) -> Option<TypeEnv> {
    let mut out = g1.clone();
    for (name, &t) in g2 {
        let combined = match g1.get(name) {
            Some(&s) => store.type_combine(s, t)?,
            None => t,
        };
        out.insert(name.clone(), combined);
    }
    Some(out)
}

/// The environment after a step labelled `label`: a communication on `a`
/// consumes one input and one output use of `a`.
pub fn env_reduce(store: &mut TypeStore, g: &TypeEnv, label: &Label) -> Result<TypeEnv, EnvError> {
    let a = match label {
        Label::Tau => return Ok(g.clone()),
        Label::Comm(a) => a,
    };
    let t = *g.get(a).ok_or_else(|| EnvError::MissingChannel(a.clone()))?;
    let TypeNode::Chan(i, o, p) = store.node(t) else {
        return Err(EnvError::InsufficientUse(a.clone()));
    };
    let (i, o) = i
        .sub_one()
        .zip(o.sub_one())
        .ok_or_else(|| EnvError::InsufficientUse(a.clone()))?;
    let mut out = g.clone();
    out.insert(a.clone(), store.chan(i, o, p));
    Ok(out)
}
