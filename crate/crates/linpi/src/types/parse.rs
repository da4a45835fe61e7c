use std::collections::BTreeMap;

use thiserror::Error;

use super::{Shape, TypeEnv, TypeError, TypeId, TypeStore, Use};
use crate::ast::parse::Parser;
use crate::ast::{Name, ParseError};
use crate::lexer::Tok;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TypeParseError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error("unbound type variable `{0}`")]
    Unbound(String),
    #[error(transparent)]
    IllFormed(#[from] TypeError),
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<TypeParseError>,
    },
    #[error("line {line}: `{name}` is bound twice")]
    Duplicate { line: usize, name: String },
}

const RESERVED: &[&str] = &["int", "rec"];

/// Parses a type in the grammar used for output and environment files.
pub fn parse_type(store: &mut TypeStore, text: &str) -> Result<TypeId, TypeParseError> {
    let mut p = Parser::new(text)?;
    let ty = TypeBuilder::default().finish(store, &mut p)?;
    Ok(ty)
}

/// Parses an environment file: one `name : T` binding per line; blank
/// lines and `--` comments are skipped.
pub fn parse_env(store: &mut TypeStore, text: &str) -> Result<TypeEnv, TypeParseError> {
    let mut env = TypeEnv::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let wrap = |e: TypeParseError| TypeParseError::Line {
            line: line_no,
            source: Box::new(e),
        };
        let mut p = Parser::new(line).map_err(|e| wrap(e.into()))?;
        if *p.peek() == Tok::Eof {
            continue;
        }
        let name = p.ident(&[]).map_err(|e| wrap(e.into()))?;
        p.sym(":").map_err(|e| wrap(e.into()))?;
        let ty = TypeBuilder::default().finish(store, &mut p).map_err(wrap)?;
        if env.insert(Name::var(name.clone()), ty).is_some() {
            return Err(TypeParseError::Duplicate { line: line_no, name });
        }
    }
    Ok(env)
}

#[derive(Default)]
struct TypeBuilder {
    equations: BTreeMap<usize, Shape<usize>>,
    scope: Vec<(String, usize)>,
    next: usize,
}

impl TypeBuilder {
    fn finish(mut self, store: &mut TypeStore, p: &mut Parser) -> Result<TypeId, TypeParseError> {
        let shape = self.sum(p)?;
        p.expect_eof()?;
        let root = match shape {
            Shape::Unknown(k) => k,
            other => {
                let k = self.next;
                self.equations.insert(k, other);
                k
            }
        };
        Ok(store.make_type(&self.equations)?[&root])
    }

    fn sum(&mut self, p: &mut Parser) -> Result<Shape<usize>, TypeParseError> {
        let left = self.prod(p)?;
        if p.is_sym("(+)") {
            p.bump();
            let right = self.sum(p)?;
            return Ok(Shape::sum(left, right));
        }
        Ok(left)
    }

    fn prod(&mut self, p: &mut Parser) -> Result<Shape<usize>, TypeParseError> {
        let left = self.atom(p)?;
        if p.is_sym("*") {
            p.bump();
            let right = self.prod(p)?;
            return Ok(Shape::prod(left, right));
        }
        Ok(left)
    }

    fn atom(&mut self, p: &mut Parser) -> Result<Shape<usize>, TypeParseError> {
        if p.is_kw("int") {
            p.bump();
            return Ok(Shape::Int);
        }
        if p.is_kw("rec") {
            p.bump();
            let var = p.ident(RESERVED)?;
            p.sym(".")?;
            let k = self.next;
            self.next += 1;
            self.scope.push((var, k));
            let body = self.sum(p)?;
            self.scope.pop();
            self.equations.insert(k, body);
            return Ok(Shape::Unknown(k));
        }
        if p.is_sym("(") {
            p.bump();
            let inner = self.sum(p)?;
            p.sym(")")?;
            return Ok(inner);
        }
        if p.is_sym("[") {
            p.bump();
            let payload = self.sum(p)?;
            p.sym("]")?;
            p.sym("{")?;
            let i = use_literal(p)?;
            p.sym(",")?;
            let o = use_literal(p)?;
            p.sym("}")?;
            return Ok(Shape::chan(i, o, payload));
        }
        match p.peek().clone() {
            Tok::Ident(v) if !RESERVED.contains(&v.as_str()) => {
                p.bump();
                match self.scope.iter().rev().find(|(n, _)| *n == v) {
                    Some(&(_, k)) => Ok(Shape::Unknown(k)),
                    None => Err(TypeParseError::Unbound(v)),
                }
            }
            _ => Err(p.error(&["`int`", "`rec`", "`[`", "`(`", "type variable"]).into()),
        }
    }
}

fn use_literal(p: &mut Parser) -> Result<Use, ParseError> {
    let u = match p.peek() {
        Tok::Int(0) => Use::Zero,
        Tok::Int(1) => Use::One,
        Tok::Ident(w) if w == "w" => Use::Omega,
        _ => return Err(p.error(&["`0`", "`1`", "`w`"])),
    };
    p.bump();
    Ok(u)
}
