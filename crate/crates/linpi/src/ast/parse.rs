use std::collections::BTreeSet;

use thiserror::Error;

use super::{Expression, Name, Process};
use crate::lexer::{tokenize, Tok, Token};

type Unary = fn(Expression) -> Expression;

/// A syntax error with its position and the set of tokens that would
/// have been accepted there.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

const KEYWORDS: &[&str] = &["idle", "new", "in", "case", "of", "inl", "inr", "fst", "snd", "let"];

pub fn parse_process(text: &str) -> Result<Process, ParseError> {
    let mut p = Parser::new(text)?;
    let proc_ = p.par()?;
    p.expect_eof()?;
    Ok(proc_)
}

pub fn parse_expression(text: &str) -> Result<Expression, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Identifiers of the source, so that names for `_` never collide.
    taken: BTreeSet<String>,
    anon: usize,
}

impl Parser {
    pub(crate) fn new(text: &str) -> Result<Parser, ParseError> {
        let toks = tokenize(text).map_err(|e| ParseError {
            line: e.line,
            col: e.col,
            expected: vec!["a token".into()],
            found: format!("`{}`", e.found),
        })?;
        let taken = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        Ok(Parser {
            toks,
            pos: 0,
            taken,
            anon: 0,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, expected: &[&str]) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        }
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub(crate) fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    pub(crate) fn sym(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{s}`")]))
        }
    }

    pub(crate) fn kw(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{s}`")]))
        }
    }

    pub(crate) fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    /// An identifier that is not a keyword of `reserved`.
    pub(crate) fn ident(&mut self, reserved: &[&str]) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !reserved.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn binder(&mut self) -> Result<Name, ParseError> {
        let id = self.ident(KEYWORDS)?;
        if id != "_" {
            return Ok(Name::var(id));
        }
        loop {
            let candidate = format!("_{}", self.anon);
            self.anon += 1;
            if self.taken.insert(candidate.clone()) {
                return Ok(Name::var(candidate));
            }
        }
    }

    fn par(&mut self) -> Result<Process, ParseError> {
        let mut p = self.prefix()?;
        while self.is_sym("|") {
            self.bump();
            let r = self.prefix()?;
            p = Process::par(p, r);
        }
        Ok(p)
    }

    fn prefix(&mut self) -> Result<Process, ParseError> {
        if self.is_kw("idle") {
            self.bump();
            return Ok(Process::Idle);
        }
        if self.is_sym("*") {
            self.bump();
            return Ok(Process::repl(self.prefix()?));
        }
        if self.is_kw("new") {
            self.bump();
            let mut names = vec![self.binder()?];
            while self.is_sym(",") {
                self.bump();
                names.push(self.binder()?);
            }
            self.kw("in")?;
            let mut body = self.prefix()?;
            for n in names.into_iter().rev() {
                body = Process::new_chan(n, body);
            }
            return Ok(body);
        }
        if self.is_kw("case") {
            self.bump();
            let e = self.expr()?;
            self.kw("of")?;
            self.sym("{")?;
            self.kw("inl")?;
            self.sym("(")?;
            let x = self.binder()?;
            self.sym(")")?;
            self.sym("=>")?;
            let l = self.par()?;
            self.sym(";")?;
            self.kw("inr")?;
            self.sym("(")?;
            let y = self.binder()?;
            self.sym(")")?;
            self.sym("=>")?;
            let r = self.par()?;
            self.sym("}")?;
            return Ok(Process::case(e, x, l, y, r));
        }
        if self.is_kw("let") {
            self.bump();
            self.sym("(")?;
            let x = self.binder()?;
            self.sym(",")?;
            let y = self.binder()?;
            if x == y {
                return Err(self.error(&["a binder distinct from the first"]));
            }
            self.sym(")")?;
            self.sym("=")?;
            let e = self.expr()?;
            self.kw("in")?;
            let body = self.prefix()?;
            return Ok(Process::split(e, x, y, body));
        }
        if self.is_sym("(") {
            let save = self.pos;
            if let Ok(e) = self.expr() {
                if self.is_sym("?") || self.is_sym("!") {
                    return self.action(e);
                }
            }
            self.pos = save;
            self.bump();
            let p = self.par()?;
            self.sym(")")?;
            return Ok(p);
        }
        match self.peek() {
            Tok::Ident(_) | Tok::Int(_) => {
                let e = self.expr()?;
                self.action(e)
            }
            _ => Err(self.error(&["`idle`", "`*`", "`new`", "`case`", "`let`", "`(`", "expression"])),
        }
    }

    fn action(&mut self, subject: Expression) -> Result<Process, ParseError> {
        if self.is_sym("?") {
            self.bump();
            self.sym("(")?;
            let x = self.binder()?;
            self.sym(")")?;
            self.sym(".")?;
            let body = self.prefix()?;
            Ok(Process::input(subject, x, body))
        } else if self.is_sym("!") {
            self.bump();
            let object = self.expr()?;
            Ok(Process::output(subject, object))
        } else {
            Err(self.error(&["`?`", "`!`"]))
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut e = self.unary()?;
        while self.is_sym("+") {
            self.bump();
            let r = self.unary()?;
            e = Expression::add(e, r);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        let ops: [(&str, Unary); 4] = [
            ("fst", Expression::fst),
            ("snd", Expression::snd),
            ("inl", Expression::inl),
            ("inr", Expression::inr),
        ];
        for (kw, build) in ops {
            if self.is_kw(kw) {
                self.bump();
                return Ok(build(self.unary()?));
            }
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expression::IntLit(n))
            }
            Tok::Ident(s) if s != "_" && !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Expression::Name(Name::var(s)))
            }
            Tok::Sym("(") => {
                self.bump();
                let a = self.expr()?;
                if self.is_sym(",") {
                    self.bump();
                    let b = self.expr()?;
                    self.sym(")")?;
                    Ok(Expression::pair(a, b))
                } else {
                    self.sym(")")?;
                    Ok(a)
                }
            }
            _ => Err(self.error(&["integer", "identifier", "`(`", "`fst`", "`snd`", "`inl`", "`inr`"])),
        }
    }
}
