//! Type reconstruction for the linear π-calculus with composite regular
//! types.
//!
//! The pipeline runs from source text to a typing environment:
//! [`ast::parse_process`] builds a process, [`constraintgen::gen_process`]
//! produces a synthesized environment and a constraint set, and
//! [`solver::solve`] turns the constraints into a ground substitution.
//! [`typecheck`] decides whether a given environment types a process, and
//! [`semantics`] runs processes.

mod lexer;

pub mod ast;
pub mod cli;
pub mod constraintgen;
pub mod semantics;
pub mod sessions;
pub mod solver;
pub mod typecheck;
pub mod types;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/processes.md")]
    struct Processes;
    #[doc = include_str!("../../../book/src/types.md")]
    struct Types;
    #[doc = include_str!("../../../book/src/constraints.md")]
    struct Constraints;
    #[doc = include_str!("../../../book/src/solving.md")]
    struct Solving;
    #[doc = include_str!("../../../book/src/sessions.md")]
    struct Sessions;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
