//! The `linpi` command line.
//!
//! Exit codes: 0 on success, 1 when a process is ill typed (or a check is
//! rejected), 2 on unreadable or unparsable input. Everything `infer`
//! prints besides the bindings is a `--` comment, so its output is a valid
//! environment file for `check`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ast::{parse_process, Process};
use crate::constraintgen::{gen_process_with, GenOptions, VarSupply};
use crate::semantics;
use crate::sessions::Sessions;
use crate::solver::{reconstruct, InferOptions, Relation, SolveOptions, SolveReport};
use crate::typecheck::check_process;
use crate::types::{parse_env, TypeNode, TypeStore, Use};

#[derive(Debug, Parser)]
#[command(name = "linpi", version, about = "Type reconstruction for the linear pi-calculus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer the type of every free name.
    Infer {
        file: PathBuf,
        /// Also print the session type encoded by each linear channel.
        #[arg(long)]
        sessions: bool,
        #[command(flatten)]
        gen: GenFlags,
        /// Give ω to every variable of a use partition too large to search.
        #[arg(long)]
        omega_fallback: bool,
        /// 1 adds the constraints and closure classes, 2 also the
        /// completion and use partitions.
        #[arg(long, default_value_t = 0)]
        dump: u8,
    },
    /// Check a process against an environment file.
    Check {
        file: PathBuf,
        #[arg(long)]
        env: PathBuf,
    },
    /// Print the synthesized environment and the generated constraints.
    Constraints {
        file: PathBuf,
        #[command(flatten)]
        gen: GenFlags,
    },
    /// Reduce the process, choosing redexes at random.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct GenFlags {
    /// Let restricted channels have unrelated input and output uses.
    #[arg(long)]
    pub unbalanced_new: bool,
}

impl GenFlags {
    fn options(&self) -> GenOptions {
        GenOptions {
            unbalanced_new: self.unbalanced_new,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Runs a parsed command line, writing results to `out` and diagnostics
/// to `err`. Returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Infer {
            file,
            sessions,
            gen,
            omega_fallback,
            dump,
        } => read_process(file).and_then(|p| {
            let opts = InferOptions {
                generation: gen.options(),
                solving: SolveOptions {
                    omega_fallback: *omega_fallback,
                },
            };
            infer(&p, opts, *sessions, *dump, out)
        }),
        Command::Check { file, env } => read_process(file).and_then(|p| check(&p, env, out)),
        Command::Constraints { file, gen } => read_process(file).map(|p| {
            let (env, c) = gen_process_with(&p, &mut VarSupply::new(), gen.options());
            for (x, t) in &env {
                let _ = writeln!(out, "{x} : {t}");
            }
            for k in &c {
                let _ = writeln!(out, "{k}");
            }
            EXIT_OK
        }),
        Command::Run { file, max_steps, seed } => read_process(file).map(|p| {
            for (label, q) in semantics::run(&p, *max_steps, *seed) {
                let _ = writeln!(out, "{label} | {q}");
            }
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_process(path: &Path) -> Result<Process, Failure> {
    let text = read(path)?;
    parse_process(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn infer(p: &Process, opts: InferOptions, sessions: bool, dump: u8, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut store = TypeStore::new();
    let r = reconstruct(p, &mut store, opts).map_err(|e| Failure {
        code: EXIT_REJECTED,
        message: e.to_string(),
    })?;
    if dump >= 1 {
        let _ = writeln!(out, "-- constraints");
        for k in &r.constraints {
            let _ = writeln!(out, "--   {k}");
        }
        dump_report(&r.report, dump, out);
    }
    for (u, t) in &r.env {
        let _ = writeln!(out, "{u} : {}", store.render(*t));
    }
    if sessions {
        let _ = writeln!(out, "-- sessions");
        let mut arena = Sessions::new();
        for (u, &t) in &r.env {
            let line = match arena.decode(&store, t) {
                Ok(s) => arena.render(&store, s),
                Err(_) if matches!(store.node(t), TypeNode::Chan(i, o, _) if i == Use::Omega || o == Use::Omega) => {
                    format!("{} (unlimited channel, no protocol)", store.render(t))
                }
                Err(e) => e.to_string(),
            };
            let _ = writeln!(out, "--   {u} : {line}");
        }
    }
    Ok(EXIT_OK)
}

fn dump_report(report: &SolveReport, level: u8, out: &mut dyn Write) {
    for (title, rel) in [("equality classes", Relation::Eq), ("coherence classes", Relation::Coh)] {
        let _ = writeln!(out, "-- {title}");
        for line in report.closure.describe(rel) {
            let _ = writeln!(out, "--   {line}");
        }
    }
    if level < 2 {
        return;
    }
    let _ = writeln!(out, "-- defaults and completion");
    for k in report.defaults.iter().chain(&report.completion) {
        let _ = writeln!(out, "--   {k}");
    }
    let _ = writeln!(out, "-- use partitions");
    for (i, part) in report.partitions.iter().enumerate() {
        for e in part {
            let _ = writeln!(out, "--   [{i}] {e}");
        }
    }
}

fn check(p: &Process, env_path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut store = TypeStore::new();
    let text = read(env_path)?;
    let g = parse_env(&mut store, &text).map_err(|e| Failure::input(format!("{}: {e}", env_path.display())))?;
    match check_process(&mut store, &g, p) {
        Ok(true) => {
            let _ = writeln!(out, "ok");
            Ok(EXIT_OK)
        }
        Ok(false) => Err(Failure {
            code: EXIT_REJECTED,
            message: "the environment does not type the process".into(),
        }),
        Err(e) => Err(Failure {
            code: EXIT_REJECTED,
            message: e.to_string(),
        }),
    }
}
