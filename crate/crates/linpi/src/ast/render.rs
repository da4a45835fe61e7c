use super::{Expression, Process};

/// Renders an expression in the concrete syntax accepted by the parser.
pub fn render_expression(e: &Expression) -> String {
    let mut s = String::new();
    expr(e, 0, &mut s);
    s
}

/// Renders a process so that parsing the result gives back an
/// alpha-equivalent process.
pub fn render_process(p: &Process) -> String {
    let mut s = String::new();
    process(p, 0, &mut s);
    s
}

// Expression levels: 0 admits `+`, 1 admits prefix operators.
fn expr(e: &Expression, level: u8, s: &mut String) {
    match e {
        Expression::IntLit(n) => s.push_str(&n.to_string()),
        Expression::Name(n) => s.push_str(&n.text),
        Expression::Pair(a, b) => {
            s.push('(');
            expr(a, 0, s);
            s.push_str(", ");
            expr(b, 0, s);
            s.push(')');
        }
        Expression::Add(a, b) => {
            if level > 0 {
                s.push('(');
            }
            expr(a, 0, s);
            s.push_str(" + ");
            expr(b, 1, s);
            if level > 0 {
                s.push(')');
            }
        }
        Expression::Fst(a) | Expression::Snd(a) | Expression::Inl(a) | Expression::Inr(a) => {
            s.push_str(match e {
                Expression::Fst(_) => "fst ",
                Expression::Snd(_) => "snd ",
                Expression::Inl(_) => "inl ",
                _ => "inr ",
            });
            expr(a, 1, s);
        }
    }
}

// Process levels: 0 admits `|`, 1 requires a prefix form.
fn process(p: &Process, level: u8, s: &mut String) {
    match p {
        Process::Idle => s.push_str("idle"),
        Process::Input { subject, binder, body } => {
            expr(subject, 0, s);
            s.push_str("?(");
            s.push_str(&binder.text);
            s.push_str(").");
            process(body, 1, s);
        }
        Process::Output { subject, object } => {
            expr(subject, 0, s);
            s.push('!');
            expr(object, 0, s);
        }
        Process::Par(l, r) => {
            if level > 0 {
                s.push('(');
            }
            process(l, 0, s);
            s.push_str(" | ");
            process(r, 1, s);
            if level > 0 {
                s.push(')');
            }
        }
        Process::Repl(body) => {
            s.push('*');
            process(body, 1, s);
        }
        Process::New { binder, body } => {
            s.push_str("new ");
            s.push_str(&binder.text);
            s.push_str(" in ");
            process(body, 1, s);
        }
        Process::Case {
            scrutinee,
            left_binder,
            left_body,
            right_binder,
            right_body,
        } => {
            s.push_str("case ");
            expr(scrutinee, 0, s);
            s.push_str(" of { inl(");
            s.push_str(&left_binder.text);
            s.push_str(") => ");
            process(left_body, 0, s);
            s.push_str("; inr(");
            s.push_str(&right_binder.text);
            s.push_str(") => ");
            process(right_body, 0, s);
            s.push_str(" }");
        }
        Process::Split {
            scrutinee,
            fst_binder,
            snd_binder,
            body,
        } => {
            s.push_str("let (");
            s.push_str(&fst_binder.text);
            s.push_str(", ");
            s.push_str(&snd_binder.text);
            s.push_str(") = ");
            expr(scrutinee, 0, s);
            s.push_str(" in ");
            process(body, 1, s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_process;

    #[test]
    fn simple_forms() {
        assert_eq!(render_process(&Process::Idle), "idle");
        assert_eq!(
            render_process(&Process::par(Process::Idle, Process::Idle)),
            "idle | idle"
        );
    }

    #[test]
    fn round_trips() {
        for src in [
            "*succ?(p). (snd p)!((fst p)+1)",
            "new a in (a!3 | a?(x).idle)",
            "idle | (idle | idle)",
            "a?(x).(x!1 | x!2) | c!(1, inl (2 + 3))",
            "case inl 3 of { inl(x) => y!x | z!x; inr(y) => idle }",
            "let (x, y) = (fst z) + 1 in x?(w).idle",
            "fst snd z!(1 + (2 + 3))",
            "new a in *a?(x).idle",
        ] {
            let p = parse_process(src).unwrap();
            let again = parse_process(&render_process(&p)).unwrap();
            assert!(p.alpha_equal(&again), "{src} -> {}", render_process(&p));
        }
    }
}
