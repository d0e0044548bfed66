use std::fmt::{self, Write};

use super::value::smt_value;
use super::{Op, Term, Time, Var};

fn infix(op: &Op) -> Option<&'static str> {
    Some(match op {
        Op::Add => "+",
        Op::Sub => "-",
        Op::Mul => "*",
        Op::IntDiv => "div",
        Op::Mod => "mod",
        Op::Lt => "<",
        Op::Le => "<=",
        Op::Eq => "=",
        Op::Ge => ">=",
        Op::Gt => ">",
        Op::And => "and",
        Op::Or => "or",
        Op::Xor => "xor",
        Op::Implies => "=>",
        Op::Iff => "<=>",
        _ => return None,
    })
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.time {
            Time::Current => write!(f, "{}", self.name),
            Time::Next => write!(f, "{}'", self.name),
            Time::Step(i) => write!(f, "{}@{}", self.name, i),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::App(op, args) => {
                if let Some(sym) = infix(op) {
                    f.write_char('(')?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, " {sym} ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    return f.write_char(')');
                }
                match op {
                    Op::Neg => write!(f, "(- {})", args[0]),
                    Op::Not => write!(f, "(not {})", args[0]),
                    Op::Ite => write!(f, "(if {} then {} else {})", args[0], args[1], args[2]),
                    Op::Uf(name, _) => {
                        write!(f, "{name}(")?;
                        for (i, a) in args.iter().enumerate() {
                            if i > 0 {
                                f.write_str(", ")?;
                            }
                            write!(f, "{a}")?;
                        }
                        f.write_char(')')
                    }
                    _ => unreachable!("infix operators handled above"),
                }
            }
        }
    }
}

fn is_simple_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || "~!@$%^&*_-+=<>.?/".contains(c) => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
}

/// Wire name of a variable occurrence: `name$step` for indexed variables.
pub(crate) fn smt_symbol(name: &str, time: Time) -> String {
    let raw = match time {
        Time::Current => name.to_string(),
        Time::Next => format!("{name}'"),
        Time::Step(i) => format!("{name}${i}"),
    };
    if is_simple_symbol(&raw) {
        raw
    } else {
        format!("|{raw}|")
    }
}

pub(super) fn write_smt(t: &Term, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(&smt_symbol(&v.name, v.time)),
        Term::Const(c) => out.push_str(&smt_value(c)),
        Term::App(op, args) => {
            let head: &str = match op {
                Op::Add => "+",
                Op::Sub | Op::Neg => "-",
                Op::Mul => "*",
                Op::IntDiv => "div",
                Op::Mod => "mod",
                Op::Lt => "<",
                Op::Le => "<=",
                Op::Eq | Op::Iff => "=",
                Op::Ge => ">=",
                Op::Gt => ">",
                Op::Not => "not",
                Op::And => "and",
                Op::Or => "or",
                Op::Xor => "xor",
                Op::Implies => "=>",
                Op::Ite => "ite",
                Op::Uf(name, _) => name,
            };
            out.push('(');
            out.push_str(head);
            for a in args {
                out.push(' ');
                write_smt(a, out);
            }
            out.push(')');
        }
    }
}
