use std::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ast::*;

/// Renders a program back to concrete syntax. Expressions are fully
/// parenthesized so the output re-parses to the same tree.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    if let Some(m) = &p.main_pragma {
        writeln!(out, "--%MAIN {m};").unwrap();
    }
    for prop in &p.property_pragmas {
        writeln!(out, "--%PROPERTY {prop};").unwrap();
    }
    for n in &p.nodes {
        print_node(n, &mut out);
    }
    out
}

fn decls(ds: &[Decl]) -> String {
    ds.iter().map(|d| format!("{}: {}", d.name, d.sort)).collect::<Vec<_>>().join("; ")
}

fn print_node(n: &Node, out: &mut String) {
    writeln!(out, "node {}({}) returns ({});", n.name, decls(&n.inputs), decls(&n.outputs)).unwrap();
    if !n.locals.is_empty() {
        out.push_str("var\n");
        for d in &n.locals {
            writeln!(out, "  {}: {};", d.name, d.sort).unwrap();
        }
    }
    out.push_str("let\n");
    for eq in &n.equations {
        writeln!(out, "  {} = {};", eq.lhs, print_expr(&eq.rhs)).unwrap();
    }
    out.push_str("tel\n\n");
}

fn decimal(r: &BigRational) -> String {
    // Literals from the lexer have denominators of the form 2^a 5^b.
    let mut num = r.numer().clone();
    let mut den = r.denom().clone();
    let mut places = 0usize;
    let ten = BigInt::from(10);
    while !(&num % &den).is_zero() && places < 64 {
        num *= &ten;
        places += 1;
    }
    if !(&num % &den).is_zero() {
        return format!("({}.0 / {}.0)", r.numer(), r.denom());
    }
    let digits = (num / std::mem::replace(&mut den, BigInt::one())).to_string();
    if places == 0 {
        return format!("{digits}.0");
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    format!("{int}.{frac}")
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Bool(b) => b.to_string(),
        Expr::Int(i) => i.to_string(),
        Expr::Real(r) => decimal(r),
        Expr::Var(v) => v.clone(),
        Expr::Unary(UnOp::Neg, a) => format!("(- {})", print_expr(a)),
        Expr::Unary(UnOp::Not, a) => format!("(not {})", print_expr(a)),
        Expr::Binary(op, a, b) => format!("({} {} {})", print_expr(a), op.symbol(), print_expr(b)),
        Expr::Ite(c, t, f) => format!("(if {} then {} else {})", print_expr(c), print_expr(t), print_expr(f)),
        Expr::Pre(a) => format!("(pre {})", print_expr(a)),
        Expr::Arrow(a, b) => format!("({} -> {})", print_expr(a), print_expr(b)),
        Expr::Call(f, args) => {
            format!("{f}({})", args.iter().map(print_expr).collect::<Vec<_>>().join(", "))
        }
    }
}
