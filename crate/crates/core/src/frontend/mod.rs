//! Front end for a small synchronous dataflow language: lexing, parsing,
//! type checking and node inlining.
//!
//! Supported: `node` declarations with `int`, `bool` and `real` streams,
//! `pre`, `->`, `if then else`, arithmetic, comparisons, boolean
//! connectives and calls to single-output nodes. Clocks, arrays, records and
//! assertions are not part of the language.

mod ast;
mod inline;
mod lexer;
mod parser;
mod print;
mod typecheck;

use thiserror::Error;

pub use ast::{BinOp, Decl, Equation, Expr, Node, Program, UnOp};
pub use inline::inline;
pub use parser::parse;
pub use print::{print_expr, print_program};
pub use typecheck::{typecheck, TExpr, TExprKind, TypedEquation, TypedNode, TypedProgram};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("type error in node `{node}`: {message}")]
    Type { node: String, message: String },
    #[error("node `{node}`: `{var}` has no defining equation")]
    MissingDefinition { node: String, var: String },
    #[error("node `{node}`: `{var}` is defined more than once")]
    DuplicateDefinition { node: String, var: String },
    #[error("node `{0}` is declared more than once")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("recursive node calls: {}", .0.join(" -> "))]
    Recursion(Vec<String>),
    #[error("instantaneous dependency cycle: {}", .0.join(" -> "))]
    InstantaneousCycle(Vec<String>),
    #[error("main node `{0}` has no boolean stream to check")]
    NoProperty(String),
    #[error("the program declares no nodes")]
    NoNodes,
}

/// Parses, type checks and inlines a program, returning the flattened main node.
pub fn elaborate(src: &str, main_override: Option<&str>) -> Result<TypedProgram, FrontendError> {
    let parsed = parse(src)?;
    let typed = typecheck(&parsed, main_override)?;
    let main = typed.main.clone();
    inline(&typed, &main)
}
