use std::collections::{HashMap, HashSet};

use num_traits::{Signed, Zero};

use super::ast::*;
use super::FrontendError;
use crate::logic::{Sort, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedProgram {
    pub nodes: Vec<TypedNode>,
    pub main: String,
    /// Boolean streams of the main node checked as properties.
    pub properties: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedNode {
    pub name: String,
    pub inputs: Vec<Decl>,
    pub outputs: Vec<Decl>,
    pub locals: Vec<Decl>,
    pub equations: Vec<TypedEquation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedEquation {
    pub lhs: String,
    pub rhs: TExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TExpr {
    pub sort: Sort,
    pub kind: TExprKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TExprKind {
    Const(Value),
    Var(String),
    Unary(UnOp, Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    Ite(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Pre(Box<TExpr>),
    Arrow(Box<TExpr>, Box<TExpr>),
    Call(String, Vec<TExpr>),
}

impl TExpr {
    /// The value of a literal or a negated literal.
    pub fn literal(&self) -> Option<Value> {
        match &self.kind {
            TExprKind::Const(v) => Some(v.clone()),
            TExprKind::Unary(UnOp::Neg, inner) => match inner.literal()? {
                Value::Int(i) => Some(Value::Int(-i)),
                Value::Real(r) => Some(Value::Real(-r)),
                Value::Bool(_) => None,
            },
            _ => None,
        }
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TExpr)) {
        f(self);
        match &self.kind {
            TExprKind::Const(_) | TExprKind::Var(_) => {}
            TExprKind::Unary(_, a) | TExprKind::Pre(a) => a.visit(f),
            TExprKind::Binary(_, a, b) | TExprKind::Arrow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            TExprKind::Ite(c, t, e) => {
                c.visit(f);
                t.visit(f);
                e.visit(f);
            }
            TExprKind::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
        }
    }
}

impl TypedProgram {
    pub fn node(&self, name: &str) -> Option<&TypedNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn main_node(&self) -> &TypedNode {
        self.node(&self.main).expect("main node resolved by typecheck")
    }
}

impl TypedNode {
    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.inputs.iter().chain(&self.outputs).chain(&self.locals).find(|d| d.name == name)
    }
}

/// Picks the main node: explicit override, then the `--%MAIN` pragma, then
/// a node called `main`, then the last node in the file.
fn resolve_main(p: &Program, main_override: Option<&str>) -> Result<String, FrontendError> {
    let wanted = main_override.map(str::to_string).or_else(|| p.main_pragma.clone());
    match wanted {
        Some(name) => {
            if p.nodes.iter().any(|n| n.name == name) {
                Ok(name)
            } else {
                Err(FrontendError::UnknownNode(name))
            }
        }
        None => p
            .nodes
            .iter()
            .find(|n| n.name == "main")
            .or(p.nodes.last())
            .map(|n| n.name.clone())
            .ok_or(FrontendError::NoNodes),
    }
}

/// Assigns sorts to every expression, enforces the single-definition rule
/// and resolves the main node and its properties.
pub fn typecheck(p: &Program, main_override: Option<&str>) -> Result<TypedProgram, FrontendError> {
    let mut signatures: HashMap<&str, &Node> = HashMap::new();
    for n in &p.nodes {
        if signatures.insert(&n.name, n).is_some() {
            return Err(FrontendError::DuplicateNode(n.name.clone()));
        }
    }
    let main = resolve_main(p, main_override)?;
    let mut nodes = Vec::new();
    for n in &p.nodes {
        nodes.push(check_node(n, &signatures)?);
    }
    let main_node = nodes.iter().find(|n: &&TypedNode| n.name == main).expect("resolved");
    let properties = if p.property_pragmas.is_empty() {
        main_node.outputs.iter().filter(|d| d.sort == Sort::Bool).map(|d| d.name.clone()).collect()
    } else {
        let mut props: Vec<String> = Vec::new();
        for name in &p.property_pragmas {
            let ok = main_node.outputs.iter().chain(&main_node.locals).any(|d| &d.name == name && d.sort == Sort::Bool);
            if !ok {
                return Err(FrontendError::Type {
                    node: main.clone(),
                    message: format!("property `{name}` is not a boolean output or local of the main node"),
                });
            }
            if !props.contains(name) {
                props.push(name.clone());
            }
        }
        props
    };
    if properties.is_empty() {
        return Err(FrontendError::NoProperty(main));
    }
    Ok(TypedProgram { nodes, main, properties })
}

struct Scope<'a> {
    node: &'a str,
    vars: HashMap<&'a str, Sort>,
    signatures: &'a HashMap<&'a str, &'a Node>,
}

impl Scope<'_> {
    fn err(&self, message: String) -> FrontendError {
        FrontendError::Type { node: self.node.to_string(), message }
    }
}

fn check_node(n: &Node, signatures: &HashMap<&str, &Node>) -> Result<TypedNode, FrontendError> {
    let mut vars = HashMap::new();
    for d in n.inputs.iter().chain(&n.outputs).chain(&n.locals) {
        if vars.insert(d.name.as_str(), d.sort).is_some() {
            return Err(FrontendError::Type {
                node: n.name.clone(),
                message: format!("variable `{}` declared more than once", d.name),
            });
        }
    }
    let scope = Scope { node: &n.name, vars, signatures };

    let mut defined = HashSet::new();
    let mut equations = Vec::new();
    for eq in &n.equations {
        if n.inputs.iter().any(|d| d.name == eq.lhs) {
            return Err(scope.err(format!("input `{}` cannot be defined by an equation", eq.lhs)));
        }
        let Some(&sort) = scope.vars.get(eq.lhs.as_str()) else {
            return Err(scope.err(format!("equation defines undeclared variable `{}`", eq.lhs)));
        };
        if !defined.insert(eq.lhs.clone()) {
            return Err(FrontendError::DuplicateDefinition { node: n.name.clone(), var: eq.lhs.clone() });
        }
        let rhs = check_expr(&eq.rhs, &scope)?;
        if rhs.sort != sort {
            return Err(scope.err(format!("`{}` has type {} but is defined by an expression of type {}", eq.lhs, sort, rhs.sort)));
        }
        equations.push(TypedEquation { lhs: eq.lhs.clone(), rhs });
    }
    for d in n.outputs.iter().chain(&n.locals) {
        if !defined.contains(&d.name) {
            return Err(FrontendError::MissingDefinition { node: n.name.clone(), var: d.name.clone() });
        }
    }
    Ok(TypedNode {
        name: n.name.clone(),
        inputs: n.inputs.clone(),
        outputs: n.outputs.clone(),
        locals: n.locals.clone(),
        equations,
    })
}

fn check_expr(e: &Expr, s: &Scope<'_>) -> Result<TExpr, FrontendError> {
    let mk = |sort, kind| Ok(TExpr { sort, kind });
    match e {
        Expr::Bool(b) => mk(Sort::Bool, TExprKind::Const(Value::Bool(*b))),
        Expr::Int(i) => mk(Sort::Int, TExprKind::Const(Value::Int(i.clone()))),
        Expr::Real(r) => mk(Sort::Real, TExprKind::Const(Value::Real(r.clone()))),
        Expr::Var(v) => match s.vars.get(v.as_str()) {
            Some(&sort) => mk(sort, TExprKind::Var(v.clone())),
            None => Err(s.err(format!("unknown variable `{v}`"))),
        },
        Expr::Unary(op, a) => {
            let a = check_expr(a, s)?;
            let ok = match op {
                UnOp::Neg => a.sort.is_numeric(),
                UnOp::Not => a.sort == Sort::Bool,
            };
            if !ok {
                let sym = if *op == UnOp::Neg { "-" } else { "not" };
                return Err(s.err(format!("operator `{sym}` applied to {}", a.sort)));
            }
            mk(a.sort, TExprKind::Unary(*op, Box::new(a)))
        }
        Expr::Binary(op, a, b) => {
            let (a, b) = (check_expr(a, s)?, check_expr(b, s)?);
            let mismatch = || s.err(format!("operator `{}` applied to {} and {}", op.symbol(), a.sort, b.sort));
            let sort = match op {
                BinOp::Add | BinOp::Sub => {
                    if !a.sort.is_numeric() || a.sort != b.sort {
                        return Err(mismatch());
                    }
                    a.sort
                }
                BinOp::Mul => {
                    if !a.sort.is_numeric() || a.sort != b.sort {
                        return Err(mismatch());
                    }
                    if a.literal().is_none() && b.literal().is_none() {
                        return Err(s.err("nonlinear multiplication: one factor must be a constant".into()));
                    }
                    a.sort
                }
                BinOp::Div => {
                    if a.sort != Sort::Real || b.sort != Sort::Real {
                        return Err(s.err(format!("`/` is only defined on reals, got {} and {}", a.sort, b.sort)));
                    }
                    match b.literal() {
                        Some(Value::Real(r)) if !r.is_zero() => {}
                        _ => return Err(s.err("`/` requires a nonzero constant divisor".into())),
                    }
                    Sort::Real
                }
                BinOp::IntDiv | BinOp::Mod => {
                    if a.sort != Sort::Int || b.sort != Sort::Int {
                        return Err(mismatch());
                    }
                    match b.literal() {
                        Some(Value::Int(d)) if d.is_positive() => {}
                        _ => {
                            return Err(s.err(format!("`{}` requires a positive integer constant divisor", op.symbol())))
                        }
                    }
                    Sort::Int
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    if !a.sort.is_numeric() || a.sort != b.sort {
                        return Err(mismatch());
                    }
                    Sort::Bool
                }
                BinOp::Eq | BinOp::Ne => {
                    if a.sort != b.sort {
                        return Err(mismatch());
                    }
                    Sort::Bool
                }
                BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Implies => {
                    if a.sort != Sort::Bool || b.sort != Sort::Bool {
                        return Err(mismatch());
                    }
                    Sort::Bool
                }
            };
            mk(sort, TExprKind::Binary(*op, Box::new(a), Box::new(b)))
        }
        Expr::Ite(c, t, f) => {
            let (c, t, f) = (check_expr(c, s)?, check_expr(t, s)?, check_expr(f, s)?);
            if c.sort != Sort::Bool {
                return Err(s.err(format!("condition of `if` has type {}", c.sort)));
            }
            if t.sort != f.sort {
                return Err(s.err(format!("branches of `if` have types {} and {}", t.sort, f.sort)));
            }
            mk(t.sort, TExprKind::Ite(Box::new(c), Box::new(t), Box::new(f)))
        }
        Expr::Pre(a) => {
            let a = check_expr(a, s)?;
            mk(a.sort, TExprKind::Pre(Box::new(a)))
        }
        Expr::Arrow(a, b) => {
            let (a, b) = (check_expr(a, s)?, check_expr(b, s)?);
            if a.sort != b.sort {
                return Err(s.err(format!("operands of `->` have types {} and {}", a.sort, b.sort)));
            }
            mk(a.sort, TExprKind::Arrow(Box::new(a), Box::new(b)))
        }
        Expr::Call(f, args) => {
            let callee = s.signatures.get(f.as_str()).ok_or_else(|| FrontendError::UnknownNode(f.clone()))?;
            if callee.outputs.len() != 1 {
                return Err(s.err(format!("node `{f}` has {} outputs; only single-output nodes can be called", callee.outputs.len())));
            }
            if callee.inputs.len() != args.len() {
                return Err(s.err(format!("node `{f}` expects {} argument(s), got {}", callee.inputs.len(), args.len())));
            }
            let mut targs = Vec::new();
            for (arg, param) in args.iter().zip(&callee.inputs) {
                let a = check_expr(arg, s)?;
                if a.sort != param.sort {
                    return Err(s.err(format!("argument `{}` of `{f}` expects {}, got {}", param.name, param.sort, a.sort)));
                }
                targs.push(a);
            }
            mk(callee.outputs[0].sort, TExprKind::Call(f.clone(), targs))
        }
    }
}
