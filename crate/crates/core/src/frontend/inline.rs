use std::collections::HashMap;

use super::ast::Decl;
use super::typecheck::{TExpr, TExprKind, TypedEquation, TypedNode, TypedProgram};
use super::FrontendError;

/// Flattens the node hierarchy below `main` into a single node.
///
/// Each call site gets a fresh copy of the callee whose variables are named
/// `<callee>~<n>.<var>`; those names cannot clash with source identifiers.
/// The result is also checked for instantaneous dependency cycles.
pub fn inline(p: &TypedProgram, main: &str) -> Result<TypedProgram, FrontendError> {
    let root = p.node(main).ok_or_else(|| FrontendError::UnknownNode(main.to_string()))?;
    check_recursion(p, main)?;

    let mut inl = Inliner { prog: p, counters: HashMap::new(), locals: root.locals.clone(), equations: Vec::new() };
    let identity: HashMap<String, String> =
        root.inputs.iter().chain(&root.outputs).chain(&root.locals).map(|d| (d.name.clone(), d.name.clone())).collect();
    for eq in &root.equations {
        let rhs = inl.expr(&eq.rhs, &identity);
        inl.equations.push(TypedEquation { lhs: eq.lhs.clone(), rhs });
    }
    let node = TypedNode {
        name: root.name.clone(),
        inputs: root.inputs.clone(),
        outputs: root.outputs.clone(),
        locals: inl.locals,
        equations: inl.equations,
    };
    check_instantaneous_cycles(&node)?;
    Ok(TypedProgram { nodes: vec![node], main: main.to_string(), properties: p.properties.clone() })
}

fn check_recursion(p: &TypedProgram, main: &str) -> Result<(), FrontendError> {
    fn callees(n: &TypedNode) -> Vec<String> {
        let mut out = Vec::new();
        for eq in &n.equations {
            eq.rhs.visit(&mut |e| {
                if let TExprKind::Call(f, _) = &e.kind {
                    if !out.contains(f) {
                        out.push(f.clone());
                    }
                }
            });
        }
        out
    }
    fn dfs(p: &TypedProgram, name: &str, stack: &mut Vec<String>, done: &mut Vec<String>) -> Result<(), FrontendError> {
        if let Some(pos) = stack.iter().position(|s| s == name) {
            return Err(FrontendError::Recursion(stack[pos..].to_vec()));
        }
        if done.iter().any(|d| d == name) {
            return Ok(());
        }
        let node = p.node(name).ok_or_else(|| FrontendError::UnknownNode(name.to_string()))?;
        stack.push(name.to_string());
        for c in callees(node) {
            dfs(p, &c, stack, done)?;
        }
        stack.pop();
        done.push(name.to_string());
        Ok(())
    }
    dfs(p, main, &mut Vec::new(), &mut Vec::new())
}

struct Inliner<'a> {
    prog: &'a TypedProgram,
    counters: HashMap<String, usize>,
    locals: Vec<Decl>,
    equations: Vec<TypedEquation>,
}

impl Inliner<'_> {
    fn expr(&mut self, e: &TExpr, rename: &HashMap<String, String>) -> TExpr {
        let kind = match &e.kind {
            TExprKind::Const(v) => TExprKind::Const(v.clone()),
            TExprKind::Var(v) => TExprKind::Var(rename[v].clone()),
            TExprKind::Unary(op, a) => TExprKind::Unary(*op, Box::new(self.expr(a, rename))),
            TExprKind::Binary(op, a, b) => {
                TExprKind::Binary(*op, Box::new(self.expr(a, rename)), Box::new(self.expr(b, rename)))
            }
            TExprKind::Ite(c, t, f) => TExprKind::Ite(
                Box::new(self.expr(c, rename)),
                Box::new(self.expr(t, rename)),
                Box::new(self.expr(f, rename)),
            ),
            TExprKind::Pre(a) => TExprKind::Pre(Box::new(self.expr(a, rename))),
            TExprKind::Arrow(a, b) => TExprKind::Arrow(Box::new(self.expr(a, rename)), Box::new(self.expr(b, rename))),
            TExprKind::Call(f, args) => {
                let args: Vec<TExpr> = args.iter().map(|a| self.expr(a, rename)).collect();
                return self.instantiate(f, args);
            }
        };
        TExpr { sort: e.sort, kind }
    }

    fn instantiate(&mut self, f: &str, args: Vec<TExpr>) -> TExpr {
        let callee = self.prog.node(f).expect("callee checked by typecheck");
        let n = self.counters.entry(f.to_string()).or_insert(0);
        *n += 1;
        let prefix = format!("{f}~{n}.");
        let map: HashMap<String, String> = callee
            .inputs
            .iter()
            .chain(&callee.outputs)
            .chain(&callee.locals)
            .map(|d| (d.name.clone(), format!("{prefix}{}", d.name)))
            .collect();
        for d in callee.inputs.iter().chain(&callee.outputs).chain(&callee.locals) {
            self.locals.push(Decl { name: map[&d.name].clone(), sort: d.sort });
        }
        for (param, arg) in callee.inputs.iter().zip(args) {
            self.equations.push(TypedEquation { lhs: map[&param.name].clone(), rhs: arg });
        }
        for eq in &callee.equations {
            let rhs = self.expr(&eq.rhs, &map);
            self.equations.push(TypedEquation { lhs: map[&eq.lhs].clone(), rhs });
        }
        let out = &callee.outputs[0];
        TExpr { sort: out.sort, kind: TExprKind::Var(map[&out.name].clone()) }
    }
}

/// Variables an expression reads at the current instant (outside `pre`).
pub(crate) fn instantaneous_deps(e: &TExpr, out: &mut Vec<String>) {
    match &e.kind {
        TExprKind::Const(_) | TExprKind::Pre(_) => {}
        TExprKind::Var(v) => out.push(v.clone()),
        TExprKind::Unary(_, a) => instantaneous_deps(a, out),
        TExprKind::Binary(_, a, b) | TExprKind::Arrow(a, b) => {
            instantaneous_deps(a, out);
            instantaneous_deps(b, out);
        }
        TExprKind::Ite(c, t, f) => {
            instantaneous_deps(c, out);
            instantaneous_deps(t, out);
            instantaneous_deps(f, out);
        }
        TExprKind::Call(_, args) => args.iter().for_each(|a| instantaneous_deps(a, out)),
    }
}

fn check_instantaneous_cycles(n: &TypedNode) -> Result<(), FrontendError> {
    let deps: HashMap<&str, Vec<String>> = n
        .equations
        .iter()
        .map(|eq| {
            let mut d = Vec::new();
            instantaneous_deps(&eq.rhs, &mut d);
            (eq.lhs.as_str(), d)
        })
        .collect();

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        v: &'a str,
        deps: &'a HashMap<&str, Vec<String>>,
        marks: &mut HashMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Result<(), FrontendError> {
        match marks.get(v) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let pos = stack.iter().position(|s| *s == v).unwrap_or(0);
                return Err(FrontendError::InstantaneousCycle(stack[pos..].iter().map(|s| s.to_string()).collect()));
            }
            None => {}
        }
        marks.insert(v, Mark::Active);
        stack.push(v);
        if let Some(ds) = deps.get(v) {
            for d in ds {
                visit(d, deps, marks, stack)?;
            }
        }
        stack.pop();
        marks.insert(v, Mark::Done);
        Ok(())
    }

    let mut marks = HashMap::new();
    for eq in &n.equations {
        visit(&eq.lhs, &deps, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, typecheck};

    fn typed(src: &str) -> TypedProgram {
        typecheck(&parse(src).unwrap(), None).unwrap()
    }

    #[test]
    fn no_calls_is_identity() {
        let p = typed("node main() returns (ok: bool); var x: int; let x = 0 -> pre x + 1; ok = x >= 0; tel");
        assert_eq!(inline(&p, "main").unwrap(), p);
    }

    #[test]
    fn two_calls_give_disjoint_copies() {
        let p = typed(
            "node counter() returns (c: int); let c = 0 -> pre c + 1; tel\n\
             node main() returns (ok: bool); let ok = counter() = counter(); tel",
        );
        let flat = inline(&p, "main").unwrap();
        let node = &flat.nodes[0];
        let names: Vec<&str> = node.locals.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["counter~1.c", "counter~2.c"]);
        assert_eq!(node.equations.len(), 3);
        assert_eq!(node.outputs, p.main_node().outputs);
        let mut calls = 0;
        for eq in &node.equations {
            eq.rhs.visit(&mut |e| calls += matches!(e.kind, TExprKind::Call(..)) as usize);
        }
        assert_eq!(calls, 0);
    }

    #[test]
    fn arguments_become_equations() {
        let p = typed(
            "node inc(a: int) returns (b: int); let b = a + 1; tel\n\
             node main(i: int) returns (ok: bool); let ok = inc(inc(i)) > i; tel",
        );
        let flat = inline(&p, "main").unwrap();
        let lhs: Vec<&str> = flat.nodes[0].equations.iter().map(|e| e.lhs.as_str()).collect();
        assert_eq!(lhs, vec!["inc~1.a", "inc~1.b", "inc~2.a", "inc~2.b", "ok"]);
    }

    #[test]
    fn recursion_is_rejected() {
        let p = typed("node f(a: int) returns (b: int); let b = f(a); tel node main() returns (ok: bool); let ok = f(0) > 0; tel");
        assert_eq!(inline(&p, "main").unwrap_err(), FrontendError::Recursion(vec!["f".into()]));
        let q = typed(
            "node g(a: int) returns (b: int); let b = h(a); tel\n\
             node h(a: int) returns (b: int); let b = g(a); tel\n\
             node main() returns (ok: bool); let ok = g(1) > 0; tel",
        );
        assert_eq!(inline(&q, "main").unwrap_err(), FrontendError::Recursion(vec!["g".into(), "h".into()]));
    }

    #[test]
    fn instantaneous_cycles_are_rejected() {
        let p = typed("node main() returns (ok: bool); var x: int; let x = x + 1; ok = x > 0; tel");
        assert_eq!(inline(&p, "main").unwrap_err(), FrontendError::InstantaneousCycle(vec!["x".into()]));
        let guarded = typed("node main() returns (ok: bool); var x: int; let x = 0 -> pre x + 1; ok = x > 0; tel");
        assert!(inline(&guarded, "main").is_ok());
    }
}
