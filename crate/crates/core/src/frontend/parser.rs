use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;
use crate::logic::Sort;

/// Parses a `.lus` source file into an untyped [`Program`].
pub fn parse(src: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, property_pragmas: Vec::new(), main_pragma: None };
    let mut nodes = Vec::new();
    loop {
        p.skip_pragmas();
        if p.peek() == &Tok::Eof {
            break;
        }
        nodes.push(p.node()?);
    }
    Ok(Program { nodes, property_pragmas: p.property_pragmas, main_pragma: p.main_pragma })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    property_pragmas: Vec<String>,
    main_pragma: Option<String>,
}

impl Parser {
    /// Pragmas may appear between any two tokens; they are collected here.
    fn skip_pragmas(&mut self) {
        loop {
            match &self.tokens[self.pos].tok {
                Tok::PropertyPragma(id) => self.property_pragmas.push(id.clone()),
                Tok::MainPragma(id) => self.main_pragma = Some(id.clone()),
                _ => return,
            }
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> &Tok {
        self.skip_pragmas();
        &self.tokens[self.pos].tok
    }

    fn next(&mut self) -> Token {
        self.skip_pragmas();
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_here(&mut self, message: impl Into<String>) -> FrontendError {
        self.skip_pragmas();
        let t = &self.tokens[self.pos];
        FrontendError::Parse { line: t.line, col: t.col, message: message.into() }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Real(r) => format!("decimal `{r}`"),
            Tok::Kw(k) => format!("keyword `{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::PropertyPragma(_) | Tok::MainPragma(_) => "pragma".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Tok::Kw(x) if *x == k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            let found = Self::describe(&self.peek().clone());
            Err(self.error_here(format!("expected `{s}`, found {found}")))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), FrontendError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            let found = Self::describe(&self.peek().clone());
            Err(self.error_here(format!("expected `{k}`, found {found}")))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(s)
            }
            other => Err(self.error_here(format!("expected identifier, found {}", Self::describe(&other)))),
        }
    }

    fn node(&mut self) -> Result<Node, FrontendError> {
        self.expect_kw("node")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let inputs = self.params(")")?;
        self.expect_sym(")")?;
        self.expect_kw("returns")?;
        self.expect_sym("(")?;
        let outputs = self.params(")")?;
        self.expect_sym(")")?;
        self.eat_sym(";");
        let mut locals = Vec::new();
        if self.eat_kw("var") {
            while matches!(self.peek(), Tok::Ident(_)) {
                locals.extend(self.decl_group()?);
                self.expect_sym(";")?;
            }
        }
        self.expect_kw("let")?;
        let mut equations = Vec::new();
        while !self.eat_kw("tel") {
            let lhs = self.ident()?;
            self.expect_sym("=")?;
            let rhs = self.expr()?;
            self.expect_sym(";")?;
            equations.push(Equation { lhs, rhs });
        }
        self.eat_sym(";");
        Ok(Node { name, inputs, outputs, locals, equations })
    }

    fn params(&mut self, close: &str) -> Result<Vec<Decl>, FrontendError> {
        let mut out = Vec::new();
        while !matches!(self.peek(), Tok::Sym(s) if *s == close) {
            out.extend(self.decl_group()?);
            if !self.eat_sym(";") {
                break;
            }
        }
        Ok(out)
    }

    fn decl_group(&mut self) -> Result<Vec<Decl>, FrontendError> {
        let mut names = vec![self.ident()?];
        while self.eat_sym(",") {
            names.push(self.ident()?);
        }
        self.expect_sym(":")?;
        let sort = match self.next().tok {
            Tok::Kw("int") => Sort::Int,
            Tok::Kw("bool") => Sort::Bool,
            Tok::Kw("real") => Sort::Real,
            other => {
                self.pos -= 1;
                return Err(self.error_here(format!("expected a type, found {}", Self::describe(&other))));
            }
        };
        Ok(names.into_iter().map(|name| Decl { name, sort }).collect())
    }

    pub fn expr(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let e = self.expr()?;
            return Ok(Expr::Ite(Box::new(c), Box::new(t), Box::new(e)));
        }
        self.arrow()
    }

    fn arrow(&mut self) -> Result<Expr, FrontendError> {
        let lhs = self.implies()?;
        if self.eat_sym("->") {
            let rhs = self.arrow()?;
            return Ok(Expr::Arrow(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Expr, FrontendError> {
        let lhs = self.or()?;
        if self.eat_sym("=>") {
            let rhs = self.implies()?;
            return Ok(Expr::bin(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.and()?;
        loop {
            let op = if self.eat_kw("or") {
                BinOp::Or
            } else if self.eat_kw("xor") {
                BinOp::Xor
            } else {
                return Ok(lhs);
            };
            let rhs = self.and()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn and(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.not()?;
        while self.eat_kw("and") {
            let rhs = self.not()?;
            lhs = Expr::bin(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_kw("not") {
            let e = self.not()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e)));
        }
        self.rel()
    }

    fn rel(&mut self) -> Result<Expr, FrontendError> {
        let lhs = self.add()?;
        let op = match self.peek() {
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("<>") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.add()?;
        Ok(Expr::bin(op, lhs, rhs))
    }

    fn add(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.mul()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.mul()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn mul(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else if self.eat_kw("div") {
                BinOp::IntDiv
            } else if self.eat_kw("mod") {
                BinOp::Mod
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(e)));
        }
        if self.eat_kw("pre") {
            let e = self.unary()?;
            return Ok(Expr::Pre(Box::new(e)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        match self.peek().clone() {
            Tok::Kw("true") => {
                self.pos += 1;
                Ok(Expr::Bool(true))
            }
            Tok::Kw("false") => {
                self.pos += 1;
                Ok(Expr::Bool(false))
            }
            Tok::Kw("if") => self.expr(),
            Tok::Int(i) => {
                self.pos += 1;
                Ok(Expr::Int(i))
            }
            Tok::Real(r) => {
                self.pos += 1;
                Ok(Expr::Real(r))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.eat_sym("(") {
                    let mut args = Vec::new();
                    if !self.eat_sym(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_sym(")") {
                                break;
                            }
                            self.expect_sym(",")?;
                        }
                    }
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            other => Err(self.error_here(format!("expected an expression, found {}", Self::describe(&other)))),
        }
    }
}
