//! Random small programs for differential testing. Output is source text,
//! so the whole pipeline from the parser down is exercised.
//!
//! Generated programs are well-typed and free of instantaneous cycles:
//! a stream reads earlier streams directly and any stream through `pre`.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct FuzzConfig {
    pub max_inputs: usize,
    pub max_int_streams: usize,
    pub max_bool_streams: usize,
    pub max_depth: u32,
    /// Constants are drawn from `-max_const..=max_const`.
    pub max_const: i64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig { max_inputs: 2, max_int_streams: 3, max_bool_streams: 2, max_depth: 2, max_const: 4 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: FuzzConfig,
    /// Every stream, in definition order.
    all: Vec<(String, Ty)>,
    /// Streams readable without `pre` by the equation being generated.
    visible: Vec<(String, Ty)>,
}

impl Gen {
    fn constant(&mut self) -> i64 {
        self.rng.gen_range(-self.cfg.max_const..=self.cfg.max_const)
    }

    fn int_lit(&mut self) -> String {
        let c = self.constant();
        if c < 0 {
            format!("(-{})", -c)
        } else {
            c.to_string()
        }
    }

    fn pick(&mut self, pool: &[(String, Ty)], ty: Ty) -> Option<String> {
        let names: Vec<&String> = pool.iter().filter(|(_, t)| *t == ty).map(|(n, _)| n).collect();
        names.choose(&mut self.rng).map(|n| n.to_string())
    }

    fn leaf(&mut self, ty: Ty) -> String {
        let all = self.all.clone();
        let visible = self.visible.clone();
        match self.rng.gen_range(0..3) {
            0 => {
                if let Some(n) = self.pick(&all, ty) {
                    return format!("(pre {n})");
                }
            }
            1 => {
                if let Some(n) = self.pick(&visible, ty) {
                    return n;
                }
            }
            _ => {}
        }
        match ty {
            Ty::Int => self.int_lit(),
            Ty::Bool => if self.rng.gen() { "true" } else { "false" }.into(),
        }
    }

    fn expr(&mut self, ty: Ty, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf(ty);
        }
        let d = depth - 1;
        match ty {
            Ty::Int => match self.rng.gen_range(0..7) {
                0 | 1 => format!("({} + {})", self.expr(Ty::Int, d), self.expr(Ty::Int, d)),
                2 => format!("({} - {})", self.expr(Ty::Int, d), self.expr(Ty::Int, d)),
                3 => {
                    let k = self.rng.gen_range(2..=3);
                    format!("({k} * {})", self.expr(Ty::Int, d))
                }
                4 => {
                    let k = self.rng.gen_range(2..=4);
                    let op = if self.rng.gen() { "mod" } else { "div" };
                    format!("({} {op} {k})", self.expr(Ty::Int, d))
                }
                5 => format!("(if {} then {} else {})", self.expr(Ty::Bool, d), self.expr(Ty::Int, d), self.expr(Ty::Int, d)),
                _ => format!("(-{})", self.expr(Ty::Int, d)),
            },
            Ty::Bool => match self.rng.gen_range(0..6) {
                0 | 1 => {
                    let op = ["<", "<=", "=", "<>", ">=", ">"].choose(&mut self.rng).unwrap();
                    format!("({} {op} {})", self.expr(Ty::Int, d), self.expr(Ty::Int, d))
                }
                2 => {
                    let op = ["and", "or", "xor", "=>"].choose(&mut self.rng).unwrap();
                    format!("({} {op} {})", self.expr(Ty::Bool, d), self.expr(Ty::Bool, d))
                }
                3 => format!("(not {})", self.expr(Ty::Bool, d)),
                4 => format!("(if {} then {} else {})", self.expr(Ty::Bool, d), self.expr(Ty::Bool, d), self.expr(Ty::Bool, d)),
                _ => self.leaf(Ty::Bool),
            },
        }
    }

    /// A stream definition, usually guarded by `->` so the first instant is
    /// well defined.
    fn rhs(&mut self, ty: Ty) -> String {
        let depth = self.cfg.max_depth;
        let body = self.expr(ty, depth);
        if self.rng.gen_bool(0.85) {
            let init = match ty {
                Ty::Int => self.int_lit(),
                Ty::Bool => if self.rng.gen() { "true" } else { "false" }.into(),
            };
            format!("{init} -> {body}")
        } else {
            body
        }
    }
}

fn ty_name(t: Ty) -> &'static str {
    match t {
        Ty::Int => "int",
        Ty::Bool => "bool",
    }
}

/// The program for `seed`. Same seed, same text.
pub fn random_program(seed: u64, cfg: &FuzzConfig) -> String {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), cfg: *cfg, all: Vec::new(), visible: Vec::new() };
    let n_inputs = g.rng.gen_range(0..=cfg.max_inputs);
    let n_int = g.rng.gen_range(1..=cfg.max_int_streams.max(1));
    let n_bool = g.rng.gen_range(0..=cfg.max_bool_streams);

    let inputs: Vec<(String, Ty)> =
        (0..n_inputs).map(|i| (format!("in{i}"), if g.rng.gen() { Ty::Int } else { Ty::Bool })).collect();
    let mut locals: Vec<(String, Ty)> = (0..n_int).map(|i| (format!("x{i}"), Ty::Int)).collect();
    locals.extend((0..n_bool).map(|i| (format!("b{i}"), Ty::Bool)));
    locals.shuffle(&mut g.rng);

    g.all = inputs.iter().chain(&locals).cloned().collect();
    g.all.push(("ok".into(), Ty::Bool));
    g.visible = inputs.clone();

    let mut eqs = Vec::new();
    for (name, ty) in &locals {
        let rhs = g.rhs(*ty);
        eqs.push(format!("  {name} = {rhs};"));
        g.visible.push((name.clone(), *ty));
    }
    let prop = g.expr(Ty::Bool, cfg.max_depth);
    eqs.push(format!("  ok = {prop};"));

    let mut src = String::new();
    let params: Vec<String> = inputs.iter().map(|(n, t)| format!("{n}: {}", ty_name(*t))).collect();
    writeln!(src, "node main({}) returns (ok: bool);", params.join("; ")).unwrap();
    if !locals.is_empty() {
        let decls: Vec<String> = locals.iter().map(|(n, t)| format!("{n}: {}", ty_name(*t))).collect();
        writeln!(src, "var {};", decls.join("; ")).unwrap();
    }
    writeln!(src, "let").unwrap();
    for e in eqs {
        writeln!(src, "{e}").unwrap();
    }
    writeln!(src, "tel").unwrap();
    src
}
