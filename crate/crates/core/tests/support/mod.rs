//! Helpers shared by the integration tests: a seeded generator of closed
//! programs and an enumerator of evaluation contexts written directly from
//! the context grammar, without the decomposition code.

#![allow(dead_code)]

use luasem::ast::{Expr, Field, Label, Stmt, Term};
use luasem::decompose::{return_sites, NodeRef};
use luasem::delta::ServiceContext;
use luasem::relations::{applicable_rules, Rule};
use luasem::Configuration;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Program generator

/// Generates Lua source text for closed programs of bounded nesting depth.
pub struct ProgramGen {
    rng: ChaCha8Rng,
    scopes: Vec<Vec<String>>,
    fresh: usize,
    loop_depth: usize,
    /// Loops get an iteration counter so every program terminates.
    bounded: bool,
    /// Favor expressions that fail: indexing nil, calling numbers, bad
    /// arithmetic.
    faulty: bool,
}

pub const MAX_DEPTH: u32 = 5;

const GLOBALS: [&str; 3] = ["g1", "g2", "g3"];
const KEYS: [&str; 3] = ["a", "b", "n"];

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        ProgramGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            scopes: vec![vec![]],
            fresh: 0,
            loop_depth: 0,
            bounded: false,
            faulty: false,
        }
    }

    pub fn terminating(mut self) -> Self {
        self.bounded = true;
        self
    }

    pub fn faulty(mut self) -> Self {
        self.faulty = true;
        self
    }

    /// A whole program.
    pub fn program(&mut self) -> String {
        self.block(MAX_DEPTH - 1)
    }

    /// A function body suitable for `pcall(function() ... end)`.
    pub fn body(&mut self) -> String {
        self.block(MAX_DEPTH - 2)
    }

    fn fresh_name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn declare(&mut self, n: &str) {
        self.scopes.last_mut().unwrap().push(n.to_string());
    }

    fn in_scope(&self) -> Vec<String> {
        self.scopes.iter().flatten().cloned().collect()
    }

    /// Variables that may be assigned: loop counters are left alone so
    /// bounded loops stay bounded.
    fn assignable(&self) -> Vec<String> {
        self.in_scope()
            .into_iter()
            .filter(|v| !v.starts_with('c'))
            .collect()
    }

    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs.choose(&mut self.rng).unwrap()
    }

    fn block(&mut self, depth: u32) -> String {
        self.scopes.push(vec![]);
        let n = self.rng.gen_range(1..=3);
        let mut out: Vec<String> = (0..n).map(|_| self.stmt(depth)).collect();
        match self.rng.gen_range(0..8) {
            0 => out.push(format!("return {}", self.expr(depth))),
            1 if self.loop_depth > 0 => out.push("break".into()),
            _ => {}
        }
        self.scopes.pop();
        out.join("\n")
    }

    fn nested_block(&mut self, depth: u32) -> String {
        self.block(depth.saturating_sub(1))
    }

    fn loop_body(&mut self, depth: u32) -> String {
        self.loop_depth += 1;
        let b = self.nested_block(depth);
        self.loop_depth -= 1;
        b
    }

    fn function_body(&mut self, params: &[String], depth: u32) -> String {
        let saved = self.loop_depth;
        self.loop_depth = 0;
        self.scopes.push(params.to_vec());
        let b = self.nested_block(depth);
        self.scopes.pop();
        self.loop_depth = saved;
        b
    }

    fn stmt(&mut self, depth: u32) -> String {
        let choices = if depth == 0 { 4 } else { 14 };
        match self.rng.gen_range(0..choices) {
            0 => {
                let e = self.expr(depth);
                let x = self.fresh_name("x");
                self.declare(&x);
                format!("local {x} = {e}")
            }
            1 => {
                let vars = self.assignable();
                let target = match vars.choose(&mut self.rng) {
                    Some(v) if self.rng.gen_bool(0.6) => v.clone(),
                    _ => self.pick(&GLOBALS).to_string(),
                };
                format!("{target} = {}", self.expr(depth))
            }
            2 => format!("print({}, {})", self.expr(depth), self.expr(depth)),
            3 => {
                let obj = self.table(depth.saturating_sub(1));
                let e = self.expr(depth);
                let t = self.fresh_name("t");
                self.declare(&t);
                let key = self.pick(&KEYS);
                format!("local {t} = {obj}\n{t}.{key} = {e}")
            }
            4 => format!(
                "if {} then\n{}\nelse\n{}\nend",
                self.expr(depth),
                self.nested_block(depth),
                self.nested_block(depth)
            ),
            5 => {
                let cond = self.expr(depth);
                if self.bounded || self.rng.gen_bool(0.5) {
                    let c = self.fresh_name("c");
                    let body = self.loop_body(depth);
                    format!(
                        "local {c} = 0\nwhile {c} < 2 and {cond} do\n{c} = {c} + 1\n{body}\nend"
                    )
                } else {
                    format!("while {cond} do\n{}\nend", self.loop_body(depth))
                }
            }
            6 => {
                let f = self.fresh_name("f");
                let a = self.fresh_name("a");
                let body = self.function_body(std::slice::from_ref(&a), depth);
                self.declare(&f);
                format!("local function {f}({a})\n{body}\nend")
            }
            7 => format!("do\n{}\nend", self.nested_block(depth)),
            8 => {
                let body = self.function_body(&[], depth);
                format!("print(pcall(function()\n{body}\nend))")
            }
            9 => {
                let i = self.fresh_name("i");
                self.scopes.push(vec![i.clone()]);
                let body = self.loop_body(depth);
                self.scopes.pop();
                format!("for {i} = 1, {} do\n{body}\nend", self.rng.gen_range(0..3))
            }
            10 => {
                let f = self.callable(depth);
                format!("local _ = {f}({})", self.expr(depth))
            }
            11 => {
                let m = self.fresh_name("m");
                let e = self.with_metatable(depth);
                self.declare(&m);
                format!("local {m} = {e}")
            }
            12 => {
                let k = self.fresh_name("k");
                let v = self.fresh_name("v");
                let t = self.table_like(depth);
                self.scopes.push(vec![k.clone(), v.clone()]);
                let body = self.loop_body(depth);
                self.scopes.pop();
                format!("for {k}, {v} in pairs({t}) do\n{body}\nend")
            }
            _ => {
                let vars = self.assignable();
                match vars.choose(&mut self.rng) {
                    Some(v) => {
                        let key = self.pick(&KEYS);
                        format!("{v}.{key} = {}", self.expr(depth))
                    }
                    None => format!("{} = {}", self.pick(&GLOBALS), self.expr(depth)),
                }
            }
        }
    }

    fn atom(&mut self) -> String {
        let vars = self.in_scope();
        match self.rng.gen_range(0..10) {
            0 | 1 => self.rng.gen_range(0..5).to_string(),
            2 => "0.5".into(),
            3 => format!("\"{}\"", self.pick(&["a", "10", "x y", ""])),
            4 => self.pick(&["true", "false", "nil"]).into(),
            5 => self.pick(&GLOBALS).into(),
            _ => vars
                .choose(&mut self.rng)
                .cloned()
                .unwrap_or_else(|| "1".into()),
        }
    }

    fn table_like(&mut self, depth: u32) -> String {
        let vars = self.in_scope();
        if vars.is_empty() || self.rng.gen_bool(0.4) {
            self.table(depth.saturating_sub(1))
        } else {
            vars.choose(&mut self.rng).unwrap().clone()
        }
    }

    fn table(&mut self, depth: u32) -> String {
        let n = self.rng.gen_range(0..3);
        let mut fields = Vec::new();
        for _ in 0..n {
            if self.rng.gen_bool(0.5) {
                fields.push(self.expr(depth));
            } else {
                let k = self.pick(&KEYS);
                fields.push(format!("{k} = {}", self.expr(depth)));
            }
        }
        format!("{{{}}}", fields.join(", "))
    }

    fn callable(&mut self, depth: u32) -> String {
        let vars = self.in_scope();
        match self.rng.gen_range(0..5) {
            0 => "print".into(),
            1 => "type".into(),
            2 => "tostring".into(),
            // Calling through variables could recurse without bound.
            3 if !self.bounded => match vars.choose(&mut self.rng) {
                Some(v) => v.clone(),
                None => "type".into(),
            },
            3 => "rawlen".into(),
            _ => format!("({})", self.function(depth)),
        }
    }

    fn function(&mut self, depth: u32) -> String {
        let a = self.fresh_name("a");
        if self.rng.gen_bool(0.5) {
            self.scopes.push(vec![a.clone()]);
            let e = self.expr(depth.saturating_sub(1));
            self.scopes.pop();
            format!("function({a}) return {e} end")
        } else {
            let body = self.function_body(std::slice::from_ref(&a), depth);
            format!("function({a})\n{body}\nend")
        }
    }

    fn handler(&mut self, event: &str, depth: u32) -> String {
        let table_ok = matches!(event, "__index" | "__newindex");
        if table_ok && self.rng.gen_bool(0.4) {
            return self.table(depth.saturating_sub(1));
        }
        let e = if self.bounded {
            self.rng.gen_range(0..5).to_string()
        } else {
            self.expr(depth.saturating_sub(2))
        };
        match event {
            "__newindex" => "function(t, k, v) rawset(t, k, v) end".into(),
            "__call" => format!("function(self, x) return {e} end"),
            _ => format!("function(a, b) return {e} end"),
        }
    }

    fn with_metatable(&mut self, depth: u32) -> String {
        const EVENTS: [&str; 11] = [
            "__index",
            "__newindex",
            "__add",
            "__sub",
            "__concat",
            "__lt",
            "__le",
            "__eq",
            "__unm",
            "__len",
            "__call",
        ];
        let n = self.rng.gen_range(1..=3);
        let events: Vec<&str> = EVENTS.choose_multiple(&mut self.rng, n).copied().collect();
        let handlers: Vec<String> = events
            .iter()
            .map(|ev| format!("{ev} = {}", self.handler(ev, depth)))
            .collect();
        let t = self.table(depth.saturating_sub(2));
        format!("setmetatable({t}, {{{}}})", handlers.join(", "))
    }

    fn faulty_expr(&mut self, depth: u32) -> String {
        match self.rng.gen_range(0..6) {
            0 => format!("(nil).{}", self.pick(&KEYS)),
            1 => format!("({})({})", self.rng.gen_range(0..5), self.atom()),
            2 => format!("{{}} + {}", self.atom()),
            3 => format!("error({})", self.expr(depth.saturating_sub(1))),
            4 => "#5".into(),
            _ => format!("{} < {{}}", self.atom()),
        }
    }

    /// An expression that is usually a number.
    fn operand(&mut self, depth: u32) -> String {
        match self.rng.gen_range(0..6) {
            0 | 1 => self.rng.gen_range(0..5).to_string(),
            2 => "0.5".into(),
            3 if depth > 0 => {
                let op = self.pick(&["+", "-", "*"]);
                let d = depth - 1;
                format!("({} {op} {})", self.operand(d), self.operand(d))
            }
            4 if depth > 0 => format!("(#{})", self.table(depth - 1)),
            _ => self.atom(),
        }
    }

    pub fn expr(&mut self, depth: u32) -> String {
        if depth == 0 {
            return self.atom();
        }
        if self.faulty && self.rng.gen_bool(0.25) {
            return self.faulty_expr(depth);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..16) {
            0..=2 => self.atom(),
            3 => {
                let op = self.pick(&["+", "-", "*", "/", "%", "^", ".."]);
                let (l, r) = (self.operand(d), self.operand(d));
                format!("({l} {op} {r})")
            }
            4 => {
                let op = self.pick(&["==", "~=", "<", "<=", ">", ">="]);
                let (l, r) = if op.len() == 2 && op.starts_with(['=', '~']) {
                    (self.expr(d), self.expr(d))
                } else {
                    (self.operand(d), self.operand(d))
                };
                format!("({l} {op} {r})")
            }
            5 => {
                let op = self.pick(&["and", "or"]);
                format!("({} {op} {})", self.expr(d), self.expr(d))
            }
            6 => match self.rng.gen_range(0..3) {
                0 => format!("(not {})", self.expr(d)),
                1 => format!("(-{})", self.operand(d)),
                _ => format!("(#{})", self.table(d)),
            },
            7 => self.table(d),
            8 => format!("({})[{}]", self.table_like(depth), self.expr(d)),
            9 => format!("({}).{}", self.table_like(depth), self.pick(&KEYS)),
            10 => self.function(depth),
            11 => {
                let f = self.callable(depth);
                format!("{f}({})", self.expr(d))
            }
            12 => format!("select(2, pcall(function() return {} end))", self.expr(d)),
            13 => self.with_metatable(depth),
            14 if self.rng.gen_bool(0.3) => self.faulty_expr(depth),
            14 => self.operand(d),
            _ => format!(
                "(function(...) return select('#', ...), ... end)({}, {})",
                self.expr(d),
                self.expr(d)
            ),
        }
    }
}

/// `n` programs from consecutive seeds starting at `base`.
pub fn programs(base: u64, n: usize) -> Vec<String> {
    (0..n as u64)
        .map(|i| ProgramGen::new(base + i).program())
        .collect()
}

// ---------------------------------------------------------------------------
// Context enumeration

fn is_value(e: &Expr) -> bool {
    matches!(e, Expr::Value(_))
}

fn control(label: Label) -> bool {
    matches!(label, Label::Break | Label::Return | Label::ProtMd)
}

/// Assignment targets are finished as references or `v[v]`.
fn target_done(e: &Expr) -> bool {
    match e {
        Expr::Ref(_) => true,
        Expr::Index(o, k) => is_value(o) && is_value(k),
        _ => false,
    }
}

fn prefix_values(xs: &[Expr], i: usize) -> bool {
    xs[..i].iter().all(is_value)
}

fn table_components(fields: &[Field]) -> Vec<&Expr> {
    fields
        .iter()
        .flat_map(|f| match f {
            Field::Positional(v) => vec![v],
            Field::Keyed(k, v) => vec![k, v],
        })
        .collect()
}

/// Whether the context grammar lets the hole sit at child `i` of `n`.
/// Assignment targets are handled by [`is_context`].
fn hole_child(n: NodeRef<'_>, i: usize) -> bool {
    match n {
        NodeRef::Stmt(s) => match s {
            Stmt::If { .. } | Stmt::Seq(..) => i == 0,
            Stmt::MethodCall { .. } => i == 0,
            Stmt::Local { exprs, .. } => i < exprs.len() && prefix_values(exprs, i),
            Stmt::Assign { targets, exprs } => {
                let j = i.wrapping_sub(targets.len());
                i >= targets.len() && targets.iter().all(target_done) && prefix_values(exprs, j)
            }
            Stmt::Call { callee, args, .. } => {
                i == 0 || (is_value(callee) && prefix_values(args, i - 1))
            }
            Stmt::Return(exprs) => prefix_values(exprs, i),
            Stmt::Labeled { label, .. } => control(*label) && i == 0,
            Stmt::While { .. } | Stmt::Iter { .. } => false,
            Stmt::Skip | Stmt::Break | Stmt::Hole => false,
        },
        NodeRef::Expr(e) => match e {
            Expr::Index(o, _) => i == 0 || is_value(o),
            Expr::Paren(_) | Expr::Unary(..) | Expr::Body { .. } => i == 0,
            Expr::Table(fields) => {
                let cs = table_components(fields);
                cs[..i].iter().all(|c| is_value(c))
            }
            Expr::Call { callee, args, .. } => {
                i == 0 || (is_value(callee) && prefix_values(args, i - 1))
            }
            Expr::MethodCall { .. } => i == 0,
            Expr::Binary(op, l, _) => {
                use luasem::ast::BinOp;
                i == 0 || (!matches!(op, BinOp::And | BinOp::Or) && is_value(l))
            }
            Expr::Tuple(xs) | Expr::BuiltIn(_, xs) => prefix_values(xs, i),
            Expr::Labeled { label, .. } => control(*label) && i == 0,
            _ => false,
        },
    }
}

fn children(n: NodeRef<'_>) -> Vec<NodeRef<'_>> {
    n.children()
}

/// Whether splitting the term at `path` yields an evaluation context.
pub fn is_context(t: &Term, path: &[usize]) -> bool {
    let mut n = NodeRef::of(t);
    let mut k = 0;
    while k < path.len() {
        let i = path[k];
        let cs = children(n);
        let Some(&child) = cs.get(i) else {
            return false;
        };
        if let NodeRef::Stmt(Stmt::Assign { targets, .. }) = n {
            if i < targets.len() {
                // The hole is inside a target `E[e]` or `v[E]`, never the
                // target itself.
                if !targets[..i].iter().all(target_done) {
                    return false;
                }
                let Expr::Index(obj, _) = &targets[i] else {
                    return false;
                };
                let Some(&j) = path.get(k + 1) else {
                    return false;
                };
                if j > 1 || (j == 1 && !is_value(obj)) {
                    return false;
                }
                n = children(child)[j];
                k += 2;
                continue;
            }
        }
        if !hole_child(n, i) {
            return false;
        }
        n = child;
        k += 1;
    }
    true
}

/// Every subterm position of the term.
pub fn all_positions(t: &Term) -> Vec<Vec<usize>> {
    fn go(n: NodeRef<'_>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(path.clone());
        for (i, c) in children(n).into_iter().enumerate() {
            path.push(i);
            go(c, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(NodeRef::of(t), &mut Vec::new(), &mut out);
    out
}

fn subterm(t: &Term, path: &[usize]) -> Term {
    let mut n = NodeRef::of(t);
    for &i in path {
        n = children(n)[i];
    }
    n.to_term()
}

/// Every (context, rule) pair that applies to the configuration, found by
/// trying every split of the term.
pub fn applicable_pairs(c: &Configuration) -> Vec<(Vec<usize>, Rule)> {
    let mut out = Vec::new();
    for path in all_positions(&c.term) {
        if !is_context(&c.term, &path) {
            continue;
        }
        let redex = subterm(&c.term, &path);
        let sites = return_sites(&c.term, &path);
        let mut names = c.chunk_names.clone();
        let mut output = Vec::new();
        let mut cx = ServiceContext {
            sites: &sites,
            chunk_names: &mut names,
            output: &mut output,
            globals: c.env.globals,
        };
        for rule in applicable_rules(&redex, &c.sigma, &c.theta, &mut cx, path.is_empty()) {
            out.push((path.clone(), rule));
        }
    }
    out
}
