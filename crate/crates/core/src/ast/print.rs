//! Pretty printing of terms.
//!
//! `Style::Source` produces Lua text the parser reads back (run-time names
//! such as `$var` and `$builtIn` calls need the extended syntax).
//! `Style::Trace` produces the compact notation used in step traces:
//! `local x = e in s end`, `(s)^Break`, `<1, 2>`, `$r3`, `$t3`.

use super::{BinOp, Expr, Field, FunctionDef, Label, Ref, Stmt, Term, UnOp, Value};
use crate::delta::format_number;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Source,
    Trace,
}

#[derive(Clone, Debug)]
pub struct Printer {
    style: Style,
    max_depth: Option<usize>,
    env_ref: Option<Ref>,
    out: String,
    indent: usize,
    depth: usize,
}

const ATOM: u8 = 100;

impl Printer {
    pub fn new(style: Style) -> Self {
        Printer {
            style,
            max_depth: None,
            env_ref: None,
            out: String::new(),
            indent: 0,
            depth: 0,
        }
    }

    /// Subterms nested deeper than `d` print as `…`.
    pub fn max_depth(mut self, d: usize) -> Self {
        self.max_depth = Some(d);
        self
    }

    /// Prints this reference as `_ENV` (used when dumping functions).
    pub fn env_ref(mut self, r: Option<Ref>) -> Self {
        self.env_ref = r;
        self
    }

    pub fn term(mut self, t: &Term) -> String {
        match t {
            Term::Stmt(s) => self.stmt(s),
            Term::Expr(e) => self.expr(e, 0),
        }
        self.out
    }

    pub fn render_stmt(mut self, s: &Stmt) -> String {
        self.stmt(s);
        self.out
    }

    pub fn render_expr(mut self, e: &Expr) -> String {
        self.expr(e, 0);
        self.out
    }

    /// Function literal as source text: `function(a, ...) body end`.
    pub fn render_function(mut self, def: &FunctionDef) -> String {
        self.function(def);
        self.out
    }

    fn push(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn newline(&mut self) {
        match self.style {
            Style::Source => {
                self.out.push('\n');
                for _ in 0..self.indent {
                    self.out.push_str("  ");
                }
            }
            Style::Trace => self.out.push(' '),
        }
    }

    /// Returns false (and prints an ellipsis) when the depth budget is spent.
    fn enter(&mut self) -> bool {
        self.depth += 1;
        if self.max_depth.is_some_and(|m| self.depth > m) {
            self.push("…");
            self.depth -= 1;
            return false;
        }
        true
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn block(&mut self, s: &Stmt) {
        self.indent += 1;
        self.newline();
        self.stmt(s);
        self.indent -= 1;
        self.newline();
    }

    fn stmt(&mut self, s: &Stmt) {
        if !self.enter() {
            return;
        }
        match s {
            Stmt::Skip => self.push(";"),
            Stmt::Break => self.push("break"),
            Stmt::Hole => self.push("[[]]"),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.push("if ");
                self.expr(cond, 0);
                self.push(" then");
                self.block(then_branch);
                if self.style == Style::Trace || **else_branch != Stmt::Skip {
                    self.push("else");
                    self.block(else_branch);
                }
                self.push("end");
            }
            Stmt::While { cond, body } | Stmt::Iter { cond, body } => {
                let kw = if matches!(s, Stmt::While { .. }) {
                    "while "
                } else {
                    "$iter "
                };
                self.push(kw);
                self.expr(cond, 0);
                self.push(" do");
                self.block(body);
                self.push("end");
            }
            Stmt::Seq(head, tail) => {
                // A return must end its block in source form, and a nested
                // sequence in head position keeps its grouping.
                let wrap = self.style == Style::Source
                    && matches!(**head, Stmt::Return(_) | Stmt::Seq(..));
                if wrap {
                    self.push("do ");
                }
                self.stmt(head);
                if wrap {
                    self.push(" end");
                }
                let start = self.out.len();
                self.newline();
                let before = self.out.len();
                self.stmt(tail);
                if self.style == Style::Source && self.out[before..].starts_with('(') {
                    self.out.insert(start, ';');
                }
            }
            Stmt::Local { names, exprs, body } => {
                if self.style == Style::Source {
                    self.push("do local ");
                } else {
                    self.push("local ");
                }
                self.names(names);
                if !exprs.is_empty() {
                    self.push(" = ");
                    self.exprs(exprs);
                }
                if self.style == Style::Trace {
                    self.push(" in");
                }
                self.block(body);
                self.push("end");
            }
            Stmt::Assign { targets, exprs } => {
                self.exprs(targets);
                self.push(" = ");
                self.exprs(exprs);
            }
            Stmt::Call { callee, args, .. } => {
                self.prefix(callee);
                self.args(args);
            }
            Stmt::MethodCall {
                object,
                method,
                args,
                ..
            } => {
                self.prefix(object);
                self.push(":");
                self.push(&String::from_utf8_lossy(method));
                self.args(args);
            }
            Stmt::Return(exprs) => {
                self.push("return");
                if !exprs.is_empty() {
                    self.push(" ");
                    self.exprs(exprs);
                }
            }
            Stmt::Labeled { body, label, .. } => {
                self.push("(");
                self.stmt(body);
                self.push(")^");
                self.push(label.name());
            }
        }
        self.leave();
    }

    fn names(&mut self, names: &[super::Name]) {
        for (i, n) in names.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.push(n);
        }
    }

    fn exprs(&mut self, es: &[Expr]) {
        for (i, e) in es.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.expr(e, 0);
        }
    }

    fn args(&mut self, es: &[Expr]) {
        self.push("(");
        self.exprs(es);
        self.push(")");
    }

    /// Callee or indexed object: must be a prefix expression in source.
    fn prefix(&mut self, e: &Expr) {
        let is_prefix = matches!(
            e,
            Expr::Name(_)
                | Expr::Index(..)
                | Expr::Call { .. }
                | Expr::MethodCall { .. }
                | Expr::Paren(_)
                | Expr::Ref(_)
                | Expr::VarArg
        ) && !matches!(e, Expr::VarArg);
        if is_prefix {
            self.expr(e, ATOM);
        } else {
            self.push("(");
            self.expr(e, 0);
            self.push(")");
        }
    }

    fn precedence(e: &Expr) -> u8 {
        match e {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(..) => super::UNARY_PRECEDENCE,
            Expr::Value(Value::Number(n)) if n.is_sign_negative() || !n.is_finite() => {
                super::UNARY_PRECEDENCE
            }
            _ => ATOM,
        }
    }

    /// Prints `e`, parenthesizing it when its precedence is below `min`.
    fn expr(&mut self, e: &Expr, min: u8) {
        if !self.enter() {
            return;
        }
        let wrap = Self::precedence(e) < min;
        if wrap {
            self.push("(");
        }
        self.expr_inner(e);
        if wrap {
            self.push(")");
        }
        self.leave();
    }

    fn expr_inner(&mut self, e: &Expr) {
        match e {
            Expr::Value(v) => self.value(v),
            Expr::Name(n) => self.push(n),
            Expr::Ref(r) => {
                if self.env_ref == Some(*r) {
                    self.push(super::ENV)
                } else {
                    self.push(&format!("$r{}", r.0))
                }
            }
            Expr::VarArg => self.push("..."),
            Expr::Index(o, k) => {
                self.prefix(o);
                self.push("[");
                self.expr(k, 0);
                self.push("]");
            }
            Expr::Paren(inner) => {
                self.push("(");
                self.expr(inner, 0);
                self.push(")");
            }
            Expr::Table(fields) => {
                self.push("{");
                for (i, f) in fields.iter().enumerate() {
                    if i > 0 {
                        self.push(", ");
                    }
                    match f {
                        Field::Positional(v) => self.expr(v, 0),
                        Field::Keyed(k, v) => {
                            self.push("[");
                            self.expr(k, 0);
                            self.push("] = ");
                            self.expr(v, 0);
                        }
                    }
                }
                self.push("}");
            }
            Expr::Call { callee, args, .. } => {
                self.prefix(callee);
                self.args(args);
            }
            Expr::MethodCall {
                object,
                method,
                args,
                ..
            } => {
                self.prefix(object);
                self.push(":");
                self.push(&String::from_utf8_lossy(method));
                self.args(args);
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let (lmin, rmin) = if op.is_right_assoc() {
                    (p + 1, p)
                } else {
                    (p, p + 1)
                };
                self.expr(l, lmin);
                self.push(" ");
                self.push(op.symbol());
                self.push(" ");
                self.expr(r, rmin);
            }
            Expr::Unary(op, inner) => {
                self.push(op.symbol());
                if *op == UnOp::Not {
                    self.push(" ");
                }
                let start = self.out.len();
                // Operands of unary operators bind at least as tightly as `^`.
                self.expr(inner, BinOp::Pow.precedence());
                if *op == UnOp::Neg && self.out[start..].starts_with('-') {
                    self.out.insert(start, ' ');
                }
            }
            Expr::Tuple(items) => {
                self.push("<");
                self.exprs(items);
                self.push(">");
            }
            Expr::BuiltIn(svc, args) => {
                self.push("$builtIn ");
                self.push(svc.name());
                self.args(args);
            }
            Expr::Labeled { body, label } => self.labeled_expr(body, *label),
            Expr::Body { body, label, .. } => {
                self.push("(");
                self.stmt(body);
                self.push(")^");
                self.push(label.name());
            }
            Expr::Err(v) => {
                self.push("$err ");
                self.value(v);
            }
            Expr::Hole => self.push("[[]]"),
        }
    }

    fn labeled_expr(&mut self, body: &Expr, label: Label) {
        self.push("(");
        self.expr(body, 0);
        self.push(")^");
        self.push(label.name());
    }

    fn value(&mut self, v: &Value) {
        match v {
            Value::Nil => self.push("nil"),
            Value::Bool(b) => self.push(if *b { "true" } else { "false" }),
            Value::Number(n) => {
                let s = match self.style {
                    Style::Trace => format_number(*n),
                    Style::Source => source_number(*n),
                };
                self.push(&s);
            }
            Value::Str(s) => {
                let q = quote(s);
                self.push(&q);
            }
            Value::Table(t) => self.push(&format!("$t{}", t.0)),
            Value::Function(def) => self.function(def),
        }
    }

    fn function(&mut self, def: &FunctionDef) {
        self.push("function");
        if self.style == Style::Trace {
            self.push(" ");
            self.push(&def.label.to_string());
        }
        self.push("(");
        self.names(&def.params);
        if def.is_vararg {
            if !def.params.is_empty() {
                self.push(", ");
            }
            self.push("...");
        }
        self.push(")");
        self.block(&def.body);
        self.push("end");
    }
}

fn source_number(n: f64) -> String {
    if n.is_nan() {
        "(0/0)".to_string()
    } else if n.is_infinite() {
        if n > 0.0 { "1e999" } else { "-1e999" }.to_string()
    } else if n.fract() == 0.0 && n.abs() < 1e15 {
        if n == 0.0 && n.is_sign_negative() {
            "-0".to_string()
        } else {
            format!("{}", n as i64)
        }
    } else {
        format!("{n:?}")
    }
}

/// Double-quoted string literal with decimal escapes for anything outside
/// printable ASCII.
pub fn quote(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() + 2);
    out.push('"');
    for &b in bytes {
        match b {
            b'"' => out.push_str("\\\""),
            b'\\' => out.push_str("\\\\"),
            b'\n' => out.push_str("\\n"),
            0x20..=0x7e => out.push(b as char),
            _ => out.push_str(&format!("\\{b:03}")),
        }
    }
    out.push('"');
    out
}

pub fn render_term(t: &Term, style: Style) -> String {
    Printer::new(style).term(t)
}

pub fn render_stmt(s: &Stmt, style: Style) -> String {
    Printer::new(style).render_stmt(s)
}

pub fn render_expr(e: &Expr, style: Style) -> String {
    Printer::new(style).render_expr(e)
}

pub fn render_value(v: &Value, style: Style) -> String {
    Printer::new(style).render_expr(&Expr::Value(v.clone()))
}
