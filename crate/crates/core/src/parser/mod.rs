//! Parser and desugarer from Lua 5.2 source to the term language.
//!
//! The output only uses formalized constructs: globals become `_ENV`
//! indexing, a `local` statement scopes over the rest of its block, `for`
//! and `repeat` loops become `while` loops, and every function literal gets
//! a fresh label in source order.

mod lexer;

use std::fmt;

use thiserror::Error;

use crate::ast::{
    lua_str, name, BinOp, Expr, Field, FunctionDef, FunctionLabel, Name, Site, Stmt, UnOp, Value,
    ENV,
};
use crate::delta::Service;
use lexer::{LexError, Lexer};
pub use lexer::{Tok, Token};

/// Source text plus the name used in error positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceChunk {
    pub bytes: Vec<u8>,
    pub chunk_name: String,
}

impl SourceChunk {
    pub fn new(bytes: impl Into<Vec<u8>>, chunk_name: impl Into<String>) -> Self {
        SourceChunk {
            bytes: bytes.into(),
            chunk_name: chunk_name.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub chunk_name: String,
    /// Diagnostic including the offending token, e.g.
    /// `unexpected symbol near '('`.
    pub message: String,
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.chunk_name, self.line, self.message)
    }
}

/// Knobs for the internal entry points.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Options {
    /// Accept `$name` identifiers and `$builtIn` calls.
    pub extended: bool,
    /// Whether `...` is legal at the top level.
    pub vararg: bool,
    /// Chunk number stamped on labels and call sites.
    pub chunk: u32,
}

/// Parses a main chunk. The chunk is vararg, so `...` is allowed at top
/// level (the machine binds it to the empty tuple).
pub fn parse_chunk(src: &SourceChunk) -> Result<Stmt, ParseError> {
    let opts = Options {
        extended: false,
        vararg: true,
        chunk: 0,
    };
    parse_block_with(&src.bytes, &src.chunk_name, opts).map(|(s, _)| s)
}

/// Parses a single expression with the same desugaring as chunks.
pub fn parse_expression(src: &SourceChunk) -> Result<Expr, ParseError> {
    let opts = Options {
        extended: false,
        vararg: false,
        chunk: 0,
    };
    parse_expression_with(&src.bytes, &src.chunk_name, opts).map(|(e, _)| e)
}

/// Parses a chunk accepting the run-time names printed by the source-style
/// printer (`$var`, `$builtIn f(...)`).
pub fn parse_chunk_extended(src: &SourceChunk) -> Result<Stmt, ParseError> {
    let opts = Options {
        extended: true,
        vararg: true,
        chunk: 0,
    };
    parse_block_with(&src.bytes, &src.chunk_name, opts).map(|(s, _)| s)
}

/// Returns the block and the number of function labels it used.
pub(crate) fn parse_block_with(
    bytes: &[u8],
    chunk_name: &str,
    opts: Options,
) -> Result<(Stmt, u32), ParseError> {
    let mut p = Parser::new(bytes, chunk_name, opts)?;
    p.functions.push(FnState {
        is_vararg: opts.vararg,
        loop_depth: 0,
    });
    let block = p.block()?;
    p.expect_eof()?;
    Ok((block, p.next_label))
}

pub(crate) fn parse_expression_with(
    bytes: &[u8],
    chunk_name: &str,
    opts: Options,
) -> Result<(Expr, u32), ParseError> {
    let mut p = Parser::new(bytes, chunk_name, opts)?;
    p.functions.push(FnState {
        is_vararg: opts.vararg,
        loop_depth: 0,
    });
    let e = p.expr()?;
    p.expect_eof()?;
    Ok((e, p.next_label))
}

struct FnState {
    is_vararg: bool,
    loop_depth: u32,
}

/// A parsed statement before block assembly: `local` forms still need the
/// rest of the block as their body.
enum Piece {
    Stmt(Stmt),
    Local(Vec<Name>, Vec<Expr>),
    LocalFunction(Name, Expr),
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    chunk_name: &'a str,
    opts: Options,
    next_label: u32,
    locals: Vec<Name>,
    functions: Vec<FnState>,
}

// Binary operator priorities (left, right) as in the reference parser.
fn binary_priority(t: &Tok) -> Option<(BinOp, u8, u8)> {
    Some(match t {
        Tok::Plus => (BinOp::Add, 6, 6),
        Tok::Minus => (BinOp::Sub, 6, 6),
        Tok::Star => (BinOp::Mul, 7, 7),
        Tok::Slash => (BinOp::Div, 7, 7),
        Tok::Percent => (BinOp::Mod, 7, 7),
        Tok::Caret => (BinOp::Pow, 10, 9),
        Tok::Concat => (BinOp::Concat, 5, 4),
        Tok::EqEq => (BinOp::Eq, 3, 3),
        Tok::NotEq => (BinOp::Ne, 3, 3),
        Tok::Less => (BinOp::Lt, 3, 3),
        Tok::LessEq => (BinOp::Le, 3, 3),
        Tok::Greater => (BinOp::Gt, 3, 3),
        Tok::GreaterEq => (BinOp::Ge, 3, 3),
        Tok::And => (BinOp::And, 2, 2),
        Tok::Or => (BinOp::Or, 1, 1),
        _ => return None,
    })
}

const UNARY_PRIORITY: u8 = 8;

fn near(tok: &Tok) -> String {
    match tok {
        Tok::Eof => "<eof>".to_string(),
        other => format!("'{}'", other.describe()),
    }
}

impl<'a> Parser<'a> {
    fn new(bytes: &[u8], chunk_name: &'a str, opts: Options) -> Result<Self, ParseError> {
        let toks = Lexer::new(bytes, opts.extended)
            .tokenize()
            .map_err(|e: LexError| ParseError {
                chunk_name: chunk_name.to_string(),
                message: match e.near {
                    Some(n) if n == "<eof>" => format!("{} near <eof>", e.message),
                    Some(n) => format!("{} near '{}'", e.message, n),
                    None => e.message,
                },
                line: e.line,
                column: e.column,
            })?;
        Ok(Parser {
            toks,
            pos: 0,
            chunk_name,
            opts,
            next_label: 0,
            locals: Vec::new(),
            functions: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn line(&self) -> u32 {
        self.toks[self.pos].line
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn check(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&self, msg: &str) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            chunk_name: self.chunk_name.to_string(),
            message: format!("{} near {}", msg, near(&t.tok)),
            line: t.line,
            column: t.column,
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.check(&t) {
            Ok(())
        } else {
            Err(self.error_here(&format!("'{what}' expected")))
        }
    }

    /// Expects the token closing a construct opened at `line`.
    fn expect_match(
        &mut self,
        t: Tok,
        what: &str,
        opener: &str,
        line: u32,
    ) -> Result<(), ParseError> {
        if self.check(&t) {
            Ok(())
        } else if line == self.line() {
            Err(self.error_here(&format!("'{what}' expected")))
        } else {
            Err(self.error_here(&format!(
                "'{what}' expected (to close '{opener}' at line {line})"
            )))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error_here("'<eof>' expected"))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.advance();
                Ok(name(&n))
            }
            _ => Err(self.error_here("<name> expected")),
        }
    }

    fn fresh_label(&mut self) -> FunctionLabel {
        let index = self.next_label;
        self.next_label += 1;
        FunctionLabel::Source {
            chunk: self.opts.chunk,
            index,
        }
    }

    fn site(&self, line: u32) -> Site {
        Site::new(self.opts.chunk, line)
    }

    fn fn_state(&mut self) -> &mut FnState {
        self.functions.last_mut().expect("function state")
    }

    fn resolve(&self, n: &Name) -> Expr {
        if self.locals.iter().rev().any(|l| l == n) || &**n == ENV {
            Expr::Name(n.clone())
        } else {
            Expr::index(Expr::Name(name(ENV)), Expr::Value(Value::str(n)))
        }
    }

    fn block_follows(&self, with_until: bool) -> bool {
        match self.peek() {
            Tok::Else | Tok::Elseif | Tok::End | Tok::Eof => true,
            Tok::Until => with_until,
            _ => false,
        }
    }

    /// Parses a block in its own scope.
    fn block(&mut self) -> Result<Stmt, ParseError> {
        let mark = self.locals.len();
        let pieces = self.statements()?;
        self.locals.truncate(mark);
        Ok(assemble(pieces))
    }

    fn statements(&mut self) -> Result<Vec<Piece>, ParseError> {
        let mut pieces = Vec::new();
        while !self.block_follows(true) {
            if *self.peek() == Tok::Return {
                pieces.push(Piece::Stmt(self.return_stmt()?));
                break;
            }
            if let Some(p) = self.statement()? {
                pieces.push(p);
            }
        }
        Ok(pieces)
    }

    fn return_stmt(&mut self) -> Result<Stmt, ParseError> {
        self.advance();
        let exprs = if self.block_follows(true) || *self.peek() == Tok::Semi {
            Vec::new()
        } else {
            self.expr_list()?
        };
        self.check(&Tok::Semi);
        if !self.block_follows(true) {
            return Err(self.error_here("'<eof>' expected"));
        }
        Ok(Stmt::Return(exprs))
    }

    fn statement(&mut self) -> Result<Option<Piece>, ParseError> {
        let line = self.line();
        let stmt = match self.peek().clone() {
            // The empty statement is the skip statement `;`.
            Tok::Semi => {
                self.advance();
                Stmt::Skip
            }
            Tok::DoubleColon => return Err(self.error_here("labels are not supported")),
            Tok::Goto => return Err(self.error_here("goto is not supported")),
            Tok::Break => {
                self.advance();
                if self.fn_state().loop_depth == 0 {
                    return Err(ParseError {
                        chunk_name: self.chunk_name.to_string(),
                        message: format!("<break> at line {line} not inside a loop"),
                        line,
                        column: self.toks[self.pos].column,
                    });
                }
                Stmt::Break
            }
            Tok::Do => {
                self.advance();
                let b = self.block()?;
                self.expect_match(Tok::End, "end", "do", line)?;
                b
            }
            Tok::While => {
                self.advance();
                let cond = self.expr()?;
                self.expect(Tok::Do, "do")?;
                let body = self.loop_block()?;
                self.expect_match(Tok::End, "end", "while", line)?;
                Stmt::While {
                    cond,
                    body: Box::new(body),
                }
            }
            Tok::Repeat => self.repeat_stmt(line)?,
            Tok::If => self.if_stmt(line)?,
            Tok::For => self.for_stmt(line)?,
            Tok::Function => self.function_stmt(line)?,
            Tok::Local => {
                self.advance();
                if self.check(&Tok::Function) {
                    let n = self.ident()?;
                    self.locals.push(n.clone());
                    let f = self.function_body(false, line)?;
                    return Ok(Some(Piece::LocalFunction(n, f)));
                }
                let mut names = vec![self.ident()?];
                while self.check(&Tok::Comma) {
                    names.push(self.ident()?);
                }
                let exprs = if self.check(&Tok::Assign) {
                    self.expr_list()?
                } else {
                    Vec::new()
                };
                self.locals.extend(names.iter().cloned());
                return Ok(Some(Piece::Local(names, exprs)));
            }
            _ => self.expr_stmt()?,
        };
        Ok(Some(Piece::Stmt(stmt)))
    }

    fn loop_block(&mut self) -> Result<Stmt, ParseError> {
        self.fn_state().loop_depth += 1;
        let b = self.block();
        self.fn_state().loop_depth -= 1;
        b
    }

    fn repeat_stmt(&mut self, line: u32) -> Result<Stmt, ParseError> {
        self.advance();
        // The condition is inside the body's scope.
        let mark = self.locals.len();
        self.fn_state().loop_depth += 1;
        let mut pieces = self.statements()?;
        self.fn_state().loop_depth -= 1;
        self.expect_match(Tok::Until, "until", "repeat", line)?;
        let cond = self.expr()?;
        self.locals.truncate(mark);
        pieces.push(Piece::Stmt(Stmt::if_else(cond, Stmt::Break, Stmt::Skip)));
        Ok(Stmt::While {
            cond: Expr::boolean(true),
            body: Box::new(assemble(pieces)),
        })
    }

    fn if_stmt(&mut self, line: u32) -> Result<Stmt, ParseError> {
        self.advance();
        let cond = self.expr()?;
        self.expect(Tok::Then, "then")?;
        let then_branch = self.block()?;
        let else_branch = match self.peek() {
            Tok::Elseif => self.if_stmt(line)?,
            Tok::Else => {
                self.advance();
                let b = self.block()?;
                self.expect_match(Tok::End, "end", "if", line)?;
                b
            }
            _ => {
                self.expect_match(Tok::End, "end", "if", line)?;
                Stmt::Skip
            }
        };
        Ok(Stmt::if_else(cond, then_branch, else_branch))
    }

    fn for_stmt(&mut self, line: u32) -> Result<Stmt, ParseError> {
        self.advance();
        let first = self.ident()?;
        if self.check(&Tok::Assign) {
            let start = self.expr()?;
            self.expect(Tok::Comma, ",")?;
            let limit = self.expr()?;
            let step = if self.check(&Tok::Comma) {
                self.expr()?
            } else {
                Expr::num(1.0)
            };
            self.expect(Tok::Do, "do")?;
            self.locals.push(first.clone());
            let body = self.loop_block();
            self.locals.pop();
            let body = body?;
            self.expect_match(Tok::End, "end", "for", line)?;
            return Ok(numeric_for(
                first,
                start,
                limit,
                step,
                body,
                self.site(line),
            ));
        }
        let mut names = vec![first];
        while self.check(&Tok::Comma) {
            names.push(self.ident()?);
        }
        self.expect(Tok::In, "in")?;
        let exprs = self.expr_list()?;
        self.expect(Tok::Do, "do")?;
        let mark = self.locals.len();
        self.locals.extend(names.iter().cloned());
        let body = self.loop_block();
        self.locals.truncate(mark);
        let body = body?;
        self.expect_match(Tok::End, "end", "for", line)?;
        Ok(generic_for(names, exprs, body, self.site(line)))
    }

    fn function_stmt(&mut self, line: u32) -> Result<Stmt, ParseError> {
        self.advance();
        let n = self.ident()?;
        let mut target = self.resolve(&n);
        let mut is_method = false;
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.advance();
                    let k = self.ident()?;
                    target = Expr::index(target, Expr::Value(Value::str(&k)));
                }
                Tok::Colon => {
                    self.advance();
                    let k = self.ident()?;
                    target = Expr::index(target, Expr::Value(Value::str(&k)));
                    is_method = true;
                    break;
                }
                _ => break,
            }
        }
        let f = self.function_body(is_method, line)?;
        Ok(Stmt::Assign {
            targets: vec![target],
            exprs: vec![f],
        })
    }

    /// Parses `(params) block end` after the `function` keyword (and name).
    fn function_body(&mut self, is_method: bool, line: u32) -> Result<Expr, ParseError> {
        let label = self.fresh_label();
        let mut params: Vec<Name> = Vec::new();
        if is_method {
            params.push(name("self"));
        }
        let mut is_vararg = false;
        self.expect(Tok::LParen, "(")?;
        if *self.peek() != Tok::RParen {
            loop {
                match self.peek().clone() {
                    Tok::Dots => {
                        self.advance();
                        is_vararg = true;
                        break;
                    }
                    Tok::Name(_) => {
                        let p = self.ident()?;
                        if params.contains(&p) {
                            return Err(self.error_here(&format!("duplicate parameter '{p}'")));
                        }
                        params.push(p);
                    }
                    _ => return Err(self.error_here("<name> expected")),
                }
                if !self.check(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, ")")?;
        let mark = self.locals.len();
        self.locals.extend(params.iter().cloned());
        self.functions.push(FnState {
            is_vararg,
            loop_depth: 0,
        });
        let body = self.block();
        self.functions.pop();
        self.locals.truncate(mark);
        let body = body?;
        self.expect_match(Tok::End, "end", "function", line)?;
        Ok(Expr::Value(Value::function(FunctionDef::new(
            label, params, is_vararg, body,
        ))))
    }

    fn expr_stmt(&mut self) -> Result<Stmt, ParseError> {
        let first = self.suffixed_expr()?;
        if matches!(self.peek(), Tok::Assign | Tok::Comma) {
            let mut targets = vec![first];
            while self.check(&Tok::Comma) {
                targets.push(self.suffixed_expr()?);
            }
            for t in &targets {
                if !matches!(t, Expr::Name(_) | Expr::Index(..)) {
                    return Err(self.error_here("syntax error"));
                }
            }
            self.expect(Tok::Assign, "=")?;
            let exprs = self.expr_list()?;
            return Ok(Stmt::Assign { targets, exprs });
        }
        match first {
            Expr::Call { callee, args, site } => Ok(Stmt::Call {
                callee: *callee,
                args,
                site,
            }),
            Expr::MethodCall {
                object,
                method,
                args,
                site,
            } => Ok(Stmt::MethodCall {
                object: *object,
                method,
                args,
                site,
            }),
            _ => Err(self.error_here("syntax error")),
        }
    }

    fn expr_list(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut v = vec![self.expr()?];
        while self.check(&Tok::Comma) {
            v.push(self.expr()?);
        }
        Ok(v)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.subexpr(0)
    }

    fn subexpr(&mut self, limit: u8) -> Result<Expr, ParseError> {
        let unary = match self.peek() {
            Tok::Not => Some(UnOp::Not),
            Tok::Minus => Some(UnOp::Neg),
            Tok::Hash => Some(UnOp::Len),
            _ => None,
        };
        let mut e = if let Some(op) = unary {
            self.advance();
            Expr::unary(op, self.subexpr(UNARY_PRIORITY)?)
        } else {
            self.simple_expr()?
        };
        while let Some((op, left, right)) = binary_priority(self.peek()) {
            if left <= limit {
                break;
            }
            self.advance();
            let rhs = self.subexpr(right)?;
            e = Expr::binary(op, e, rhs);
        }
        Ok(e)
    }

    fn simple_expr(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let e = match self.peek().clone() {
            Tok::Number(n) => Expr::num(n),
            Tok::Str(s) => Expr::Value(Value::bytes(&s)),
            Tok::Nil => Expr::nil(),
            Tok::True => Expr::boolean(true),
            Tok::False => Expr::boolean(false),
            Tok::Dots => {
                if !self.fn_state().is_vararg {
                    return Err(self.error_here("cannot use '...' outside a vararg function"));
                }
                Expr::VarArg
            }
            Tok::LBrace => return self.table(),
            Tok::Function => {
                self.advance();
                return self.function_body(false, line);
            }
            _ => return self.suffixed_expr(),
        };
        self.advance();
        Ok(e)
    }

    fn primary_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.advance();
                Ok(self.resolve(&name(&n)))
            }
            Tok::LParen => {
                let line = self.line();
                self.advance();
                let e = self.expr()?;
                self.expect_match(Tok::RParen, ")", "(", line)?;
                // Only multi-valued expressions are affected by parentheses.
                Ok(match e {
                    Expr::Call { .. } | Expr::MethodCall { .. } | Expr::VarArg => Expr::paren(e),
                    other => other,
                })
            }
            Tok::BuiltIn if self.opts.extended => {
                self.advance();
                let mut svc = self.ident()?.to_string();
                while self.check(&Tok::Dot) {
                    svc.push('.');
                    svc.push_str(&self.ident()?);
                }
                let service = Service::from_name(&svc)
                    .ok_or_else(|| self.error_here(&format!("unknown service '{svc}'")))?;
                let args = self.call_args()?;
                Ok(Expr::BuiltIn(service, args))
            }
            _ => Err(self.error_here("unexpected symbol")),
        }
    }

    fn suffixed_expr(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let mut e = self.primary_expr()?;
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.advance();
                    let k = self.ident()?;
                    e = Expr::index(e, Expr::Value(Value::str(&k)));
                }
                Tok::LBracket => {
                    self.advance();
                    let k = self.expr()?;
                    self.expect(Tok::RBracket, "]")?;
                    e = Expr::index(e, k);
                }
                Tok::Colon => {
                    self.advance();
                    let m = self.ident()?;
                    let args = self.call_args()?;
                    e = Expr::MethodCall {
                        object: Box::new(e),
                        method: lua_str(m.as_bytes()),
                        args,
                        site: self.site(line),
                    };
                }
                Tok::LParen | Tok::Str(_) | Tok::LBrace => {
                    let args = self.call_args()?;
                    e = Expr::Call {
                        callee: Box::new(e),
                        args,
                        site: self.site(line),
                    };
                }
                _ => return Ok(e),
            }
        }
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(vec![Expr::Value(Value::bytes(&s))])
            }
            Tok::LBrace => Ok(vec![self.table()?]),
            Tok::LParen => {
                let line = self.line();
                self.advance();
                if self.check(&Tok::RParen) {
                    return Ok(Vec::new());
                }
                let args = self.expr_list()?;
                self.expect_match(Tok::RParen, ")", "(", line)?;
                Ok(args)
            }
            _ => Err(self.error_here("function arguments expected")),
        }
    }

    fn table(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        self.expect(Tok::LBrace, "{")?;
        let mut fields = Vec::new();
        while *self.peek() != Tok::RBrace {
            match self.peek().clone() {
                Tok::LBracket => {
                    self.advance();
                    let k = self.expr()?;
                    self.expect(Tok::RBracket, "]")?;
                    self.expect(Tok::Assign, "=")?;
                    fields.push(Field::Keyed(k, self.expr()?));
                }
                Tok::Name(n) if *self.peek_at(1) == Tok::Assign => {
                    self.advance();
                    self.advance();
                    fields.push(Field::Keyed(Expr::Value(Value::str(&n)), self.expr()?));
                }
                _ => fields.push(Field::Positional(self.expr()?)),
            }
            if !self.check(&Tok::Comma) && !self.check(&Tok::Semi) {
                break;
            }
        }
        self.expect_match(Tok::RBrace, "}", "{", line)?;
        Ok(Expr::Table(fields))
    }
}

/// Folds block pieces from the right so each `local` scopes over the rest.
fn assemble(pieces: Vec<Piece>) -> Stmt {
    let mut rest: Option<Stmt> = None;
    for piece in pieces.into_iter().rev() {
        rest = Some(match piece {
            Piece::Stmt(s) => match rest {
                None => s,
                Some(r) => Stmt::Seq(Box::new(s), Box::new(r)),
            },
            Piece::Local(names, exprs) => Stmt::Local {
                names,
                exprs,
                body: Box::new(rest.unwrap_or_default()),
            },
            Piece::LocalFunction(n, f) => {
                let init = Stmt::Assign {
                    targets: vec![Expr::Name(n.clone())],
                    exprs: vec![f],
                };
                let body = match rest {
                    None => init,
                    Some(r) => Stmt::Seq(Box::new(init), Box::new(r)),
                };
                Stmt::Local {
                    names: vec![n],
                    exprs: vec![Expr::nil()],
                    body: Box::new(body),
                }
            }
        });
    }
    rest.unwrap_or_default()
}

fn var(n: &str) -> Expr {
    Expr::Name(name(n))
}

/// `for v = a, b, c do s end` as
/// `local $var, $limit, $step = $builtIn forprep(a, b, c) in
///    while ($step > 0 and $var <= $limit) or ($step <= 0 and $var >= $limit) do
///      local v = $var in s end  $var = $var + $step
///    end end`
fn numeric_for(v: Name, start: Expr, limit: Expr, step: Expr, body: Stmt, site: Site) -> Stmt {
    let _ = site;
    let zero = || Expr::num(0.0);
    let ascending = Expr::binary(
        BinOp::And,
        Expr::binary(BinOp::Gt, var("$step"), zero()),
        Expr::binary(BinOp::Le, var("$var"), var("$limit")),
    );
    let descending = Expr::binary(
        BinOp::And,
        Expr::binary(BinOp::Le, var("$step"), zero()),
        Expr::binary(BinOp::Ge, var("$var"), var("$limit")),
    );
    let iteration = Stmt::seq(vec![
        Stmt::Local {
            names: vec![v],
            exprs: vec![var("$var")],
            body: Box::new(body),
        },
        Stmt::Assign {
            targets: vec![var("$var")],
            exprs: vec![Expr::binary(BinOp::Add, var("$var"), var("$step"))],
        },
    ]);
    Stmt::Local {
        names: vec![name("$var"), name("$limit"), name("$step")],
        exprs: vec![Expr::BuiltIn(Service::ForPrep, vec![start, limit, step])],
        body: Box::new(Stmt::While {
            cond: Expr::binary(BinOp::Or, ascending, descending),
            body: Box::new(iteration),
        }),
    }
}

/// `for v1, ..., vn in el do s end` as
/// `local $f, $s, $var = el in while true do
///    local v1, ..., vn = $f($s, $var) in
///      if v1 == nil then break else ; end  $var = v1  s
///    end end end`
fn generic_for(names: Vec<Name>, exprs: Vec<Expr>, body: Stmt, site: Site) -> Stmt {
    let first = Expr::Name(names[0].clone());
    let step = Stmt::seq(vec![
        Stmt::if_else(
            Expr::binary(BinOp::Eq, first.clone(), Expr::nil()),
            Stmt::Break,
            Stmt::Skip,
        ),
        Stmt::Assign {
            targets: vec![var("$var")],
            exprs: vec![first],
        },
        body,
    ]);
    let call = Expr::Call {
        callee: Box::new(var("$f")),
        args: vec![var("$s"), var("$var")],
        site,
    };
    Stmt::Local {
        names: vec![name("$f"), name("$s"), name("$var")],
        exprs,
        body: Box::new(Stmt::While {
            cond: Expr::boolean(true),
            body: Box::new(Stmt::Local {
                names,
                exprs: vec![call],
                body: Box::new(step),
            }),
        }),
    }
}
