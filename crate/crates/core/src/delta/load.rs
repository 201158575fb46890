//! `load` and `string.dump`.
//!
//! A dumped function is the signature bytes followed by the function's
//! source text, printed with the run-time names the extended parser reads
//! back. Only functions whose sole captured variable is `_ENV` can be
//! dumped.

use crate::ast::{name, Expr, Field, FunctionDef, FunctionLabel, Printer, Stmt, Style, Value, ENV};
use crate::parser::{parse_block_with, parse_expression_with, Options};

use super::{Service, ServiceContext};

/// Leading bytes of every dumped function.
pub const DUMP_SIGNATURE: &[u8] = b"\x1bLuaS1\n";

const DEFAULT_READER_NAME: &str = "=(load)";
const ID_SIZE: usize = 60;

/// Display form of a chunk name: `=name` and `@name` print as `name`,
/// anything else as `[string "first line..."]`.
pub fn chunk_id(source: &[u8]) -> String {
    let text = |b: &[u8]| String::from_utf8_lossy(b).into_owned();
    match source.first() {
        Some(b'=') | Some(b'@') => {
            let rest = &source[1..];
            text(&rest[..rest.len().min(ID_SIZE - 1)])
        }
        _ => {
            let budget = ID_SIZE - "[string \"...\"]".len() - 1;
            let newline = source.iter().position(|b| *b == b'\n');
            if source.len() < budget && newline.is_none() {
                format!("[string \"{}\"]", text(source))
            } else {
                let end = newline.unwrap_or(source.len()).min(budget);
                format!("[string \"{}...\"]", text(&source[..end]))
            }
        }
    }
}

/// Serializes a function, or `None` when it cannot be dumped.
pub fn dump_function(def: &FunctionDef) -> Option<Vec<u8>> {
    if !dumpable_def(def, def.env_ref()) {
        return None;
    }
    let text = Printer::new(Style::Source)
        .env_ref(def.env_ref())
        .render_function(def);
    let mut out = DUMP_SIGNATURE.to_vec();
    out.extend_from_slice(text.as_bytes());
    Some(out)
}

fn dumpable_def(def: &FunctionDef, env: Option<crate::ast::Ref>) -> bool {
    matches!(def.label, FunctionLabel::Source { .. })
        && def.free_names().iter().all(|n| &**n == ENV)
        && dumpable_stmt(&def.body, env)
}

fn dumpable_stmt(s: &Stmt, env: Option<crate::ast::Ref>) -> bool {
    let e = |x: &Expr| dumpable_expr(x, env);
    let st = |x: &Stmt| dumpable_stmt(x, env);
    match s {
        Stmt::Skip | Stmt::Break => true,
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => e(cond) && st(then_branch) && st(else_branch),
        Stmt::While { cond, body } => e(cond) && st(body),
        Stmt::Seq(a, b) => st(a) && st(b),
        Stmt::Local { exprs, body, .. } => exprs.iter().all(e) && st(body),
        Stmt::Assign { targets, exprs } => targets.iter().chain(exprs).all(e),
        Stmt::Call { callee, args, .. } => e(callee) && args.iter().all(e),
        Stmt::MethodCall { object, args, .. } => e(object) && args.iter().all(e),
        Stmt::Return(es) => es.iter().all(e),
        Stmt::Iter { .. } | Stmt::Labeled { .. } | Stmt::Hole => false,
    }
}

fn dumpable_expr(x: &Expr, env: Option<crate::ast::Ref>) -> bool {
    let e = |y: &Expr| dumpable_expr(y, env);
    match x {
        Expr::Value(v) => match v {
            Value::Table(_) => false,
            // Nested literals keep their own free names until called.
            Value::Function(f) => {
                matches!(f.label, FunctionLabel::Source { .. }) && dumpable_stmt(&f.body, env)
            }
            _ => true,
        },
        Expr::Name(_) | Expr::VarArg => true,
        Expr::Ref(r) => Some(*r) == env,
        Expr::Index(a, b) | Expr::Binary(_, a, b) => e(a) && e(b),
        Expr::Paren(a) | Expr::Unary(_, a) => e(a),
        Expr::Table(fields) => fields.iter().all(|f| match f {
            Field::Positional(v) => e(v),
            Field::Keyed(k, v) => e(k) && e(v),
        }),
        Expr::Call { callee, args, .. } => e(callee) && args.iter().all(e),
        Expr::MethodCall { object, args, .. } => e(object) && args.iter().all(e),
        Expr::BuiltIn(_, args) => args.iter().all(e),
        Expr::Tuple(_) | Expr::Labeled { .. } | Expr::Body { .. } | Expr::Err(_) | Expr::Hole => {
            false
        }
    }
}

fn fail(message: String) -> Expr {
    Expr::values(vec![Value::Nil, Value::bytes(message.as_bytes())])
}

/// Pending `load` arguments, carried through producer-mode reads.
struct Request {
    chunk_name: Vec<u8>,
    mode: Vec<u8>,
    env: Option<Value>,
}

/// `load(chunk [, chunkname [, mode [, env]]])`.
pub(super) fn load(args: Vec<Value>, cx: &mut ServiceContext<'_>) -> Result<Expr, String> {
    let arg = |i: usize| args.get(i).cloned().unwrap_or_default();
    let opt_str = |i: usize| match arg(i) {
        Value::Str(s) => Ok(Some(s.to_vec())),
        Value::Nil => Ok(None),
        Value::Number(n) => Ok(Some(super::format_number(n).into_bytes())),
        other => Err(format!(
            "bad argument #{} to 'load' (string expected, got {})",
            i + 1,
            other.type_name()
        )),
    };
    let mode = opt_str(2)?.unwrap_or_else(|| b"bt".to_vec());
    let env = (args.len() >= 4).then(|| arg(3));
    match arg(0) {
        Value::Str(text) => {
            let chunk_name = opt_str(1)?.unwrap_or_else(|| text.to_vec());
            let req = Request {
                chunk_name,
                mode,
                env,
            };
            Ok(finish(&text, &req, cx))
        }
        Value::Function(f) => {
            let chunk_name = opt_str(1)?.unwrap_or_else(|| DEFAULT_READER_NAME.as_bytes().to_vec());
            let req = Request {
                chunk_name,
                mode,
                env,
            };
            Ok(read_more(Value::Function(f), Vec::new(), &req))
        }
        other => Err(format!(
            "bad argument #1 to 'load' (function expected, got {})",
            if args.is_empty() {
                "no value"
            } else {
                other.type_name()
            }
        )),
    }
}

/// `$builtIn loadpieces(f, acc, name, mode, has_env, env, piece)`.
fn read_more(reader: Value, acc: Vec<u8>, req: &Request) -> Expr {
    let (has_env, env) = match &req.env {
        Some(v) => (true, v.clone()),
        None => (false, Value::Nil),
    };
    Expr::BuiltIn(
        Service::LoadPieces,
        vec![
            Expr::Value(reader.clone()),
            Expr::Value(Value::bytes(&acc)),
            Expr::Value(Value::bytes(&req.chunk_name)),
            Expr::Value(Value::bytes(&req.mode)),
            Expr::boolean(has_env),
            Expr::Value(env),
            Expr::paren(Expr::call(Expr::Value(reader), vec![])),
        ],
    )
}

pub(super) fn load_pieces(args: Vec<Value>, cx: &mut ServiceContext<'_>) -> Result<Expr, String> {
    let arg = |i: usize| args.get(i).cloned().unwrap_or_default();
    let bytes = |i: usize| arg(i).as_bytes().map(<[u8]>::to_vec).unwrap_or_default();
    let req = Request {
        chunk_name: bytes(2),
        mode: bytes(3),
        env: arg(4).is_truthy().then(|| arg(5)),
    };
    let mut acc = bytes(1);
    match arg(6) {
        Value::Nil => Ok(finish(&acc, &req, cx)),
        Value::Str(s) if s.is_empty() => Ok(finish(&acc, &req, cx)),
        Value::Str(s) => {
            acc.extend_from_slice(&s);
            Ok(read_more(arg(0), acc, &req))
        }
        _ => Ok(fail("reader function must return a string".into())),
    }
}

/// Compiles the accumulated text into a closure over the requested
/// environment: `(function(_ENV) return function(...) chunk end end)(env)`.
fn finish(text: &[u8], req: &Request, cx: &mut ServiceContext<'_>) -> Expr {
    let binary = text.first() == Some(&0x1b);
    let (kind, allowed) = if binary {
        ("binary", req.mode.contains(&b'b'))
    } else {
        ("text", req.mode.contains(&b't'))
    };
    if !allowed {
        return fail(format!(
            "attempt to load a {kind} chunk (mode is '{}')",
            String::from_utf8_lossy(&req.mode)
        ));
    }
    let display = chunk_id(&req.chunk_name);
    let chunk = cx.chunk_names.len() as u32;
    cx.chunk_names.push(display.clone());
    let env = req.env.clone().unwrap_or(Value::Table(cx.globals));
    let closure = if binary {
        let Some(body) = text.strip_prefix(DUMP_SIGNATURE) else {
            return fail(format!("{display}: bad binary format (truncated chunk)"));
        };
        let opts = Options {
            extended: true,
            vararg: false,
            chunk,
        };
        match parse_expression_with(body, &display, opts) {
            Ok((f @ Expr::Value(Value::Function(_)), used)) => (f, used),
            Ok(_) => return fail(format!("{display}: bad binary format (not a function)")),
            Err(e) => return fail(e.to_string()),
        }
    } else {
        let opts = Options {
            extended: false,
            vararg: true,
            chunk,
        };
        match parse_block_with(text, &display, opts) {
            Ok((block, used)) => {
                let label = FunctionLabel::Source { chunk, index: used };
                let f = FunctionDef::new(label, vec![], true, block);
                (Expr::Value(Value::function(f)), used + 1)
            }
            Err(e) => return fail(e.to_string()),
        }
    };
    let (function, used) = closure;
    let outer = FunctionDef::new(
        FunctionLabel::Source { chunk, index: used },
        vec![name(ENV)],
        false,
        Stmt::Return(vec![function]),
    );
    Expr::call(Expr::Value(Value::function(outer)), vec![Expr::Value(env)])
}
