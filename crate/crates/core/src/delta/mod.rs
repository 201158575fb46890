//! The interpretation function: primitive operators, coercions,
//! metafunctions and the bodies of the library services, plus bootstrap of
//! the global environment.

mod bootstrap;
mod library;
mod load;
mod number;
mod registry;

use crate::ast::{BinOp, Expr, Label, ObjRef, Site, UnOp, Value};
use crate::store::ObjectStore;

pub use bootstrap::{bootstrap_env, wrapper, Environment};
pub use load::{chunk_id, dump_function, DUMP_SIGNATURE};
pub use number::{format_number, lua_mod, str_to_number, str_to_number_base};
pub use registry::{Category, Service};

/// Everything a service may observe besides its arguments and θ.
#[derive(Debug)]
pub struct ServiceContext<'a> {
    /// Call sites of the enclosing function frames, innermost first. The
    /// first entry is where the running library function was called.
    pub sites: &'a [Site],
    /// Display names of loaded chunks, indexed by chunk number.
    pub chunk_names: &'a mut Vec<String>,
    /// Bytes written by `print`.
    pub output: &'a mut Vec<u8>,
    /// The original global table, the default environment of `load`.
    pub globals: ObjRef,
}

impl ServiceContext<'_> {
    /// `chunkname:line: ` for the function at `level` (1 is the caller of
    /// the running library function), or empty when unknown.
    pub fn position(&self, level: usize) -> String {
        if level == 0 {
            return String::new();
        }
        match self.sites.get(level - 1) {
            Some(site) if site.is_known() => {
                let chunk = self
                    .chunk_names
                    .get(site.chunk as usize)
                    .map(String::as_str)
                    .unwrap_or("?");
                format!("{chunk}:{}: ", site.line)
            }
            _ => String::new(),
        }
    }

    /// An error raised at level 1, as `luaL_error` does.
    pub fn error(&self, message: &str) -> Expr {
        let mut bytes = self.position(1).into_bytes();
        bytes.extend_from_slice(message.as_bytes());
        Expr::Err(Value::bytes(&bytes))
    }
}

/// Applies a service to argument values.
///
/// The signature enforces the categories: pure services never see θ, and
/// only writers receive it mutably.
pub fn call_service(
    service: Service,
    args: Vec<Value>,
    theta: &mut ObjectStore,
    cx: &mut ServiceContext<'_>,
) -> Expr {
    let result = match service.category() {
        Category::Pure => library::pure(service, args, cx),
        Category::ReadsTables => library::reads(service, args, theta, cx),
        Category::WritesTables => library::writes(service, args, theta, cx),
    };
    result.unwrap_or_else(|msg| cx.error(&msg))
}

/// `and`/`or`: returns the result term without touching the right operand.
pub fn delta_logical(op: BinOp, left: Value, right: Expr) -> Expr {
    match (op, left.is_truthy()) {
        (BinOp::And, false) | (BinOp::Or, true) => Expr::Value(left),
        _ => right,
    }
}

pub fn delta_not(v: &Value) -> Value {
    Value::Bool(!v.is_truthy())
}

/// Arithmetic on two numbers.
pub fn delta_arith(op: BinOp, a: f64, b: f64) -> f64 {
    match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
        BinOp::Pow => a.powf(b),
        BinOp::Mod => lua_mod(a, b),
        _ => unreachable!("not an arithmetic operator: {op:?}"),
    }
}

/// Number coercion used by arithmetic: numbers, and strings that read as
/// numerals.
pub fn coerce_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => Some(*n),
        Value::Str(s) => str_to_number(s),
        _ => None,
    }
}

/// String coercion used by concatenation: strings, and numbers formatted.
pub fn coerce_string(v: &Value) -> Option<Vec<u8>> {
    match v {
        Value::Str(s) => Some(s.to_vec()),
        Value::Number(n) => Some(format_number(*n).into_bytes()),
        _ => None,
    }
}

/// `<` and `<=` on two numbers or two strings; `None` for other pairs.
pub fn delta_order(op: BinOp, a: &Value, b: &Value) -> Option<bool> {
    let ord = match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            return Some(match op {
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                _ => unreachable!("order operator expected"),
            })
        }
        (Value::Str(x), Value::Str(y)) => x.cmp(y),
        _ => return None,
    };
    Some(match op {
        BinOp::Lt => ord.is_lt(),
        BinOp::Le => ord.is_le(),
        _ => unreachable!("order operator expected"),
    })
}

/// Event name of the metamethod consulted when an operator fails.
pub fn binopeventkey(op: BinOp) -> Option<&'static str> {
    Some(match op {
        BinOp::Add => "__add",
        BinOp::Sub => "__sub",
        BinOp::Mul => "__mul",
        BinOp::Div => "__div",
        BinOp::Mod => "__mod",
        BinOp::Pow => "__pow",
        BinOp::Concat => "__concat",
        BinOp::Lt | BinOp::Gt => "__lt",
        BinOp::Le | BinOp::Ge => "__le",
        BinOp::Eq | BinOp::Ne => "__eq",
        BinOp::And | BinOp::Or => return None,
    })
}

pub fn unopeventkey(op: UnOp) -> Option<&'static str> {
    match op {
        UnOp::Neg => Some("__unm"),
        UnOp::Len => Some("__len"),
        UnOp::Not => None,
    }
}

/// Raw lookup of a metamethod: the value's own metatable for tables, the
/// per-type metatable otherwise. A metatable's own metatable is ignored.
pub fn indexmetatable(v: &Value, key: &str, theta: &ObjectStore) -> Value {
    match theta.metatable_of(v) {
        Some(mt) => theta.get(mt).map(|t| t.get_str(key)).unwrap_or_default(),
        None => Value::Nil,
    }
}

/// Handler for a binary event: the left operand's first, then the right's.
pub fn getbinhandler(v1: &Value, v2: &Value, key: &str, theta: &ObjectStore) -> Value {
    let h = indexmetatable(v1, key, theta);
    if h.is_nil() {
        indexmetatable(v2, key, theta)
    } else {
        h
    }
}

/// Message for an operation that failed with no handler. `types` are the
/// type names of the operands involved, in order.
pub fn errmessage(label: Label, types: &[&str]) -> String {
    let first = types.first().copied().unwrap_or("nil");
    match label {
        Label::ArithWO | Label::NegWO => {
            format!("attempt to perform arithmetic on a {first} value")
        }
        Label::ConcatWO => format!("attempt to concatenate a {first} value"),
        Label::LenWO => format!("attempt to get length of a {first} value"),
        Label::Index | Label::NewIndex => format!("attempt to index a {first} value"),
        Label::WFunCall => format!("attempt to call a {first} value"),
        Label::OrdWO => match types {
            [a, b] if a == b => format!("attempt to compare two {a} values"),
            [a, b] => format!("attempt to compare {a} with {b}"),
            _ => "attempt to compare values".to_string(),
        },
        Label::EqFail => format!("attempt to compare two {first} values"),
        Label::Break | Label::Return | Label::ProtMd => {
            format!("no error message for control label {label}")
        }
    }
}

/// `tostring` without metamethods.
pub fn tostring_raw(v: &Value) -> Vec<u8> {
    match v {
        Value::Nil => b"nil".to_vec(),
        Value::Bool(b) => b.to_string().into_bytes(),
        Value::Number(n) => format_number(*n).into_bytes(),
        Value::Str(s) => s.to_vec(),
        Value::Table(r) => format!("table: 0x{:08x}", 0x0010_0000 + r.0 as u64 * 0x40).into_bytes(),
        Value::Function(f) => {
            let id = match f.label {
                crate::ast::FunctionLabel::Builtin(s) => {
                    Service::ALL.iter().position(|x| *x == s).unwrap_or(0) as u64
                }
                crate::ast::FunctionLabel::Source { chunk, index } => {
                    0x1000 + ((chunk as u64) << 12) + index as u64
                }
            };
            format!("function: 0x{:08x}", 0x0800_0000 + id * 0x20).into_bytes()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::TableObject;

    #[test]
    fn logical_operators_return_terms() {
        let untouched = Expr::call(Expr::nil(), vec![]);
        assert_eq!(
            delta_logical(BinOp::And, Value::Bool(false), untouched.clone()),
            Expr::boolean(false)
        );
        assert_eq!(
            delta_logical(BinOp::And, Value::Number(1.0), untouched.clone()),
            untouched
        );
        assert_eq!(
            delta_logical(BinOp::Or, Value::Number(1.0), untouched.clone()),
            Expr::num(1.0)
        );
        assert_eq!(
            delta_logical(BinOp::Or, Value::Nil, untouched.clone()),
            untouched
        );
        assert_eq!(delta_not(&Value::Number(5.0)), Value::Bool(false));
        assert_eq!(delta_not(&Value::Nil), Value::Bool(true));
    }

    #[test]
    fn event_keys() {
        assert_eq!(binopeventkey(BinOp::Add), Some("__add"));
        assert_eq!(binopeventkey(BinOp::Concat), Some("__concat"));
        assert_eq!(binopeventkey(BinOp::Le), Some("__le"));
        assert_eq!(binopeventkey(BinOp::And), None);
    }

    #[test]
    fn messages() {
        assert_eq!(
            errmessage(Label::ArithWO, &["table"]),
            "attempt to perform arithmetic on a table value"
        );
        assert_eq!(
            errmessage(Label::NewIndex, &["number"]),
            "attempt to index a number value"
        );
        assert_eq!(
            errmessage(Label::OrdWO, &["number", "string"]),
            "attempt to compare number with string"
        );
        assert_eq!(
            errmessage(Label::OrdWO, &["table", "table"]),
            "attempt to compare two table values"
        );
    }

    #[test]
    fn handlers_left_then_right() {
        let mut theta = ObjectStore::new();
        let plain = theta.alloc(TableObject::new());
        let mut mt_left = TableObject::new();
        mt_left
            .set(Value::str("__add"), Value::str("left"))
            .unwrap();
        let mt_left = theta.alloc(mt_left);
        let mut mt_right = TableObject::new();
        mt_right
            .set(Value::str("__add"), Value::str("right"))
            .unwrap();
        let mt_right = theta.alloc(mt_right);
        let a = theta.alloc(TableObject::new());
        theta.get_mut(a).unwrap().metatable = Some(mt_left);
        let b = theta.alloc(TableObject::new());
        theta.get_mut(b).unwrap().metatable = Some(mt_right);
        let (p, a, b) = (Value::Table(plain), Value::Table(a), Value::Table(b));
        assert_eq!(getbinhandler(&p, &p, "__add", &theta), Value::Nil);
        assert_eq!(getbinhandler(&a, &b, "__add", &theta), Value::str("left"));
        assert_eq!(getbinhandler(&p, &b, "__add", &theta), Value::str("right"));
        assert_eq!(indexmetatable(&p, "__newindex", &theta), Value::Nil);
    }

    #[test]
    fn coercions() {
        assert_eq!(coerce_number(&Value::str("10")), Some(10.0));
        assert_eq!(coerce_number(&Value::str("0x10")), Some(16.0));
        assert_eq!(coerce_number(&Value::str("ten")), None);
        assert_eq!(coerce_string(&Value::Number(1.5)), Some(b"1.5".to_vec()));
        assert_eq!(coerce_string(&Value::Bool(true)), None);
        assert_eq!(
            delta_order(BinOp::Lt, &Value::str("a"), &Value::str("b")),
            Some(true)
        );
        assert_eq!(
            delta_order(BinOp::Lt, &Value::str("a"), &Value::Number(1.0)),
            None
        );
    }
}
