//! Bodies of the library services.
//!
//! A service returns the term its `$builtIn` call reduces to, or an error
//! message that the caller raises at level 1.

use crate::ast::{name, Expr, FunctionDef, FunctionLabel, Label, Site, Stmt, Value};
use crate::store::{ObjectStore, TableObject};

use super::bootstrap::wrapper;
use super::load;
use super::{
    coerce_number, format_number, indexmetatable, str_to_number, str_to_number_base, tostring_raw,
    Service, ServiceContext,
};

type Outcome = Result<Expr, String>;

/// Positional arguments with the reference interpreter's checks.
struct Args {
    service: Service,
    vals: Vec<Value>,
    /// Whether the caller is Lua code, which names the function by the
    /// field it was fetched from. Library callers such as `pcall` get the
    /// qualified name instead.
    from_lua: bool,
    method: bool,
}

impl Args {
    fn new(service: Service, vals: Vec<Value>, cx: &ServiceContext<'_>) -> Self {
        let site = cx.sites.first().copied().unwrap_or_default();
        Args {
            service,
            vals,
            from_lua: site.is_known(),
            method: site.is_known() && site.method,
        }
    }

    fn function_name(&self) -> &'static str {
        if self.from_lua {
            self.service.field()
        } else {
            self.service.name()
        }
    }

    fn len(&self) -> usize {
        self.vals.len()
    }

    fn get(&self, i: usize) -> Value {
        self.vals.get(i).cloned().unwrap_or_default()
    }

    fn present(&self, i: usize) -> bool {
        i < self.vals.len()
    }

    fn is_none_or_nil(&self, i: usize) -> bool {
        self.get(i).is_nil()
    }

    fn bad(&self, i: usize, extra: &str) -> String {
        let name = self.function_name();
        match (self.method, i) {
            (true, 0) => format!("calling '{name}' on bad self ({extra})"),
            (true, _) => format!("bad argument #{i} to '{name}' ({extra})"),
            _ => format!("bad argument #{} to '{name}' ({extra})", i + 1),
        }
    }

    fn type_error(&self, i: usize, expected: &str) -> String {
        let got = if self.present(i) {
            self.get(i).type_name()
        } else {
            "no value"
        };
        self.bad(i, &format!("{expected} expected, got {got}"))
    }

    fn any(&self, i: usize) -> Result<Value, String> {
        if self.present(i) {
            Ok(self.get(i))
        } else {
            Err(self.bad(i, "value expected"))
        }
    }

    fn table(&self, i: usize) -> Result<crate::ast::ObjRef, String> {
        self.get(i)
            .as_table()
            .ok_or_else(|| self.type_error(i, "table"))
    }

    fn number(&self, i: usize) -> Result<f64, String> {
        coerce_number(&self.get(i)).ok_or_else(|| self.type_error(i, "number"))
    }

    fn int(&self, i: usize) -> Result<i64, String> {
        self.number(i).map(to_int)
    }

    fn opt_int(&self, i: usize, default: i64) -> Result<i64, String> {
        if self.is_none_or_nil(i) {
            Ok(default)
        } else {
            self.int(i)
        }
    }

    fn string(&self, i: usize) -> Result<Vec<u8>, String> {
        match self.get(i) {
            Value::Str(s) => Ok(s.to_vec()),
            Value::Number(n) => Ok(format_number(n).into_bytes()),
            _ => Err(self.type_error(i, "string")),
        }
    }

    fn opt_string(&self, i: usize, default: &[u8]) -> Result<Vec<u8>, String> {
        if self.is_none_or_nil(i) {
            Ok(default.to_vec())
        } else {
            self.string(i)
        }
    }
}

fn to_int(n: f64) -> i64 {
    if n.is_nan() {
        0
    } else {
        n.trunc().clamp(i64::MIN as f64, i64::MAX as f64) as i64
    }
}

fn values(vs: Vec<Value>) -> Expr {
    Expr::values(vs)
}

fn one(v: Value) -> Outcome {
    Ok(Expr::Value(v))
}

fn num(n: f64) -> Value {
    Value::Number(n)
}

/// Services that never look at θ.
pub(super) fn pure(service: Service, vals: Vec<Value>, cx: &mut ServiceContext<'_>) -> Outcome {
    let a = Args::new(service, vals, cx);
    match service {
        Service::Assert => {
            if a.get(0).is_truthy() {
                Ok(values(a.vals))
            } else if a.present(1) && !a.get(1).is_nil() {
                let msg = a.string(1)?;
                Ok(cx.error(&String::from_utf8_lossy(&msg)))
            } else {
                Ok(cx.error("assertion failed!"))
            }
        }
        Service::Error => {
            let v = a.get(0);
            let level = a.opt_int(1, 1)?;
            let v = match &v {
                Value::Str(_) | Value::Number(_) if level > 0 => {
                    let mut bytes = cx.position(level as usize).into_bytes();
                    bytes.extend(super::coerce_string(&v).unwrap_or_default());
                    Value::bytes(&bytes)
                }
                _ => v,
            };
            Ok(Expr::Err(v))
        }
        Service::Pcall => {
            let f = a.any(0)?;
            let args = a.vals[1..].iter().cloned().map(Expr::Value).collect();
            Ok(Expr::labeled(
                Expr::Call {
                    callee: Box::new(Expr::Value(f)),
                    args,
                    site: Site::NONE,
                },
                Label::ProtMd,
            ))
        }
        Service::RawEqual => {
            let x = a.any(0)?;
            let y = a.any(1)?;
            one(Value::Bool(x.raw_eq(&y)))
        }
        Service::Select => {
            let n = a.get(0);
            let rest = a.vals.len().saturating_sub(1);
            if let Value::Str(s) = &n {
                if &**s == b"#" {
                    return one(num(rest as f64));
                }
            }
            let i = a.int(0)?;
            let start = if i < 0 {
                if (-i) as usize > rest {
                    return Err(a.bad(0, "index out of range"));
                }
                rest as i64 + i
            } else if i == 0 {
                return Err(a.bad(0, "index out of range"));
            } else {
                i - 1
            };
            let start = (start as usize).min(rest);
            Ok(values(a.vals[1 + start..].to_vec()))
        }
        Service::ToNumber => {
            if a.is_none_or_nil(1) {
                let v = a.any(0)?;
                one(match &v {
                    Value::Number(_) => v.clone(),
                    Value::Str(s) => str_to_number(s).map(num).unwrap_or_default(),
                    _ => Value::Nil,
                })
            } else {
                let base = a.int(1)?;
                let Value::Str(s) = a.get(0) else {
                    return Err(a.type_error(0, "string"));
                };
                if !(2..=36).contains(&base) {
                    return Err(a.bad(1, "base out of range"));
                }
                one(str_to_number_base(&s, base as u32)
                    .map(num)
                    .unwrap_or_default())
            }
        }
        Service::Type => {
            let v = a.any(0)?;
            one(Value::str(v.type_name()))
        }
        Service::MathAbs => one(num(a.number(0)?.abs())),
        Service::MathCeil => one(num(a.number(0)?.ceil())),
        Service::MathFloor => one(num(a.number(0)?.floor())),
        Service::MathSqrt => one(num(a.number(0)?.sqrt())),
        Service::MathFmod => {
            let x = a.number(0)?;
            let y = a.number(1)?;
            one(num(x % y))
        }
        Service::MathModf => {
            let x = a.number(0)?;
            let int = x.trunc();
            let frac = if x.is_infinite() { 0.0 } else { x - int };
            Ok(values(vec![num(int), num(frac)]))
        }
        Service::MathMax | Service::MathMin => {
            let mut best = a.number(0)?;
            for i in 1..a.len() {
                let x = a.number(i)?;
                let better = if service == Service::MathMax {
                    x > best
                } else {
                    x < best
                };
                if better {
                    best = x;
                }
            }
            one(num(best))
        }
        Service::StringLen => one(num(a.string(0)?.len() as f64)),
        Service::StringLower => one(Value::bytes(&a.string(0)?.to_ascii_lowercase())),
        Service::StringUpper => one(Value::bytes(&a.string(0)?.to_ascii_uppercase())),
        Service::StringReverse => {
            let mut s = a.string(0)?;
            s.reverse();
            one(Value::bytes(&s))
        }
        Service::StringRep => {
            let s = a.string(0)?;
            let n = a.int(1)?;
            let sep = a.opt_string(2, b"")?;
            let mut out = Vec::new();
            for i in 0..n.max(0) {
                if i > 0 {
                    out.extend_from_slice(&sep);
                }
                out.extend_from_slice(&s);
            }
            one(Value::bytes(&out))
        }
        Service::StringSub => {
            let s = a.string(0)?;
            let (i, j) = (a.opt_int(1, 1)?, a.opt_int(2, -1)?);
            let (lo, hi) = clamp_range(i, j, s.len());
            one(Value::bytes(if lo <= hi { &s[lo - 1..hi] } else { b"" }))
        }
        Service::StringByte => {
            let s = a.string(0)?;
            let i = a.opt_int(1, 1)?;
            let j = a.opt_int(2, i)?;
            let (lo, hi) = clamp_range(i, j, s.len());
            let codes = if lo <= hi {
                s[lo - 1..hi].iter().map(|b| num(*b as f64)).collect()
            } else {
                vec![]
            };
            Ok(values(codes))
        }
        Service::StringChar => {
            let mut out = Vec::with_capacity(a.len());
            for i in 0..a.len() {
                let c = a.int(i)?;
                if !(0..=255).contains(&c) {
                    return Err(a.bad(i, "value out of range"));
                }
                out.push(c as u8);
            }
            one(Value::bytes(&out))
        }
        Service::StringDump => match a.get(0) {
            Value::Function(f) => load::dump_function(&f)
                .map(|bytes| Expr::Value(Value::bytes(&bytes)))
                .ok_or_else(|| "unable to dump given function".to_string()),
            _ => Err(a.type_error(0, "function")),
        },
        Service::ForPrep => {
            let what = ["initial value", "limit", "step"];
            let mut out = Vec::with_capacity(3);
            for (i, w) in what.iter().enumerate() {
                match coerce_number(&a.get(i)) {
                    Some(n) => out.push(num(n)),
                    None => return Err(format!("'for' {w} must be a number")),
                }
            }
            Ok(values(out))
        }
        Service::GetIter => Err("getiter is a function label, not a callable service".into()),
        other => unreachable!("{} is not a pure service", other.name()),
    }
}

/// Lua's relative string positions, clamped to `1..=len` (a start past
/// the end yields an empty range).
fn clamp_range(i: i64, j: i64, len: usize) -> (usize, usize) {
    let len = len as i64;
    let rel = |p: i64| {
        if p >= 0 {
            p
        } else if -p > len {
            0
        } else {
            len + p + 1
        }
    };
    let lo = rel(i).max(1);
    let hi = rel(j).min(len);
    if lo > hi {
        (1, 0)
    } else {
        (lo as usize, hi as usize)
    }
}

/// Services that read but never update θ.
pub(super) fn reads(
    service: Service,
    vals: Vec<Value>,
    theta: &ObjectStore,
    cx: &mut ServiceContext<'_>,
) -> Outcome {
    let a = Args::new(service, vals, cx);
    let table = |r| theta.get(r).map_err(|e| e.to_string());
    match service {
        Service::GetMetatable => {
            let v = a.any(0)?;
            match theta.metatable_of(&v) {
                None => one(Value::Nil),
                Some(mt) => {
                    let protected = table(mt)?.get_str("__metatable");
                    one(if protected.is_nil() {
                        Value::Table(mt)
                    } else {
                        protected
                    })
                }
            }
        }
        Service::Next => {
            let t = a.table(0)?;
            match table(t)?.next(&a.get(1)) {
                Ok(Some((k, v))) => Ok(values(vec![k, v])),
                Ok(None) => one(Value::Nil),
                Err(_) => Err("invalid key to 'next'".into()),
            }
        }
        Service::Pairs => {
            let v = a.any(0)?;
            let h = indexmetatable(&v, "__pairs", theta);
            if !h.is_nil() {
                return Ok(iterator_call(h, v));
            }
            let t = a.table(0)?;
            Ok(Expr::Tuple(vec![
                Expr::Value(wrapper(Service::Next)),
                Expr::Value(Value::Table(t)),
                Expr::nil(),
            ]))
        }
        Service::Ipairs => {
            let v = a.any(0)?;
            let h = indexmetatable(&v, "__ipairs", theta);
            if !h.is_nil() {
                return Ok(iterator_call(h, v));
            }
            let t = a.table(0)?;
            Ok(Expr::Tuple(vec![
                Expr::Value(wrapper(Service::IpairsAux)),
                Expr::Value(Value::Table(t)),
                Expr::num(0.0),
            ]))
        }
        Service::IpairsAux => {
            let t = a.table(0)?;
            let i = a.number(1)? + 1.0;
            let v = table(t)?.get(&num(i));
            if v.is_nil() {
                one(Value::Nil)
            } else {
                Ok(values(vec![num(i), v]))
            }
        }
        Service::Print => {
            let needs_handler = |v: &Value| !indexmetatable(v, "__tostring", theta).is_nil();
            if a.vals.iter().any(needs_handler) {
                let args = a
                    .vals
                    .iter()
                    .map(|v| {
                        if needs_handler(v) {
                            Expr::BuiltIn(Service::ToString, vec![Expr::Value(v.clone())])
                        } else {
                            Expr::Value(v.clone())
                        }
                    })
                    .collect();
                return Ok(Expr::BuiltIn(Service::Print, args));
            }
            for (i, v) in a.vals.iter().enumerate() {
                if i > 0 {
                    cx.output.push(b'\t');
                }
                cx.output.extend(tostring_raw(v));
            }
            cx.output.push(b'\n');
            Ok(Expr::Tuple(vec![]))
        }
        Service::RawGet => {
            let t = a.table(0)?;
            one(table(t)?.get(&a.get(1)))
        }
        Service::RawLen => match a.get(0) {
            Value::Table(t) => one(num(table(t)?.border() as f64)),
            Value::Str(s) => one(num(s.len() as f64)),
            _ => Err(a.bad(0, "table or string expected")),
        },
        Service::ToString => {
            let v = a.any(0)?;
            let h = indexmetatable(&v, "__tostring", theta);
            if h.is_nil() {
                one(Value::bytes(&tostring_raw(&v)))
            } else {
                Ok(Expr::paren(Expr::call(
                    Expr::Value(h),
                    vec![Expr::Value(v)],
                )))
            }
        }
        Service::Load => load::load(a.vals, cx),
        Service::LoadPieces => load::load_pieces(a.vals, cx),
        Service::TableConcat => {
            let t = a.table(0)?;
            let sep = a.opt_string(1, b"")?;
            let tbl = table(t)?;
            let i = a.opt_int(2, 1)?;
            let j = if a.is_none_or_nil(3) {
                tbl.border() as i64
            } else {
                a.int(3)?
            };
            let mut out = Vec::new();
            for k in i..=j {
                match tbl.get(&num(k as f64)) {
                    Value::Str(s) => out.extend_from_slice(&s),
                    Value::Number(n) => out.extend(format_number(n).into_bytes()),
                    other => {
                        return Err(format!(
                            "invalid value ({}) at index {k} in table for 'concat'",
                            other.type_name()
                        ))
                    }
                }
                if k < j {
                    out.extend_from_slice(&sep);
                }
            }
            one(Value::bytes(&out))
        }
        Service::TableUnpack => {
            let t = a.table(0)?;
            let tbl = table(t)?;
            let i = a.opt_int(1, 1)?;
            let j = if a.is_none_or_nil(2) {
                tbl.border() as i64
            } else {
                a.int(2)?
            };
            if j >= i && j - i >= 1_000_000 {
                return Err("too many results to unpack".into());
            }
            Ok(values((i..=j).map(|k| tbl.get(&num(k as f64))).collect()))
        }
        other => unreachable!("{} is not a reading service", other.name()),
    }
}

/// The closure `$getIter` that calls a `__pairs`/`__ipairs` handler on the
/// object and keeps its first three results.
fn iterator_call(handler: Value, object: Value) -> Expr {
    let names = vec![name("v1"), name("v2"), name("v3")];
    let body = Stmt::Local {
        names: names.clone(),
        exprs: vec![Expr::call(Expr::Value(handler), vec![Expr::Value(object)])],
        body: Box::new(Stmt::Return(names.into_iter().map(Expr::Name).collect())),
    };
    let get_iter = FunctionDef::new(
        FunctionLabel::Builtin(Service::GetIter),
        vec![],
        false,
        body,
    );
    Expr::call(Expr::Value(Value::function(get_iter)), vec![])
}

/// Services that may update θ.
pub(super) fn writes(
    service: Service,
    vals: Vec<Value>,
    theta: &mut ObjectStore,
    cx: &mut ServiceContext<'_>,
) -> Outcome {
    let a = Args::new(service, vals, cx);
    match service {
        Service::RawSet => {
            let t = a.table(0)?;
            a.any(1)?;
            a.any(2)?;
            let tbl = theta.get_mut(t).map_err(|e| e.to_string())?;
            tbl.set(a.get(1), a.get(2)).map_err(str::to_string)?;
            one(Value::Table(t))
        }
        Service::SetMetatable => {
            let t = a.table(0)?;
            let mt = match a.get(1) {
                Value::Nil if a.present(1) => None,
                Value::Table(mt) => Some(mt),
                _ => return Err(a.bad(1, "nil or table expected")),
            };
            if let Some(old) = theta.get(t).map_err(|e| e.to_string())?.metatable {
                let protected = theta.get(old).map_err(|e| e.to_string())?;
                if !protected.get_str("__metatable").is_nil() {
                    return Err("cannot change a protected metatable".into());
                }
            }
            theta.get_mut(t).map_err(|e| e.to_string())?.metatable = mt;
            one(Value::Table(t))
        }
        Service::TableInsert => {
            let t = a.table(0)?;
            let size = theta.get(t).map_err(|e| e.to_string())?.border() as i64;
            let (pos, v) = match a.len() {
                2 => (size + 1, a.get(1)),
                3 => {
                    let pos = a.int(1)?;
                    if pos < 1 || pos > size + 1 {
                        return Err(a.bad(1, "position out of bounds"));
                    }
                    (pos, a.get(2))
                }
                _ => return Err("wrong number of arguments to 'insert'".into()),
            };
            let tbl = theta.get_mut(t).map_err(|e| e.to_string())?;
            let mut k = size + 1;
            while k > pos {
                let prev = tbl.get(&num((k - 1) as f64));
                tbl.set(num(k as f64), prev).map_err(str::to_string)?;
                k -= 1;
            }
            tbl.set(num(pos as f64), v).map_err(str::to_string)?;
            Ok(Expr::Tuple(vec![]))
        }
        Service::TableRemove => {
            let t = a.table(0)?;
            let size = theta.get(t).map_err(|e| e.to_string())?.border() as i64;
            let mut pos = a.opt_int(1, size)?;
            if pos != size && (pos < 1 || pos > size + 1) {
                return Err(a.bad(0, "position out of bounds"));
            }
            let tbl = theta.get_mut(t).map_err(|e| e.to_string())?;
            let removed = tbl.get(&num(pos as f64));
            while pos < size {
                let next = tbl.get(&num((pos + 1) as f64));
                tbl.set(num(pos as f64), next).map_err(str::to_string)?;
                pos += 1;
            }
            tbl.set(num(pos as f64), Value::Nil)
                .map_err(str::to_string)?;
            one(removed)
        }
        Service::TablePack => {
            let mut tbl = TableObject::new();
            for (i, v) in a.vals.iter().enumerate() {
                tbl.set(num((i + 1) as f64), v.clone())
                    .map_err(str::to_string)?;
            }
            tbl.set(Value::str("n"), num(a.len() as f64))
                .map_err(str::to_string)?;
            one(Value::Table(theta.alloc(tbl)))
        }
        other => unreachable!("{} is not a writing service", other.name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::ObjRef;

    fn run_pure(service: Service, vals: Vec<Value>) -> Outcome {
        let mut names = vec!["input".to_string()];
        let mut out = Vec::new();
        let sites = [Site::new(0, 7)];
        let mut cx = ServiceContext {
            sites: &sites,
            chunk_names: &mut names,
            output: &mut out,
            globals: ObjRef(0),
        };
        pure(service, vals, &mut cx)
    }

    #[test]
    fn select_counts_and_slices() {
        let vals = vec![Value::str("#"), Value::Nil, Value::Nil];
        assert_eq!(run_pure(Service::Select, vals), Ok(Expr::num(2.0)));
        let vals = vec![num(-1.0), num(1.0), num(2.0)];
        assert_eq!(
            run_pure(Service::Select, vals),
            Ok(Expr::values(vec![num(2.0)]))
        );
        let vals = vec![num(2.0), num(1.0), num(2.0), num(3.0)];
        assert_eq!(
            run_pure(Service::Select, vals),
            Ok(Expr::values(vec![num(2.0), num(3.0)]))
        );
    }

    #[test]
    fn error_positions_follow_level() {
        let r = run_pure(Service::Error, vec![Value::str("e")]).unwrap();
        assert_eq!(r, Expr::Err(Value::str("input:7: e")));
        let r = run_pure(Service::Error, vec![Value::str("e"), num(0.0)]).unwrap();
        assert_eq!(r, Expr::Err(Value::str("e")));
        let r = run_pure(Service::Error, vec![Value::str("e"), num(2.0)]).unwrap();
        assert_eq!(r, Expr::Err(Value::str("e")));
    }

    #[test]
    fn bad_argument_messages() {
        let e = run_pure(Service::StringRep, vec![]).unwrap_err();
        assert_eq!(
            e,
            "bad argument #1 to 'rep' (string expected, got no value)"
        );
        let e = run_pure(Service::Type, vec![]).unwrap_err();
        assert_eq!(e, "bad argument #1 to 'type' (value expected)");
        let e = run_pure(Service::ForPrep, vec![Value::str("x"), num(1.0), num(1.0)]).unwrap_err();
        assert_eq!(e, "'for' initial value must be a number");
    }

    #[test]
    fn tonumber_cases() {
        assert_eq!(
            run_pure(Service::ToNumber, vec![Value::str("0x10")]),
            Ok(Expr::num(16.0))
        );
        assert_eq!(
            run_pure(Service::ToNumber, vec![Value::str("inf")]),
            Ok(Expr::nil())
        );
        assert_eq!(
            run_pure(Service::ToNumber, vec![Value::str("ff"), num(16.0)]),
            Ok(Expr::num(255.0))
        );
        assert_eq!(
            run_pure(Service::ToNumber, vec![Value::str("z"), num(36.0)]),
            Ok(Expr::num(35.0))
        );
    }

    #[test]
    fn string_ranges() {
        let sub = |i: f64, j: f64| {
            run_pure(
                Service::StringSub,
                vec![Value::str("hello"), num(i), num(j)],
            )
        };
        assert_eq!(sub(2.0, 4.0), Ok(Expr::string("ell")));
        assert_eq!(sub(-3.0, -1.0), Ok(Expr::string("llo")));
        assert_eq!(sub(4.0, 2.0), Ok(Expr::string("")));
        assert_eq!(sub(0.0, 100.0), Ok(Expr::string("hello")));
    }

    #[test]
    fn modf_splits() {
        assert_eq!(
            run_pure(Service::MathModf, vec![num(-3.5)]),
            Ok(Expr::values(vec![num(-3.0), num(-0.5)]))
        );
        assert_eq!(
            run_pure(Service::MathModf, vec![num(f64::INFINITY)]),
            Ok(Expr::values(vec![num(f64::INFINITY), num(0.0)]))
        );
    }
}
