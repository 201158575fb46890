//! Fallbacks for labeled terms: run the metamethod, or raise the error the
//! operator would have raised.

use crate::ast::{BinOp, Expr, Label, Site, Stmt, Term, UnOp, Value};
use crate::delta::{
    binopeventkey, coerce_number, coerce_string, errmessage, getbinhandler, indexmetatable,
};
use crate::store::ObjectStore;

use super::stateful::raise_stmt;
use super::{fired, Attempt, Rule};

fn val(v: &Value) -> Expr {
    Expr::Value(v.clone())
}

/// `(h(args))`: one result from a handler.
fn handler_call(h: &Value, args: Vec<Expr>) -> Expr {
    Expr::paren(Expr::call(val(h), args))
}

/// `not not h(args)`: a handler result as a boolean.
fn handler_truth(h: &Value, args: Vec<Expr>) -> Expr {
    Expr::unary(UnOp::Not, Expr::unary(UnOp::Not, Expr::call(val(h), args)))
}

fn raise(label: Label, culprits: &[&Value]) -> Expr {
    let types: Vec<&str> = culprits.iter().map(|v| v.type_name()).collect();
    Expr::raise(errmessage(label, &types))
}

pub fn step_metatable(redex: Term, theta: &mut ObjectStore) -> Attempt {
    match redex {
        Term::Stmt(Stmt::Labeled {
            body,
            label: Label::NewIndex,
            site,
        }) => match *body {
            Stmt::Assign { targets, exprs } => newindex(targets, exprs, theta, site),
            other => Err(Term::Stmt(Stmt::Labeled {
                body: Box::new(other),
                label: Label::NewIndex,
                site,
            })),
        },
        Term::Stmt(Stmt::Labeled {
            body,
            label: Label::WFunCall,
            site,
        }) => match *body {
            Stmt::Call {
                callee: Expr::Value(f),
                args,
                site: call_site,
            } => {
                let h = indexmetatable(&f, "__call", theta);
                if !matches!(h, Value::Function(_)) {
                    fired(
                        raise_stmt(errmessage(Label::WFunCall, &[f.type_name()])),
                        Rule::CallError,
                    )
                } else {
                    let mut all = vec![Expr::Value(f)];
                    all.extend(args);
                    fired(
                        Stmt::Call {
                            callee: Expr::Value(h),
                            args: all,
                            site: call_site,
                        },
                        Rule::CallHandler,
                    )
                }
            }
            other => Err(Term::Stmt(Stmt::Labeled {
                body: Box::new(other),
                label: Label::WFunCall,
                site,
            })),
        },
        Term::Expr(Expr::Labeled { body, label }) if !label.is_control() => {
            match labeled_expr(*body, label, theta) {
                Ok(r) => Ok(r),
                Err(body) => Err(Term::Expr(Expr::labeled(body, label))),
            }
        }
        other => Err(other),
    }
}

fn labeled_expr(body: Expr, label: Label, theta: &ObjectStore) -> Result<super::StepResult, Expr> {
    let fire = |e: Expr, rule| {
        Ok(super::StepResult {
            term: Term::Expr(e),
            rule,
        })
    };
    match (label, body) {
        (Label::ArithWO, Expr::Binary(op, a, b)) if a.is_value() && b.is_value() => {
            let (a, b) = (a.as_value().unwrap(), b.as_value().unwrap());
            let h = getbinhandler(a, b, binopeventkey(op).expect("arithmetic event"), theta);
            if h.is_nil() {
                let culprit = if coerce_number(a).is_none() { a } else { b };
                fire(raise(label, &[culprit]), Rule::ArithError)
            } else {
                fire(handler_call(&h, vec![val(a), val(b)]), Rule::ArithHandler)
            }
        }
        (Label::ConcatWO, Expr::Binary(BinOp::Concat, a, b)) if a.is_value() && b.is_value() => {
            let (a, b) = (a.as_value().unwrap(), b.as_value().unwrap());
            let h = getbinhandler(a, b, "__concat", theta);
            if h.is_nil() {
                let culprit = if coerce_string(a).is_none() { a } else { b };
                fire(raise(label, &[culprit]), Rule::ConcatError)
            } else {
                fire(handler_call(&h, vec![val(a), val(b)]), Rule::ConcatHandler)
            }
        }
        (Label::OrdWO, Expr::Binary(op @ (BinOp::Lt | BinOp::Le), a, b))
            if a.is_value() && b.is_value() =>
        {
            let (a, b) = (a.as_value().unwrap(), b.as_value().unwrap());
            let key = binopeventkey(op).expect("order event");
            let h = getbinhandler(a, b, key, theta);
            if !h.is_nil() {
                return fire(handler_truth(&h, vec![val(a), val(b)]), Rule::OrderHandler);
            }
            if op == BinOp::Le {
                let lt = getbinhandler(b, a, "__lt", theta);
                if !lt.is_nil() {
                    let swapped = Expr::call(val(&lt), vec![val(b), val(a)]);
                    return fire(Expr::unary(UnOp::Not, swapped), Rule::OrderLeFallback);
                }
            }
            fire(raise(label, &[a, b]), Rule::OrderError)
        }
        (Label::EqFail, Expr::Binary(BinOp::Eq, a, b)) if a.is_value() && b.is_value() => {
            let (a, b) = (a.as_value().unwrap(), b.as_value().unwrap());
            match eq_handler(a, b, theta) {
                Some(h) => fire(handler_truth(&h, vec![val(a), val(b)]), Rule::EqHandler),
                None => fire(Expr::boolean(false), Rule::EqFalse),
            }
        }
        (Label::NegWO, Expr::Unary(UnOp::Neg, v)) if v.is_value() => {
            let v = v.as_value().unwrap();
            let h = getbinhandler(v, v, "__unm", theta);
            if h.is_nil() {
                fire(raise(label, &[v]), Rule::NegError)
            } else {
                fire(handler_call(&h, vec![val(v), val(v)]), Rule::NegHandler)
            }
        }
        (Label::LenWO, Expr::Unary(UnOp::Len, v)) if v.is_value() => {
            let v = v.as_value().unwrap();
            let h = indexmetatable(v, "__len", theta);
            match v {
                _ if !h.is_nil() => fire(handler_call(&h, vec![val(v)]), Rule::LenHandler),
                Value::Table(t) => {
                    let n = theta.get(*t).expect("allocated").border();
                    fire(Expr::num(n as f64), Rule::LenRaw)
                }
                _ => fire(raise(label, &[v]), Rule::LenError),
            }
        }
        (Label::Index, Expr::Index(obj, key)) if obj.is_value() && key.is_value() => {
            let (o, k) = (obj.as_value().unwrap(), key.as_value().unwrap());
            let h = indexmetatable(o, "__index", theta);
            match (&h, o) {
                (Value::Function(_), _) => {
                    fire(handler_call(&h, vec![val(o), val(k)]), Rule::IndexCall)
                }
                (Value::Nil, Value::Table(_)) => fire(Expr::nil(), Rule::IndexNil),
                (Value::Nil, _) => fire(raise(label, &[o]), Rule::IndexError),
                _ => fire(Expr::index(val(&h), val(k)), Rule::IndexTable),
            }
        }
        (Label::WFunCall, Expr::Call { callee, args, site }) if callee.is_value() => {
            let f = callee.as_value().unwrap();
            let h = indexmetatable(f, "__call", theta);
            if !matches!(h, Value::Function(_)) {
                fire(raise(label, &[f]), Rule::CallError)
            } else {
                let mut all = vec![val(f)];
                all.extend(args);
                fire(
                    Expr::Call {
                        callee: Box::new(Expr::Value(h)),
                        args: all,
                        site,
                    },
                    Rule::CallHandler,
                )
            }
        }
        (_, body) => Err(body),
    }
}

/// The `__eq` handler shared by two tables' metatables.
fn eq_handler(a: &Value, b: &Value, theta: &ObjectStore) -> Option<Value> {
    let mt_a = theta.metatable_of(a)?;
    let h = theta.get(mt_a).ok()?.get_str("__eq");
    if h.is_nil() {
        return None;
    }
    let mt_b = theta.metatable_of(b)?;
    if mt_b == mt_a {
        return Some(h);
    }
    let h2 = theta.get(mt_b).ok()?.get_str("__eq");
    h.raw_eq(&h2).then_some(h)
}

fn newindex(targets: Vec<Expr>, exprs: Vec<Expr>, theta: &mut ObjectStore, site: Site) -> Attempt {
    let ready = match (targets.as_slice(), exprs.as_slice()) {
        ([Expr::Index(o, k)], [v]) => o.is_value() && k.is_value() && v.is_value(),
        _ => false,
    };
    if !ready {
        return Err(Term::Stmt(Stmt::Labeled {
            body: Box::new(Stmt::Assign { targets, exprs }),
            label: Label::NewIndex,
            site,
        }));
    }
    let Some(Expr::Index(obj, key)) = targets.into_iter().next() else {
        unreachable!()
    };
    let Some(Expr::Value(v)) = exprs.into_iter().next() else {
        unreachable!()
    };
    let (o, k) = (
        obj.as_value().unwrap().clone(),
        key.as_value().unwrap().clone(),
    );
    let h = indexmetatable(&o, "__newindex", theta);
    match (&h, &o) {
        (Value::Function(_), _) => fired(
            Stmt::Call {
                callee: Expr::Value(h.clone()),
                args: vec![val(&o), val(&k), Expr::Value(v)],
                site: Site::NONE,
            },
            Rule::NewIndexCall,
        ),
        (Value::Nil, Value::Table(t)) => {
            let table = theta.get_mut(*t).expect("allocated");
            match table.set(k, v) {
                Ok(()) => fired(Stmt::Skip, Rule::NewIndexRaw),
                Err(msg) => fired(raise_stmt(msg.to_string()), Rule::NewIndexRaw),
            }
        }
        (Value::Nil, _) => fired(
            raise_stmt(errmessage(Label::NewIndex, &[o.type_name()])),
            Rule::NewIndexError,
        ),
        _ => fired(
            Stmt::Assign {
                targets: vec![Expr::index(val(&h), Expr::Value(k))],
                exprs: vec![Expr::Value(v)],
            },
            Rule::NewIndexTable,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::TableObject;

    fn with_meta(theta: &mut ObjectStore, event: &str, h: Value) -> Value {
        let mut mt = TableObject::new();
        mt.set(Value::str(event), h).unwrap();
        let mt = theta.alloc(mt);
        let mut t = TableObject::new();
        t.metatable = Some(mt);
        Value::Table(theta.alloc(t))
    }

    fn step(theta: &mut ObjectStore, e: Expr) -> StepTerm {
        let r = step_metatable(Term::Expr(e), theta).unwrap();
        (r.rule, r.term)
    }

    type StepTerm = (Rule, Term);

    #[test]
    fn index_fallbacks() {
        let mut theta = ObjectStore::new();
        let proto = Value::Table(theta.alloc(TableObject::new()));
        let t = with_meta(&mut theta, "__index", proto.clone());
        let k = Expr::string("k");
        let (rule, term) = step(
            &mut theta,
            Expr::labeled(Expr::index(val(&t), k.clone()), Label::Index),
        );
        assert_eq!(rule, Rule::IndexTable);
        assert_eq!(term, Term::Expr(Expr::index(val(&proto), k.clone())));
        let (rule, _) = step(
            &mut theta,
            Expr::labeled(Expr::index(val(&proto), k.clone()), Label::Index),
        );
        assert_eq!(rule, Rule::IndexNil);
        let (rule, term) = step(
            &mut theta,
            Expr::labeled(Expr::index(Expr::nil(), k), Label::Index),
        );
        assert_eq!(rule, Rule::IndexError);
        assert_eq!(
            term,
            Term::Expr(Expr::raise("attempt to index a nil value".into()))
        );
    }

    #[test]
    fn le_falls_back_to_lt() {
        let mut theta = ObjectStore::new();
        let h = crate::delta::wrapper(crate::delta::Service::RawEqual);
        let t = with_meta(&mut theta, "__lt", h.clone());
        let e = Expr::labeled(
            Expr::binary(BinOp::Le, val(&t), Expr::num(1.0)),
            Label::OrdWO,
        );
        let (rule, term) = step(&mut theta, e);
        assert_eq!(rule, Rule::OrderLeFallback);
        assert_eq!(
            term,
            Term::Expr(Expr::unary(
                UnOp::Not,
                Expr::call(val(&h), vec![Expr::num(1.0), val(&t)])
            ))
        );
    }

    #[test]
    fn arithmetic_error_names_the_culprit() {
        let mut theta = ObjectStore::new();
        let e = Expr::labeled(
            Expr::binary(BinOp::Add, Expr::string("10"), Expr::boolean(true)),
            Label::ArithWO,
        );
        let (rule, term) = step(&mut theta, e);
        assert_eq!(rule, Rule::ArithError);
        assert_eq!(
            term,
            Term::Expr(Expr::raise(
                "attempt to perform arithmetic on a boolean value".into()
            ))
        );
    }
}
