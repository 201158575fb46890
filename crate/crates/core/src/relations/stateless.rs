//! Rules that use neither store: conditionals, loops, sequencing, the
//! primitive operators and tuple normalization.

use crate::ast::{BinOp, Expr, Field, Label, Stmt, Term, UnOp, Value};
use crate::decompose::{control_focus, pending_tuple, Focus, NodeRef};
use crate::delta::{
    coerce_number, coerce_string, delta_arith, delta_logical, delta_not, delta_order,
};

use super::{fired, Attempt, Rule};

/// Some `break` reachable from `body` with no labeled term in between.
fn break_in_lf(body: &Stmt) -> bool {
    control_focus(NodeRef::Stmt(body), Focus::Break, |_| false).is_some()
}

pub fn step_stateless_stmt(redex: Term) -> Attempt {
    let Term::Stmt(s) = redex else {
        return Err(redex);
    };
    match s {
        Stmt::If {
            cond: Expr::Value(v),
            then_branch,
            else_branch,
        } => {
            if v.is_truthy() {
                fired(*then_branch, Rule::IfThen)
            } else {
                fired(*else_branch, Rule::IfElse)
            }
        }
        Stmt::While { cond, body } => fired(
            Stmt::labeled(Stmt::Iter { cond, body }, Label::Break),
            Rule::WhileWrap,
        ),
        Stmt::Iter { cond, body } => {
            let again = Stmt::Iter {
                cond: cond.clone(),
                body: body.clone(),
            };
            fired(
                Stmt::if_else(cond, Stmt::Seq(body, Box::new(again)), Stmt::Skip),
                Rule::IterUnfold,
            )
        }
        Stmt::Seq(head, tail) if *head == Stmt::Skip => fired(*tail, Rule::SeqSkip),
        Stmt::Labeled {
            body,
            label: Label::Break,
            ..
        } if *body == Stmt::Skip => fired(Stmt::Skip, Rule::LoopExit),
        Stmt::Labeled {
            body,
            label: Label::Break,
            site,
        } => {
            if break_in_lf(&body) {
                fired(Stmt::Skip, Rule::BreakExit)
            } else {
                Err(Term::Stmt(Stmt::Labeled {
                    body,
                    label: Label::Break,
                    site,
                }))
            }
        }
        other => Err(Term::Stmt(other)),
    }
}

fn first_or_nil(e: Expr) -> Expr {
    match e {
        Expr::Tuple(items) => items.into_iter().next().unwrap_or_else(Expr::nil),
        other => other,
    }
}

fn splice_vec(list: &mut Vec<Expr>, i: usize) {
    if let Expr::Tuple(items) = list.remove(i) {
        let tail = list.split_off(i);
        list.extend(items);
        list.extend(tail);
    }
}

/// Replaces list element `i` (a child index) by its tuple's elements.
fn splice_child(t: &mut Term, i: usize) {
    match t {
        Term::Stmt(Stmt::Local { exprs, .. }) | Term::Stmt(Stmt::Return(exprs)) => {
            splice_vec(exprs, i)
        }
        Term::Stmt(Stmt::Assign { targets, exprs }) => {
            let offset = targets.len();
            splice_vec(exprs, i - offset)
        }
        Term::Stmt(Stmt::Call { args, .. }) | Term::Expr(Expr::Call { args, .. }) => {
            splice_vec(args, i - 1)
        }
        Term::Expr(Expr::Tuple(items)) | Term::Expr(Expr::BuiltIn(_, items)) => {
            splice_vec(items, i)
        }
        Term::Expr(Expr::Table(fields)) => {
            if let Some(Field::Positional(Expr::Tuple(items))) = fields.pop() {
                fields.extend(items.into_iter().map(Field::Positional));
            }
        }
        _ => unreachable!("no expression list at this node"),
    }
}

fn tuple_rule(mut t: Term) -> Attempt {
    let Some((i, splice)) = pending_tuple(NodeRef::of(&t)) else {
        return Err(t);
    };
    if splice {
        splice_child(&mut t, i);
        fired(t, Rule::TupleSplice)
    } else {
        let child = crate::decompose::node_at_mut(&mut t, &[i]);
        if let Some(crate::decompose::NodeMut::Expr(e)) = child {
            let tuple = std::mem::take(e);
            *e = first_or_nil(tuple);
        }
        fired(t, Rule::TupleTruncate)
    }
}

pub fn step_stateless_expr(redex: Term) -> Attempt {
    let redex = match tuple_rule(redex) {
        Err(t) => t,
        ok => return ok,
    };
    let Term::Expr(e) = redex else {
        return Err(redex);
    };
    match e {
        Expr::Paren(inner) if inner.is_value() => fired(*inner, Rule::ParenValue),
        Expr::Paren(inner) if inner.is_value_tuple() => {
            fired(first_or_nil(*inner), Rule::ParenTuple)
        }
        Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) if l.is_value() => {
            let Expr::Value(v) = *l else { unreachable!() };
            let rule = if op == BinOp::And {
                Rule::And
            } else {
                Rule::Or
            };
            fired(delta_logical(op, v, *r), rule)
        }
        Expr::Binary(op, l, r) if l.is_value() && r.is_value() && !is_logical(op) => {
            let (Expr::Value(a), Expr::Value(b)) = (*l, *r) else {
                unreachable!()
            };
            binary(op, a, b)
        }
        Expr::Unary(op, x) if x.is_value() => {
            let Expr::Value(v) = *x else { unreachable!() };
            unary(op, v)
        }
        other => Err(Term::Expr(other)),
    }
}

fn is_logical(op: BinOp) -> bool {
    matches!(op, BinOp::And | BinOp::Or)
}

fn labeled(op: BinOp, a: Value, b: Value, label: Label) -> Expr {
    Expr::labeled(Expr::binary(op, Expr::Value(a), Expr::Value(b)), label)
}

fn binary(op: BinOp, a: Value, b: Value) -> Attempt {
    let val = |v: Value| Expr::Value(v);
    if op.is_arith() {
        return match (&a, &b) {
            (Value::Number(x), Value::Number(y)) => {
                fired(Expr::num(delta_arith(op, *x, *y)), Rule::Arith)
            }
            _ => match (coerce_number(&a), coerce_number(&b)) {
                (Some(x), Some(y)) => fired(Expr::num(delta_arith(op, x, y)), Rule::ArithCoerce),
                _ => fired(labeled(op, a, b, Label::ArithWO), Rule::ArithFail),
            },
        };
    }
    match op {
        BinOp::Concat => match (coerce_string(&a), coerce_string(&b)) {
            (Some(mut x), Some(y)) => {
                x.extend_from_slice(&y);
                fired(val(Value::bytes(&x)), Rule::Concat)
            }
            _ => fired(labeled(op, a, b, Label::ConcatWO), Rule::ConcatFail),
        },
        BinOp::Lt | BinOp::Le => match delta_order(op, &a, &b) {
            Some(r) => fired(Expr::boolean(r), Rule::Order),
            None => fired(labeled(op, a, b, Label::OrdWO), Rule::OrderFail),
        },
        BinOp::Gt => fired(Expr::binary(BinOp::Lt, val(b), val(a)), Rule::OrderSwap),
        BinOp::Ge => fired(Expr::binary(BinOp::Le, val(b), val(a)), Rule::OrderSwap),
        BinOp::Eq => {
            if a.raw_eq(&b) {
                fired(Expr::boolean(true), Rule::Eq)
            } else if matches!((&a, &b), (Value::Table(_), Value::Table(_))) {
                fired(labeled(op, a, b, Label::EqFail), Rule::EqFail)
            } else {
                fired(Expr::boolean(false), Rule::Eq)
            }
        }
        BinOp::Ne => fired(
            Expr::unary(UnOp::Not, Expr::binary(BinOp::Eq, val(a), val(b))),
            Rule::Ne,
        ),
        _ => unreachable!("handled by the caller: {op:?}"),
    }
}

fn unary(op: UnOp, v: Value) -> Attempt {
    let fail = |v: Value, label| Expr::labeled(Expr::unary(op, Expr::Value(v)), label);
    match op {
        UnOp::Not => fired(Expr::Value(delta_not(&v)), Rule::Not),
        UnOp::Neg => match &v {
            Value::Number(n) => fired(Expr::num(-n), Rule::Neg),
            _ => match coerce_number(&v) {
                Some(n) => fired(Expr::num(-n), Rule::NegCoerce),
                None => fired(fail(v, Label::NegWO), Rule::NegFail),
            },
        },
        UnOp::Len => match &v {
            Value::Str(s) => fired(Expr::num(s.len() as f64), Rule::LenString),
            _ => fired(fail(v, Label::LenWO), Rule::LenFail),
        },
    }
}
