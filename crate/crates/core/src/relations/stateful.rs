//! Rules over the stores: local declarations, assignment, dereference,
//! field indexing and update, table construction.

use crate::ast::{Bindings, Expr, Field, Label, Stmt, Term, Value};
use crate::store::{ObjectStore, TableObject, ValueStore};

use super::{fired, Attempt, Rule};

fn value_of(e: &Expr) -> &Value {
    e.as_value().expect("finished operand")
}

/// `exprs` padded with nil or truncated to `n` values.
fn adjust(exprs: &[Expr], n: usize) -> Vec<Value> {
    (0..n)
        .map(|i| exprs.get(i).map(value_of).cloned().unwrap_or_default())
        .collect()
}

/// A statement that raises `message`.
pub(crate) fn raise_stmt(message: String) -> Stmt {
    Stmt::Call {
        callee: Expr::raise(message),
        args: vec![],
        site: crate::ast::Site::NONE,
    }
}

pub fn step_stateful(redex: Term, sigma: &mut ValueStore, theta: &mut ObjectStore) -> Attempt {
    match redex {
        Term::Stmt(s) => stmt(s, sigma, theta),
        Term::Expr(e) => expr(e, sigma, theta),
    }
}

fn stmt(s: Stmt, sigma: &mut ValueStore, theta: &mut ObjectStore) -> Attempt {
    match s {
        Stmt::Local { names, exprs, body } if exprs.iter().all(Expr::is_value) => {
            let mut bindings = Bindings::new();
            for (n, v) in names.iter().zip(adjust(&exprs, names.len())) {
                bindings.insert(n.clone(), Expr::Ref(sigma.alloc(v)));
            }
            let mut body = *body;
            crate::ast::subst_stmt(&mut body, &bindings);
            fired(body, Rule::Local)
        }
        Stmt::Assign { targets, exprs } if assign_ready(&targets, &exprs) => {
            if targets.len() != 1 || exprs.len() != 1 {
                let vals = adjust(&exprs, targets.len());
                // Right to left, like the reference interpreter.
                let single: Vec<Stmt> = targets
                    .into_iter()
                    .zip(vals)
                    .rev()
                    .map(|(t, v)| Stmt::Assign {
                        targets: vec![t],
                        exprs: vec![Expr::Value(v)],
                    })
                    .collect();
                return fired(Stmt::seq(single), Rule::AssignSplit);
            }
            let target = targets.into_iter().next().expect("one target");
            let Expr::Value(v) = exprs.into_iter().next().expect("one value") else {
                unreachable!("checked by assign_ready")
            };
            match target {
                Expr::Ref(r) => {
                    sigma
                        .write(r, v)
                        .expect("references in terms are allocated");
                    fired(Stmt::Skip, Rule::Assign)
                }
                Expr::Index(obj, key) => {
                    let (o, k) = (value_of(&obj).clone(), value_of(&key).clone());
                    match &o {
                        Value::Table(t) if !theta.rawget(&o, &k).is_nil() => {
                            theta
                                .get_mut(*t)
                                .expect("object references in terms are allocated")
                                .set(k, v)
                                .expect("present keys are valid");
                            fired(Stmt::Skip, Rule::FieldUpdate)
                        }
                        _ => fired(
                            Stmt::Labeled {
                                body: Box::new(Stmt::Assign {
                                    targets: vec![Expr::Index(obj, key)],
                                    exprs: vec![Expr::Value(v)],
                                }),
                                label: Label::NewIndex,
                                site: crate::ast::Site::NONE,
                            },
                            Rule::FieldUpdateFail,
                        ),
                    }
                }
                _ => unreachable!("checked by assign_ready"),
            }
        }
        other => Err(Term::Stmt(other)),
    }
}

fn assign_ready(targets: &[Expr], exprs: &[Expr]) -> bool {
    targets.iter().all(|t| match t {
        Expr::Ref(_) => true,
        Expr::Index(o, k) => o.is_value() && k.is_value(),
        _ => false,
    }) && exprs.iter().all(Expr::is_value)
}

fn expr(e: Expr, sigma: &mut ValueStore, theta: &mut ObjectStore) -> Attempt {
    match e {
        Expr::Ref(r) => {
            let v = sigma
                .read(r)
                .expect("references in terms are allocated")
                .clone();
            fired(Expr::Value(v), Rule::Deref)
        }
        Expr::Index(obj, key) if obj.is_value() && key.is_value() => {
            let v = theta.rawget(value_of(&obj), value_of(&key));
            if v.is_nil() {
                fired(
                    Expr::labeled(Expr::Index(obj, key), Label::Index),
                    Rule::FieldIndexFail,
                )
            } else {
                fired(Expr::Value(v), Rule::FieldIndex)
            }
        }
        Expr::Table(fields) if fields_ready(&fields) => {
            let mut table = TableObject::new();
            let mut n = 0.0;
            for f in &fields {
                if let Field::Positional(v) = f {
                    n += 1.0;
                    let v = value_of(v).clone();
                    if !v.is_nil() {
                        table
                            .set(Value::Number(n), v)
                            .expect("numeric keys are valid");
                    }
                }
            }
            for f in &fields {
                if let Field::Keyed(k, v) = f {
                    let (k, v) = (value_of(k).clone(), value_of(v).clone());
                    let positional = matches!(k, Value::Number(i)
                        if i >= 1.0 && i <= n && i.fract() == 0.0);
                    if positional {
                        continue;
                    }
                    if let Err(msg) = table.set(k, v) {
                        return fired(Expr::raise(msg.to_string()), Rule::TableNew);
                    }
                }
            }
            fired(
                Expr::Value(Value::Table(theta.alloc(table))),
                Rule::TableNew,
            )
        }
        other => Err(Term::Expr(other)),
    }
}

fn fields_ready(fields: &[Field]) -> bool {
    fields.iter().all(|f| match f {
        Field::Positional(v) => v.is_value(),
        Field::Keyed(k, v) => k.is_value() && v.is_value(),
    })
}
