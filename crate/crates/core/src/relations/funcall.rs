//! Function calls and returns.

use crate::ast::{name, Bindings, Expr, Label, Stmt, Term, Value, VARARG};
use crate::decompose::{control_focus, Focus, NodeRef};
use crate::store::ValueStore;

use super::{fired, Attempt, Rule};

/// The values of the `return` reached from `body` with no label between.
fn returned_values(body: NodeRef<'_>) -> Option<Vec<Expr>> {
    match control_focus(body, Focus::Return, |_| false)? {
        NodeRef::Stmt(Stmt::Return(vs)) => Some(vs.clone()),
        _ => None,
    }
}

fn all_values(args: &[Expr]) -> bool {
    args.iter().all(Expr::is_value)
}

/// Instantiates a function body: fresh references for the parameters, the
/// surplus arguments as the vararg tuple.
fn instantiate(callee: &Value, args: Vec<Expr>, sigma: &mut ValueStore) -> Stmt {
    let Value::Function(def) = callee else {
        unreachable!("callers check for a function")
    };
    let mut args = args.into_iter();
    let mut bindings = Bindings::new();
    for p in &def.params {
        let v = match args.next() {
            Some(Expr::Value(v)) => v,
            _ => Value::Nil,
        };
        bindings.insert(p.clone(), Expr::Ref(sigma.alloc(v)));
    }
    if def.is_vararg {
        bindings.insert(name(VARARG), Expr::Tuple(args.collect()));
    }
    let mut body = def.body.clone();
    crate::ast::subst_stmt(&mut body, &bindings);
    body
}

pub fn step_funcall(redex: Term, sigma: &mut ValueStore, is_root: bool) -> Attempt {
    match redex {
        Term::Stmt(s) => stmt(s, sigma, is_root),
        Term::Expr(e) => expr(e, sigma),
    }
}

fn stmt(s: Stmt, sigma: &mut ValueStore, is_root: bool) -> Attempt {
    match s {
        Stmt::Call {
            callee: Expr::Value(f),
            args,
            site,
        } if all_values(&args) => {
            if matches!(f, Value::Function(_)) {
                let body = instantiate(&f, args, sigma);
                fired(
                    Stmt::Labeled {
                        body: Box::new(body),
                        label: Label::Return,
                        site,
                    },
                    Rule::Call,
                )
            } else {
                let call = Stmt::Call {
                    callee: Expr::Value(f),
                    args,
                    site,
                };
                fired(Stmt::labeled(call, Label::WFunCall), Rule::CallFail)
            }
        }
        Stmt::MethodCall {
            object: Expr::Value(obj),
            method,
            mut args,
            site,
        } => {
            args.insert(0, Expr::Value(obj.clone()));
            let callee = Expr::index(Expr::Value(obj), Expr::Value(Value::Str(method)));
            fired(
                Stmt::Call {
                    callee,
                    args,
                    site: site.as_method(),
                },
                Rule::MethodCall,
            )
        }
        Stmt::Labeled {
            body,
            label: Label::Return,
            ..
        } if *body == Stmt::Skip => fired(Stmt::Skip, Rule::ReturnSkip),
        Stmt::Labeled {
            body,
            label: label @ (Label::Return | Label::Break),
            site,
        } => match returned_values(NodeRef::Stmt(&body)) {
            Some(_) if label == Label::Return => fired(Stmt::Skip, Rule::ReturnDiscard),
            Some(vs) => fired(Stmt::Return(vs), Rule::ReturnBreak),
            None => Err(Term::Stmt(Stmt::Labeled { body, label, site })),
        },
        s if is_root => match returned_values(NodeRef::Stmt(&s)) {
            Some(vs) => fired(Expr::Tuple(vs), Rule::ReturnChunk),
            None => Err(Term::Stmt(s)),
        },
        other => Err(Term::Stmt(other)),
    }
}

fn expr(e: Expr, sigma: &mut ValueStore) -> Attempt {
    match e {
        Expr::Call { callee, args, site } if callee.is_value() && all_values(&args) => {
            let Expr::Value(f) = *callee else {
                unreachable!("checked above")
            };
            if matches!(f, Value::Function(_)) {
                let body = instantiate(&f, args, sigma);
                fired(
                    Expr::Body {
                        body: Box::new(body),
                        label: Label::Return,
                        site,
                    },
                    Rule::Call,
                )
            } else {
                let call = Expr::Call {
                    callee: Box::new(Expr::Value(f)),
                    args,
                    site,
                };
                fired(Expr::labeled(call, Label::WFunCall), Rule::CallFail)
            }
        }
        Expr::MethodCall {
            object,
            method,
            mut args,
            site,
        } if object.is_value() => {
            args.insert(0, (*object).clone());
            let callee = Expr::index(*object, Expr::Value(Value::Str(method)));
            fired(
                Expr::Call {
                    callee: Box::new(callee),
                    args,
                    site: site.as_method(),
                },
                Rule::MethodCall,
            )
        }
        Expr::Body {
            body,
            label: Label::Return,
            ..
        } if *body == Stmt::Skip => fired(Expr::Tuple(vec![]), Rule::ReturnSkip),
        Expr::Body {
            body,
            label: Label::Return,
            site,
        } => match returned_values(NodeRef::Stmt(&body)) {
            Some(vs) => fired(Expr::Tuple(vs), Rule::ReturnValue),
            None => Err(Term::Expr(Expr::Body {
                body,
                label: Label::Return,
                site,
            })),
        },
        other => Err(Term::Expr(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{FunctionDef, FunctionLabel, Ref, Site};

    fn identity() -> Value {
        let label = FunctionLabel::Source { chunk: 0, index: 0 };
        Value::function(FunctionDef::new(
            label,
            vec![name("x")],
            true,
            Stmt::Return(vec![Expr::Name(name("x")), Expr::VarArg]),
        ))
    }

    #[test]
    fn call_binds_parameters_and_varargs() {
        let mut sigma = ValueStore::new();
        let call = Expr::call(
            Expr::Value(identity()),
            vec![Expr::num(1.0), Expr::num(2.0), Expr::num(3.0)],
        );
        let r = step_funcall(Term::Expr(call), &mut sigma, false).unwrap();
        assert_eq!(r.rule, Rule::Call);
        assert_eq!(sigma.read(Ref(0)).unwrap(), &Value::Number(1.0));
        let Term::Expr(Expr::Body { body, label, .. }) = r.term else {
            panic!("{:?}", r.term)
        };
        assert_eq!(label, Label::Return);
        assert_eq!(
            *body,
            Stmt::Return(vec![
                Expr::Ref(Ref(0)),
                Expr::Tuple(vec![Expr::num(2.0), Expr::num(3.0)])
            ])
        );
    }

    #[test]
    fn return_reaches_the_body() {
        let mut sigma = ValueStore::new();
        let body = Stmt::Seq(
            Box::new(Stmt::Return(vec![Expr::num(7.0)])),
            Box::new(Stmt::Break),
        );
        let e = Expr::Body {
            body: Box::new(body.clone()),
            label: Label::Return,
            site: Site::NONE,
        };
        let r = step_funcall(Term::Expr(e), &mut sigma, false).unwrap();
        assert_eq!(r.rule, Rule::ReturnValue);
        assert_eq!(r.term, Term::Expr(Expr::Tuple(vec![Expr::num(7.0)])));

        let looped = Stmt::labeled(body.clone(), Label::Break);
        let r = step_funcall(Term::Stmt(looped), &mut sigma, false).unwrap();
        assert_eq!(r.rule, Rule::ReturnBreak);

        let r = step_funcall(Term::Stmt(body.clone()), &mut sigma, true).unwrap();
        assert_eq!(r.rule, Rule::ReturnChunk);
        assert!(step_funcall(Term::Stmt(body), &mut sigma, false).is_err());
    }

    #[test]
    fn calling_a_non_function_is_labeled() {
        let mut sigma = ValueStore::new();
        let call = Expr::call(Expr::num(1.0), vec![]);
        let r = step_funcall(Term::Expr(call.clone()), &mut sigma, false).unwrap();
        assert_eq!(r.rule, Rule::CallFail);
        assert_eq!(r.term, Term::Expr(Expr::labeled(call, Label::WFunCall)));
    }
}
