//! Capture-correct substitution and free-name computation.
//!
//! The semantics only ever substitutes closed terms (references, values and
//! value tuples), so no renaming is needed: substitution stops at binders
//! that shadow a mapped name.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{Expr, Field, FunctionDef, Name, Stmt, Term, ENV, VARARG};

/// Finite map from names to the closed terms replacing them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bindings {
    entries: Vec<(Name, Expr)>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Later insertions of the same name replace earlier ones.
    pub fn insert(&mut self, name: Name, replacement: Expr) {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = replacement;
        } else {
            self.entries.push((name, replacement));
        }
    }

    pub fn with(mut self, name: Name, replacement: Expr) -> Self {
        self.insert(name, replacement);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.entries
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, e)| e)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().map(|(n, _)| n)
    }

    fn shadows_any<'a>(&self, binders: impl IntoIterator<Item = &'a str>) -> bool {
        binders.into_iter().any(|b| self.get(b).is_some())
    }

    fn without<'a>(&self, binders: impl IntoIterator<Item = &'a str> + Clone) -> Bindings {
        Bindings {
            entries: self
                .entries
                .iter()
                .filter(|(n, _)| !binders.clone().into_iter().any(|b| b == &**n))
                .cloned()
                .collect(),
        }
    }
}

/// Substitutes every free occurrence of the mapped names in `t`.
pub fn substitute(t: &Term, bindings: &Bindings) -> Term {
    let mut out = t.clone();
    match &mut out {
        Term::Stmt(s) => subst_stmt(s, bindings),
        Term::Expr(e) => subst_expr(e, bindings),
    }
    out
}

pub(crate) fn subst_stmt(s: &mut Stmt, b: &Bindings) {
    if b.is_empty() {
        return;
    }
    match s {
        Stmt::Skip | Stmt::Break | Stmt::Hole => {}
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            subst_expr(cond, b);
            subst_stmt(then_branch, b);
            subst_stmt(else_branch, b);
        }
        Stmt::While { cond, body } | Stmt::Iter { cond, body } => {
            subst_expr(cond, b);
            subst_stmt(body, b);
        }
        Stmt::Seq(a, c) => {
            subst_stmt(a, b);
            subst_stmt(c, b);
        }
        Stmt::Local { names, exprs, body } => {
            exprs.iter_mut().for_each(|e| subst_expr(e, b));
            let binders = names.iter().map(|n| &**n);
            if b.shadows_any(binders.clone()) {
                let inner = b.without(binders);
                subst_stmt(body, &inner);
            } else {
                subst_stmt(body, b);
            }
        }
        Stmt::Assign { targets, exprs } => {
            targets.iter_mut().for_each(|e| subst_expr(e, b));
            exprs.iter_mut().for_each(|e| subst_expr(e, b));
        }
        Stmt::Call { callee, args, .. } => {
            subst_expr(callee, b);
            args.iter_mut().for_each(|e| subst_expr(e, b));
        }
        Stmt::MethodCall { object, args, .. } => {
            subst_expr(object, b);
            args.iter_mut().for_each(|e| subst_expr(e, b));
        }
        Stmt::Return(exprs) => exprs.iter_mut().for_each(|e| subst_expr(e, b)),
        Stmt::Labeled { body, .. } => subst_stmt(body, b),
    }
}

pub(crate) fn subst_expr(e: &mut Expr, b: &Bindings) {
    if b.is_empty() {
        return;
    }
    match e {
        Expr::Name(n) => {
            if let Some(r) = b.get(n) {
                *e = r.clone();
            }
        }
        Expr::VarArg => {
            if let Some(r) = b.get(VARARG) {
                *e = r.clone();
            }
        }
        Expr::Value(super::Value::Function(def)) => {
            if let Some(new) = subst_function(def, b) {
                *def = Arc::new(new);
            }
        }
        Expr::Value(_) | Expr::Ref(_) | Expr::Err(_) | Expr::Hole => {}
        Expr::Index(o, k) => {
            subst_expr(o, b);
            subst_expr(k, b);
        }
        Expr::Paren(inner) | Expr::Unary(_, inner) | Expr::Labeled { body: inner, .. } => {
            subst_expr(inner, b)
        }
        Expr::Table(fields) => {
            for f in fields {
                match f {
                    Field::Positional(v) => subst_expr(v, b),
                    Field::Keyed(k, v) => {
                        subst_expr(k, b);
                        subst_expr(v, b);
                    }
                }
            }
        }
        Expr::Call { callee, args, .. } => {
            subst_expr(callee, b);
            args.iter_mut().for_each(|a| subst_expr(a, b));
        }
        Expr::MethodCall { object, args, .. } => {
            subst_expr(object, b);
            args.iter_mut().for_each(|a| subst_expr(a, b));
        }
        Expr::Binary(_, l, r) => {
            subst_expr(l, b);
            subst_expr(r, b);
        }
        Expr::Tuple(items) | Expr::BuiltIn(_, items) => {
            items.iter_mut().for_each(|a| subst_expr(a, b))
        }
        Expr::Body { body, .. } => subst_stmt(body, b),
    }
}

/// Returns the substituted literal, or `None` when no mapped name is free in
/// it (the shared definition can then be reused as is).
fn subst_function(def: &FunctionDef, b: &Bindings) -> Option<FunctionDef> {
    let hits: Vec<&Name> = b
        .names()
        .filter(|n| def.free.binary_search(n).is_ok())
        .collect();
    if hits.is_empty() {
        return None;
    }
    // Params shadow; a vararg literal also binds `...`.
    let mut binders: Vec<&str> = def.params.iter().map(|p| &**p).collect();
    if def.is_vararg {
        binders.push(VARARG);
    }
    let inner = b.without(binders.iter().copied());
    let mut body = def.body.clone();
    subst_stmt(&mut body, &inner);
    let env = match inner.get(ENV) {
        Some(Expr::Ref(r)) if def.free.iter().any(|n| &**n == ENV) => Some(*r),
        _ => def.env,
    };
    let free = def
        .free
        .iter()
        .filter(|n| inner.get(n).is_none())
        .cloned()
        .collect();
    Some(FunctionDef {
        label: def.label,
        params: def.params.clone(),
        is_vararg: def.is_vararg,
        body,
        free,
        env,
    })
}

/// Names with at least one unbound occurrence in `t`; `...` is reported as
/// a name.
pub fn free_names(t: &Term) -> BTreeSet<Name> {
    match t {
        Term::Stmt(s) => free_names_stmt(s),
        Term::Expr(e) => free_names_expr(e),
    }
}

pub fn free_names_stmt(s: &Stmt) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_stmt(s, &mut out);
    out
}

pub fn free_names_expr(e: &Expr) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_expr(e, &mut out);
    out
}

fn collect_stmt(s: &Stmt, out: &mut BTreeSet<Name>) {
    match s {
        Stmt::Skip | Stmt::Break | Stmt::Hole => {}
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            collect_expr(cond, out);
            collect_stmt(then_branch, out);
            collect_stmt(else_branch, out);
        }
        Stmt::While { cond, body } | Stmt::Iter { cond, body } => {
            collect_expr(cond, out);
            collect_stmt(body, out);
        }
        Stmt::Seq(a, b) => {
            collect_stmt(a, out);
            collect_stmt(b, out);
        }
        Stmt::Local { names, exprs, body } => {
            exprs.iter().for_each(|e| collect_expr(e, out));
            let mut inner = BTreeSet::new();
            collect_stmt(body, &mut inner);
            for n in names {
                inner.remove(n);
            }
            out.extend(inner);
        }
        Stmt::Assign { targets, exprs } => {
            targets.iter().for_each(|e| collect_expr(e, out));
            exprs.iter().for_each(|e| collect_expr(e, out));
        }
        Stmt::Call { callee, args, .. } => {
            collect_expr(callee, out);
            args.iter().for_each(|e| collect_expr(e, out));
        }
        Stmt::MethodCall { object, args, .. } => {
            collect_expr(object, out);
            args.iter().for_each(|e| collect_expr(e, out));
        }
        Stmt::Return(exprs) => exprs.iter().for_each(|e| collect_expr(e, out)),
        Stmt::Labeled { body, .. } => collect_stmt(body, out),
    }
}

fn collect_expr(e: &Expr, out: &mut BTreeSet<Name>) {
    match e {
        Expr::Name(n) => {
            out.insert(n.clone());
        }
        Expr::VarArg => {
            out.insert(Name::from(VARARG));
        }
        Expr::Value(super::Value::Function(def)) => out.extend(def.free.iter().cloned()),
        Expr::Value(_) | Expr::Ref(_) | Expr::Err(_) | Expr::Hole => {}
        Expr::Index(o, k) => {
            collect_expr(o, out);
            collect_expr(k, out);
        }
        Expr::Paren(inner) | Expr::Unary(_, inner) | Expr::Labeled { body: inner, .. } => {
            collect_expr(inner, out)
        }
        Expr::Table(fields) => {
            for f in fields {
                match f {
                    Field::Positional(v) => collect_expr(v, out),
                    Field::Keyed(k, v) => {
                        collect_expr(k, out);
                        collect_expr(v, out);
                    }
                }
            }
        }
        Expr::Call { callee, args, .. } => {
            collect_expr(callee, out);
            args.iter().for_each(|a| collect_expr(a, out));
        }
        Expr::MethodCall { object, args, .. } => {
            collect_expr(object, out);
            args.iter().for_each(|a| collect_expr(a, out));
        }
        Expr::Binary(_, l, r) => {
            collect_expr(l, out);
            collect_expr(r, out);
        }
        Expr::Tuple(items) | Expr::BuiltIn(_, items) => {
            items.iter().for_each(|a| collect_expr(a, out))
        }
        Expr::Body { body, .. } => collect_stmt(body, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{name, Ref, Value};

    fn assign(target: Expr, v: f64) -> Stmt {
        Stmt::Assign {
            targets: vec![target],
            exprs: vec![Expr::num(v)],
        }
    }

    fn var(n: &str) -> Expr {
        Expr::Name(name(n))
    }

    #[test]
    fn replaces_free_occurrence() {
        let s = Stmt::Assign {
            targets: vec![var("x")],
            exprs: vec![Expr::boolean(true)],
        };
        let b = Bindings::new().with(name("x"), Expr::Ref(Ref(4)));
        let out = substitute(&Term::Stmt(s), &b);
        assert_eq!(
            out,
            Term::Stmt(Stmt::Assign {
                targets: vec![Expr::Ref(Ref(4))],
                exprs: vec![Expr::boolean(true)],
            })
        );
    }

    #[test]
    fn absent_name_is_untouched() {
        let s = Term::Stmt(assign(var("y"), 1.0));
        let b = Bindings::new().with(name("x"), Expr::Ref(Ref(0)));
        assert_eq!(substitute(&s, &b), s);
    }

    #[test]
    fn inner_binder_shadows() {
        // x = 1  local x = 2 in x = 3 end
        let s = Stmt::seq(vec![
            assign(var("x"), 1.0),
            Stmt::Local {
                names: vec![name("x")],
                exprs: vec![Expr::num(2.0)],
                body: Box::new(assign(var("x"), 3.0)),
            },
        ]);
        let b = Bindings::new().with(name("x"), Expr::Ref(Ref(9)));
        let expected = Stmt::seq(vec![
            assign(Expr::Ref(Ref(9)), 1.0),
            Stmt::Local {
                names: vec![name("x")],
                exprs: vec![Expr::num(2.0)],
                body: Box::new(assign(var("x"), 3.0)),
            },
        ]);
        assert_eq!(substitute(&Term::Stmt(s), &b), Term::Stmt(expected));
    }

    #[test]
    fn local_rvalues_see_outer_binding() {
        // local x = x in ; end
        let s = Stmt::Local {
            names: vec![name("x")],
            exprs: vec![var("x")],
            body: Box::new(Stmt::Skip),
        };
        let b = Bindings::new().with(name("x"), Expr::Ref(Ref(1)));
        let Term::Stmt(Stmt::Local { exprs, .. }) = substitute(&Term::Stmt(s), &b) else {
            panic!()
        };
        assert_eq!(exprs, vec![Expr::Ref(Ref(1))]);
    }

    #[test]
    fn function_params_shadow_and_env_is_recorded() {
        use crate::ast::FunctionLabel;
        let body = Stmt::Assign {
            targets: vec![Expr::index(var("_ENV"), Expr::string("g"))],
            exprs: vec![var("a"), var("b")],
        };
        let f = FunctionDef::new(
            FunctionLabel::Source { chunk: 0, index: 0 },
            vec![name("a")],
            false,
            body,
        );
        assert_eq!(f.free_names().len(), 2);
        let e = Expr::Value(Value::function(f));
        let b = Bindings::new()
            .with(name("a"), Expr::Ref(Ref(1)))
            .with(name("b"), Expr::Ref(Ref(2)))
            .with(name("_ENV"), Expr::Ref(Ref(3)));
        let Term::Expr(Expr::Value(Value::Function(def))) = substitute(&Term::Expr(e), &b) else {
            panic!()
        };
        assert!(def.free_names().is_empty());
        assert_eq!(def.env_ref(), Some(Ref(3)));
        let Stmt::Assign { exprs, .. } = &def.body else {
            panic!()
        };
        assert_eq!(exprs[0], var("a"));
        assert_eq!(exprs[1], Expr::Ref(Ref(2)));
    }

    #[test]
    fn free_names_basics() {
        assert_eq!(
            free_names_stmt(&assign(var("x"), 1.0)),
            BTreeSet::from([name("x")])
        );
        let local = Stmt::Local {
            names: vec![name("x")],
            exprs: vec![Expr::num(1.0)],
            body: Box::new(assign(var("x"), 2.0)),
        };
        assert!(free_names_stmt(&local).is_empty());
        assert_eq!(
            free_names_expr(&Expr::VarArg),
            BTreeSet::from([name("...")])
        );
    }

    #[test]
    fn substitution_is_idempotent_for_references() {
        let s = Term::Stmt(Stmt::seq(vec![
            assign(var("x"), 1.0),
            assign(var("y"), 2.0),
        ]));
        let b = Bindings::new()
            .with(name("x"), Expr::Ref(Ref(0)))
            .with(name("y"), Expr::Ref(Ref(1)));
        let once = substitute(&s, &b);
        assert_eq!(substitute(&once, &b), once);
    }
}
