//! The reduction relations, each a partial function from a redex (and the
//! stores it may use) to its contractum.
//!
//! Every relation takes the redex by value and either fires, returning the
//! new subterm and the rule that fired, or hands the redex back untouched.
//! The store parameters of each relation are exactly the stores its rules
//! may read or update, so the frame conditions are enforced by the types.

mod funcall;
mod metatable;
mod stateful;
mod stateless;

use std::fmt;

use crate::ast::Term;
use crate::delta::{Service, ServiceContext};
use crate::store::{ObjectStore, ValueStore};

pub use funcall::step_funcall;
pub use metatable::step_metatable;
pub use stateful::step_stateful;
pub use stateless::{step_stateless_expr, step_stateless_stmt};

/// The relation a rule belongs to, in the order the machine tries them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    StatelessStmt,
    StatelessExpr,
    Stateful,
    Funcall,
    Builtin,
    Metatable,
    /// Protected mode and program abort, handled by the machine.
    Errors,
}

macro_rules! rules {
    ($( $variant:ident => $id:literal, $rel:ident; )*) => {
        /// A single reduction rule.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Rule {
            $( $variant, )*
            /// `$builtIn name(v, ...)` for one service.
            BuiltIn(Service),
        }

        impl Rule {
            /// Every rule except the per-service builtin rules.
            pub const NAMED: &'static [Rule] = &[ $( Rule::$variant, )* ];

            pub fn relation(self) -> Relation {
                match self {
                    $( Rule::$variant => Relation::$rel, )*
                    Rule::BuiltIn(_) => Relation::Builtin,
                }
            }

            fn base_id(self) -> &'static str {
                match self {
                    $( Rule::$variant => $id, )*
                    Rule::BuiltIn(_) => "builtin",
                }
            }
        }
    };
}

rules! {
    IfThen => "if.then", StatelessStmt;
    IfElse => "if.else", StatelessStmt;
    WhileWrap => "while.wrap", StatelessStmt;
    IterUnfold => "iter.unfold", StatelessStmt;
    SeqSkip => "seq.skip", StatelessStmt;
    BreakExit => "break.exit", StatelessStmt;
    LoopExit => "loop.exit", StatelessStmt;

    Arith => "arith", StatelessExpr;
    ArithCoerce => "arith.coerce", StatelessExpr;
    ArithFail => "arith.fail", StatelessExpr;
    Concat => "concat", StatelessExpr;
    ConcatFail => "concat.fail", StatelessExpr;
    Order => "order", StatelessExpr;
    OrderSwap => "order.swap", StatelessExpr;
    OrderFail => "order.fail", StatelessExpr;
    Eq => "eq", StatelessExpr;
    EqFail => "eq.fail", StatelessExpr;
    Ne => "ne", StatelessExpr;
    And => "and", StatelessExpr;
    Or => "or", StatelessExpr;
    Not => "not", StatelessExpr;
    Neg => "neg", StatelessExpr;
    NegCoerce => "neg.coerce", StatelessExpr;
    NegFail => "neg.fail", StatelessExpr;
    LenString => "len.string", StatelessExpr;
    LenFail => "len.fail", StatelessExpr;
    ParenValue => "paren.value", StatelessExpr;
    ParenTuple => "paren.tuple", StatelessExpr;
    TupleTruncate => "tuple.truncate", StatelessExpr;
    TupleSplice => "tuple.splice", StatelessExpr;

    Local => "local", Stateful;
    Assign => "assign", Stateful;
    AssignSplit => "assign.split", Stateful;
    FieldUpdate => "field.update", Stateful;
    FieldUpdateFail => "field.update.fail", Stateful;
    Deref => "deref", Stateful;
    FieldIndex => "field.index", Stateful;
    FieldIndexFail => "field.index.fail", Stateful;
    TableNew => "table.new", Stateful;

    Call => "call", Funcall;
    CallFail => "call.fail", Funcall;
    MethodCall => "call.method", Funcall;
    ReturnSkip => "return.skip", Funcall;
    ReturnValue => "return.value", Funcall;
    ReturnDiscard => "return.discard", Funcall;
    ReturnBreak => "return.break", Funcall;
    ReturnChunk => "return.chunk", Funcall;

    ArithHandler => "arith.handler", Metatable;
    ArithError => "arith.error", Metatable;
    ConcatHandler => "concat.handler", Metatable;
    ConcatError => "concat.error", Metatable;
    OrderHandler => "order.handler", Metatable;
    OrderLeFallback => "order.le-fallback", Metatable;
    OrderError => "order.error", Metatable;
    EqHandler => "eq.handler", Metatable;
    EqFalse => "eq.false", Metatable;
    NegHandler => "neg.handler", Metatable;
    NegError => "neg.error", Metatable;
    LenHandler => "len.handler", Metatable;
    LenRaw => "len.raw", Metatable;
    LenError => "len.error", Metatable;
    IndexCall => "index.call", Metatable;
    IndexTable => "index.table", Metatable;
    IndexNil => "index.nil", Metatable;
    IndexError => "index.error", Metatable;
    NewIndexCall => "newindex.call", Metatable;
    NewIndexTable => "newindex.table", Metatable;
    NewIndexRaw => "newindex.raw", Metatable;
    NewIndexError => "newindex.error", Metatable;
    CallHandler => "call.handler", Metatable;
    CallError => "call.error", Metatable;

    ProtectedSkip => "protected.skip", Errors;
    ProtectedValues => "protected.values", Errors;
    ErrorProtected => "error.protected", Errors;
    ErrorAbort => "error.abort", Errors;
}

impl Rule {
    /// Identifier used in traces, e.g. `while.wrap` or `builtin.type`.
    pub fn id(self) -> String {
        match self {
            Rule::BuiltIn(s) => format!("builtin.{}", s.name()),
            other => other.base_id().to_string(),
        }
    }

    pub fn from_id(id: &str) -> Option<Rule> {
        if let Some(name) = id.strip_prefix("builtin.") {
            return Service::from_name(name).map(Rule::BuiltIn);
        }
        Rule::NAMED.iter().copied().find(|r| r.base_id() == id)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::BuiltIn(s) => write!(f, "builtin.{}", s.name()),
            other => f.write_str(other.base_id()),
        }
    }
}

/// A fired rule: the contractum and the rule's identity.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub term: Term,
    pub rule: Rule,
}

/// `Ok` when a rule fired; otherwise the redex, unchanged.
pub type Attempt = Result<StepResult, Term>;

pub(crate) fn fired(term: impl Into<Term>, rule: Rule) -> Attempt {
    Ok(StepResult {
        term: term.into(),
        rule,
    })
}

/// `$builtIn name(v, ...)`: applies the service to its argument values.
pub fn step_builtin(redex: Term, theta: &mut ObjectStore, cx: &mut ServiceContext<'_>) -> Attempt {
    use crate::ast::Expr;
    match redex {
        Term::Expr(Expr::BuiltIn(service, args)) if args.iter().all(Expr::is_value) => {
            let vals = args
                .into_iter()
                .map(|a| match a {
                    Expr::Value(v) => v,
                    _ => unreachable!("checked above"),
                })
                .collect();
            let out = crate::delta::call_service(service, vals, theta, cx);
            fired(out, Rule::BuiltIn(service))
        }
        other => Err(other),
    }
}

/// Mutable access to everything a relation may use.
pub struct Stores<'a> {
    pub sigma: &'a mut ValueStore,
    pub theta: &'a mut ObjectStore,
}

/// Tries the relations in the machine's order. `is_root` enables the rules
/// whose redex is the whole program.
pub fn reduce(
    redex: Term,
    stores: Stores<'_>,
    cx: &mut ServiceContext<'_>,
    is_root: bool,
) -> Attempt {
    let t = match step_stateless_stmt(redex) {
        Err(t) => t,
        ok => return ok,
    };
    let t = match step_stateless_expr(t) {
        Err(t) => t,
        ok => return ok,
    };
    let t = match step_stateful(t, stores.sigma, stores.theta) {
        Err(t) => t,
        ok => return ok,
    };
    let t = match step_funcall(t, stores.sigma, is_root) {
        Err(t) => t,
        ok => return ok,
    };
    let t = match step_builtin(t, stores.theta, cx) {
        Err(t) => t,
        ok => return ok,
    };
    let t = match step_metatable(t, stores.theta) {
        Err(t) => t,
        ok => return ok,
    };
    crate::machine::step_errors(t, is_root)
}

/// Every rule that applies to `redex`, each tried on its own copy of the
/// stores. Used to check that the relations are mutually exclusive.
///
/// A relation that does not fire returns the redex untouched and leaves
/// the stores alone, so copies are only refreshed after a rule fires.
pub fn applicable_rules(
    redex: &Term,
    sigma: &ValueStore,
    theta: &ObjectStore,
    cx: &mut ServiceContext<'_>,
    is_root: bool,
) -> Vec<Rule> {
    let mut out = Vec::new();
    let mut t = redex.clone();
    let mut s = sigma.clone();
    let mut th = theta.clone();
    let mut output = Vec::new();
    let mut names = cx.chunk_names.clone();
    let sites = cx.sites;
    let globals = cx.globals;
    for relation in 0..7 {
        let attempt = match relation {
            0 => step_stateless_stmt(t),
            1 => step_stateless_expr(t),
            2 => step_stateful(t, &mut s, &mut th),
            3 => step_funcall(t, &mut s, is_root),
            4 => {
                let mut scratch = ServiceContext {
                    sites,
                    chunk_names: &mut names,
                    output: &mut output,
                    globals,
                };
                step_builtin(t, &mut th, &mut scratch)
            }
            5 => step_metatable(t, &mut th),
            _ => crate::machine::step_errors(t, is_root),
        };
        t = match attempt {
            Ok(r) => {
                out.push(r.rule);
                s = sigma.clone();
                th = theta.clone();
                names = cx.chunk_names.clone();
                redex.clone()
            }
            Err(back) => back,
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for r in Rule::NAMED {
            assert_eq!(Rule::from_id(&r.id()), Some(*r));
        }
        assert_eq!(
            Rule::from_id("builtin.type"),
            Some(Rule::BuiltIn(Service::Type))
        );
        let mut ids: Vec<_> = Rule::NAMED.iter().map(|r| r.id()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), Rule::NAMED.len());
    }
}
