//! The term language.
//!
//! A single tree type covers the source statements and expressions of the
//! supported Lua subset together with every run-time construct the reduction
//! rules introduce: value-store references, object references, labeled terms,
//! tuples, `$iter` loops, `$builtIn` service calls and `$err` values.
//!
//! Terms are plain owned trees. Function values are shared behind `Arc` so a
//! configuration can be cloned cheaply and sent between threads.

mod print;
mod subst;

use std::fmt;
use std::sync::Arc;

use crate::delta::Service;

pub use print::{render_expr, render_stmt, render_term, render_value, Printer, Style};
pub(crate) use subst::subst_stmt;
pub use subst::{free_names, free_names_expr, free_names_stmt, substitute, Bindings};

/// Identifier of a variable (locals, parameters, `_ENV`, hidden loop names).
pub type Name = Arc<str>;

/// Lua strings are byte sequences.
pub type LuaStr = Arc<[u8]>;

/// Pseudo-name under which the vararg expression `...` is substituted.
pub const VARARG: &str = "...";

/// Name of the environment variable every global access goes through.
pub const ENV: &str = "_ENV";

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

pub fn lua_str(bytes: &[u8]) -> LuaStr {
    Arc::from(bytes)
}

/// Reference into the value store σ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ref(pub u32);

/// Reference into the object store θ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjRef(pub u32);

/// Identity of a function definition occurrence.
///
/// Source functions are numbered per chunk in source order; library
/// wrappers carry the service they forward to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionLabel {
    Builtin(Service),
    Source { chunk: u32, index: u32 },
}

impl fmt::Display for FunctionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionLabel::Builtin(s) => write!(f, "${}", s.name()),
            FunctionLabel::Source { chunk: 0, index } => write!(f, "$l{index}"),
            FunctionLabel::Source { chunk, index } => write!(f, "$l{chunk}_{index}"),
        }
    }
}

/// Source position of a call, used for error-message prefixes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Site {
    pub chunk: u32,
    /// 0 when the call was synthesized by the engine.
    pub line: u32,
    /// Written as `obj:name(...)`; argument errors then skip `self`.
    pub method: bool,
}

impl Site {
    pub const NONE: Site = Site {
        chunk: 0,
        line: 0,
        method: false,
    };

    pub fn new(chunk: u32, line: u32) -> Self {
        Site {
            chunk,
            line,
            method: false,
        }
    }

    pub fn as_method(self) -> Self {
        Site {
            method: true,
            ..self
        }
    }

    pub fn is_known(&self) -> bool {
        self.line > 0
    }
}

/// Labels marking control targets and pending metatable dispatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Break,
    Return,
    ProtMd,
    ArithWO,
    ConcatWO,
    OrdWO,
    NegWO,
    LenWO,
    EqFail,
    Index,
    NewIndex,
    WFunCall,
}

impl Label {
    pub const ALL: [Label; 12] = [
        Label::Break,
        Label::Return,
        Label::ProtMd,
        Label::ArithWO,
        Label::ConcatWO,
        Label::OrdWO,
        Label::NegWO,
        Label::LenWO,
        Label::EqFail,
        Label::Index,
        Label::NewIndex,
        Label::WFunCall,
    ];

    /// Break, Return and ProtMd delimit control; the rest request fallback
    /// dispatch through metatables.
    pub fn is_control(self) -> bool {
        matches!(self, Label::Break | Label::Return | Label::ProtMd)
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Break => "Break",
            Label::Return => "Return",
            Label::ProtMd => "ProtMd",
            Label::ArithWO => "ArithWO",
            Label::ConcatWO => "ConcatWO",
            Label::OrdWO => "OrdWO",
            Label::NegWO => "NegWO",
            Label::LenWO => "LenWO",
            Label::EqFail => "EqFail",
            Label::Index => "Index",
            Label::NewIndex => "NewIndex",
            Label::WFunCall => "WFunCall",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Mod,
    Concat,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
            BinOp::Mod => "%",
            BinOp::Concat => "..",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "~=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_arith(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Pow | BinOp::Mod
        )
    }

    pub fn is_order(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    /// Binding power as in the Lua 5.2 manual, 1 (`or`) to 7 (`^`).
    /// Unary operators sit at 7, between `*` and `^`.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Concat => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
            BinOp::Pow => 8,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        matches!(self, BinOp::Concat | BinOp::Pow)
    }
}

pub const UNARY_PRECEDENCE: u8 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    Len,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "not",
            UnOp::Len => "#",
        }
    }
}

/// A function literal. Closures are obtained by substitution, so the body
/// of a function value already has its captured variables replaced by
/// references.
#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub label: FunctionLabel,
    pub params: Vec<Name>,
    pub is_vararg: bool,
    pub body: Stmt,
    /// Sorted free names of the literal (`...` included when free).
    pub(crate) free: Vec<Name>,
    /// Reference that replaced `_ENV`, once bound.
    pub(crate) env: Option<Ref>,
}

impl FunctionDef {
    pub fn new(label: FunctionLabel, params: Vec<Name>, is_vararg: bool, body: Stmt) -> Self {
        let mut free = free_names_stmt(&body);
        for p in &params {
            free.remove(p);
        }
        if is_vararg {
            free.remove(VARARG);
        }
        FunctionDef {
            label,
            params,
            is_vararg,
            body,
            free: free.into_iter().collect(),
            env: None,
        }
    }

    pub fn free_names(&self) -> &[Name] {
        &self.free
    }

    pub fn env_ref(&self) -> Option<Ref> {
        self.env
    }
}

impl PartialEq for FunctionDef {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.params == other.params
            && self.is_vararg == other.is_vararg
            && self.body == other.body
    }
}

#[derive(Clone, Debug, Default)]
pub enum Value {
    #[default]
    Nil,
    Bool(bool),
    Number(f64),
    Str(LuaStr),
    Function(Arc<FunctionDef>),
    Table(ObjRef),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(lua_str(s.as_bytes()))
    }

    pub fn bytes(b: &[u8]) -> Value {
        Value::Str(lua_str(b))
    }

    pub fn function(def: FunctionDef) -> Value {
        Value::Function(Arc::new(def))
    }

    /// False only for nil and false.
    pub fn is_truthy(&self) -> bool {
        !matches!(self, Value::Nil | Value::Bool(false))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Value::Nil)
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Nil => "nil",
            Value::Bool(_) => "boolean",
            Value::Number(_) => "number",
            Value::Str(_) => "string",
            Value::Function(_) => "function",
            Value::Table(_) => "table",
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_table(&self) -> Option<ObjRef> {
        match self {
            Value::Table(t) => Some(*t),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Primitive equality: no coercion, tables by identity, functions by
    /// label and (substituted) body.
    pub fn raw_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Nil, Value::Nil) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Number(a), Value::Number(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Table(a), Value::Table(b)) => a == b,
            (Value::Function(a), Value::Function(b)) => Arc::ptr_eq(a, b) || **a == **b,
            _ => false,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.raw_eq(other)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Number(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Positional(Expr),
    Keyed(Expr, Expr),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum Stmt {
    #[default]
    Skip,
    Break,
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    /// Run-time form of an unfolding loop.
    Iter {
        cond: Expr,
        body: Box<Stmt>,
    },
    Seq(Box<Stmt>, Box<Stmt>),
    /// `local x, ... = e, ... in s end`
    Local {
        names: Vec<Name>,
        exprs: Vec<Expr>,
        body: Box<Stmt>,
    },
    /// Targets are names, references or `e[e]` forms.
    Assign {
        targets: Vec<Expr>,
        exprs: Vec<Expr>,
    },
    Call {
        callee: Expr,
        args: Vec<Expr>,
        site: Site,
    },
    MethodCall {
        object: Expr,
        method: LuaStr,
        args: Vec<Expr>,
        site: Site,
    },
    Return(Vec<Expr>),
    Labeled {
        body: Box<Stmt>,
        label: Label,
        site: Site,
    },
    /// Placeholder used by evaluation contexts.
    Hole,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum Expr {
    Value(Value),
    Name(Name),
    Ref(Ref),
    VarArg,
    Index(Box<Expr>, Box<Expr>),
    Paren(Box<Expr>),
    Table(Vec<Field>),
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
        site: Site,
    },
    MethodCall {
        object: Box<Expr>,
        method: LuaStr,
        args: Vec<Expr>,
        site: Site,
    },
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Tuple(Vec<Expr>),
    BuiltIn(Service, Vec<Expr>),
    /// Labeled expression: error/fallback labels and ProtMd.
    Labeled {
        body: Box<Expr>,
        label: Label,
    },
    /// A statement running in expression position: a function body under
    /// Return, or a protected statement under ProtMd.
    Body {
        body: Box<Stmt>,
        label: Label,
        site: Site,
    },
    Err(Value),
    #[default]
    Hole,
}

impl Expr {
    pub fn nil() -> Expr {
        Expr::Value(Value::Nil)
    }

    pub fn num(n: f64) -> Expr {
        Expr::Value(Value::Number(n))
    }

    pub fn string(s: &str) -> Expr {
        Expr::Value(Value::str(s))
    }

    pub fn boolean(b: bool) -> Expr {
        Expr::Value(Value::Bool(b))
    }

    pub fn index(obj: Expr, key: Expr) -> Expr {
        Expr::Index(Box::new(obj), Box::new(key))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn unary(op: UnOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn call(callee: Expr, args: Vec<Expr>) -> Expr {
        Expr::Call {
            callee: Box::new(callee),
            args,
            site: Site::NONE,
        }
    }

    pub fn paren(e: Expr) -> Expr {
        Expr::Paren(Box::new(e))
    }

    pub fn labeled(body: Expr, label: Label) -> Expr {
        Expr::Labeled {
            body: Box::new(body),
            label,
        }
    }

    pub fn values(vs: impl IntoIterator<Item = Value>) -> Expr {
        Expr::Tuple(vs.into_iter().map(Expr::Value).collect())
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Expr::Value(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Expr::Value(_))
    }

    /// A tuple whose elements are all values.
    pub fn is_value_tuple(&self) -> bool {
        match self {
            Expr::Tuple(items) => items.iter().all(Expr::is_value),
            _ => false,
        }
    }

    /// Builds the error term raised by a failing operation.
    pub fn raise(message: String) -> Expr {
        Expr::BuiltIn(
            Service::Error,
            vec![
                Expr::Value(Value::bytes(message.as_bytes())),
                Expr::num(0.0),
            ],
        )
    }
}

impl Stmt {
    /// Right-nested sequence; empty input gives `;`.
    pub fn seq(stmts: Vec<Stmt>) -> Stmt {
        let mut iter = stmts.into_iter().rev();
        let Some(mut acc) = iter.next() else {
            return Stmt::Skip;
        };
        for s in iter {
            acc = Stmt::Seq(Box::new(s), Box::new(acc));
        }
        acc
    }

    pub fn labeled(body: Stmt, label: Label) -> Stmt {
        Stmt::Labeled {
            body: Box::new(body),
            label,
            site: Site::NONE,
        }
    }

    pub fn if_else(cond: Expr, then_branch: Stmt, else_branch: Stmt) -> Stmt {
        Stmt::If {
            cond,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        }
    }
}

/// Either syntactic category; the configuration term is one of these.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Stmt(Stmt),
    Expr(Expr),
}

impl Default for Term {
    fn default() -> Self {
        Term::Stmt(Stmt::Skip)
    }
}

impl From<Stmt> for Term {
    fn from(s: Stmt) -> Self {
        Term::Stmt(s)
    }
}

impl From<Expr> for Term {
    fn from(e: Expr) -> Self {
        Term::Expr(e)
    }
}

/// Truthiness of a value: everything but nil and false.
pub fn is_truthy(v: &Value) -> bool {
    v.is_truthy()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truthiness() {
        assert!(!is_truthy(&Value::Nil));
        assert!(!is_truthy(&Value::Bool(false)));
        assert!(is_truthy(&Value::Number(0.0)));
        assert!(is_truthy(&Value::str("")));
        assert!(is_truthy(&Value::Bool(true)));
    }

    #[test]
    fn control_labels_partition() {
        let control: Vec<_> = Label::ALL.iter().filter(|l| l.is_control()).collect();
        assert_eq!(control, [&Label::Break, &Label::Return, &Label::ProtMd]);
        assert_eq!(Label::ALL.len(), 12);
    }

    #[test]
    fn function_identity_follows_label() {
        let l0 = FunctionLabel::Source { chunk: 0, index: 0 };
        let l1 = FunctionLabel::Source { chunk: 0, index: 1 };
        let f = Value::function(FunctionDef::new(l0, vec![], false, Stmt::Skip));
        let g = Value::function(FunctionDef::new(l1, vec![], false, Stmt::Skip));
        let f2 = Value::function(FunctionDef::new(l0, vec![], false, Stmt::Skip));
        assert!(!f.raw_eq(&g));
        assert!(f.raw_eq(&f));
        assert!(f.raw_eq(&f2));
    }

    #[test]
    fn seq_nests_to_the_right() {
        let s = Stmt::seq(vec![Stmt::Break, Stmt::Skip, Stmt::Break]);
        let Stmt::Seq(head, tail) = s else { panic!() };
        assert_eq!(*head, Stmt::Break);
        assert!(matches!(*tail, Stmt::Seq(_, _)));
        assert_eq!(Stmt::seq(vec![]), Stmt::Skip);
    }
}
