//! Evaluation contexts: unique decomposition of a term into a context and
//! its next redex, and plugging a term back into a context.
//!
//! A context is represented by the path of child indices from the root to
//! its hole. Children are numbered per constructor:
//!
//! * `if`: guard 0, branches 1 and 2; `while`/`$iter`: guard 0, body 1
//! * sequence: head 0, tail 1; labeled term: body 0
//! * `local`: right-hand sides `0..n`, then the body
//! * assignment: targets first, then right-hand sides
//! * calls: callee (or receiver) 0, then arguments
//! * index: object 0, key 1; binary: left 0, right 1; unary 0
//! * table constructors: field components flattened left to right
//! * tuples and `$builtIn`: elements in order

use crate::ast::{Expr, Field, Label, Site, Stmt, Term};

/// Borrowed view of a subterm of either category.
#[derive(Clone, Copy, Debug)]
pub enum NodeRef<'a> {
    Stmt(&'a Stmt),
    Expr(&'a Expr),
}

/// Mutable view of a subterm of either category.
#[derive(Debug)]
pub enum NodeMut<'a> {
    Stmt(&'a mut Stmt),
    Expr(&'a mut Expr),
}

impl<'a> NodeRef<'a> {
    pub fn of(t: &'a Term) -> Self {
        match t {
            Term::Stmt(s) => NodeRef::Stmt(s),
            Term::Expr(e) => NodeRef::Expr(e),
        }
    }

    pub fn children(self) -> Vec<NodeRef<'a>> {
        use NodeRef as N;
        match self {
            N::Stmt(s) => match s {
                Stmt::Skip | Stmt::Break | Stmt::Hole => vec![],
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => vec![N::Expr(cond), N::Stmt(then_branch), N::Stmt(else_branch)],
                Stmt::While { cond, body } | Stmt::Iter { cond, body } => {
                    vec![N::Expr(cond), N::Stmt(body)]
                }
                Stmt::Seq(a, b) => vec![N::Stmt(a), N::Stmt(b)],
                Stmt::Local { exprs, body, .. } => exprs
                    .iter()
                    .map(N::Expr)
                    .chain(std::iter::once(N::Stmt(body)))
                    .collect(),
                Stmt::Assign { targets, exprs } => {
                    targets.iter().chain(exprs.iter()).map(N::Expr).collect()
                }
                Stmt::Call { callee, args, .. } => std::iter::once(callee)
                    .chain(args.iter())
                    .map(N::Expr)
                    .collect(),
                Stmt::MethodCall { object, args, .. } => std::iter::once(object)
                    .chain(args.iter())
                    .map(N::Expr)
                    .collect(),
                Stmt::Return(exprs) => exprs.iter().map(N::Expr).collect(),
                Stmt::Labeled { body, .. } => vec![N::Stmt(body)],
            },
            N::Expr(e) => match e {
                Expr::Value(_)
                | Expr::Name(_)
                | Expr::Ref(_)
                | Expr::VarArg
                | Expr::Err(_)
                | Expr::Hole => vec![],
                Expr::Index(o, k) => vec![N::Expr(o), N::Expr(k)],
                Expr::Paren(x) | Expr::Unary(_, x) | Expr::Labeled { body: x, .. } => {
                    vec![N::Expr(x)]
                }
                Expr::Table(fields) => fields
                    .iter()
                    .flat_map(|f| match f {
                        Field::Positional(v) => vec![N::Expr(v)],
                        Field::Keyed(k, v) => vec![N::Expr(k), N::Expr(v)],
                    })
                    .collect(),
                Expr::Call { callee, args, .. } => std::iter::once(&**callee)
                    .chain(args.iter())
                    .map(N::Expr)
                    .collect(),
                Expr::MethodCall { object, args, .. } => std::iter::once(&**object)
                    .chain(args.iter())
                    .map(N::Expr)
                    .collect(),
                Expr::Binary(_, l, r) => vec![N::Expr(l), N::Expr(r)],
                Expr::Tuple(items) | Expr::BuiltIn(_, items) => items.iter().map(N::Expr).collect(),
                Expr::Body { body, .. } => vec![N::Stmt(body)],
            },
        }
    }

    pub fn child(self, i: usize) -> Option<NodeRef<'a>> {
        self.children().into_iter().nth(i)
    }

    pub fn label(self) -> Option<Label> {
        match self {
            NodeRef::Stmt(Stmt::Labeled { label, .. }) => Some(*label),
            NodeRef::Expr(Expr::Labeled { label, .. } | Expr::Body { label, .. }) => Some(*label),
            _ => None,
        }
    }

    /// Call site recorded on a Return frame.
    fn return_site(self) -> Option<Site> {
        match self {
            NodeRef::Stmt(Stmt::Labeled {
                label: Label::Return,
                site,
                ..
            })
            | NodeRef::Expr(Expr::Body {
                label: Label::Return,
                site,
                ..
            }) => Some(*site),
            _ => None,
        }
    }

    pub fn to_term(self) -> Term {
        match self {
            NodeRef::Stmt(s) => Term::Stmt(s.clone()),
            NodeRef::Expr(e) => Term::Expr(e.clone()),
        }
    }
}

impl<'a> NodeMut<'a> {
    pub fn of(t: &'a mut Term) -> Self {
        match t {
            Term::Stmt(s) => NodeMut::Stmt(s),
            Term::Expr(e) => NodeMut::Expr(e),
        }
    }

    pub fn as_ref(&self) -> NodeRef<'_> {
        match self {
            NodeMut::Stmt(s) => NodeRef::Stmt(s),
            NodeMut::Expr(e) => NodeRef::Expr(e),
        }
    }

    pub fn children(self) -> Vec<NodeMut<'a>> {
        use NodeMut as N;
        match self {
            N::Stmt(s) => match s {
                Stmt::Skip | Stmt::Break | Stmt::Hole => vec![],
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => vec![N::Expr(cond), N::Stmt(then_branch), N::Stmt(else_branch)],
                Stmt::While { cond, body } | Stmt::Iter { cond, body } => {
                    vec![N::Expr(cond), N::Stmt(body)]
                }
                Stmt::Seq(a, b) => vec![N::Stmt(a), N::Stmt(b)],
                Stmt::Local { exprs, body, .. } => exprs
                    .iter_mut()
                    .map(N::Expr)
                    .chain(std::iter::once(N::Stmt(body)))
                    .collect(),
                Stmt::Assign { targets, exprs } => targets
                    .iter_mut()
                    .chain(exprs.iter_mut())
                    .map(N::Expr)
                    .collect(),
                Stmt::Call { callee, args, .. } => std::iter::once(callee)
                    .chain(args.iter_mut())
                    .map(N::Expr)
                    .collect(),
                Stmt::MethodCall { object, args, .. } => std::iter::once(object)
                    .chain(args.iter_mut())
                    .map(N::Expr)
                    .collect(),
                Stmt::Return(exprs) => exprs.iter_mut().map(N::Expr).collect(),
                Stmt::Labeled { body, .. } => vec![N::Stmt(body)],
            },
            N::Expr(e) => match e {
                Expr::Value(_)
                | Expr::Name(_)
                | Expr::Ref(_)
                | Expr::VarArg
                | Expr::Err(_)
                | Expr::Hole => vec![],
                Expr::Index(o, k) => vec![N::Expr(o), N::Expr(k)],
                Expr::Paren(x) | Expr::Unary(_, x) | Expr::Labeled { body: x, .. } => {
                    vec![N::Expr(x)]
                }
                Expr::Table(fields) => fields
                    .iter_mut()
                    .flat_map(|f| match f {
                        Field::Positional(v) => vec![N::Expr(v)],
                        Field::Keyed(k, v) => vec![N::Expr(k), N::Expr(v)],
                    })
                    .collect(),
                Expr::Call { callee, args, .. } => std::iter::once(&mut **callee)
                    .chain(args.iter_mut())
                    .map(N::Expr)
                    .collect(),
                Expr::MethodCall { object, args, .. } => std::iter::once(&mut **object)
                    .chain(args.iter_mut())
                    .map(N::Expr)
                    .collect(),
                Expr::Binary(_, l, r) => vec![N::Expr(l), N::Expr(r)],
                Expr::Tuple(items) | Expr::BuiltIn(_, items) => {
                    items.iter_mut().map(N::Expr).collect()
                }
                Expr::Body { body, .. } => vec![N::Stmt(body)],
            },
        }
    }

    pub fn child(self, i: usize) -> Option<NodeMut<'a>> {
        self.children().into_iter().nth(i)
    }
}

pub fn node_at<'a>(t: &'a Term, path: &[usize]) -> Option<NodeRef<'a>> {
    let mut n = NodeRef::of(t);
    for &i in path {
        n = n.child(i)?;
    }
    Some(n)
}

pub fn node_at_mut<'a>(t: &'a mut Term, path: &[usize]) -> Option<NodeMut<'a>> {
    let mut n = NodeMut::of(t);
    for &i in path {
        n = n.child(i)?;
    }
    Some(n)
}

/// How a child position is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    /// Needs one value; a value tuple here is truncated by the parent.
    Single,
    /// Element of an expression list; the final element's tuple splices.
    Item {
        last: bool,
    },
    /// Parenthesized or protected body: values and value tuples both count
    /// as finished.
    Raw,
    Stmt,
    /// Assignment target: finished as a reference or `v[v]`.
    LValue,
}

/// Kind of non-local focus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Focus {
    /// The subterm at the hole is itself the redex.
    Redex,
    /// `break`, whose rule fires at the innermost label.
    Break,
    /// `return <v, ...>`, likewise.
    Return,
    /// `$err v`, whose rule fires at the innermost ProtMd label (or aborts).
    Error,
}

enum After {
    Redex,
    Done,
    Focus(Focus),
}

enum Plan {
    Done,
    Focus(Focus),
    Redex,
    Stuck(String),
    Eval(Vec<(usize, Slot)>, After),
}

fn items(offset: usize, n: usize) -> impl Iterator<Item = (usize, Slot)> {
    (0..n).map(move |i| (offset + i, Slot::Item { last: i + 1 == n }))
}

fn plan(n: NodeRef<'_>, lvalue: bool) -> Plan {
    match n {
        NodeRef::Stmt(s) => match s {
            Stmt::Skip => Plan::Done,
            Stmt::Break => Plan::Focus(Focus::Break),
            Stmt::Hole => Plan::Stuck("hole in statement position".into()),
            Stmt::If { .. } => Plan::Eval(vec![(0, Slot::Single)], After::Redex),
            Stmt::While { .. } | Stmt::Iter { .. } => Plan::Redex,
            Stmt::Seq(..) => Plan::Eval(vec![(0, Slot::Stmt)], After::Redex),
            Stmt::Local { exprs, .. } => Plan::Eval(items(0, exprs.len()).collect(), After::Redex),
            Stmt::Assign { targets, exprs } => Plan::Eval(
                (0..targets.len())
                    .map(|i| (i, Slot::LValue))
                    .chain(items(targets.len(), exprs.len()))
                    .collect(),
                After::Redex,
            ),
            Stmt::Call { args, .. } => Plan::Eval(
                std::iter::once((0, Slot::Single))
                    .chain(items(1, args.len()))
                    .collect(),
                After::Redex,
            ),
            Stmt::MethodCall { .. } => Plan::Eval(vec![(0, Slot::Single)], After::Redex),
            Stmt::Return(exprs) => {
                Plan::Eval(items(0, exprs.len()).collect(), After::Focus(Focus::Return))
            }
            Stmt::Labeled { label, .. } if label.is_control() => {
                Plan::Eval(vec![(0, Slot::Stmt)], After::Redex)
            }
            Stmt::Labeled { .. } => Plan::Redex,
        },
        NodeRef::Expr(e) => match e {
            Expr::Value(_) => Plan::Done,
            Expr::Name(x) => Plan::Stuck(format!("free variable {x}")),
            Expr::VarArg => Plan::Stuck("unbound '...'".into()),
            Expr::Hole => Plan::Stuck("hole in expression position".into()),
            Expr::Ref(_) => Plan::Redex,
            Expr::Err(_) => Plan::Focus(Focus::Error),
            Expr::Index(..) => Plan::Eval(
                vec![(0, Slot::Single), (1, Slot::Single)],
                if lvalue { After::Done } else { After::Redex },
            ),
            Expr::Paren(_) => Plan::Eval(vec![(0, Slot::Raw)], After::Redex),
            Expr::Table(fields) => {
                let mut slots = Vec::new();
                let mut i = 0;
                for (fi, f) in fields.iter().enumerate() {
                    match f {
                        Field::Positional(_) => {
                            slots.push((
                                i,
                                Slot::Item {
                                    last: fi + 1 == fields.len(),
                                },
                            ));
                            i += 1;
                        }
                        Field::Keyed(..) => {
                            slots.push((i, Slot::Single));
                            slots.push((i + 1, Slot::Single));
                            i += 2;
                        }
                    }
                }
                Plan::Eval(slots, After::Redex)
            }
            Expr::Call { args, .. } => Plan::Eval(
                std::iter::once((0, Slot::Single))
                    .chain(items(1, args.len()))
                    .collect(),
                After::Redex,
            ),
            Expr::MethodCall { .. } => Plan::Eval(vec![(0, Slot::Single)], After::Redex),
            Expr::Binary(crate::ast::BinOp::And | crate::ast::BinOp::Or, ..) => {
                Plan::Eval(vec![(0, Slot::Single)], After::Redex)
            }
            Expr::Binary(..) => {
                Plan::Eval(vec![(0, Slot::Single), (1, Slot::Single)], After::Redex)
            }
            Expr::Unary(..) => Plan::Eval(vec![(0, Slot::Single)], After::Redex),
            Expr::Tuple(xs) => Plan::Eval(items(0, xs.len()).collect(), After::Done),
            Expr::BuiltIn(_, xs) => Plan::Eval(items(0, xs.len()).collect(), After::Redex),
            Expr::Labeled { label, .. } if label.is_control() => {
                Plan::Eval(vec![(0, Slot::Raw)], After::Redex)
            }
            Expr::Labeled { .. } => Plan::Redex,
            Expr::Body { .. } => Plan::Eval(vec![(0, Slot::Stmt)], After::Redex),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SlotState {
    Done,
    /// A value tuple that the parent must truncate or splice.
    Parent,
    Descend,
}

fn slot_state(child: NodeRef<'_>, slot: Slot) -> SlotState {
    match (slot, child) {
        (Slot::Stmt, NodeRef::Stmt(Stmt::Skip)) => SlotState::Done,
        (Slot::Stmt, _) => SlotState::Descend,
        (_, NodeRef::Stmt(_)) => SlotState::Descend,
        (Slot::LValue, NodeRef::Expr(e)) => match e {
            Expr::Ref(_) => SlotState::Done,
            Expr::Index(o, k) if o.is_value() && k.is_value() => SlotState::Done,
            _ => SlotState::Descend,
        },
        (Slot::Raw, NodeRef::Expr(e)) => {
            if e.is_value() || e.is_value_tuple() {
                SlotState::Done
            } else {
                SlotState::Descend
            }
        }
        (Slot::Single | Slot::Item { .. }, NodeRef::Expr(e)) => {
            if e.is_value() {
                SlotState::Done
            } else if e.is_value_tuple() {
                SlotState::Parent
            } else {
                SlotState::Descend
            }
        }
    }
}

/// The first unfinished child of `n` when it is a value tuple awaiting
/// normalization: `(index, splice)` where `splice` is true for the final
/// element of a list.
pub(crate) fn pending_tuple(n: NodeRef<'_>) -> Option<(usize, bool)> {
    let Plan::Eval(slots, _) = plan(n, false) else {
        return None;
    };
    let children = n.children();
    for (i, slot) in slots {
        match slot_state(children[i], slot) {
            SlotState::Done => continue,
            SlotState::Parent => return Some((i, slot == Slot::Item { last: true })),
            SlotState::Descend => return None,
        }
    }
    None
}

/// A context: the path from the root to the hole.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Context {
    pub path: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub context: Context,
    pub focus: Focus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposed {
    /// `;`, a value, a value tuple, or `$err v` at the root.
    Answer,
    Split(Decomposition),
    /// The unique candidate position has no applicable form.
    Stuck {
        context: Context,
        reason: String,
    },
}

/// Whether a root term is an answer.
pub fn is_answer(t: &Term) -> bool {
    match t {
        Term::Stmt(s) => *s == Stmt::Skip,
        Term::Expr(e) => e.is_value() || e.is_value_tuple() || matches!(e, Expr::Err(_)),
    }
}

/// Finds the unique evaluation context and focus of a term.
pub fn decompose(t: &Term) -> Decomposed {
    if is_answer(t) {
        return Decomposed::Answer;
    }
    decompose_node(NodeRef::of(t))
}

/// Decomposition of a subterm as if it were the whole term (a finished
/// subterm is reported as stuck).
pub fn decompose_node(start: NodeRef<'_>) -> Decomposed {
    let mut node = start;
    let mut path = Vec::new();
    let mut lvalue = false;
    'descend: loop {
        let split = |path: Vec<usize>, focus| {
            Decomposed::Split(Decomposition {
                context: Context { path },
                focus,
            })
        };
        match plan(node, lvalue) {
            Plan::Done => {
                return Decomposed::Stuck {
                    context: Context { path },
                    reason: "finished subterm in unfinished position".into(),
                }
            }
            Plan::Stuck(reason) => {
                return Decomposed::Stuck {
                    context: Context { path },
                    reason,
                }
            }
            Plan::Focus(f) => return split(path, f),
            Plan::Redex => return split(path, Focus::Redex),
            Plan::Eval(slots, after) => {
                let children = node.children();
                for (i, slot) in slots {
                    match slot_state(children[i], slot) {
                        SlotState::Done => continue,
                        SlotState::Parent => return split(path, Focus::Redex),
                        SlotState::Descend => {
                            path.push(i);
                            node = children[i];
                            lvalue = slot == Slot::LValue;
                            continue 'descend;
                        }
                    }
                }
                return match after {
                    After::Redex => split(path, Focus::Redex),
                    After::Focus(f) => split(path, f),
                    After::Done => Decomposed::Stuck {
                        context: Context { path },
                        reason: "finished subterm in unfinished position".into(),
                    },
                };
            }
        }
    }
}

/// Labeled ancestors of the hole, outermost first: `(depth, label)` where
/// `depth` is the length of the path to the labeled node.
pub fn labels_on_path(t: &Term, path: &[usize]) -> Vec<(usize, Label)> {
    labels_below(NodeRef::of(t), path)
}

/// Like [`labels_on_path`], starting from any node.
pub fn labels_below(start: NodeRef<'_>, path: &[usize]) -> Vec<(usize, Label)> {
    let mut out = Vec::new();
    let mut n = start;
    for (depth, &i) in path.iter().enumerate() {
        if let Some(l) = n.label() {
            out.push((depth, l));
        }
        match n.child(i) {
            Some(c) => n = c,
            None => break,
        }
    }
    out
}

/// The innermost labeled ancestor of the hole.
pub fn innermost_label(t: &Term, path: &[usize]) -> Option<(usize, Label)> {
    labels_on_path(t, path).pop()
}

/// Whether the hole sits directly (with no other label in between) under a
/// term labeled `label`. This is the E_lf / E_np side condition of the
/// break, return and error rules.
pub fn innermost_label_context(t: &Term, path: &[usize], label: Label) -> bool {
    match label {
        Label::ProtMd => labels_on_path(t, path)
            .iter()
            .any(|(_, l)| *l == Label::ProtMd),
        _ => innermost_label(t, path).is_some_and(|(_, l)| l == label),
    }
}

/// Path and focus of the next redex inside `n`, for the control rules that
/// look through a labeled term's body.
pub fn focus_within(n: NodeRef<'_>) -> Option<(Vec<usize>, Focus)> {
    match decompose_node(n) {
        Decomposed::Split(d) => Some((d.context.path, d.focus)),
        _ => None,
    }
}

/// The value carried by a `break`, `return` or `$err` focus reached from
/// `n` with no labeled term (other than ones `allowed` accepts) in between.
pub fn control_focus(
    n: NodeRef<'_>,
    focus: Focus,
    allowed: impl Fn(Label) -> bool,
) -> Option<NodeRef<'_>> {
    let (path, f) = focus_within(n)?;
    if f != focus || labels_below(n, &path).iter().any(|(_, l)| !allowed(*l)) {
        return None;
    }
    let mut node = n;
    for &i in &path {
        node = node.child(i)?;
    }
    Some(node)
}

/// Call sites of the Return frames around the hole, innermost first.
pub fn return_sites(t: &Term, path: &[usize]) -> Vec<Site> {
    let mut out = Vec::new();
    let mut n = NodeRef::of(t);
    for &i in path {
        if let Some(site) = n.return_site() {
            out.push(site);
        }
        match n.child(i) {
            Some(c) => n = c,
            None => break,
        }
    }
    out.reverse();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlugError {
    #[error("context path does not exist in the skeleton")]
    BadPath,
    #[error("hole expects a {expected}, got a {got}")]
    Category {
        expected: &'static str,
        got: &'static str,
    },
}

/// A context with its skeleton: the original term with a hole at `path`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub skeleton: Term,
    pub context: Context,
}

/// Splits `t` at `ctx`, returning the skeleton (with a hole) and the
/// subterm that was in the hole.
pub fn split(mut t: Term, ctx: &Context) -> Result<(Frame, Term), PlugError> {
    let sub = match node_at_mut(&mut t, &ctx.path).ok_or(PlugError::BadPath)? {
        NodeMut::Stmt(s) => Term::Stmt(std::mem::replace(s, Stmt::Hole)),
        NodeMut::Expr(e) => Term::Expr(std::mem::replace(e, Expr::Hole)),
    };
    Ok((
        Frame {
            skeleton: t,
            context: ctx.clone(),
        },
        sub,
    ))
}

/// Fills the hole of a frame.
pub fn plug(frame: Frame, t: Term) -> Result<Term, PlugError> {
    let Frame {
        mut skeleton,
        context,
    } = frame;
    let slot = node_at_mut(&mut skeleton, &context.path).ok_or(PlugError::BadPath)?;
    match (slot, t) {
        (NodeMut::Stmt(s), Term::Stmt(x)) => *s = x,
        (NodeMut::Expr(e), Term::Expr(x)) => *e = x,
        (NodeMut::Stmt(_), Term::Expr(_)) => {
            return Err(PlugError::Category {
                expected: "statement",
                got: "expression",
            })
        }
        (NodeMut::Expr(_), Term::Stmt(_)) => {
            return Err(PlugError::Category {
                expected: "expression",
                got: "statement",
            })
        }
    }
    Ok(skeleton)
}
