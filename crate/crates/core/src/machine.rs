//! The top-level step relation: decomposition, dispatch to the relations,
//! error propagation and protected mode.

use std::fmt;

use crate::ast::{name, substitute, Bindings, Expr, Label, Stmt, Term, Value, ENV, VARARG};
use crate::decompose::{
    control_focus, decompose, labels_on_path, node_at_mut, return_sites, Decomposed, Focus,
    NodeMut, NodeRef,
};
use crate::delta::{bootstrap_env, format_number, Environment, ServiceContext};
use crate::parser::{parse_chunk, ParseError, SourceChunk};
use crate::relations::{fired, reduce, Attempt, Rule, Stores};
use crate::store::{ObjectStore, ValueStore};

/// Default step budget of the command-line runner.
pub const DEFAULT_FUEL: u64 = 10_000_000;

/// Chunk name the command-line tools give the main program.
pub const MAIN_CHUNK: &str = "input";

/// Protected mode and program abort. The redex is the innermost ProtMd
/// term around the focus, or the whole program when there is none.
pub fn step_errors(redex: Term, is_root: bool) -> Attempt {
    let protected_error =
        |n: NodeRef<'_>| match control_focus(n, Focus::Error, |l| l != Label::ProtMd) {
            Some(NodeRef::Expr(Expr::Err(v))) => Some(v.clone()),
            _ => None,
        };
    match redex {
        Term::Expr(Expr::Labeled {
            body,
            label: Label::ProtMd,
        }) => {
            if let Expr::Value(v) = *body {
                return fired(Expr::values([Value::Bool(true), v]), Rule::ProtectedValues);
            }
            if let Expr::Tuple(items) = &*body {
                if body.is_value_tuple() {
                    let mut out = vec![Expr::boolean(true)];
                    out.extend(items.iter().cloned());
                    return fired(Expr::Tuple(out), Rule::ProtectedValues);
                }
            }
            match protected_error(NodeRef::Expr(&body)) {
                Some(v) => fired(Expr::values([Value::Bool(false), v]), Rule::ErrorProtected),
                None => Err(Term::Expr(Expr::labeled(*body, Label::ProtMd))),
            }
        }
        Term::Expr(Expr::Body {
            body,
            label: Label::ProtMd,
            site,
        }) => {
            if *body == Stmt::Skip {
                return fired(Expr::values([Value::Bool(true)]), Rule::ProtectedSkip);
            }
            match protected_error(NodeRef::Stmt(&body)) {
                Some(v) => fired(Expr::values([Value::Bool(false), v]), Rule::ErrorProtected),
                None => Err(Term::Expr(Expr::Body {
                    body,
                    label: Label::ProtMd,
                    site,
                })),
            }
        }
        t if is_root && !matches!(t, Term::Expr(Expr::Err(_))) => {
            let aborted = match control_focus(NodeRef::of(&t), Focus::Error, |l| l != Label::ProtMd)
            {
                Some(NodeRef::Expr(Expr::Err(v))) => Some(v.clone()),
                _ => None,
            };
            match aborted {
                Some(v) => fired(Expr::Err(v), Rule::ErrorAbort),
                None => Err(t),
            }
        }
        other => Err(other),
    }
}

/// Final state of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    /// The program finished; the values are those returned by the main
    /// chunk (or the value of an expression program).
    Completed(Vec<Value>),
    /// An uncaught error with its error value.
    Errored(Value),
    FuelExhausted,
    /// No rule applies to the unique redex.
    Stuck(String),
}

/// Result of one step.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Reduced(Rule),
    Done(Outcome),
}

/// σ, θ and the term, plus the bookkeeping the services need.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub sigma: ValueStore,
    pub theta: ObjectStore,
    pub term: Term,
    /// Everything `print` wrote so far.
    pub output: Vec<u8>,
    /// Display names of loaded chunks; entry 0 is the main program.
    pub chunk_names: Vec<String>,
    pub env: Environment,
    steps: u64,
}

/// Parses `source` as the main chunk and injects it.
/// A leading `#` line (shebang) is skipped, as the standalone interpreter
/// does for files; the newline stays so line numbers are unchanged.
pub fn load_program(source: &[u8]) -> Result<Configuration, ParseError> {
    let source = match source.first() {
        Some(b'#') => {
            let end = source
                .iter()
                .position(|b| *b == b'\n')
                .unwrap_or(source.len());
            &source[end..]
        }
        _ => source,
    };
    let chunk = parse_chunk(&SourceChunk::new(source, MAIN_CHUNK))?;
    Ok(inject(Term::Stmt(chunk)))
}

/// Runs `source` to an outcome with the given fuel.
pub fn run_source(source: &[u8], fuel: u64) -> Result<(Outcome, Configuration), ParseError> {
    let mut c = load_program(source)?;
    let outcome = c.run(fuel);
    Ok((outcome, c))
}

/// Bootstraps the stores and closes `program` over `_ENV` and the main
/// chunk's (empty) varargs.
pub fn inject(program: Term) -> Configuration {
    inject_named(program, MAIN_CHUNK)
}

pub fn inject_named(program: Term, chunk_name: &str) -> Configuration {
    let mut sigma = ValueStore::new();
    let mut theta = ObjectStore::new();
    let env = bootstrap_env(&mut sigma, &mut theta);
    let bindings = Bindings::new()
        .with(name(ENV), Expr::Ref(env.env_ref))
        .with(name(VARARG), Expr::Tuple(vec![]));
    let term = substitute(&program, &bindings);
    sigma.take_touched();
    theta.take_touched();
    Configuration {
        sigma,
        theta,
        term,
        output: Vec::new(),
        chunk_names: vec![chunk_name.to_string()],
        env,
        steps: 0,
    }
}

impl Configuration {
    /// Number of rules fired so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// The outcome if the term is an answer.
    pub fn answer(&self) -> Option<Outcome> {
        match &self.term {
            Term::Stmt(Stmt::Skip) => Some(Outcome::Completed(vec![])),
            Term::Expr(Expr::Value(v)) => Some(Outcome::Completed(vec![v.clone()])),
            Term::Expr(Expr::Err(v)) => Some(Outcome::Errored(v.clone())),
            Term::Expr(e @ Expr::Tuple(items)) if e.is_value_tuple() => Some(Outcome::Completed(
                items.iter().filter_map(|x| x.as_value().cloned()).collect(),
            )),
            _ => None,
        }
    }

    /// The path of the node the next rule rewrites, or the reason there
    /// is none.
    pub fn redex_path(&self) -> Result<Vec<usize>, Outcome> {
        if let Some(o) = self.answer() {
            return Err(o);
        }
        let d = match decompose(&self.term) {
            Decomposed::Split(d) => d,
            Decomposed::Stuck { context, reason } => {
                return Err(Outcome::Stuck(format!("{reason} at {:?}", context.path)))
            }
            Decomposed::Answer => unreachable!("answers are handled above"),
        };
        let path = d.context.path;
        let labels = labels_on_path(&self.term, &path);
        let cut = |depth: usize| path[..depth].to_vec();
        Ok(match d.focus {
            Focus::Redex => path,
            Focus::Break => match labels.last() {
                Some((depth, _)) => cut(*depth),
                None => return Err(Outcome::Stuck("break outside a loop".into())),
            },
            Focus::Return => labels.last().map(|(d, _)| cut(*d)).unwrap_or_default(),
            Focus::Error => labels
                .iter()
                .rev()
                .find(|(_, l)| *l == Label::ProtMd)
                .map(|(d, _)| cut(*d))
                .unwrap_or_default(),
        })
    }

    /// Fires exactly one rule, or reports the outcome. Afterwards the
    /// stores' touched lists hold what this step allocated or wrote.
    pub fn step(&mut self) -> Step {
        self.sigma.clear_touched();
        self.theta.clear_touched();
        let path = match self.redex_path() {
            Ok(p) => p,
            Err(o) => return Step::Done(o),
        };
        let sites = return_sites(&self.term, &path);
        let is_root = path.is_empty();
        let redex = if is_root {
            std::mem::take(&mut self.term)
        } else {
            match node_at_mut(&mut self.term, &path).expect("decomposed path exists") {
                NodeMut::Stmt(s) => Term::Stmt(std::mem::take(s)),
                NodeMut::Expr(e) => Term::Expr(std::mem::take(e)),
            }
        };
        let is_stmt = matches!(redex, Term::Stmt(_));
        let mut cx = ServiceContext {
            sites: &sites,
            chunk_names: &mut self.chunk_names,
            output: &mut self.output,
            globals: self.env.globals,
        };
        let stores = Stores {
            sigma: &mut self.sigma,
            theta: &mut self.theta,
        };
        let (result, rule) = match reduce(redex, stores, &mut cx, is_root) {
            Ok(r) => (r.term, Some(r.rule)),
            Err(t) => (t, None),
        };
        let stuck_text = rule
            .is_none()
            .then(|| crate::ast::render_term(&result, crate::ast::Style::Trace));
        if is_root {
            self.term = result;
        } else {
            let slot = node_at_mut(&mut self.term, &path).expect("decomposed path exists");
            match (slot, result) {
                (NodeMut::Stmt(s), Term::Stmt(r)) => *s = r,
                (NodeMut::Expr(e), Term::Expr(r)) => *e = r,
                (_, r) => {
                    return Step::Done(Outcome::Stuck(format!(
                        "rule {} changed the category of a {} redex: {r:?}",
                        rule.map(|r| r.id()).unwrap_or_default(),
                        if is_stmt { "statement" } else { "expression" }
                    )))
                }
            }
        }
        match rule {
            Some(rule) => {
                self.steps += 1;
                Step::Reduced(rule)
            }
            None => Step::Done(Outcome::Stuck(format!(
                "no rule applies to {}",
                stuck_text.unwrap_or_default()
            ))),
        }
    }

    /// Steps until an outcome or until `fuel` rules have fired.
    pub fn run(&mut self, fuel: u64) -> Outcome {
        for _ in 0..fuel {
            if let Step::Done(o) = self.step() {
                return o;
            }
        }
        self.answer().unwrap_or(Outcome::FuelExhausted)
    }

    /// Lazily steps the configuration, yielding each fired rule and
    /// finally the outcome.
    pub fn trace(&mut self) -> Trace<'_> {
        Trace {
            config: self,
            finished: false,
        }
    }

    pub fn output_text(&self) -> String {
        String::from_utf8_lossy(&self.output).into_owned()
    }
}

/// Iterator returned by [`Configuration::trace`].
pub struct Trace<'a> {
    config: &'a mut Configuration,
    finished: bool,
}

impl Trace<'_> {
    pub fn config(&self) -> &Configuration {
        self.config
    }
}

impl Iterator for Trace<'_> {
    type Item = Step;

    fn next(&mut self) -> Option<Step> {
        if self.finished {
            return None;
        }
        let s = self.config.step();
        if matches!(s, Step::Done(_)) {
            self.finished = true;
        }
        Some(s)
    }
}

/// How the standalone interpreter reports an uncaught error value.
pub fn error_text(v: &Value) -> String {
    match v {
        Value::Str(s) => String::from_utf8_lossy(s).into_owned(),
        Value::Number(n) => format_number(*n),
        other => format!("(error object is a {} value)", other.type_name()),
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Completed(_) => f.write_str("completed"),
            Outcome::Errored(v) => write!(f, "errored: {}", error_text(v)),
            Outcome::FuelExhausted => f.write_str("fuel exhausted"),
            Outcome::Stuck(why) => write!(f, "stuck: {why}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str) -> (Outcome, String) {
        let (o, c) = run_source(src.as_bytes(), 100_000).unwrap();
        (o, c.output_text())
    }

    #[test]
    fn empty_program_completes_at_once() {
        let mut c = load_program(b";").unwrap();
        assert_eq!(c.run(10), Outcome::Completed(vec![]));
        assert_eq!(c.steps(), 0);
    }

    #[test]
    fn divergence_exhausts_fuel() {
        let mut c = load_program(b"while true do ; end").unwrap();
        assert_eq!(c.run(100), Outcome::FuelExhausted);
    }

    #[test]
    fn protected_forms() {
        let skip = Expr::Body {
            body: Box::new(Stmt::Skip),
            label: Label::ProtMd,
            site: crate::ast::Site::NONE,
        };
        let r = step_errors(Term::Expr(skip), false).unwrap();
        assert_eq!(r.term, Term::Expr(Expr::values([Value::Bool(true)])));

        let boom = Expr::labeled(Expr::Err(Value::str("boom")), Label::ProtMd);
        let r = step_errors(Term::Expr(boom), false).unwrap();
        assert_eq!(
            r.term,
            Term::Expr(Expr::values([Value::Bool(false), Value::str("boom")]))
        );
    }

    #[test]
    fn printing_and_errors() {
        assert_eq!(run("print(1, 'a', nil)").1, "1\ta\tnil\n");
        let (o, _) = run("error('x')");
        assert_eq!(o, Outcome::Errored(Value::str("input:1: x")));
        let (o, out) = run("print(pcall(error, 'x'))");
        assert_eq!(o, Outcome::Completed(vec![]));
        assert_eq!(out, "false\tx\n");
    }

    #[test]
    fn chunk_return_values() {
        let (o, _) = run("local x = 2 return x, x + 1");
        assert_eq!(
            o,
            Outcome::Completed(vec![Value::Number(2.0), Value::Number(3.0)])
        );
    }
}
