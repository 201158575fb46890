use luasem::machine::error_text;
use luasem::relations::Rule;
use luasem::{load_program, Outcome, Step};

/// Rule ids fired by `src`, and the outcome.
fn trace(src: &str) -> (Vec<String>, Outcome) {
    let mut c = load_program(src.as_bytes()).unwrap();
    let mut ids = Vec::new();
    for s in c.trace().take(100_000) {
        match s {
            Step::Reduced(r) => ids.push(r.id()),
            Step::Done(o) => return (ids, o),
        }
    }
    panic!("{src} did not finish");
}

#[test]
fn false_loop_unfolds_once_and_exits() {
    let (ids, o) = trace("while false do ; end");
    assert_eq!(ids, ["while.wrap", "iter.unfold", "if.else", "loop.exit"]);
    assert_eq!(o, Outcome::Completed(vec![]));
}

#[test]
fn two_empty_statements_take_one_step() {
    let (ids, o) = trace("; ;");
    assert_eq!(ids, ["seq.skip"]);
    assert_eq!(o, Outcome::Completed(vec![]));
}

#[test]
fn break_leaves_the_innermost_loop() {
    let (ids, _) = trace("while true do break end");
    assert_eq!(ids, ["while.wrap", "iter.unfold", "if.then", "break.exit"]);
}

#[test]
fn arithmetic_on_nil_goes_through_the_metatable_relation() {
    let (ids, o) = trace("return 1 + nil");
    assert_eq!(
        ids,
        ["arith.fail", "arith.error", "builtin.error", "error.abort"]
    );
    let Outcome::Errored(v) = o else {
        panic!("{o:?}")
    };
    assert_eq!(
        error_text(&v),
        "attempt to perform arithmetic on a nil value"
    );
}

#[test]
fn coercion_converts_and_computes_in_one_step() {
    let (ids, o) = trace("return '10' + 1");
    assert_eq!(ids, ["arith.coerce", "return.chunk"]);
    assert_eq!(
        o,
        Outcome::Completed(vec![luasem::ast::Value::Number(11.0)])
    );
}

#[test]
fn short_circuit_does_not_evaluate_the_right_operand() {
    let (ids, _) = trace("return false and undefined_global.x");
    assert_eq!(ids, ["and", "return.chunk"]);
    let (ids, _) = trace("return 1 or undefined_global.x");
    assert_eq!(ids, ["or", "return.chunk"]);
}

/// A table whose `__newindex` points at the next table, `n` tables long.
fn newindex_chain(n: usize) -> String {
    let mut src = format!("local t{n} = {{}}\n");
    for i in (1..n).rev() {
        src += &format!(
            "local t{i} = setmetatable({{}}, {{__newindex = t{}}})\n",
            i + 1
        );
    }
    src += &format!("t1.k = 1\nreturn rawget(t{n}, 'k'), rawget(t1, 'k')\n");
    src
}

#[test]
fn newindex_chains_resolve_in_linear_steps() {
    for n in 1..=8 {
        let src = newindex_chain(n);
        let (ids, o) = trace(&src);
        let first = ids.iter().position(|r| r == "field.update.fail");
        let last = ids.iter().position(|r| r == "newindex.raw");
        let steps = match (first, last) {
            (Some(a), Some(b)) => b - a + 1,
            // A single table takes the raw update directly.
            _ => ids.iter().filter(|r| *r == "field.update").count(),
        };
        assert!(steps <= 2 * n + 1, "n = {n}: {steps} steps\n{ids:?}");
        let Outcome::Completed(vs) = o else {
            panic!("{o:?}")
        };
        assert_eq!(vs[0], luasem::ast::Value::Number(1.0), "n = {n}");
        if n > 1 {
            assert_eq!(vs[1], luasem::ast::Value::Nil, "n = {n}");
        }
    }
}

#[test]
fn rule_ids_round_trip() {
    for r in Rule::NAMED {
        assert_eq!(Rule::from_id(&r.id()), Some(*r));
    }
    assert!(Rule::from_id("builtin.type").is_some());
    assert_eq!(Rule::from_id("no.such.rule"), None);
}

#[test]
fn each_step_fires_one_rule_and_counts_it() {
    let mut c = load_program(b"local x = 1 x = x + 1 return x").unwrap();
    let mut fired = 0;
    loop {
        match c.step() {
            Step::Reduced(_) => fired += 1,
            Step::Done(o) => {
                assert_eq!(o, Outcome::Completed(vec![luasem::ast::Value::Number(2.0)]));
                break;
            }
        }
        assert_eq!(c.steps(), fired);
    }
    // Stepping an answer is idempotent.
    assert!(matches!(c.step(), Step::Done(_)));
    assert_eq!(c.steps(), fired);
}
