use std::path::Path;
use std::process::{Command, Output};

fn luasem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_luasem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, file: &str, text: &str) -> String {
    let path = dir.join(file);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_prints_output_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ok.lua", "print('hello', 1 + 1)");
    let o = luasem(&["run", &f]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "hello\t2\n");
}

#[test]
fn uncaught_errors_exit_one_with_the_message() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "err.lua", "print('before')\nerror('x')");
    let o = luasem(&["run", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "before\n");
    assert_eq!(stderr(&o).trim_end(), "lua: input:2: x");
    let f = write(dir.path(), "err1.lua", "error('x')");
    assert_eq!(stderr(&luasem(&["run", &f])).trim_end(), "lua: input:1: x");
}

#[test]
fn syntax_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.lua", "(");
    let o = luasem(&["run", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("lua: "), "{}", stderr(&o));
    assert_eq!(luasem(&["parse", &f]).status.code(), Some(2));
    assert_eq!(
        luasem(&["run", "/nonexistent/file.lua"]).status.code(),
        Some(2)
    );
}

#[test]
fn running_out_of_fuel_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "loop.lua", "while true do end");
    let o = luasem(&["run", "--fuel", "500", &f]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("fuel"), "{}", stderr(&o));
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let src = "local t = {a = 1, b = 2, c = 3, 10, 20}\n\
               for k, v in pairs(t) do print(k, v) end\n\
               print(tostring(print) == tostring(print))";
    let f = write(dir.path(), "det.lua", src);
    let first = luasem(&["run", &f]);
    for _ in 0..3 {
        let again = luasem(&["run", &f]);
        assert_eq!(again.stdout, first.stdout);
        assert_eq!(again.status.code(), first.status.code());
    }
}

#[test]
fn test_reports_totals() {
    let dir = tempfile::tempdir().unwrap();
    let empty = luasem(&["test", dir.path().to_str().unwrap()]);
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(stdout(&empty), "0 cases\n");

    write(dir.path(), "g/one.lua", "print(1)");
    write(dir.path(), "g/one.expected", "1\n");
    let one = luasem(&["test", dir.path().to_str().unwrap()]);
    assert_eq!(one.status.code(), Some(0), "{}", stdout(&one));
    assert!(stdout(&one).ends_with("1/1 passed\n"), "{}", stdout(&one));

    write(dir.path(), "g/two.lua", "print(2)");
    write(dir.path(), "g/two.expected", "3\n");
    let two = luasem(&["test", dir.path().to_str().unwrap()]);
    assert_ne!(two.status.code(), Some(0));
    let out = stdout(&two);
    assert!(out.contains("FAIL g/two"), "{out}");
    assert!(out.ends_with("1/2 passed\n"), "{out}");
}

#[test]
fn expected_errors_pass_when_the_message_matches() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e/boom.lua", "print('a') error('boom')");
    write(dir.path(), "e/boom.expected", "a\n");
    write(dir.path(), "e/boom.err", "boom");
    let o = luasem(&["test", dir.path().to_str().unwrap()]);
    assert!(stdout(&o).ends_with("1/1 passed\n"), "{}", stdout(&o));
}

#[test]
fn trace_numbers_steps_and_names_rules() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "t.lua", "local x = 1 print(x)");
    let o = luasem(&["trace", &f]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("#0 "), "{out}");
    assert!(lines[1].starts_with("#1 [local] "), "{out}");
    assert!(lines[2].starts_with("    σ: "), "{out}");
    assert!(lines.contains(&"    stdout: 1"), "{out}");
    assert_eq!(*lines.last().unwrap(), "completed");
    let steps = lines.iter().filter(|l| l.starts_with('#')).count();
    assert!(steps > 2);
}

#[test]
fn trace_stops_at_the_fuel_limit() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "loop.lua", "while true do end");
    let o = luasem(&["trace", "--fuel", "5", &f]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("#5 ")), "{out}");
    assert!(!out.lines().any(|l| l.starts_with("#6 ")), "{out}");
}
