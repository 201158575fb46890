//! Conformance corpus: discovery, execution and reporting.
//!
//! Layout: `<dir>/<group>/<name>.lua` with the exact expected standard
//! output in `<name>.expected`. A `<name>.err` file marks a case that must
//! end in an uncaught error whose message contains the file's text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::machine::{error_text, Outcome, DEFAULT_FUEL};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpectedOutcome {
    Completed,
    Errored,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    /// Directory name under the corpus root, empty for top-level files.
    pub group: String,
    pub name: String,
    pub source_path: PathBuf,
    pub expected_stdout_path: PathBuf,
    pub expected_outcome: ExpectedOutcome,
    pub expected_error_substring: Option<String>,
}

impl TestCase {
    pub fn id(&self) -> String {
        if self.group.is_empty() {
            self.name.clone()
        } else {
            format!("{}/{}", self.group, self.name)
        }
    }
}

fn case_for(group: &str, source: &Path) -> io::Result<TestCase> {
    let name = source
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let err_path = source.with_extension("err");
    let expected_error_substring = match fs::read_to_string(&err_path) {
        Ok(text) => Some(text.trim_end_matches(['\n', '\r']).to_string()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => None,
        Err(e) => return Err(e),
    };
    Ok(TestCase {
        group: group.to_string(),
        name,
        source_path: source.to_path_buf(),
        expected_stdout_path: source.with_extension("expected"),
        expected_outcome: if expected_error_substring.is_some() {
            ExpectedOutcome::Errored
        } else {
            ExpectedOutcome::Completed
        },
        expected_error_substring,
    })
}

fn lua_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "lua") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every case under `root`, sorted by group then name.
pub fn discover(root: &Path) -> io::Result<Vec<TestCase>> {
    let mut cases = Vec::new();
    for file in lua_files(root)? {
        cases.push(case_for("", &file)?);
    }
    let mut groups = Vec::new();
    for entry in fs::read_dir(root)? {
        let path = entry?.path();
        if path.is_dir() {
            groups.push(path);
        }
    }
    groups.sort();
    for dir in groups {
        let group = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for file in lua_files(&dir)? {
            cases.push(case_for(&group, &file)?);
        }
    }
    Ok(cases)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub id: String,
    pub group: String,
    /// `None` on success, else what went wrong.
    pub failure: Option<String>,
    pub steps: u64,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs one case and compares its output and outcome.
pub fn run_case(case: &TestCase, fuel: u64) -> CaseResult {
    let result = |failure: Option<String>, steps| CaseResult {
        id: case.id(),
        group: case.group.clone(),
        failure,
        steps,
    };
    let source = match fs::read(&case.source_path) {
        Ok(s) => s,
        Err(e) => return result(Some(format!("cannot read source: {e}")), 0),
    };
    let expected = match fs::read(&case.expected_stdout_path) {
        Ok(s) => s,
        Err(e) => return result(Some(format!("cannot read expected output: {e}")), 0),
    };
    let run = match crate::batch::run_one(&source, fuel) {
        Ok(r) => r,
        Err(e) => return result(Some(format!("parse error: {e}")), 0),
    };
    let outcome_problem = match (&run.outcome, case.expected_outcome) {
        (Outcome::Completed(_), ExpectedOutcome::Completed) => None,
        (Outcome::Errored(v), ExpectedOutcome::Errored) => {
            let text = error_text(v);
            match &case.expected_error_substring {
                Some(sub) if !text.contains(sub.as_str()) => {
                    Some(format!("error {text:?} does not contain {sub:?}"))
                }
                _ => None,
            }
        }
        (o, want) => Some(format!("expected {want:?}, got {o}")),
    };
    let failure = outcome_problem.or_else(|| {
        (run.output != expected).then(|| {
            format!(
                "stdout differs: expected {:?}, got {:?}",
                String::from_utf8_lossy(&expected),
                String::from_utf8_lossy(&run.output)
            )
        })
    });
    result(failure, run.steps)
}

/// Results of a corpus run, sorted by case id.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Report {
    pub results: Vec<CaseResult>,
}

impl Report {
    pub fn total(&self) -> usize {
        self.results.len()
    }

    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.total()
    }

    /// `(passed, total)` per group.
    pub fn by_group(&self) -> BTreeMap<&str, (usize, usize)> {
        let mut out: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for r in &self.results {
            let e = out.entry(r.group.as_str()).or_default();
            e.1 += 1;
            if r.passed() {
                e.0 += 1;
            }
        }
        out
    }

    /// Per-case lines, a per-group summary and the total.
    pub fn render(&self) -> String {
        if self.results.is_empty() {
            return "0 cases\n".to_string();
        }
        let mut s = String::new();
        for r in &self.results {
            match &r.failure {
                None => writeln!(s, "PASS {} ({} steps)", r.id, r.steps),
                Some(why) => writeln!(s, "FAIL {}: {why}", r.id),
            }
            .expect("write to string");
        }
        s.push('\n');
        for (group, (p, t)) in self.by_group() {
            let group = if group.is_empty() {
                "(top level)"
            } else {
                group
            };
            writeln!(s, "{group:<12} {p}/{t}").expect("write to string");
        }
        writeln!(s, "{}/{} passed", self.passed(), self.total()).expect("write to string");
        s
    }
}

/// Runs every case with the given fuel, in parallel when enabled.
pub fn run_cases(cases: &[TestCase], fuel: u64) -> Report {
    let mut results = crate::batch::map(cases, |c| run_case(c, fuel));
    results.sort_by(|a, b| a.id.cmp(&b.id));
    Report { results }
}

/// Discovers and runs the corpus under `root`.
pub fn run_corpus(root: &Path) -> io::Result<Report> {
    Ok(run_cases(&discover(root)?, DEFAULT_FUEL))
}
