use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use luasem::ast::{render_term, Printer, Style, Term, Value};
use luasem::batch::with_stack;
use luasem::machine::{error_text, load_program, Outcome, Step, DEFAULT_FUEL, MAIN_CHUNK};
use luasem::parser::{parse_chunk, SourceChunk};

const EXIT_ERRORED: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NO_ANSWER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "luasem",
    version,
    about = "Run Lua 5.2 programs by small-step reduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program and print its output.
    Run {
        file: PathBuf,
        /// Maximum number of reduction steps.
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Print every reduction step.
    Trace {
        file: PathBuf,
        /// Elide subterms nested deeper than this.
        #[arg(long)]
        max_print_depth: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Print the parsed term.
    Parse { file: PathBuf },
    /// Run a conformance corpus directory.
    Test { dir: PathBuf },
}

fn read(path: &Path) -> Result<Vec<u8>, ExitCode> {
    fs::read(path).map_err(|e| {
        eprintln!("luasem: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_PARSE)
    })
}

fn finish(outcome: &Outcome) -> ExitCode {
    match outcome {
        Outcome::Completed(_) => ExitCode::SUCCESS,
        Outcome::Errored(v) => {
            eprintln!("lua: {}", error_text(v));
            ExitCode::from(EXIT_ERRORED)
        }
        Outcome::FuelExhausted => {
            eprintln!("luasem: fuel exhausted");
            ExitCode::from(EXIT_NO_ANSWER)
        }
        Outcome::Stuck(why) => {
            eprintln!("luasem: stuck: {why}");
            ExitCode::from(EXIT_NO_ANSWER)
        }
    }
}

fn cmd_run(file: &Path, fuel: u64) -> ExitCode {
    let source = match read(file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let mut c = match load_program(&source) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("lua: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let outcome = c.run(fuel);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(&c.output);
    let _ = out.flush();
    finish(&outcome)
}

fn summarize<'a>(items: impl Iterator<Item = (String, &'a Value)>) -> String {
    items
        .map(|(k, v)| format!("{k}={}", luasem::ast::render_value(v, Style::Trace)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_trace(file: &Path, max_depth: Option<usize>, fuel: u64) -> ExitCode {
    let source = match read(file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let mut c = match load_program(&source) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("lua: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let env_ref = c.env.env_ref;
    let printer = || {
        let p = Printer::new(Style::Trace).env_ref(Some(env_ref));
        match max_depth {
            Some(d) => p.max_depth(d),
            None => p,
        }
    };
    let render = |t: &Term, p: Printer| p.term(t);
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "#0 {}", render(&c.term, printer()));
    let mut printed = 0;
    let mut k = 0u64;
    let outcome = loop {
        if k == fuel {
            break c.answer().unwrap_or(Outcome::FuelExhausted);
        }
        match c.step() {
            Step::Done(o) => break o,
            Step::Reduced(rule) => {
                k += 1;
                let p = printer();
                let _ = writeln!(out, "#{k} [{rule}] {}", render(&c.term, p));
                let refs = c.sigma.take_touched();
                let tables = c.theta.take_touched();
                let sigma = summarize(
                    refs.iter()
                        .filter_map(|r| c.sigma.read(*r).ok().map(|v| (format!("$r{}", r.0), v))),
                );
                let theta = tables
                    .iter()
                    .map(|t| format!("$t{}", t.0))
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = writeln!(
                    out,
                    "    σ: {} [{sigma}]  θ: {} [{theta}]",
                    c.sigma.len(),
                    c.theta.len()
                );
                if c.output.len() > printed {
                    let text = String::from_utf8_lossy(&c.output[printed..]);
                    for line in text.lines() {
                        let _ = writeln!(out, "    stdout: {line}");
                    }
                    printed = c.output.len();
                }
            }
        }
    };
    let _ = writeln!(out, "{outcome}");
    let _ = out.flush();
    finish(&outcome)
}

fn cmd_parse(file: &Path) -> ExitCode {
    let source = match read(file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match parse_chunk(&SourceChunk::new(source, MAIN_CHUNK)) {
        Ok(s) => {
            println!("{}", render_term(&Term::Stmt(s), Style::Trace));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lua: {e}");
            ExitCode::from(EXIT_PARSE)
        }
    }
}

fn cmd_test(dir: &Path) -> ExitCode {
    match luasem::corpus::run_corpus(dir) {
        Ok(report) => {
            print!("{}", report.render());
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("luasem: cannot read corpus {}: {e}", dir.display());
            ExitCode::from(EXIT_PARSE)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    with_stack(move || match &cli.command {
        Command::Run { file, fuel } => cmd_run(file, *fuel),
        Command::Trace {
            file,
            max_print_depth,
            fuel,
        } => cmd_trace(file, *max_print_depth, *fuel),
        Command::Parse { file } => cmd_parse(file),
        Command::Test { dir } => cmd_test(dir),
    })
}
