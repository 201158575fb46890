//! Running many independent configurations.
//!
//! Each job owns its configuration, so jobs never share state. With the
//! `parallel` feature the jobs run on a rayon pool; without it, in order on
//! the calling thread. Results come back in input order either way.

use crate::machine::{run_source, Outcome};
use crate::parser::ParseError;

/// Stack size for threads that run the machine. Terms are trees and the
/// term walkers recurse, so deep recursion in a program needs deep stacks.
pub const STACK_SIZE: usize = 512 << 20;

/// What one program did.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub output: Vec<u8>,
    pub steps: u64,
}

/// Runs `f` on a fresh thread with a [`STACK_SIZE`] stack.
pub fn with_stack<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK_SIZE)
            .spawn_scoped(s, f)
            .expect("spawn machine thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

pub fn map_sequential<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    with_stack(|| items.iter().map(&f).collect())
}

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    static POOL: std::sync::OnceLock<rayon::ThreadPool> = std::sync::OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .stack_size(STACK_SIZE)
            .thread_name(|i| format!("luasem-{i}"))
            .build()
            .expect("build thread pool")
    })
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    use rayon::prelude::*;
    pool().install(|| items.par_iter().map(&f).collect())
}

/// [`map_parallel`] when the `parallel` feature is on, else
/// [`map_sequential`].
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        map_parallel(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

/// Parses and runs one program.
pub fn run_one(source: &[u8], fuel: u64) -> Result<RunResult, ParseError> {
    let (outcome, c) = run_source(source, fuel)?;
    Ok(RunResult {
        outcome,
        steps: c.steps(),
        output: c.output,
    })
}

/// Runs every program with the same fuel.
pub fn run_all<S: AsRef<[u8]> + Sync>(
    sources: &[S],
    fuel: u64,
) -> Vec<Result<RunResult, ParseError>> {
    map(sources, |s| run_one(s.as_ref(), fuel))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_default_agree() {
        let sources: Vec<String> = (0..8)
            .map(|i| format!("local s = 0 for j = 1, {i} do s = s + j end print(s)"))
            .collect();
        let seq = map_sequential(&sources, |s| run_one(s.as_bytes(), 100_000));
        assert_eq!(seq, run_all(&sources, 100_000));
        assert_eq!(seq[3].as_ref().unwrap().output, b"6\n");
    }
}
