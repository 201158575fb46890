//! An executable small-step semantics for a subset of Lua 5.2.
//!
//! Programs are parsed into a term language ([`ast`]), injected into a
//! configuration with bootstrapped stores ([`machine::inject`]) and run by
//! repeatedly decomposing the term into an evaluation context and a redex
//! ([`decompose`]) and rewriting the redex with exactly one rule
//! ([`relations`]).

pub mod ast;
pub mod batch;
pub mod corpus;
pub mod decompose;
pub mod delta;
pub mod machine;
pub mod parser;
pub mod relations;
pub mod store;

pub use machine::{inject, load_program, run_source, Configuration, Outcome, Step};
