//! Support library for the `carnot` binary: the run-configuration grammar
//! and the report envelope. Kept as a library target so integration tests
//! can exercise parsing, canonicalization, and hashing directly.

pub mod config;
pub mod report;

/// The guide's command-line chapter, included so `cargo test --doc` runs
/// its snippets.
#[doc = include_str!("../../../book/src/cli.md")]
pub mod guide {}
