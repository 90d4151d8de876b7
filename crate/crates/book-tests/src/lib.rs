//! Runs every Rust code block in the book as a doc-test.
//!
//! mdbook cannot test snippets against workspace dependencies, so each
//! chapter is attached verbatim as module documentation here and
//! `cargo test --doc` does the work. If a chapter drifts away from the
//! library, this crate stops compiling.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/elliptic.md")]
pub mod elliptic {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/solutions.md")]
pub mod solutions {}

#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}

#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
