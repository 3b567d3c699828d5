//! Core calculus for typed incremental computation with names.
//!
//! The crate provides, layer by layer: literal names and the name-term
//! lambda calculus (`name`), index expressions denoting name sets
//! (`index`), decision procedures for equivalence and apartness plus a
//! semantic oracle (`relations`), the type-and-effect language
//! (`types`), a bidirectional checker (`typecheck`), a big-step
//! evaluator with named stores (`dynamics`), a dynamic effect auditor
//! (`audit`), and the concrete syntax frontend (`parse`).

pub mod audit;
pub mod ast;
pub mod dynamics;
pub mod gen;
pub mod index;
pub mod name;
pub mod parse;
pub mod relations;
pub mod typecheck;
pub mod types;
