//! Symbolic calculus for the estimation operator `est(x | I)`.
//!
//! - [`ast`]: expressions, propositions, contexts, and the {0,1} encoding of
//!   Boolean connectives.
//! - [`parser`]: text syntax and pretty-printing.
//! - [`rewrite`]: rewrite rules, normalization, and scripted derivations.
//! - [`oracle`]: numerical semantics over finite weight models and grids.
//! - [`suite`]: the full property check run by `estim check`.

pub mod ast;
pub mod gen;
pub mod parser;
pub mod oracle;
pub mod rewrite;
pub mod suite;
