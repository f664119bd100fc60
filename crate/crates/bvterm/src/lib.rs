//! Termination prover for logically constrained term rewrite systems whose
//! background theory is fixed-width bit-vector arithmetic.
//!
//! The pipeline follows the dependency pair framework: `dp` generates the
//! dependency pairs of a system and decomposes the initial problem along the
//! strongly connected components of a dependency graph approximation, and
//! `ssr` discharges singleton self-loop problems by exhibiting a fixed
//! unsigned interval that the loop argument must eventually enter. All
//! logical side conditions are decided by `solver`, an enumeration-based
//! decision procedure over the finite bit-vector domains, and `oracle`
//! provides an independent brute-force ground-graph check used for testing
//! and the `--oracle` CLI mode.

pub mod bitvec;
pub mod dp;
pub mod driver;
pub mod lctrs;
pub mod oracle;
pub mod parser;
pub mod solver;
pub mod ssr;
pub mod term;
