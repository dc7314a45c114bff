//! Validation engine for ShEx schemas with inheritance.
//!
//! The crate is organized in layers:
//!
//! - [`rdf`] — the RDF data model: nodes, triples, graphs, neighbourhoods,
//!   and a line-oriented N-Triples-subset parser.
//! - [`schema`] — abstract syntax of schemas: labels, node constraints,
//!   triple expressions, shape expressions, and well-formedness checking.
//! - [`text`] — the concrete textual syntax for schemas (`.shexi`) and
//!   shape maps (`.smap`).
//! - [`analysis`] — static analysis: extension hierarchy, dependency graph,
//!   well-definedness, and stratification.
//! - [`semantics`] — the satisfiability relations for triple expressions and
//!   shape expressions under a typing.
//! - [`engine`] — correct-typing checks, maximal-typing computation by
//!   refinement, a brute-force reference oracle, and validation queries.
//! - [`cli`] — the `shexi` command-line interface.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod rdf;
pub mod schema;
pub mod semantics;
pub mod text;
