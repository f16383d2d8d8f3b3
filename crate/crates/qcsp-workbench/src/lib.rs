//! A workbench for the algebra behind quantified constraint satisfaction on
//! finite structures: polymorphism search and classification, generating
//! sets of direct powers, adversary-restricted game semantics, canonical
//! Pi2-sentences, and collapsibility decision procedures, with partially
//! reflexive paths and semicomplete digraphs worked out end to end.
//!
//! Every algebraic claim an operation makes is backed by a certificate that
//! can be re-verified (an operation table, a homomorphism, a witness
//! formula), and the exact solvers double as independent oracles for the
//! constructions.
//!
//! The `examples/` directory of this crate walks through each capability;
//! the `qcw` binary exposes the same operations as subcommands with JSON
//! reports.

pub mod budget;
pub mod catalog;
pub mod clones;
pub mod collapsibility;
pub mod error;
pub mod logic;
pub mod paths;
pub mod semicomplete;
pub mod structures;

pub mod cli;

pub use budget::Budget;
pub use error::{Error, Result};
