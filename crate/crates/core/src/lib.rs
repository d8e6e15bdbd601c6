//! Latticed k-induction and bounded model checking for probabilistic loops.

pub mod error;
pub mod expectations;
pub mod lattice;
pub mod pgcl;
pub mod smt;
pub mod tsys;
pub mod value;
