//! Orbit engines, Fibonacci weight ledgers and universal-vector
//! constructions for m-linear hypercyclic operators on sequence spaces and
//! on entire functions.

pub mod arith;
pub mod spaces;
pub mod dynamics;
pub mod constructions;
pub mod conjugation;
