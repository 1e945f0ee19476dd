//! Finite-dimensional quantum probability.
//!
//! States are density matrices, events are orthogonal projections and
//! observables are Hermitian matrices with finite spectral measures. On top of
//! these the crate provides sequential (pyramidal) measurement probabilities,
//! commutants and conditional expectations onto commutative algebras, a
//! Wigner-type Bell inequality laboratory, and a discrete quantum filter for
//! repeated system-probe interactions.

pub mod algebra;
pub mod bell;
pub mod dynamics;
pub mod error;
pub mod filtering;
pub mod measurement;
pub mod numerics;
pub mod paulis;
pub mod qpspace;
pub mod wire;

pub use error::{Error, Result};
pub use numerics::{Matrix, Vector, C64, DEFAULT_TOL};
pub use qpspace::{Distribution, Event, Observable, Pvm, PvmOutcome, State};
