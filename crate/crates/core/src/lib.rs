//! Exact diagonalization of two-level dipoles on square and triangular
//! lattices coupled to a single cavity mode.

pub mod error;
pub mod lattice;
pub mod hilbert;
pub mod linop;
pub mod hamiltonian;
pub mod eigensolver;
pub mod observables;
pub mod analysis;

pub use error::{Error, ErrorRecord, Result};
