//! Quantum-circuit simulation of the Hubbard model on small graphene
//! fragments: Jordan-Wigner Hamiltonians, Trotterized evolution circuits,
//! iterative phase estimation, adiabatic state preparation, trajectory noise
//! and an exact-diagonalization reference.

pub mod engine;
pub mod error;
pub mod model;
pub mod adiabatic;
pub mod circuits;
pub mod cli;
pub mod prep;
pub mod observables;
pub mod iqpe;
pub mod noise;
pub mod oracle;

pub use error::{Error, Result};
