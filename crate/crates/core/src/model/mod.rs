//! Lattices, Hubbard parameters and the Jordan-Wigner qubit Hamiltonian.

pub mod hubbard;
pub mod lattice;
pub mod pauli;

pub use hubbard::{
    build_hubbard, jw_hopping, jw_interaction, jw_number, site_density, site_spin, total_number,
    total_spin_z, HubbardModel, HubbardParams, HubbardTerm,
};
pub use lattice::{chain, hexagon6, ring, Lattice};
pub use pauli::{matrix_of, one_norm, OneNorm, Pauli, PauliString, PauliSum};
