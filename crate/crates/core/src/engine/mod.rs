//! Gates, circuits and the dense statevector they act on.

mod gate;
mod state;

pub use gate::{Circuit, Gate, GateKind, Matrix2};
pub use state::{QuantumState, MAX_STATE_QUBITS};

pub(crate) use state::{prob_of_bit_unchecked, CompiledGate};
