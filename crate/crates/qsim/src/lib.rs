//! Dense statevector simulation of parameterized quantum circuits.
//!
//! Supports the gate set {RX, RY, RZ, CX, CRX} on up to 24 qubits, exact
//! Pauli expectations, and two gradient engines: the parameter-shift rule
//! (reference) and adjoint differentiation (fast path, one reverse sweep
//! for all parameter slots).
//!
//! Qubit indices are little-endian: qubit `q` corresponds to bit `q` of the
//! amplitude index, so `|10⟩` with qubit 0 set lives at index 1.

mod circuit;
mod grad;
mod state;

pub use circuit::{run, AngleRef, Circuit, GateKind, GateOp, SlotRole};
pub use grad::{grad_adjoint, grad_adjoint_cached, grad_adjoint_weighted, grad_parameter_shift};
pub use state::{expectation, expectation_sampled, Observable, Pauli, StateVector};

/// Highest qubit count the dense representation accepts (2^24 amplitudes).
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, thiserror::Error)]
pub enum QsimError {
    #[error("capacity: qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    Capacity(usize),
    #[error("contract: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, QsimError>;

fn contract(msg: impl Into<String>) -> QsimError {
    QsimError::Contract(msg.into())
}
