//! Dense few-qubit linear algebra: states, measurements, channels, Paulis and
//! the small Clifford groups.

pub mod channel;
pub mod clifford;
pub mod matrix;
pub mod pauli;
pub mod povm;
pub mod state;

pub use channel::{depolarize, QuantumChannel};
pub use clifford::{clifford_group, is_clifford, random_clifford, random_clifford_index};
pub use matrix::ComplexMatrix;
pub use pauli::{pauli_apply, pauli_twirl, PauliIndex};
pub use povm::{measure, Povm};
pub use state::{bb84_state, partial_trace, tensor, DensityOperator, PureState, MAX_QUBITS, TOL};
