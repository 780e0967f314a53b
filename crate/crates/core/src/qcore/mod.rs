//! Complex linear algebra and quantum-state foundations.
//!
//! Subsystem ordering is big-endian throughout: index 0 is the leftmost
//! tensor factor, so for dims `[2, 2]` the basis label `|01⟩` is flat index 1.

mod literal;
mod matrix;
mod state;

pub use literal::{format_complex, format_matrix, format_state, parse_complex, parse_matrix, parse_state};
pub use matrix::{
    adjoint, c, cnot, embed_controlled, hadamard, haar_random_unitary, identity, is_unitary, kron,
    kron_all, pauli, pauli_x, pauli_y, pauli_z, phase_aligned_distance, unitarity_deviation,
};
pub use state::{
    apply_to_subsystems, measure_postselect, partial_trace, project_branch, state_fidelity,
    MeasurementOutcome, QuantumState, StateData,
};
pub(crate) use state::hermitian_eigen;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
