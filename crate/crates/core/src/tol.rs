//! Shared numerical tolerances.

/// Structural checks: unitarity, Hermiticity, normalization, probabilities.
pub const STRUCTURAL: f64 = 1e-12;

/// Decomposition round trips (KAK reconstruction, end-to-end LCU runs).
pub const ROUND_TRIP: f64 = 1e-9;

/// Relations produced by eigen-solvers (simultaneous SVD, alpha formulas).
pub const SOLVER: f64 = 1e-10;

/// Statistical checks are made at this many standard deviations.
pub const SIGMAS: f64 = 3.0;

/// Unitarity check applied to user-supplied operators. Looser than
/// [`STRUCTURAL`] so that matrices written with ~15 significant digits pass.
pub const INPUT_UNITARY: f64 = 1e-8;

/// Branch probabilities at or below this are treated as exactly zero.
pub const ZERO_PROBABILITY: f64 = 1e-28;
