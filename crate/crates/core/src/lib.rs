//! Exact simulation of remote quantum processing by linear combination of
//! operations.
//!
//! The crate is organized bottom-up:
//!
//! - [`qcore`]: dense complex linear algebra, states, measurement and the
//!   plain-text matrix literal format.
//! - [`lcc`]: the linear-combination circuit, both the path-extended form that
//!   works with black-box gates and the multiply-controlled reference form.
//! - [`kak`]: Pauli expansion of single-qubit gates, the magic-basis KAK
//!   decomposition of two-qubit gates and the two-term three-qubit family.
//! - [`protocol`]: EPR channels, teleportation, decoy states and the
//!   client/server session simulator.
//! - [`tomography`]: single-qubit process tomography with a maximum-likelihood
//!   reconstruction of the process matrix.
//! - [`registry`]: named gates and the twelve demonstration operations.

pub mod error;
pub mod kak;
pub mod lcc;
pub mod protocol;
pub mod qcore;
pub mod registry;
pub mod tol;
pub mod tomography;

pub use error::{Error, Result};
pub use qcore::{CMatrix, CVector, QuantumState, C64};

use rand::SeedableRng;

/// The single seedable generator threaded through every stochastic operation.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
