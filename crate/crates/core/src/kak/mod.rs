//! Linear-combination forms of one-, two- and (special) three-qubit unitaries.
//!
//! - [`pauli_decompose`]: `U ∝ α₀I + α₁X + α₂Y + α₃Z`, with the angles of the
//!   product form `(cos d₁ − i sin d₁ X)(cos d₂ − i sin d₂ Y)(cos d₃ − i sin d₃ Z)`.
//! - [`kak_decompose`]: `U ∝ (U₁⊗V₁) U_D (U₂⊗V₂)` with
//!   `U_D = exp(−i(k₁XX + k₂YY + k₃ZZ)) = Σᵢ αᵢ σᵢ⊗σᵢ`, computed in the magic basis.
//! - [`su8_two_term_combine`]: the two-term family
//!   `(A₄A₃⊗B₄B₃) exp(iβ₀X⊗X⊗X) (A₂A₁⊗B₂B₁)`.

mod magic;
mod pauli;
mod su8;
mod two_qubit;

pub use magic::{magic_basis, simultaneous_svd, MagicBasisWork};
pub use pauli::{pauli_coefficients, pauli_decompose, pauli_spec, PauliDecomposition};
pub use su8::su8_two_term_combine;
pub use two_qubit::{kak_decompose, kak_alphas, lcu_spec_from_kak, nonlocal_part, KakDecomposition};

use crate::qcore::{unitarity_deviation, CMatrix, C64};
use crate::tol::INPUT_UNITARY;
use crate::{Error, Result};

fn require_unitary(u: &CMatrix, dim: usize) -> Result<()> {
    if u.shape() != (dim, dim) {
        return Err(Error::Dimension(format!("expected {dim}x{dim}, got {:?}", u.shape())));
    }
    let dev = unitarity_deviation(u);
    if dev > INPUT_UNITARY {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

/// Splits `U = e^{iφ} U'` with `det U' = 1`, using the principal root of the
/// determinant.
fn strip_phase(u: &CMatrix) -> (f64, CMatrix) {
    let n = u.nrows() as f64;
    let phi = u.determinant().arg() / n;
    (phi, u * C64::from_polar(1.0, -phi))
}
