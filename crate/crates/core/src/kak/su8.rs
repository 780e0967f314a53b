use super::require_unitary;
use crate::lcc::LinearCombinationSpec;
use crate::qcore::{c, identity, kron, kron_all, pauli_x, CMatrix};
use crate::Result;

/// Three-qubit unitary `(A₄A₃⊗B₄B₃) exp(iβ₀X⊗X⊗X) (A₂A₁⊗B₂B₁)` and its
/// two-term expansion
/// `cos β₀ (A₄A₃A₂A₁)⊗(B₄B₃B₂B₁) + i sin β₀ (A₄A₃X⊗XA₂A₁)⊗(B₄B₃XB₂B₁)`.
///
/// `a` holds the two-qubit gates `A₁..A₄` acting on qubits 0 and 1, `b` the
/// single-qubit gates `B₁..B₄` on qubit 2.
pub fn su8_two_term_combine(a: &[CMatrix; 4], b: &[CMatrix; 4], beta0: f64) -> Result<(CMatrix, LinearCombinationSpec)> {
    for g in a {
        require_unitary(g, 4)?;
    }
    for g in b {
        require_unitary(g, 2)?;
    }
    let x = pauli_x();
    let xxx = kron_all([&x, &x, &x]);
    let entangler = identity(8) * c(beta0.cos(), 0.) + xxx * c(0., beta0.sin());
    let (a43, a21) = (&a[3] * &a[2], &a[1] * &a[0]);
    let (b43, b21) = (&b[3] * &b[2], &b[1] * &b[0]);
    let u = kron(&a43, &b43) * entangler * kron(&a21, &b21);

    let xx = kron(&x, &x);
    let first = kron(&(&a43 * &a21), &(&b43 * &b21));
    let second = kron(&(&a43 * xx * &a21), &(&b43 * &x * &b21));
    let spec = LinearCombinationSpec::new(vec![c(beta0.cos(), 0.), c(0., beta0.sin())], vec![first, second])?;
    Ok((u, spec))
}
