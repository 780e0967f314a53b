use super::{require_unitary, strip_phase};
use crate::lcc::LinearCombinationSpec;
use crate::qcore::{c, pauli, CMatrix, C64};
use crate::{Error, Result};

/// `e^{iφ} (α₀I + α₁X + α₂Y + α₃Z)` with the `αᵢ` also expressed through the
/// angles of `(cos d₁ − i sin d₁ X)(cos d₂ − i sin d₂ Y)(cos d₃ − i sin d₃ Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    pub alpha: [C64; 4],
    pub d: [f64; 3],
    pub global_phase: f64,
}

impl PauliDecomposition {
    /// `α` from the angle formulas.
    pub fn alpha_from_angles(d: [f64; 3]) -> [C64; 4] {
        let (s1, c1) = d[0].sin_cos();
        let (s2, c2) = d[1].sin_cos();
        let (s3, c3) = d[2].sin_cos();
        [
            c(c1 * c2 * c3 - s1 * s2 * s3, 0.),
            c(0., -(c1 * s2 * s3 + s1 * c2 * c3)),
            c(0., -(c1 * s2 * c3 - s1 * c2 * s3)),
            c(0., -(c1 * c2 * s3 + s1 * s2 * c3)),
        ]
    }

    /// `Σ αᵢ σᵢ`, the SU(2) part.
    pub fn su2(&self) -> CMatrix {
        combine(&self.alpha)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.su2() * C64::from_polar(1.0, self.global_phase)
    }
}

fn combine(alpha: &[C64; 4]) -> CMatrix {
    (0..4).fold(CMatrix::zeros(2, 2), |acc, i| acc + pauli(i) * alpha[i])
}

/// `αᵢ = Tr(σᵢ U)/2` with no unitarity requirement, so non-unitary targets
/// such as `(X + iZ)/√2` can be expanded too.
pub fn pauli_coefficients(u: &CMatrix) -> Result<[C64; 4]> {
    if u.shape() != (2, 2) {
        return Err(Error::Dimension(format!("expected 2x2, got {:?}", u.shape())));
    }
    let mut alpha = [C64::new(0., 0.); 4];
    for (i, a) in alpha.iter_mut().enumerate() {
        *a = (pauli(i) * u).trace() / 2.0;
    }
    Ok(alpha)
}

/// Four-term spec `Σ αᵢ σᵢ`; the coefficients must have unit norm.
pub fn pauli_spec(alpha: &[C64; 4]) -> Result<LinearCombinationSpec> {
    LinearCombinationSpec::new(alpha.to_vec(), (0..4).map(pauli).collect())
}

fn su2_product(d: [f64; 3]) -> CMatrix {
    combine(&PauliDecomposition::alpha_from_angles(d))
}

/// Rotation of the Bloch sphere, `R_jk = Tr(σ_j U σ_k U†)/2`.
fn bloch_rotation(u: &CMatrix) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for (j, row) in r.iter_mut().enumerate() {
        for (k, e) in row.iter_mut().enumerate() {
            *e = (pauli(j + 1) * u * pauli(k + 1) * u.adjoint()).trace().re / 2.0;
        }
    }
    r
}

pub fn pauli_decompose(u: &CMatrix) -> Result<PauliDecomposition> {
    require_unitary(u, 2)?;
    let (global_phase, su) = strip_phase(u);
    let alpha = pauli_coefficients(&su)?;

    // (cos d − i sin d σ) rotates the Bloch sphere by 2d, so the angles are
    // half the x-y-z Tait-Bryan angles of the rotation.
    let r = bloch_rotation(&su);
    let cb = r[0][0].hypot(r[0][1]);
    let b = r[0][2].atan2(cb);
    let (a, cz) = if cb > 1e-9 {
        ((-r[1][2]).atan2(r[2][2]), (-r[0][1]).atan2(r[0][0]))
    } else {
        (r[2][1].atan2(r[1][1]), 0.0)
    };
    let mut d = [a / 2.0, b / 2.0, cz / 2.0];
    // The rotation fixes the SU(2) element only up to sign.
    let p = su2_product(d);
    if (&p + &su).norm() < (&p - &su).norm() {
        d[0] += std::f64::consts::PI;
    }
    Ok(PauliDecomposition { alpha, d, global_phase })
}
