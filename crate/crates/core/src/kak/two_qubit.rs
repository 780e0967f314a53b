use super::magic::{magic_basis, simultaneous_svd, MagicBasisWork};
use super::{require_unitary, strip_phase};
use crate::lcc::LinearCombinationSpec;
use crate::qcore::{c, kron, pauli, CMatrix, C64};
use crate::{Error, Result};

/// `U = e^{iφ} (U₁⊗V₁) U_D (U₂⊗V₂)` with
/// `U_D = exp(−i(k₁XX + k₂YY + k₃ZZ)) = Σᵢ αᵢ σᵢ⊗σᵢ`.
///
/// The `k` values are taken as they come out of the magic-basis phases,
/// without reduction to a canonical chamber.
#[derive(Debug, Clone)]
pub struct KakDecomposition {
    pub u1: CMatrix,
    pub v1: CMatrix,
    pub u2: CMatrix,
    pub v2: CMatrix,
    pub k: [f64; 3],
    pub alpha: [C64; 4],
    pub global_phase: f64,
    pub work: MagicBasisWork,
}

/// `αᵢ` as functions of `k`.
pub fn kak_alphas(k: [f64; 3]) -> [C64; 4] {
    let (s1, c1) = k[0].sin_cos();
    let (s2, c2) = k[1].sin_cos();
    let (s3, c3) = k[2].sin_cos();
    [
        c(c1 * c2 * c3, -s1 * s2 * s3),
        c(c1 * s2 * s3, -s1 * c2 * c3),
        c(s1 * c2 * s3, -c1 * s2 * c3),
        c(s1 * s2 * c3, -c1 * c2 * s3),
    ]
}

fn correlator(i: usize) -> CMatrix {
    kron(&pauli(i), &pauli(i))
}

/// `Σᵢ αᵢ σᵢ⊗σᵢ`.
pub fn nonlocal_part(alpha: &[C64; 4]) -> CMatrix {
    (0..4).fold(CMatrix::zeros(4, 4), |acc, i| acc + correlator(i) * alpha[i])
}

impl KakDecomposition {
    pub fn ud(&self) -> CMatrix {
        nonlocal_part(&self.alpha)
    }

    /// `(U₁⊗V₁) U_D (U₂⊗V₂)`, without the global phase.
    pub fn su4(&self) -> CMatrix {
        kron(&self.u1, &self.v1) * self.ud() * kron(&self.u2, &self.v2)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.su4() * C64::from_polar(1.0, self.global_phase)
    }

    /// The `i`-th gate of the expanded form, `U₁σᵢU₂ ⊗ V₁σᵢV₂`.
    pub fn term(&self, i: usize) -> CMatrix {
        let p = pauli(i);
        kron(&(&self.u1 * &p * &self.u2), &(&self.v1 * &p * &self.v2))
    }
}

/// Splits a product `a⊗b` of two 2×2 factors, each scaled to determinant 1.
fn factor_product(k: &CMatrix) -> (CMatrix, CMatrix) {
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..4 {
        for j in 0..4 {
            if k[(i, j)].norm() > best {
                (bi, bj, best) = (i, j, k[(i, j)].norm());
            }
        }
    }
    let (i1, i2, j1, j2) = (bi / 2, bi % 2, bj / 2, bj % 2);
    let b = CMatrix::from_fn(2, 2, |p, q| k[(2 * i1 + p, 2 * j1 + q)]);
    let a = CMatrix::from_fn(2, 2, |p, q| k[(2 * p + i2, 2 * q + j2)] / b[(i2, j2)]);
    let s = a.determinant().sqrt();
    (a / s, b * s)
}

pub fn kak_decompose(u: &CMatrix) -> Result<KakDecomposition> {
    require_unitary(u, 4)?;
    let (global_phase, su) = strip_phase(u);
    let m = magic_basis();
    let w = m.adjoint() * &su * &m;
    let work = simultaneous_svd(&w.map(|z| z.re), &w.map(|z| z.im))?;

    let theta: Vec<f64> = work.phases().iter().map(|z| z.arg()).collect();
    let k = [
        -(theta[0] + theta[1]) / 2.0,
        -(theta[1] + theta[3]) / 2.0,
        -(theta[0] + theta[3]) / 2.0,
    ];
    let alpha = kak_alphas(k);

    let complex = |r: &nalgebra::DMatrix<f64>| r.map(|x| c(x, 0.));
    let left = &m * complex(&work.l) * m.adjoint();
    let right = &m * complex(&work.r).transpose() * m.adjoint();
    let (u1, v1) = factor_product(&left);
    let (u2, v2) = factor_product(&right);

    let dec = KakDecomposition { u1, v1, u2, v2, k, alpha, global_phase, work };
    let err = (dec.reconstruct() - u).camax();
    if !(err <= 1e-9) {
        return Err(Error::Diagonalization(err));
    }
    Ok(dec)
}

/// Four-term spec with gates `U₁σᵢU₂ ⊗ V₁σᵢV₂` and coefficients `e^{iφ}αᵢ`.
pub fn lcu_spec_from_kak(dec: &KakDecomposition) -> LinearCombinationSpec {
    let phase = C64::from_polar(1.0, dec.global_phase);
    let coefficients = dec.alpha.iter().map(|a| a * phase).collect();
    let gates = (0..4).map(|i| dec.term(i)).collect();
    LinearCombinationSpec::normalizing(coefficients, gates)
        .expect("KAK coefficients have unit norm")
}
