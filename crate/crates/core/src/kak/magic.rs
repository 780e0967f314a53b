use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::qcore::{c, CMatrix, C64};
use crate::{Error, Result};

pub type RMatrix = DMatrix<f64>;

/// Eigenvalues of the first matrix closer than this are treated as one
/// degenerate block and split using the second matrix.
const GROUP_TOL: f64 = 1e-6;
const PRECONDITION_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-9;

/// Columns `Φ⁺`, `iΨ⁺`, `Ψ⁻`, `iΦ⁻`. Conjugation by this matrix maps
/// `SU(2)⊗SU(2)` onto `SO(4)` and makes `XX`, `YY`, `ZZ` diagonal.
pub fn magic_basis() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z, i) = (c(h, 0.), c(0., 0.), c(0., h));
    CMatrix::from_row_slice(
        4,
        4,
        &[o, z, z, i, z, i, o, z, z, i, -o, z, o, z, z, -i],
    )
}

/// Result of simultaneously diagonalizing `U'_R` and `U'_I`:
/// `Lᵀ U'_R R = D_R` and `Lᵀ U'_I R = D_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagicBasisWork {
    pub ur: RMatrix,
    pub ui: RMatrix,
    pub l: RMatrix,
    pub r: RMatrix,
    pub d_r: DVector<f64>,
    pub d_i: DVector<f64>,
}

impl MagicBasisWork {
    /// `D_R + i D_I`.
    pub fn phases(&self) -> Vec<C64> {
        self.d_r.iter().zip(self.d_i.iter()).map(|(&re, &im)| c(re, im)).collect()
    }

    /// Largest deviation of `Lᵀ U'_R R` and `Lᵀ U'_I R` from `D_R` and `D_I`.
    pub fn residual(&self) -> f64 {
        let dr = self.l.transpose() * &self.ur * &self.r - RMatrix::from_diagonal(&self.d_r);
        let di = self.l.transpose() * &self.ui * &self.r - RMatrix::from_diagonal(&self.d_i);
        dr.amax().max(di.amax())
    }
}

fn max_abs(m: &RMatrix) -> f64 {
    m.amax()
}

/// Orthogonal `L`, `R` with `det = +1` and diagonal `D_R`, `D_I` such that
/// `U'_R = L D_R Rᵀ` and `U'_I = L D_I Rᵀ`.
///
/// Requires `U'_R + iU'_I` unitary, checked through
/// `U'_R U'_Iᵀ` symmetric and `U'_R U'_Rᵀ + U'_I U'_Iᵀ = I`.
///
/// `L` diagonalizes the commuting pair `U'_R U'_Rᵀ = L D_R² Lᵀ` and
/// `U'_R U'_Iᵀ = L D_R D_I Lᵀ`: the first fixes `L` up to rotations inside
/// degenerate eigenspaces, and the second is diagonalized within each such
/// block. `R` then follows row by row from `Lᵀ(U'_R + iU'_I) = D Rᵀ`.
///
/// Entries of `D_R` are made non-negative by flipping columns of `R`, except
/// that one entry may stay negative when `det R = +1` forces it.
pub fn simultaneous_svd(ur: &RMatrix, ui: &RMatrix) -> Result<MagicBasisWork> {
    let n = ur.nrows();
    if !ur.is_square() || ur.shape() != ui.shape() || n == 0 {
        return Err(Error::Dimension(format!(
            "need equal square matrices, got {:?} and {:?}",
            ur.shape(),
            ui.shape()
        )));
    }
    let a = ur * ur.transpose();
    let b = ur * ui.transpose();
    let asym = max_abs(&(&b - b.transpose()));
    let gram = max_abs(&(&a + ui * ui.transpose() - RMatrix::identity(n, n)));
    if asym > PRECONDITION_TOL || gram > PRECONDITION_TOL {
        return Err(Error::InvalidInput(format!(
            "real and imaginary parts do not form a unitary (asymmetry {asym:e}, gram error {gram:e})"
        )));
    }

    let l = block_eigenbasis(&a, &b);
    let w = ur.map(|x| c(x, 0.)) + ui.map(|x| c(0., x));
    let x = l.map(|v| c(v, 0.)).transpose() * &w;

    let mut rt = RMatrix::zeros(n, n);
    for i in 0..n {
        let row = x.row(i);
        let sq: C64 = row.iter().map(|z| z * z).sum();
        let phase = if sq.norm() > 0.0 { (sq / sq.norm()).sqrt() } else { c(1., 0.) };
        for k in 0..n {
            rt[(i, k)] = (row[k] / phase).re;
        }
    }
    let mut r = nearest_orthogonal(&rt.transpose());
    let mut l = l;

    let diag = |l: &RMatrix, r: &RMatrix| -> Vec<C64> {
        let m = l.map(|v| c(v, 0.)).transpose() * &w * r.map(|v| c(v, 0.));
        (0..n).map(|i| m[(i, i)]).collect()
    };
    let mut d = diag(&l, &r);
    for (i, di) in d.iter_mut().enumerate() {
        if di.re < 0.0 {
            r.column_mut(i).neg_mut();
            *di = -*di;
        }
    }
    if l.determinant() < 0.0 {
        l.column_mut(0).neg_mut();
        r.column_mut(0).neg_mut();
    }
    if r.determinant() < 0.0 {
        let i = (0..n).min_by(|&p, &q| d[p].re.abs().total_cmp(&d[q].re.abs())).unwrap();
        r.column_mut(i).neg_mut();
        d[i] = -d[i];
    }

    let work = MagicBasisWork {
        ur: ur.clone(),
        ui: ui.clone(),
        l,
        r,
        d_r: DVector::from_iterator(n, d.iter().map(|z| z.re)),
        d_i: DVector::from_iterator(n, d.iter().map(|z| z.im)),
    };
    let residual = work.residual();
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Diagonalization(residual));
    }
    Ok(work)
}

/// Orthonormal eigenbasis of `a`, with each degenerate block rotated to
/// diagonalize `b` as well.
fn block_eigenbasis(a: &RMatrix, b: &RMatrix) -> RMatrix {
    let n = a.nrows();
    let (vals, vecs) = sorted_eigen(a);
    let mut out = vecs.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] < GROUP_TOL {
            end += 1;
        }
        if end - start > 1 {
            let v = vecs.columns(start, end - start).into_owned();
            let sub = v.transpose() * b * &v;
            let (_, q) = sorted_eigen(&sub);
            out.columns_mut(start, end - start).copy_from(&(v * q));
        }
        start = end;
    }
    out
}

fn sorted_eigen(m: &RMatrix) -> (Vec<f64>, RMatrix) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = RMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (vals, vecs)
}

/// Orthogonal polar factor, removing rounding drift from a nearly orthogonal
/// matrix.
fn nearest_orthogonal(m: &RMatrix) -> RMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{haar_random_unitary, is_unitary, kron, pauli_x, pauli_y, pauli_z};
    use crate::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn split(w: &CMatrix) -> (RMatrix, RMatrix) {
        (w.map(|z| z.re), w.map(|z| z.im))
    }

    fn random_so4(seed: u64) -> RMatrix {
        let mut rng = rng_from_seed(seed);
        let g = RMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut q = g.qr().q();
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        q
    }

    #[test]
    fn magic_basis_is_unitary_and_as_printed() {
        let m = magic_basis();
        assert!(is_unitary(&m, 1e-15));
        let s = std::f64::consts::SQRT_2;
        let printed = [
            [c(1., 0.), c(0., 0.), c(0., 0.), c(0., 1.)],
            [c(0., 0.), c(0., 1.), c(1., 0.), c(0., 0.)],
            [c(0., 0.), c(0., 1.), c(-1., 0.), c(0., 0.)],
            [c(1., 0.), c(0., 0.), c(0., 0.), c(0., -1.)],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[(i, j)] * s - printed[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn magic_basis_diagonalizes_correlators() {
        let m = magic_basis();
        let expected = [[1., 1., -1., -1.], [-1., 1., -1., 1.], [1., -1., -1., 1.]];
        for (p, signs) in [pauli_x(), pauli_y(), pauli_z()].iter().zip(expected) {
            let t = m.adjoint() * kron(p, p) * &m;
            for i in 0..4 {
                for j in 0..4 {
                    let e = if i == j { signs[i] } else { 0.0 };
                    assert!((t[(i, j)] - c(e, 0.)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn local_gates_become_real_orthogonal() {
        let mut rng = rng_from_seed(4);
        let a = haar_random_unitary(2, &mut rng).unwrap();
        let b = haar_random_unitary(2, &mut rng).unwrap();
        let a = &a / a.determinant().sqrt();
        let b = &b / b.determinant().sqrt();
        let t = magic_basis().adjoint() * kron(&a, &b) * magic_basis();
        assert!(t.iter().all(|z| z.im.abs() < 1e-14));
    }

    #[test]
    fn real_orthogonal_input() {
        let o = random_so4(1);
        let work = simultaneous_svd(&o, &RMatrix::zeros(4, 4)).unwrap();
        assert!((&work.d_r - DVector::from_element(4, 1.0)).amax() < 1e-12);
        assert!(work.d_i.amax() < 1e-12);
        assert!((&work.l * work.r.transpose() - &o).amax() < 1e-12);
    }

    #[test]
    fn identity_image() {
        let m = magic_basis();
        let (ur, ui) = split(&(m.adjoint() * CMatrix::identity(4, 4) * &m));
        let work = simultaneous_svd(&ur, &ui).unwrap();
        assert!((&work.d_r - DVector::from_element(4, 1.0)).amax() < 1e-12);
        assert!(work.d_i.amax() < 1e-12);
    }

    #[test]
    fn random_su4_images_are_diagonalized() {
        let m = magic_basis();
        let mut rng = rng_from_seed(99);
        for _ in 0..50 {
            let u = haar_random_unitary(4, &mut rng).unwrap();
            let u = &u / u.determinant().powf(0.25);
            let (ur, ui) = split(&(m.adjoint() * &u * &m));
            let work = simultaneous_svd(&ur, &ui).unwrap();
            assert!(work.residual() <= 1e-10);
            for mat in [&work.l, &work.r] {
                assert!((mat.transpose() * mat - RMatrix::identity(4, 4)).amax() < 1e-12);
                assert!((mat.determinant() - 1.0).abs() < 1e-12);
            }
            assert!(work.d_r.iter().filter(|&&x| x < -1e-12).count() <= 1);
        }
    }

    #[test]
    fn non_unitary_pair_rejected() {
        let ur = RMatrix::identity(4, 4) * 2.0;
        assert!(matches!(simultaneous_svd(&ur, &RMatrix::zeros(4, 4)), Err(Error::InvalidInput(_))));
        assert!(matches!(
            simultaneous_svd(&RMatrix::identity(4, 4), &RMatrix::zeros(3, 3)),
            Err(Error::Dimension(_))
        ));
    }
}
