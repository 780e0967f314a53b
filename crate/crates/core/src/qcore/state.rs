use nalgebra::SymmetricEigen;

use super::{CMatrix, CVector, C64};
use crate::tol::{STRUCTURAL, ZERO_PROBABILITY};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Pure(CVector),
    Density(CMatrix),
}

/// A statevector or density matrix over a tensor-product register.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    dims: Vec<usize>,
    data: StateData,
}

impl QuantumState {
    pub fn pure(dims: Vec<usize>, amplitudes: CVector) -> Result<Self> {
        let total: usize = dims.iter().product();
        if amplitudes.len() != total {
            return Err(Error::Dimension(format!(
                "statevector of length {} does not match dims {:?}",
                amplitudes.len(),
                dims
            )));
        }
        check_finite(amplitudes.iter())?;
        Ok(Self { dims, data: StateData::Pure(amplitudes) })
    }

    /// Validates Hermiticity and positivity (eigenvalues ≥ −1e-12).
    pub fn density(dims: Vec<usize>, rho: CMatrix) -> Result<Self> {
        let total: usize = dims.iter().product();
        if rho.shape() != (total, total) {
            return Err(Error::Dimension(format!(
                "density matrix of shape {:?} does not match dims {:?}",
                rho.shape(),
                dims
            )));
        }
        check_finite(rho.iter())?;
        let herm = (&rho - rho.adjoint()).iter().fold(0.0f64, |m, x| m.max(x.norm()));
        if herm > STRUCTURAL {
            return Err(Error::InvalidInput(format!("density matrix not Hermitian ({herm:e})")));
        }
        let min_eig = hermitian_eigen(&rho).0.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -STRUCTURAL {
            return Err(Error::InvalidInput(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { dims, data: StateData::Density(rho) })
    }

    /// Computational basis state `|labels⟩`.
    pub fn basis(dims: Vec<usize>, labels: &[usize]) -> Result<Self> {
        if labels.len() != dims.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} subsystems",
                labels.len(),
                dims.len()
            )));
        }
        let mut index = 0;
        for (&l, &d) in labels.iter().zip(&dims) {
            if l >= d {
                return Err(Error::InvalidLabel { label: l, dim: d });
            }
            index = index * d + l;
        }
        let total: usize = dims.iter().product();
        let mut v = CVector::zeros(total);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { dims, data: StateData::Pure(v) })
    }

    /// Single-subsystem statevector from amplitudes.
    pub fn ket(amplitudes: &[C64]) -> Result<Self> {
        Self::pure(vec![amplitudes.len()], CVector::from_column_slice(amplitudes))
    }

    /// The state on zero subsystems (a single unit amplitude).
    pub fn trivial() -> Self {
        Self { dims: Vec::new(), data: StateData::Pure(CVector::from_element(1, C64::new(1.0, 0.0))) }
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let total: usize = dims.iter().product();
        let rho = CMatrix::identity(total, total) / C64::new(total as f64, 0.0);
        Self { dims, data: StateData::Density(rho) }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Density(rho) => rho.clone(),
        }
    }

    pub fn to_density(&self) -> Self {
        Self { dims: self.dims.clone(), data: StateData::Density(self.density_matrix()) }
    }

    /// Squared norm for statevectors, trace for density matrices.
    pub fn weight(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared(),
            StateData::Density(rho) => rho.trace().re,
        }
    }

    pub fn norm(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm(),
            StateData::Density(rho) => rho.trace().re,
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= STRUCTURAL
    }

    pub fn normalized(&self) -> Result<Self> {
        let w = self.weight();
        if w <= ZERO_PROBABILITY {
            return Err(Error::InvalidInput("cannot normalize a zero state".into()));
        }
        let data = match &self.data {
            StateData::Pure(v) => StateData::Pure(v / C64::new(w.sqrt(), 0.0)),
            StateData::Density(rho) => StateData::Density(rho / C64::new(w, 0.0)),
        };
        Ok(Self { dims: self.dims.clone(), data })
    }

    /// `self ⊗ other`, pure when both factors are pure.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let data = match (&self.data, &other.data) {
            (StateData::Pure(a), StateData::Pure(b)) => StateData::Pure(a.kronecker(b)),
            _ => StateData::Density(self.density_matrix().kronecker(&other.density_matrix())),
        };
        Self { dims, data }
    }
}

fn check_finite<'a>(mut it: impl Iterator<Item = &'a C64>) -> Result<()> {
    if it.all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("non-finite entry".into()))
    }
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut d = CMatrix::zeros(n, n);
    for (i, v) in values.iter().enumerate() {
        d[(i, i)] = C64::new(v.max(0.0).sqrt(), 0.0);
    }
    &vectors * d * vectors.adjoint()
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

fn validate_indices(dims: &[usize], indices: &[usize]) -> Result<()> {
    let mut seen = vec![false; dims.len()];
    for &t in indices {
        if t >= dims.len() {
            return Err(Error::IndexOutOfRange { index: t, count: dims.len() });
        }
        if seen[t] {
            return Err(Error::DuplicateIndex(t));
        }
        seen[t] = true;
    }
    Ok(())
}

/// Flat-index offsets contributed by every joint value of `subset`
/// (big-endian in the order given).
fn subset_offsets(dims: &[usize], strides: &[usize], subset: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &t in subset {
        let mut next = Vec::with_capacity(offsets.len() * dims[t]);
        for &o in &offsets {
            for digit in 0..dims[t] {
                next.push(o + digit * strides[t]);
            }
        }
        offsets = next;
    }
    offsets
}

fn complement(count: usize, subset: &[usize]) -> Vec<usize> {
    (0..count).filter(|i| !subset.contains(i)).collect()
}

/// Applies `op` to `targets`, identity elsewhere. The operator need not be
/// unitary; the result is not renormalized.
pub fn apply_to_subsystems(state: &QuantumState, op: &CMatrix, targets: &[usize]) -> Result<QuantumState> {
    let dims = state.dims();
    validate_indices(dims, targets)?;
    let target_dim: usize = targets.iter().map(|&t| dims[t]).product();
    if op.shape() != (target_dim, target_dim) {
        return Err(Error::Dimension(format!(
            "operator of shape {:?} applied to subsystems {:?} of total dimension {}",
            op.shape(),
            targets,
            target_dim
        )));
    }
    let s = strides(dims);
    let local = subset_offsets(dims, &s, targets);
    let rest = complement(dims.len(), targets);
    let bases = subset_offsets(dims, &s, &rest);

    let data = match &state.data {
        StateData::Pure(v) => {
            let mut out = v.clone();
            gather_apply(out.as_mut_slice(), op, &local, &bases);
            StateData::Pure(out)
        }
        StateData::Density(rho) => {
            let n = rho.nrows();
            // Column-major storage: rows of column `col` are at col*n + r.
            let mut left = rho.clone();
            for col in 0..n {
                let slice = &mut left.as_mut_slice()[col * n..(col + 1) * n];
                gather_apply(slice, op, &local, &bases);
            }
            // (op ρ) op† = (op (op ρ)†)†
            let mut right = left.adjoint();
            for col in 0..n {
                let slice = &mut right.as_mut_slice()[col * n..(col + 1) * n];
                gather_apply(slice, op, &local, &bases);
            }
            StateData::Density(right.adjoint())
        }
    };
    Ok(QuantumState { dims: dims.to_vec(), data })
}

fn gather_apply(v: &mut [C64], op: &CMatrix, local: &[usize], bases: &[usize]) {
    let d = local.len();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    for &base in bases {
        for (a, &off) in local.iter().enumerate() {
            buf[a] = v[base + off];
        }
        for (a, &off) in local.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (b, x) in buf.iter().enumerate() {
                acc += op[(a, b)] * x;
            }
            v[base + off] = acc;
        }
    }
}

/// Result of a postselected projective measurement.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub targets: Vec<usize>,
    pub labels: Vec<usize>,
    /// Squared norm of the projected branch before renormalization.
    pub probability: f64,
    /// Renormalized state of the unmeasured subsystems, or `None` for a
    /// zero-probability branch.
    pub remainder: Option<QuantumState>,
}

/// Projects `targets` onto `labels` and removes them from the register,
/// without renormalizing.
pub fn project_branch(state: &QuantumState, targets: &[usize], labels: &[usize]) -> Result<QuantumState> {
    let dims = state.dims();
    validate_indices(dims, targets)?;
    if labels.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} labels for {} measured subsystems",
            labels.len(),
            targets.len()
        )));
    }
    for (&t, &l) in targets.iter().zip(labels) {
        if l >= dims[t] {
            return Err(Error::InvalidLabel { label: l, dim: dims[t] });
        }
    }
    let s = strides(dims);
    let fixed: usize = targets.iter().zip(labels).map(|(&t, &l)| l * s[t]).sum();
    let rest = complement(dims.len(), targets);
    let map = subset_offsets(dims, &s, &rest);
    let rest_dims: Vec<usize> = rest.iter().map(|&i| dims[i]).collect();

    let data = match &state.data {
        StateData::Pure(v) => StateData::Pure(CVector::from_iterator(
            map.len(),
            map.iter().map(|&m| v[m + fixed]),
        )),
        StateData::Density(rho) => {
            let r = map.len();
            StateData::Density(CMatrix::from_fn(r, r, |i, j| rho[(map[i] + fixed, map[j] + fixed)]))
        }
    };
    Ok(QuantumState { dims: rest_dims, data })
}

/// Postselects `targets` on the given basis labels.
pub fn measure_postselect(state: &QuantumState, targets: &[usize], labels: &[usize]) -> Result<MeasurementOutcome> {
    let branch = project_branch(state, targets, labels)?;
    let probability = branch.weight();
    let remainder = if probability <= ZERO_PROBABILITY {
        None
    } else {
        Some(branch.normalized()?)
    };
    Ok(MeasurementOutcome {
        targets: targets.to_vec(),
        labels: labels.to_vec(),
        probability,
        remainder,
    })
}

/// Reduced density matrix on `keep`. The kept subsystems appear in ascending
/// order of their original index.
pub fn partial_trace(state: &QuantumState, keep: &[usize]) -> Result<QuantumState> {
    let dims = state.dims();
    validate_indices(dims, keep)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let traced = complement(dims.len(), &keep);
    let s = strides(dims);
    let kmap = subset_offsets(dims, &s, &keep);
    let tmap = subset_offsets(dims, &s, &traced);
    let k = kmap.len();
    let rho = match &state.data {
        StateData::Pure(v) => CMatrix::from_fn(k, k, |a, b| {
            tmap.iter().map(|&t| v[kmap[a] + t] * v[kmap[b] + t].conj()).sum()
        }),
        StateData::Density(r) => CMatrix::from_fn(k, k, |a, b| {
            tmap.iter().map(|&t| r[(kmap[a] + t, kmap[b] + t)]).sum()
        }),
    };
    Ok(QuantumState {
        dims: keep.iter().map(|&i| dims[i]).collect(),
        data: StateData::Density(rho),
    })
}

/// Fidelity between two states: `|⟨a|b⟩|²` for pure pairs, `⟨a|ρ|a⟩` for a
/// pure/mixed pair and the Uhlmann fidelity `(Tr√(√ρ σ √ρ))²` otherwise.
/// Inputs are normalized first.
pub fn state_fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "fidelity between states of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let a = a.normalized()?;
    let b = b.normalized()?;
    let f = match (&a.data, &b.data) {
        (StateData::Pure(x), StateData::Pure(y)) => x.dotc(y).norm_sqr(),
        (StateData::Pure(x), StateData::Density(r)) | (StateData::Density(r), StateData::Pure(x)) => {
            x.dotc(&(r * x)).re
        }
        (StateData::Density(r), StateData::Density(s)) => {
            let sr = hermitian_sqrt(r);
            let inner = &sr * s * &sr;
            let (values, _) = hermitian_eigen(&inner);
            let t: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
            t * t
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{c, cnot, hadamard, haar_random_unitary, kron, pauli_x};
    use crate::rng_from_seed;
    use proptest::prelude::*;

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let err = (a - b).iter().fold(0.0f64, |m, x| m.max(x.norm()));
        assert!(err <= tol, "max deviation {err:e} > {tol:e}\n{a}\n{b}");
    }

    fn bell() -> QuantumState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        QuantumState::pure(vec![2, 2], CVector::from_vec(vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)]))
            .unwrap()
    }

    fn random_state(dims: Vec<usize>, seed: u64) -> QuantumState {
        let n: usize = dims.iter().product();
        let u = haar_random_unitary(n, &mut rng_from_seed(seed)).unwrap();
        QuantumState::pure(dims, u.column(0).into_owned()).unwrap()
    }

    #[test]
    fn x_on_second_qubit() {
        let s = QuantumState::basis(vec![2, 2], &[0, 0]).unwrap();
        let out = apply_to_subsystems(&s, &pauli_x(), &[1]).unwrap();
        assert_eq!(out, QuantumState::basis(vec![2, 2], &[0, 1]).unwrap());
    }

    #[test]
    fn bell_preparation() {
        let s = QuantumState::basis(vec![2, 2], &[0, 0]).unwrap();
        let s = apply_to_subsystems(&s, &hadamard(), &[0]).unwrap();
        let s = apply_to_subsystems(&s, &cnot(), &[0, 1]).unwrap();
        let diff = s.amplitudes().unwrap() - bell().amplitudes().unwrap();
        assert!(diff.norm() < STRUCTURAL);
    }

    #[test]
    fn reversed_target_order_swaps_roles() {
        // CNOT on targets [1, 0] has qubit 1 as control.
        let s = QuantumState::basis(vec![2, 2], &[0, 1]).unwrap();
        let out = apply_to_subsystems(&s, &cnot(), &[1, 0]).unwrap();
        assert_eq!(out, QuantumState::basis(vec![2, 2], &[1, 1]).unwrap());
    }

    #[test]
    fn unitary_then_inverse_restores() {
        let s = random_state(vec![2, 3, 2], 1);
        let u = haar_random_unitary(4, &mut rng_from_seed(2)).unwrap();
        let t = apply_to_subsystems(&s, &u, &[2, 0]).unwrap();
        let back = apply_to_subsystems(&t, &u.adjoint(), &[2, 0]).unwrap();
        let diff = back.amplitudes().unwrap() - s.amplitudes().unwrap();
        assert!(diff.norm() < STRUCTURAL);
    }

    #[test]
    fn density_application_matches_conjugation() {
        let s = random_state(vec![2, 2], 4).to_density();
        let u = haar_random_unitary(2, &mut rng_from_seed(5)).unwrap();
        let out = apply_to_subsystems(&s, &u, &[1]).unwrap();
        let full = kron(&CMatrix::identity(2, 2), &u);
        let expected = &full * s.density_matrix() * full.adjoint();
        assert_close(&out.density_matrix(), &expected, STRUCTURAL);
    }

    #[test]
    fn apply_errors() {
        let s = QuantumState::basis(vec![2, 2], &[0, 0]).unwrap();
        assert!(matches!(apply_to_subsystems(&s, &pauli_x(), &[0, 1]), Err(Error::Dimension(_))));
        assert!(matches!(apply_to_subsystems(&s, &cnot(), &[1, 1]), Err(Error::DuplicateIndex(1))));
        assert!(matches!(
            apply_to_subsystems(&s, &pauli_x(), &[2]),
            Err(Error::IndexOutOfRange { index: 2, count: 2 })
        ));
    }

    #[test]
    fn measure_plus_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QuantumState::ket(&[c(h, 0.), c(h, 0.)]).unwrap();
        let m = measure_postselect(&plus, &[0], &[0]).unwrap();
        assert!((m.probability - 0.5).abs() < STRUCTURAL);
        let rem = m.remainder.unwrap();
        assert!(rem.dims().is_empty());
        assert!((rem.amplitudes().unwrap()[0].norm() - 1.0).abs() < STRUCTURAL);
    }

    #[test]
    fn measure_orthogonal_branch_is_zero() {
        let zero = QuantumState::basis(vec![2], &[0]).unwrap();
        let m = measure_postselect(&zero, &[0], &[1]).unwrap();
        assert_eq!(m.probability, 0.0);
        assert!(m.remainder.is_none());
    }

    #[test]
    fn measure_invalid_label() {
        let zero = QuantumState::basis(vec![2], &[0]).unwrap();
        assert!(matches!(
            measure_postselect(&zero, &[0], &[2]),
            Err(Error::InvalidLabel { label: 2, dim: 2 })
        ));
    }

    #[test]
    fn bell_reduced_state_is_maximally_mixed() {
        let r = partial_trace(&bell(), &[0]).unwrap();
        assert_close(&r.density_matrix(), &(CMatrix::identity(2, 2) * c(0.5, 0.)), STRUCTURAL);
    }

    #[test]
    fn trace_out_nothing_is_identity_map() {
        let s = random_state(vec![2, 3], 9);
        let r = partial_trace(&s, &[0, 1]).unwrap();
        assert_close(&r.density_matrix(), &s.density_matrix(), STRUCTURAL);
    }

    #[test]
    fn fidelity_examples() {
        let zero = QuantumState::basis(vec![2], &[0]).unwrap();
        let one = QuantumState::basis(vec![2], &[1]).unwrap();
        let mixed = QuantumState::maximally_mixed(vec![2]);
        assert!((state_fidelity(&zero, &zero).unwrap() - 1.0).abs() < STRUCTURAL);
        assert!(state_fidelity(&zero, &one).unwrap().abs() < STRUCTURAL);
        assert!((state_fidelity(&zero, &mixed).unwrap() - 0.5).abs() < STRUCTURAL);
        assert!((state_fidelity(&mixed, &zero).unwrap() - 0.5).abs() < STRUCTURAL);
        // Uhlmann path agrees with the pure formula on pure inputs.
        let a = random_state(vec![3], 1);
        let b = random_state(vec![3], 2);
        let pure = state_fidelity(&a, &b).unwrap();
        let uhl = state_fidelity(&a.to_density(), &b.to_density()).unwrap();
        assert!((pure - uhl).abs() < 1e-7);
    }

    #[test]
    fn density_validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 1.), c(0., 1.), c(0., 0.)]);
        assert!(QuantumState::density(vec![2], bad).is_err());
        let neg = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]);
        assert!(QuantumState::density(vec![2], neg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unitary_preserves_norm(seed in any::<u64>(), target in 0usize..3) {
            let s = random_state(vec![2, 3, 2], seed);
            let d = [2, 3, 2][target];
            let u = haar_random_unitary(d, &mut rng_from_seed(seed ^ 0xabcd)).unwrap();
            let out = apply_to_subsystems(&s, &u, &[target]).unwrap();
            prop_assert!((out.norm() - 1.0).abs() <= STRUCTURAL);
        }

        #[test]
        fn kron_mixed_product(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let a = haar_random_unitary(2, &mut rng).unwrap() * c(0.3, 1.1);
            let b = haar_random_unitary(3, &mut rng).unwrap();
            let cc = haar_random_unitary(2, &mut rng).unwrap() * c(-0.7, 0.2);
            let d = haar_random_unitary(3, &mut rng).unwrap();
            let lhs = kron(&a, &b) * kron(&cc, &d);
            let rhs = kron(&(&a * &cc), &(&b * &d));
            prop_assert!((lhs - rhs).norm() < 1e-12);
            // bilinearity in the first argument
            let lin = kron(&(&a + &cc), &b);
            let split = kron(&a, &b) + kron(&cc, &b);
            prop_assert!((lin - split).norm() < 1e-12);
        }

        #[test]
        fn branch_probabilities_sum_to_one(seed in any::<u64>()) {
            let s = random_state(vec![2, 3, 2], seed);
            let mut total = 0.0;
            for a in 0..2 {
                for b in 0..3 {
                    total += measure_postselect(&s, &[0, 1], &[a, b]).unwrap().probability;
                }
            }
            prop_assert!((total - 1.0).abs() <= STRUCTURAL);
        }

        #[test]
        fn partial_trace_composes(seed in any::<u64>()) {
            let s = random_state(vec![2, 2, 3], seed);
            let once = partial_trace(&s, &[0]).unwrap();
            let twice = partial_trace(&partial_trace(&s, &[0, 1]).unwrap(), &[0]).unwrap();
            let err = (once.density_matrix() - twice.density_matrix()).norm();
            prop_assert!(err <= STRUCTURAL);
            prop_assert!((once.weight() - 1.0).abs() <= STRUCTURAL);
        }
    }
}
