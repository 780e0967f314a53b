//! The linear-combination circuit (LCC).
//!
//! A target `U_T = Σ_j α_j V_j` with `Σ_j |α_j|² = 1` is realized on
//! postselection by encoding the coefficients in a `k`-qubit control register
//! (`n = 2^k` terms). Two circuits are provided:
//!
//! - [`run_lcc`]: the target is extended to `n·d` dimensions, split into `n`
//!   subspaces. Controlled subspace swaps route the input to subspace `j`, the
//!   block-diagonal sum operation applies `V_j` there, the swaps are undone,
//!   and Hadamards on the control precede the all-zero postselection. No
//!   controlled `V_j` is ever needed, so the gates may be black boxes.
//! - [`run_lcc_controlled_form`]: the reference circuit built from
//!   multiply-controlled `V_j` gates.
//!
//! The extended target is stored as a `k`-qubit path register followed by the
//! logical register, so basis element `|j·d + m⟩_T` is path `j`, logical `m`.
//!
//! The all-zero branch has amplitude `n^{-1/2} Σ_j α_j V_j |ψ⟩`, so the
//! success probability is `‖U_T ψ‖² / n`, which equals `1/n` whenever `U_T` is
//! unitary.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::qcore::{
    apply_to_subsystems, c, embed_controlled, hadamard, haar_random_unitary, identity, is_unitary,
    parse_matrix, project_branch, CMatrix, CVector, QuantumState, C64,
};
use crate::registry;
use crate::tol::{INPUT_UNITARY, STRUCTURAL, ZERO_PROBABILITY};
use crate::{Error, Result};

/// Coefficients `α_j` and gates `V_j` of a target `Σ_j α_j V_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCombinationSpec {
    coefficients: Vec<C64>,
    gates: Vec<CMatrix>,
}

impl LinearCombinationSpec {
    /// Requires a power-of-two number of terms, equally sized square gates and
    /// `Σ|α_j|² = 1` within 1e-12. Gates need not be unitary.
    pub fn new(coefficients: Vec<C64>, gates: Vec<CMatrix>) -> Result<Self> {
        let n = coefficients.len();
        if n != gates.len() {
            return Err(Error::Dimension(format!("{} coefficients for {} gates", n, gates.len())));
        }
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "number of terms must be a power of two, got {n}"
            )));
        }
        let d = gates[0].nrows();
        if d == 0 {
            return Err(Error::Dimension("gates must be at least 1x1".into()));
        }
        for (j, g) in gates.iter().enumerate() {
            if g.shape() != (d, d) {
                return Err(Error::Dimension(format!(
                    "gate {j} has shape {:?}, expected ({d}, {d})",
                    g.shape()
                )));
            }
            if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("gate {j} has non-finite entries")));
            }
        }
        let total: f64 = coefficients.iter().map(|a| a.norm_sqr()).sum();
        if (total - 1.0).abs() > STRUCTURAL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { coefficients, gates })
    }

    /// Like [`new`](Self::new) but rescales the coefficients to unit norm first.
    pub fn normalizing(coefficients: Vec<C64>, gates: Vec<CMatrix>) -> Result<Self> {
        let total: f64 = coefficients.iter().map(|a| a.norm_sqr()).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NotNormalized(total));
        }
        let s = C64::new(total.sqrt(), 0.0);
        Self::new(coefficients.into_iter().map(|a| a / s).collect(), gates)
    }

    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    /// Number of control qubits, `log₂ n`.
    pub fn k(&self) -> usize {
        self.n().trailing_zeros() as usize
    }

    pub fn d(&self) -> usize {
        self.gates[0].nrows()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn gates(&self) -> &[CMatrix] {
        &self.gates
    }

    /// `Σ_j α_j V_j`.
    pub fn combination(&self) -> CMatrix {
        self.coefficients
            .iter()
            .zip(&self.gates)
            .fold(CMatrix::zeros(self.d(), self.d()), |acc, (a, g)| acc + g * *a)
    }

    /// Indices of terms whose gate is not unitary.
    pub fn non_unitary_terms(&self) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| !is_unitary(g, INPUT_UNITARY))
            .map(|(j, _)| j)
            .collect()
    }
}

/// Outcome of one postselected LCC run.
#[derive(Debug, Clone)]
pub struct LccRunResult {
    pub success: bool,
    pub success_probability: f64,
    /// Normalized target state on success.
    pub output_state: Option<QuantumState>,
    /// Unnormalized postselected branch, `n^{-1/2} Σ_j α_j V_j |ψ⟩`.
    pub branch: QuantumState,
    /// Full register just before the control measurement.
    pub joint_state: QuantumState,
}

/// `Σ_j α_j |j⟩` on `k` qubits.
pub fn build_control_state(spec: &LinearCombinationSpec) -> QuantumState {
    QuantumState::pure(vec![2; spec.k()], CVector::from_column_slice(spec.coefficients()))
        .expect("coefficient count is 2^k")
}

/// The `(n·d)`-dimensional permutation exchanging `|m⟩ ↔ |j·d + m⟩` for `m < d`.
pub fn subspace_swap(j: usize, d: usize, n: usize) -> Result<CMatrix> {
    if j == 0 || j >= n {
        return Err(Error::InvalidParameter(format!("subspace index {j} outside 1..{n}")));
    }
    let size = n * d;
    let mut perm: Vec<usize> = (0..size).collect();
    for m in 0..d {
        perm.swap(m, j * d + m);
    }
    let mut out = CMatrix::zeros(size, size);
    for (col, &row) in perm.iter().enumerate() {
        out[(row, col)] = c(1., 0.);
    }
    Ok(out)
}

/// Block-diagonal `⊕_j V_j^{(j)}`.
pub fn sum_operation(spec: &LinearCombinationSpec) -> CMatrix {
    embed_controlled(spec.gates())
}

/// `|Ψ_ext⟩`: the input placed in subspace 0 of the extended target, as a
/// path register (`k` qubits) followed by the logical register.
pub fn extended_target_state(spec: &LinearCombinationSpec, input: &QuantumState) -> QuantumState {
    QuantumState::basis(vec![2; spec.k()], &vec![0; spec.k()])
        .expect("valid labels")
        .tensor(input)
}

/// `|j⟩⟨j| ⊗ X^{(0,j)} + Σ_{c≠j} |c⟩⟨c| ⊗ I`.
fn controlled_swap(j: usize, d: usize, n: usize) -> Result<CMatrix> {
    let blocks: Vec<CMatrix> = (0..n)
        .map(|cval| if cval == j { subspace_swap(j, d, n) } else { Ok(identity(n * d)) })
        .collect::<Result<_>>()?;
    Ok(embed_controlled(&blocks))
}

pub(crate) fn check_input(spec: &LinearCombinationSpec, input: &QuantumState) -> Result<()> {
    if input.dim() != spec.d() {
        return Err(Error::Dimension(format!(
            "input of dimension {} for gates of dimension {}",
            input.dim(),
            spec.d()
        )));
    }
    if !input.is_pure() {
        return Err(Error::InvalidInput("LCC input must be a statevector".into()));
    }
    if !input.is_normalized() {
        return Err(Error::InvalidInput(format!("input norm {} is not 1", input.norm())));
    }
    Ok(())
}

fn postselect_controls(
    joint: QuantumState,
    zero_registers: usize,
) -> Result<LccRunResult> {
    let targets: Vec<usize> = (0..zero_registers).collect();
    let branch = project_branch(&joint, &targets, &vec![0; zero_registers])?;
    let p = branch.weight();
    let output_state = if p > ZERO_PROBABILITY { Some(branch.normalized()?) } else { None };
    Ok(LccRunResult {
        success: output_state.is_some(),
        success_probability: p,
        output_state,
        branch,
        joint_state: joint,
    })
}

/// Controlled swaps, the sum operation, and the swaps undone, with `control`
/// the `k` control qubits and `target` the path qubits followed by the
/// logical subsystems. Hadamards and measurement are left to the caller.
pub(crate) fn apply_path_lcc(
    spec: &LinearCombinationSpec,
    state: &QuantumState,
    control: &[usize],
    target: &[usize],
) -> Result<QuantumState> {
    let (n, d) = (spec.n(), spec.d());
    let control_and_target: Vec<usize> = control.iter().chain(target).copied().collect();
    let mut state = state.clone();
    for j in 1..n {
        state = apply_to_subsystems(&state, &controlled_swap(j, d, n)?, &control_and_target)?;
    }
    state = apply_to_subsystems(&state, &sum_operation(spec), target)?;
    for j in (1..n).rev() {
        state = apply_to_subsystems(&state, &controlled_swap(j, d, n)?, &control_and_target)?;
    }
    Ok(state)
}

/// Path-extended LCC.
///
/// Register layout: `[control × k][path × k][input subsystems...]`.
pub fn run_lcc(spec: &LinearCombinationSpec, input: &QuantumState) -> Result<LccRunResult> {
    check_input(spec, input)?;
    let k = spec.k();
    let state = build_control_state(spec).tensor(&extended_target_state(spec, input));
    let control: Vec<usize> = (0..k).collect();
    let target: Vec<usize> = (k..2 * k + input.dims().len()).collect();
    let mut state = apply_path_lcc(spec, &state, &control, &target)?;
    for q in 0..k {
        state = apply_to_subsystems(&state, &hadamard(), &[q])?;
    }
    // After the swaps are undone the path register is back in |0…0⟩, so
    // projecting it alongside the controls costs nothing.
    postselect_controls(state, 2 * k)
}

/// Reference circuit with multiply-controlled `V_j` and no Hilbert-space
/// extension. Register layout: `[control × k][input subsystems...]`.
pub fn run_lcc_controlled_form(spec: &LinearCombinationSpec, input: &QuantumState) -> Result<LccRunResult> {
    check_input(spec, input)?;
    let k = spec.k();
    let all: Vec<usize> = (0..k + input.dims().len()).collect();
    let mut state = build_control_state(spec).tensor(input);
    state = apply_to_subsystems(&state, &sum_operation(spec), &all)?;
    for q in 0..k {
        state = apply_to_subsystems(&state, &hadamard(), &[q])?;
    }
    postselect_controls(state, k)
}

/// The operator the path-extended LCC applies on success, rescaled by `√n`
/// to undo the Hadamard normalization. Equals `Σ_j α_j V_j`.
pub fn implemented_operator(spec: &LinearCombinationSpec) -> Result<CMatrix> {
    let d = spec.d();
    let scale = C64::new((spec.n() as f64).sqrt(), 0.0);
    let mut out = CMatrix::zeros(d, d);
    for m in 0..d {
        let input = QuantumState::basis(vec![d], &[m])?;
        let run = run_lcc(spec, &input)?;
        let col = run.branch.amplitudes().expect("pure run") * scale;
        out.set_column(m, &col);
    }
    Ok(out)
}

/// Two-term spec for a controlled-`U`, from
/// `CU = (I+σ_z)/2 ⊗ I + (I−σ_z)/2 ⊗ U`. Each projector term is scaled by
/// `√2` so the coefficients are `(1/√2, 1/√2)`; the terms are therefore not
/// unitary, but their combination is exactly `CU`.
pub fn cu_linear_spec(u: &CMatrix) -> Result<LinearCombinationSpec> {
    if !u.is_square() {
        return Err(Error::Dimension(format!("controlled gate must be square, got {:?}", u.shape())));
    }
    if !is_unitary(u, INPUT_UNITARY) {
        return Err(Error::NotUnitary(crate::qcore::unitarity_deviation(u)));
    }
    let r2 = std::f64::consts::SQRT_2;
    let d = u.nrows();
    let zero = CMatrix::zeros(d, d);
    let v0 = embed_controlled(&[identity(d), zero.clone()]) * c(r2, 0.);
    let v1 = embed_controlled(&[zero, u.clone()]) * c(r2, 0.);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    LinearCombinationSpec::new(vec![c(h, 0.), c(h, 0.)], vec![v0, v1])
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Random spec with unitary gates whose combination is a Haar-random unitary.
///
/// Coefficients are a uniformly random unit vector. Gates are
/// `V_j = U_T Q D_j Q†` with Haar `U_T`, `Q` and diagonal unitaries `D_j`
/// satisfying `Σ_j α_j D_j = I`; the phases of each diagonal entry are drawn
/// at random subject to that closure condition.
pub fn random_unitary_combination<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<LinearCombinationSpec> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("need a power of two ≥ 2 terms, got {n}")));
    }
    let raw: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let alpha: Vec<C64> = raw.iter().map(|z| z / norm).collect();

    let target = haar_random_unitary(d, rng)?;
    let basis = haar_random_unitary(d, rng)?;
    let mut phases = vec![vec![C64::new(1.0, 0.0); d]; n];
    for m in 0..d {
        let psi = closing_phases(&alpha, rng)?;
        for j in 0..n {
            phases[j][m] = psi[j] * alpha[j].conj() / alpha[j].norm();
        }
    }
    let gates = phases
        .iter()
        .map(|diag| {
            let dm = CMatrix::from_diagonal(&CVector::from_column_slice(diag));
            &target * &basis * dm * basis.adjoint()
        })
        .collect();
    LinearCombinationSpec::new(alpha, gates)
}

/// Unit phasors `w_j` with `Σ_j |α_j| w_j = 1`.
fn closing_phases<R: Rng + ?Sized>(alpha: &[C64], rng: &mut R) -> Result<Vec<C64>> {
    let a: Vec<f64> = alpha.iter().map(|z| z.norm()).collect();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&x, &y| a[y].total_cmp(&a[x]));
    let (p, q) = (order[0], order[1]);
    for _ in 0..100_000 {
        let mut w = vec![C64::new(1.0, 0.0); a.len()];
        let mut r = C64::new(1.0, 0.0);
        for &j in &order[2..] {
            w[j] = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            r -= w[j] * a[j];
        }
        let big_r = r.norm();
        if big_r < (a[p] - a[q]).abs() || big_r > a[p] + a[q] || big_r == 0.0 {
            continue;
        }
        let cos_g = ((a[p] * a[p] + big_r * big_r - a[q] * a[q]) / (2.0 * a[p] * big_r)).clamp(-1.0, 1.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        w[p] = C64::from_polar(1.0, r.arg() + sign * cos_g.acos());
        let rest = r - w[p] * a[p];
        w[q] = if a[q] > 0.0 { rest / rest.norm() } else { C64::new(1.0, 0.0) };
        return Ok(w);
    }
    Err(Error::InvalidParameter("could not close coefficient polygon".into()))
}

/// JSON spec file: `coefficients` as `[re, im]` pairs, `gates` as named gates
/// or matrix literals (one string per row), and an `input_state`.
#[derive(Debug, Clone, Deserialize)]
pub struct SpecFile {
    pub coefficients: Vec<[f64; 2]>,
    pub gates: Vec<GateEntry>,
    #[serde(default)]
    pub input_state: Option<StateEntry>,
    /// Rescale the coefficients to unit norm before validation.
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GateEntry {
    Named(String),
    Rows(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateEntry {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

impl GateEntry {
    pub fn resolve(&self) -> Result<CMatrix> {
        match self {
            GateEntry::Named(name) => registry::named_gate(name),
            GateEntry::Rows(rows) => parse_matrix(&rows.join("\n")),
        }
    }
}

impl StateEntry {
    /// Named single-qubit states: `0`, `1`, `+`, `-`, `+i`, `-i`.
    pub fn resolve(&self) -> Result<QuantumState> {
        match self {
            StateEntry::Named(name) => registry::named_state(name),
            StateEntry::Amplitudes(a) => {
                QuantumState::ket(&a.iter().map(|[re, im]| c(*re, *im)).collect::<Vec<_>>())
            }
        }
    }
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn spec(&self) -> Result<LinearCombinationSpec> {
        let coefficients = self.coefficients.iter().map(|[re, im]| c(*re, *im)).collect();
        let gates = self.gates.iter().map(GateEntry::resolve).collect::<Result<Vec<_>>>()?;
        if self.normalize {
            LinearCombinationSpec::normalizing(coefficients, gates)
        } else {
            LinearCombinationSpec::new(coefficients, gates)
        }
    }

    /// The input state, defaulting to `|0⟩` of the gate dimension.
    pub fn input(&self, d: usize) -> Result<QuantumState> {
        match &self.input_state {
            Some(s) => s.resolve(),
            None => QuantumState::basis(vec![d], &[0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{cnot, pauli_x, phase_aligned_distance};
    use crate::rng_from_seed;
    use proptest::prelude::*;

    fn vec_of(state: &QuantumState) -> CMatrix {
        let v = state.amplitudes().unwrap();
        CMatrix::from_column_slice(v.len(), 1, v.as_slice())
    }

    fn random_input(d: usize, seed: u64) -> QuantumState {
        let u = haar_random_unitary(d, &mut rng_from_seed(seed)).unwrap();
        QuantumState::ket(u.column(0).as_slice()).unwrap()
    }

    /// Normalized `Σ α_j V_j |ψ⟩` computed by direct matrix-vector product.
    fn direct(spec: &LinearCombinationSpec, input: &QuantumState) -> CMatrix {
        let v = spec.combination() * vec_of(input);
        let norm = v.norm();
        v / C64::new(norm, 0.0)
    }

    #[test]
    fn control_state_examples() {
        let spec = LinearCombinationSpec::new(vec![c(1., 0.), c(0., 0.)], vec![identity(2), pauli_x()]).unwrap();
        assert_eq!(build_control_state(&spec), QuantumState::basis(vec![2], &[0]).unwrap());

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = LinearCombinationSpec::new(vec![c(h, 0.), c(h, 0.)], vec![identity(2), pauli_x()]).unwrap();
        let ctrl = build_control_state(&spec);
        assert_eq!(ctrl.amplitudes().unwrap().as_slice(), &[c(h, 0.), c(h, 0.)]);
    }

    #[test]
    fn unnormalized_coefficients_rejected() {
        let err = LinearCombinationSpec::new(vec![c(0.9239, 0.), c(0.3827, 0.)], vec![identity(2), pauli_x()]);
        assert!(matches!(err, Err(Error::NotNormalized(_))));
        assert!(LinearCombinationSpec::normalizing(vec![c(0.9239, 0.), c(0.3827, 0.)], vec![identity(2), pauli_x()])
            .is_ok());
        let three = LinearCombinationSpec::normalizing(vec![c(1., 0.); 3], vec![identity(2); 3]);
        assert!(matches!(three, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn subspace_swap_examples() {
        assert_eq!(subspace_swap(1, 1, 2).unwrap(), pauli_x());
        let s = subspace_swap(1, 2, 4).unwrap();
        assert_eq!(&s * &s, identity(8));
        assert!(subspace_swap(0, 2, 4).is_err());
        assert!(subspace_swap(4, 2, 4).is_err());
    }

    #[test]
    fn swap_moves_subspace_zero_to_j() {
        let (d, n) = (3, 4);
        let psi = random_input(d, 21);
        let mut ext = CVector::zeros(n * d);
        for m in 0..d {
            ext[m] = psi.amplitudes().unwrap()[m];
        }
        for j in 1..n {
            let moved = subspace_swap(j, d, n).unwrap() * &ext;
            for idx in 0..n * d {
                let expected = if idx / d == j { ext[idx % d] } else { c(0., 0.) };
                assert_eq!(moved[idx], expected);
            }
        }
    }

    #[test]
    fn sum_operation_examples() {
        let spec = LinearCombinationSpec::new(
            vec![c(std::f64::consts::FRAC_1_SQRT_2, 0.), c(std::f64::consts::FRAC_1_SQRT_2, 0.)],
            vec![identity(2), pauli_x()],
        )
        .unwrap();
        assert_eq!(sum_operation(&spec), cnot());
        let spec = random_unitary_combination(4, 3, &mut rng_from_seed(2)).unwrap();
        let sum = sum_operation(&spec);
        for (j, g) in spec.gates().iter().enumerate() {
            assert_eq!(sum.view((3 * j, 3 * j), (3, 3)).into_owned(), *g);
        }
    }

    #[test]
    fn trivial_coefficients_pass_input_through() {
        let spec = LinearCombinationSpec::new(
            vec![c(1., 0.), c(0., 0.)],
            vec![identity(2), haar_random_unitary(2, &mut rng_from_seed(1)).unwrap()],
        )
        .unwrap();
        let psi = random_input(2, 3);
        let run = run_lcc(&spec, &psi).unwrap();
        assert!(run.success);
        assert!((run.success_probability - 0.5).abs() < STRUCTURAL);
        let out = run.output_state.unwrap();
        assert!(phase_aligned_distance(&vec_of(&out), &vec_of(&psi)).unwrap() < 1e-10);
    }

    #[test]
    fn unused_subspaces_start_empty() {
        let spec = random_unitary_combination(4, 2, &mut rng_from_seed(8)).unwrap();
        let ext = extended_target_state(&spec, &random_input(2, 9));
        let amps = ext.amplitudes().unwrap();
        for idx in spec.d()..amps.len() {
            assert_eq!(amps[idx], c(0., 0.));
        }
    }

    #[test]
    fn degenerate_combination_reports_failure() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = LinearCombinationSpec::new(vec![c(h, 0.), c(h, 0.)], vec![identity(2), identity(2) * c(-1., 0.)])
            .unwrap();
        let run = run_lcc(&spec, &random_input(2, 4)).unwrap();
        assert!(!run.success);
        assert!(run.success_probability < 1e-28);
        assert!(run.output_state.is_none());
    }

    #[test]
    fn non_unitary_terms_are_flagged_and_simulated() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let projector = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let spec = LinearCombinationSpec::new(vec![c(h, 0.), c(h, 0.)], vec![identity(2), projector]).unwrap();
        assert_eq!(spec.non_unitary_terms(), vec![1]);
        let psi = random_input(2, 5);
        let run = run_lcc(&spec, &psi).unwrap();
        let unnorm = spec.combination() * vec_of(&psi);
        assert!((run.success_probability - unnorm.norm_squared() / 2.0).abs() < STRUCTURAL);
    }

    #[test]
    fn input_must_match_and_be_normalized() {
        let spec = random_unitary_combination(2, 2, &mut rng_from_seed(1)).unwrap();
        assert!(matches!(run_lcc(&spec, &random_input(3, 1)), Err(Error::Dimension(_))));
        let half = QuantumState::ket(&[c(0.5, 0.), c(0., 0.)]).unwrap();
        assert!(matches!(run_lcc(&spec, &half), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn controlled_form_trivial_coefficients() {
        let mut rng = rng_from_seed(12);
        let gates: Vec<CMatrix> = (0..4).map(|_| haar_random_unitary(2, &mut rng).unwrap()).collect();
        let spec = LinearCombinationSpec::new(vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)], gates.clone()).unwrap();
        let psi = random_input(2, 13);
        let run = run_lcc_controlled_form(&spec, &psi).unwrap();
        assert!((run.success_probability - 0.25).abs() < STRUCTURAL);
        let expected = &gates[0] * vec_of(&psi);
        assert!(phase_aligned_distance(&vec_of(&run.output_state.unwrap()), &expected).unwrap() < 1e-12);
    }

    #[test]
    fn cu_spec_reproduces_controlled_gates() {
        let spec = cu_linear_spec(&identity(2)).unwrap();
        assert_eq!(spec.n(), 2);
        assert!((spec.combination() - identity(4)).norm() < 1e-15);

        let spec = cu_linear_spec(&pauli_x()).unwrap();
        assert!((spec.combination() - cnot()).norm() < 1e-15);
        assert!((implemented_operator(&spec).unwrap() - cnot()).norm() < 1e-12);

        let u = haar_random_unitary(4, &mut rng_from_seed(31)).unwrap();
        let spec = cu_linear_spec(&u).unwrap();
        assert_eq!(spec.k(), 1);
        let cu = embed_controlled(&[identity(4), u]);
        let psi = random_input(8, 32);
        let run = run_lcc(&spec, &psi).unwrap();
        assert!((run.success_probability - 0.5).abs() < 1e-12);
        let expected = cu * vec_of(&psi);
        assert!(phase_aligned_distance(&vec_of(&run.output_state.unwrap()), &expected).unwrap() < 1e-10);

        assert!(matches!(cu_linear_spec(&(pauli_x() * c(2., 0.))), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn random_combination_is_unitary_with_unitary_terms() {
        let mut rng = rng_from_seed(77);
        for &(n, d) in &[(2, 2), (4, 4), (8, 2)] {
            let spec = random_unitary_combination(n, d, &mut rng).unwrap();
            assert!(spec.non_unitary_terms().is_empty());
            assert!(crate::qcore::unitarity_deviation(&spec.combination()) < 1e-12);
        }
    }

    #[test]
    fn spec_file_with_named_and_literal_gates() {
        let text = r#"{
            "coefficients": [[0.7071067811865476, 0], [0, 0.7071067811865476]],
            "gates": ["X", ["1+0j 0+0j", "0+0j -1+0j"]],
            "input_state": "+"
        }"#;
        let file = SpecFile::parse(text).unwrap();
        let spec = file.spec().unwrap();
        assert_eq!(spec.gates()[0], pauli_x());
        assert_eq!(spec.gates()[1], crate::qcore::pauli_z());
        assert_eq!(file.input(2).unwrap().dim(), 2);
        assert!(matches!(SpecFile::parse("{"), Err(Error::Parse(_))));
        let unknown = SpecFile::parse(r#"{"coefficients": [[1,0],[0,0]], "gates": ["Q","X"]}"#).unwrap();
        assert!(matches!(unknown.spec(), Err(Error::UnknownName(_))));
    }

    #[test]
    fn kron_terms_work_as_gates() {
        // Tensor-product gates act on a two-qubit input given as dims [2, 2].
        let mut rng = rng_from_seed(40);
        let spec = random_unitary_combination(2, 4, &mut rng).unwrap();
        let u = haar_random_unitary(4, &mut rng).unwrap();
        let psi = QuantumState::pure(vec![2, 2], u.column(0).into_owned()).unwrap();
        let run = run_lcc(&spec, &psi).unwrap();
        let expected = spec.combination() * vec_of(&psi);
        assert!(phase_aligned_distance(&vec_of(&run.output_state.unwrap()), &expected).unwrap() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn lcc_output_and_probability(seed in any::<u64>(), kn in 1usize..4, dsel in 0usize..2) {
            let n = 1 << kn;
            let d = [2, 4][dsel];
            let mut rng = rng_from_seed(seed);
            let spec = random_unitary_combination(n, d, &mut rng).unwrap();
            let psi = random_input(d, seed.wrapping_add(1));
            let run = run_lcc(&spec, &psi).unwrap();
            prop_assert!((run.success_probability - 1.0 / n as f64).abs() <= STRUCTURAL);
            let out = vec_of(run.output_state.as_ref().unwrap());
            prop_assert!(phase_aligned_distance(&out, &direct(&spec, &psi)).unwrap() <= 1e-10);

            let reference = run_lcc_controlled_form(&spec, &psi).unwrap();
            prop_assert!((reference.success_probability - run.success_probability).abs() <= 1e-12);
            let ref_out = vec_of(reference.output_state.as_ref().unwrap());
            prop_assert!(phase_aligned_distance(&out, &ref_out).unwrap() <= 1e-12);
        }

        #[test]
        fn general_probability_is_branch_norm_over_n(seed in any::<u64>()) {
            // Arbitrary unitary terms: p = ‖Σ α_j V_j ψ‖² / n.
            let mut rng = rng_from_seed(seed);
            let alpha: Vec<C64> = (0..4).map(|_| complex_gaussian(&mut rng)).collect();
            let gates: Vec<CMatrix> = (0..4).map(|_| haar_random_unitary(2, &mut rng).unwrap()).collect();
            let spec = LinearCombinationSpec::normalizing(alpha, gates).unwrap();
            let psi = random_input(2, seed ^ 5);
            let run = run_lcc(&spec, &psi).unwrap();
            let expected = (spec.combination() * vec_of(&psi)).norm_squared() / 4.0;
            prop_assert!((run.success_probability - expected).abs() <= STRUCTURAL);
        }
    }
}
