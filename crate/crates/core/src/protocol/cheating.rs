use super::teleport::epr_pairs;
use crate::lcc::{sum_operation, LinearCombinationSpec};
use crate::qcore::{apply_to_subsystems, c, cnot, hadamard, project_branch, CMatrix, QuantumState, C64};
use crate::tol::STRUCTURAL;
use crate::{Error, Result};

/// Singular values below this count as zero when computing Schmidt ranks.
pub const SCHMIDT_TOLERANCE: f64 = 1e-10;

fn check_pair(spec: &LinearCombinationSpec, control: [C64; 2]) -> Result<()> {
    if spec.n() != 2 {
        return Err(Error::Dimension(format!("expected a two-term spec, got {} terms", spec.n())));
    }
    let norm: f64 = control.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > STRUCTURAL {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

/// Register `[q₁][q₂][q₃][φ…]` after each step of the circuit in which the
/// server skips its measurement:
///
/// 1. `|0⟩ ⊗ |Φ⁺⟩ ⊗ |φ⟩`
/// 2. `|0⟩⊗|0⟩ A` on the `q₃ = 0` branch and `B` on `q₃ = 1`
/// 3. the client prepares `α|0⟩ + β|1⟩` on `q₁`
/// 4. CNOT from `q₁` to `q₂`
/// 5. Hadamard on `q₁`
pub fn cheating_server_trace(
    spec: &LinearCombinationSpec,
    input: &QuantumState,
    control: [C64; 2],
) -> Result<Vec<QuantumState>> {
    check_pair(spec, control)?;
    crate::lcc::check_input(spec, input)?;
    let [alpha, beta] = control;
    let reg: Vec<usize> = (3..3 + input.dims().len()).collect();
    let s1 = QuantumState::basis(vec![2], &[0])?.tensor(&epr_pairs(1)).tensor(input);
    let targets: Vec<usize> = std::iter::once(2).chain(reg).collect();
    let s2 = apply_to_subsystems(&s1, &sum_operation(spec), &targets)?;
    let prep = CMatrix::from_row_slice(2, 2, &[alpha, -beta.conj(), beta, alpha.conj()]);
    let s3 = apply_to_subsystems(&s2, &prep, &[0])?;
    let s4 = apply_to_subsystems(&s3, &cnot(), &[0, 1])?;
    let s5 = apply_to_subsystems(&s4, &hadamard(), &[0])?;
    Ok(vec![s1, s2, s3, s4, s5])
}

/// `α|0⟩A|φ⟩ + β|1⟩B|φ⟩`: what the server holds after the client's
/// teleportation outcome `(0, 0)`, normalized.
pub fn cheating_server_state(spec: &LinearCombinationSpec, input: &QuantumState, control: [C64; 2]) -> Result<QuantumState> {
    let trace = cheating_server_trace(spec, input, control)?;
    project_branch(&trace[4], &[0, 1], &[0, 0])?.normalized()
}

/// Schmidt coefficients across the cut after the first `left` subsystems,
/// largest first.
pub fn schmidt_coefficients(state: &QuantumState, left: usize) -> Result<Vec<f64>> {
    let amps = state
        .amplitudes()
        .ok_or_else(|| Error::InvalidInput("Schmidt decomposition needs a pure state".into()))?;
    if left > state.dims().len() {
        return Err(Error::IndexOutOfRange { index: left, count: state.dims().len() });
    }
    let rows: usize = state.dims()[..left].iter().product();
    let cols = state.dim() / rows;
    let m = CMatrix::from_fn(rows, cols, |r, col| amps[r * cols + col]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

pub fn schmidt_rank(state: &QuantumState, left: usize) -> Result<usize> {
    Ok(schmidt_coefficients(state, left)?.iter().filter(|&&s| s > SCHMIDT_TOLERANCE).count())
}

/// The server's hoped-for product `(α|0⟩ + β|1⟩) ⊗ (αA + βB)|φ⟩`, normalized.
pub fn server_expected_state(spec: &LinearCombinationSpec, input: &QuantumState, control: [C64; 2]) -> Result<QuantumState> {
    check_pair(spec, control)?;
    crate::lcc::check_input(spec, input)?;
    let psi = input.amplitudes().ok_or_else(|| Error::InvalidInput("expected a pure input".into()))?;
    let target = (&spec.gates()[0] * control[0] + &spec.gates()[1] * control[1]) * psi;
    let target = QuantumState::pure(input.dims().to_vec(), target)?
        .normalized()
        .map_err(|_| Error::InvalidInput("(αA + βB)|φ⟩ vanishes".into()))?;
    Ok(QuantumState::ket(&control)?.tensor(&target))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    /// `|⟨Ψ(c₁)|Ψ(c₂)⟩|` for the states the server actually holds.
    pub observed_overlap: f64,
    /// `|⟨Φ(c₁)|Φ(c₂)⟩|` for the states it would need to produce.
    pub expected_overlap: f64,
    pub difference: f64,
    /// Orthogonal controls: both overlaps can vanish together and the
    /// comparison proves nothing.
    pub vacuous: bool,
}

fn overlap(a: &QuantumState, b: &QuantumState) -> f64 {
    a.amplitudes().unwrap().dotc(b.amplitudes().unwrap()).norm()
}

/// An isometry preserves inner products, so a nonzero `difference` shows that
/// no single server operation maps `Ψ(c)` to `Φ(c)` for both controls.
pub fn no_cloning_witness(
    a: &CMatrix,
    b: &CMatrix,
    phi: &QuantumState,
    c1: [C64; 2],
    c2: [C64; 2],
) -> Result<WitnessReport> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let spec = LinearCombinationSpec::new(vec![c(h, 0.), c(h, 0.)], vec![a.clone(), b.clone()])?;
    let observed = overlap(&cheating_server_state(&spec, phi, c1)?, &cheating_server_state(&spec, phi, c2)?);
    let expected = overlap(&server_expected_state(&spec, phi, c1)?, &server_expected_state(&spec, phi, c2)?);
    let control_overlap = (c1[0].conj() * c2[0] + c1[1].conj() * c2[1]).norm();
    Ok(WitnessReport {
        observed_overlap: observed,
        expected_overlap: expected,
        difference: observed - expected,
        vacuous: control_overlap <= STRUCTURAL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{haar_random_unitary, identity, pauli_x, state_fidelity};
    use crate::registry::named_state;
    use crate::rng_from_seed;
    use rand::Rng;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn xi_spec() -> LinearCombinationSpec {
        LinearCombinationSpec::new(vec![c(H, 0.), c(H, 0.)], vec![identity(2), pauli_x()]).unwrap()
    }

    fn random_control<R: Rng>(rng: &mut R) -> [C64; 2] {
        let u = haar_random_unitary(2, rng).unwrap();
        [u[(0, 0)], u[(1, 0)]]
    }

    #[test]
    fn explicit_example() {
        let zero = named_state("0").unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..20 {
            let ctl = random_control(&mut rng);
            let got = cheating_server_state(&xi_spec(), &zero, ctl).unwrap();
            let want = [ctl[0], c(0., 0.), c(0., 0.), ctl[1]];
            let v = got.amplitudes().unwrap();
            for (g, w) in v.iter().zip(want) {
                assert!((g - w).norm() < 1e-12);
            }
            assert_eq!(schmidt_rank(&got, 1).unwrap(), 2);
            assert_eq!(schmidt_rank(&server_expected_state(&xi_spec(), &zero, ctl).unwrap(), 1).unwrap(), 1);
        }
    }

    #[test]
    fn postselection_probability_is_a_quarter() {
        let trace = cheating_server_trace(&xi_spec(), &named_state("+").unwrap(), [c(0.6, 0.), c(0., 0.8)]).unwrap();
        assert_eq!(trace.len(), 5);
        let p = project_branch(&trace[4], &[0, 1], &[0, 0]).unwrap().weight();
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn alpha_one_is_product() {
        let mut rng = rng_from_seed(2);
        let a = haar_random_unitary(2, &mut rng).unwrap();
        let b = haar_random_unitary(2, &mut rng).unwrap();
        let spec = LinearCombinationSpec::new(vec![c(H, 0.), c(H, 0.)], vec![a.clone(), b]).unwrap();
        let phi = named_state("+i").unwrap();
        let got = cheating_server_state(&spec, &phi, [c(1., 0.), c(0., 0.)]).unwrap();
        assert_eq!(schmidt_rank(&got, 1).unwrap(), 1);
        let want = named_state("0").unwrap().tensor(&QuantumState::pure(vec![2], &a * phi.amplitudes().unwrap()).unwrap());
        assert!((state_fidelity(&got, &want).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn honest_server_finishes_with_target() {
        // The honest server measures q₃ in the X basis; outcome 0 leaves
        // (αA + βB)|φ⟩ on the register.
        let mut rng = rng_from_seed(3);
        let a = haar_random_unitary(2, &mut rng).unwrap();
        let b = haar_random_unitary(2, &mut rng).unwrap();
        let spec = LinearCombinationSpec::new(vec![c(H, 0.), c(H, 0.)], vec![a.clone(), b.clone()]).unwrap();
        let phi = QuantumState::ket(haar_random_unitary(2, &mut rng).unwrap().column(0).as_slice()).unwrap();
        let ctl = random_control(&mut rng);
        let s5 = cheating_server_trace(&spec, &phi, ctl).unwrap().pop().unwrap();
        let s6 = apply_to_subsystems(&s5, &hadamard(), &[2]).unwrap();
        let s7 = project_branch(&s6, &[0, 1, 2], &[0, 0, 0]).unwrap().normalized().unwrap();
        let want = (a * ctl[0] + b * ctl[1]) * phi.amplitudes().unwrap();
        let want = QuantumState::pure(vec![2], want).unwrap();
        assert!((state_fidelity(&s7, &want).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn witness_example_values() {
        let zero = named_state("0").unwrap();
        let r = no_cloning_witness(&identity(2), &pauli_x(), &zero, [c(1., 0.), c(0., 0.)], [c(H, 0.), c(H, 0.)]).unwrap();
        assert!((r.observed_overlap - H).abs() < 1e-12);
        assert!((r.expected_overlap - 0.5).abs() < 1e-12);
        assert!(!r.vacuous);
        let same = no_cloning_witness(&identity(2), &pauli_x(), &zero, [c(H, 0.), c(0., H)], [c(H, 0.), c(0., H)]).unwrap();
        assert!((same.observed_overlap - 1.0).abs() < 1e-12 && same.difference.abs() < 1e-12);
        let orth = no_cloning_witness(&identity(2), &pauli_x(), &zero, [c(1., 0.), c(0., 0.)], [c(0., 0.), c(1., 0.)]).unwrap();
        assert!(orth.vacuous);
    }

    #[test]
    fn random_witnesses_are_nonzero() {
        let mut rng = rng_from_seed(4);
        for _ in 0..100 {
            let a = haar_random_unitary(2, &mut rng).unwrap();
            let b = haar_random_unitary(2, &mut rng).unwrap();
            let phi = QuantumState::ket(haar_random_unitary(2, &mut rng).unwrap().column(0).as_slice()).unwrap();
            let r = no_cloning_witness(&a, &b, &phi, random_control(&mut rng), random_control(&mut rng)).unwrap();
            assert!(r.difference.abs() > 1e-6, "{r:?}");
        }
    }

    #[test]
    fn rejects_bad_controls() {
        let zero = named_state("0").unwrap();
        assert!(matches!(
            cheating_server_state(&xi_spec(), &zero, [c(1., 0.), c(1., 0.)]),
            Err(Error::NotNormalized(_))
        ));
        let four = crate::lcc::random_unitary_combination(4, 2, &mut rng_from_seed(0)).unwrap();
        assert!(matches!(cheating_server_state(&four, &zero, [c(1., 0.), c(0., 0.)]), Err(Error::Dimension(_))));
    }
}
