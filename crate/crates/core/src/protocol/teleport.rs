use rand::Rng;

use crate::qcore::{
    apply_to_subsystems, c, cnot, hadamard, measure_postselect, pauli_x, pauli_z, CVector, MeasurementOutcome,
    QuantumState,
};
use crate::{Error, Result};

/// Qubit indices of one EPR pair: the sender half sits next to the state to
/// be teleported, the receiver half is where it arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EprPair {
    pub sender: usize,
    pub receiver: usize,
}

/// `|Φ⁺⟩^{⊗k}` laid out as `[a₀ … a_{k−1}][b₀ … b_{k−1}]`, pairing `aᵢ` with
/// `bᵢ`. As a vector this is `n^{-1/2} Σ_j |j⟩|j⟩` with `n = 2^k`.
pub fn epr_pairs(k: usize) -> QuantumState {
    let n = 1usize << k;
    let amp = c((1.0 / n as f64).sqrt(), 0.);
    let mut v = CVector::zeros(n * n);
    for j in 0..n {
        v[j * n + j] = amp;
    }
    QuantumState::pure(vec![2; 2 * k], v).expect("2^k x 2^k amplitudes")
}

fn check_qubits(state: &QuantumState, indices: &[usize]) -> Result<()> {
    for (p, &i) in indices.iter().enumerate() {
        if i >= state.dims().len() {
            return Err(Error::IndexOutOfRange { index: i, count: state.dims().len() });
        }
        if state.dims()[i] != 2 {
            return Err(Error::Dimension(format!("subsystem {i} is not a qubit")));
        }
        if indices[..p].contains(&i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// Bell-basis rotation `(H ⊗ I) CNOT` on each `(source, sender)` pair, so that
/// computational outcome `(0, 0)` corresponds to `|Φ⁺⟩`.
fn rotate_to_bell(state: &QuantumState, pairs: &[(usize, usize)]) -> Result<QuantumState> {
    let mut s = state.clone();
    for &(source, sender) in pairs {
        s = apply_to_subsystems(&s, &cnot(), &[source, sender])?;
        s = apply_to_subsystems(&s, &hadamard(), &[source])?;
    }
    Ok(s)
}

/// Bell measurements on each `(source, sender)` pair, postselected on all
/// outcomes `0`. The measured qubits are removed from the register.
pub fn bell_postselect(state: &QuantumState, pairs: &[(usize, usize)]) -> Result<MeasurementOutcome> {
    let flat: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    check_qubits(state, &flat)?;
    let rotated = rotate_to_bell(state, pairs)?;
    measure_postselect(&rotated, &flat, &vec![0; flat.len()])
}

/// Teleports qubit `source` through `epr`, keeping only the `(0, 0)` outcome
/// (probability 1/4). Source and sender are removed; the receiver then holds
/// the source state.
pub fn teleport_postselected(state: &QuantumState, source: usize, epr: EprPair) -> Result<MeasurementOutcome> {
    check_qubits(state, &[source, epr.sender, epr.receiver])?;
    bell_postselect(state, &[(source, epr.sender)])
}

/// All four outcomes `(m₁, m₂)` of the teleportation Bell measurement, where
/// `m₁` is the source qubit and `m₂` the sender qubit.
pub fn teleport_branches(state: &QuantumState, source: usize, epr: EprPair) -> Result<Vec<MeasurementOutcome>> {
    check_qubits(state, &[source, epr.sender, epr.receiver])?;
    let rotated = rotate_to_bell(state, &[(source, epr.sender)])?;
    let mut out = Vec::with_capacity(4);
    for m1 in 0..2 {
        for m2 in 0..2 {
            out.push(measure_postselect(&rotated, &[source, epr.sender], &[m1, m2])?);
        }
    }
    Ok(out)
}

/// Index of `receiver` after `removed` subsystems are dropped.
pub(crate) fn shifted(receiver: usize, removed: &[usize]) -> usize {
    receiver - removed.iter().filter(|&&r| r < receiver).count()
}

/// Deterministic teleportation: samples a Bell outcome and, if allowed,
/// applies `Z^{m₁} X^{m₂}` to the receiver. Returns the post-measurement
/// state (source and sender removed) and the outcome bits.
pub fn teleport_corrected<R: Rng + ?Sized>(
    state: &QuantumState,
    source: usize,
    epr: EprPair,
    allow_corrections: bool,
    rng: &mut R,
) -> Result<(QuantumState, [usize; 2])> {
    let branches = teleport_branches(state, source, epr)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut pick = branches.len() - 1;
    for (i, b) in branches.iter().enumerate() {
        acc += b.probability;
        if u < acc && b.remainder.is_some() {
            pick = i;
            break;
        }
    }
    while branches[pick].remainder.is_none() {
        pick -= 1;
    }
    let outcome = [branches[pick].labels[0], branches[pick].labels[1]];
    let mut out = branches.into_iter().nth(pick).and_then(|b| b.remainder).expect("nonzero branch");
    if allow_corrections {
        let r = shifted(epr.receiver, &[source, epr.sender]);
        if outcome[1] == 1 {
            out = apply_to_subsystems(&out, &pauli_x(), &[r])?;
        }
        if outcome[0] == 1 {
            out = apply_to_subsystems(&out, &pauli_z(), &[r])?;
        }
    }
    Ok((out, outcome))
}
