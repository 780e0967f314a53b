use rand::Rng;
use serde::Serialize;

use crate::qcore::{c, hermitian_eigen, CMatrix, CVector, QuantumState};
use crate::{Error, Result};

const EPS_SLACK: f64 = 1e-12;

/// `ρ_m = ((1+ε)/n) 𝟙 − ερ`, which makes `ε/(1+ε) ρ + 1/(1+ε) ρ_m = 𝟙/n`.
pub fn make_decoy(rho: &QuantumState, epsilon: f64) -> Result<QuantumState> {
    let n = rho.dim();
    if n < 2 {
        return Err(Error::InvalidParameter("decoys need at least two dimensions".into()));
    }
    let max = 1.0 / (n as f64 - 1.0);
    if !(epsilon > 0.0 && epsilon <= max + EPS_SLACK) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, {max}]")));
    }
    let decoy = CMatrix::identity(n, n) * c((1.0 + epsilon) / n as f64, 0.) - rho.density_matrix() * c(epsilon, 0.);
    QuantumState::density(rho.dims().to_vec(), decoy)
}

/// `ε/(1+ε) ρ + 1/(1+ε) ρ_m`.
pub fn decoy_mixture(rho: &QuantumState, epsilon: f64) -> Result<CMatrix> {
    let decoy = make_decoy(rho, epsilon)?;
    let w = 1.0 / (1.0 + epsilon);
    Ok(rho.density_matrix() * c(epsilon * w, 0.) + decoy.density_matrix() * c(w, 0.))
}

/// What the client sends on one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "index")]
pub enum SendLabel {
    Compute,
    /// Eigenstate of the decoy with the given index.
    Decoy(usize),
    /// Basis state `|i⟩`.
    Verify(usize),
}

/// Client send policy: the control state with probability `τε/(1+ε)`, a
/// decoy eigenstate with total probability `τ/(1+ε)` and each basis state
/// with probability `(1−τ)/n`.
#[derive(Debug, Clone)]
pub struct SendPolicy {
    control: QuantumState,
    epsilon: f64,
    tau: f64,
    decoy: QuantumState,
    decoy_weights: Vec<f64>,
    decoy_states: Vec<QuantumState>,
}

impl SendPolicy {
    /// `tau` in `(0, 1]`; `tau = 1` disables verification runs.
    pub fn new(control: QuantumState, epsilon: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidParameter(format!("tau {tau} outside (0, 1]")));
        }
        let decoy = make_decoy(&control, epsilon)?;
        let (values, vectors) = hermitian_eigen(&decoy.density_matrix());
        let mut decoy_weights = Vec::new();
        let mut decoy_states = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v <= 1e-14 {
                continue;
            }
            let col: CVector = vectors.column(i).into_owned();
            decoy_weights.push(v);
            decoy_states.push(QuantumState::pure(control.dims().to_vec(), canonical_phase(col))?);
        }
        let total: f64 = decoy_weights.iter().sum();
        for w in &mut decoy_weights {
            *w /= total;
        }
        Ok(Self { control, epsilon, tau, decoy, decoy_weights, decoy_states })
    }

    pub fn n(&self) -> usize {
        self.control.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn control(&self) -> &QuantumState {
        &self.control
    }

    pub fn decoy(&self) -> &QuantumState {
        &self.decoy
    }

    /// Decoy eigenstates and their sampling weights.
    pub fn decoy_ensemble(&self) -> (&[f64], &[QuantumState]) {
        (&self.decoy_weights, &self.decoy_states)
    }

    pub fn p_control(&self) -> f64 {
        self.tau * self.epsilon / (1.0 + self.epsilon)
    }

    pub fn p_decoy(&self) -> f64 {
        self.tau / (1.0 + self.epsilon)
    }

    /// Probability of each individual basis state.
    pub fn p_basis(&self) -> f64 {
        (1.0 - self.tau) / self.n() as f64
    }

    pub fn state_for(&self, label: SendLabel) -> Result<QuantumState> {
        match label {
            SendLabel::Compute => Ok(self.control.clone()),
            SendLabel::Decoy(i) => self
                .decoy_states
                .get(i)
                .cloned()
                .ok_or(Error::IndexOutOfRange { index: i, count: self.decoy_states.len() }),
            SendLabel::Verify(i) => {
                let dims = self.control.dims().to_vec();
                let n = self.n();
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, count: n });
                }
                let mut v = CVector::zeros(n);
                v[i] = c(1., 0.);
                QuantumState::pure(dims, v)
            }
        }
    }

    /// What the server sees on average: `τ·𝟙/n + (1−τ)/n Σᵢ|i⟩⟨i|`.
    pub fn server_average(&self) -> CMatrix {
        let n = self.n();
        let mut avg = self.control.density_matrix() * c(self.p_control(), 0.);
        for (w, s) in self.decoy_weights.iter().zip(&self.decoy_states) {
            avg += s.density_matrix() * c(self.p_decoy() * w, 0.);
        }
        for i in 0..n {
            avg[(i, i)] += c(self.p_basis(), 0.);
        }
        avg
    }
}

/// Rotates the global phase so the first non-negligible entry is real positive.
fn canonical_phase(v: CVector) -> CVector {
    match v.iter().find(|z| z.norm() > 1e-12) {
        Some(z) => {
            let phase = z.conj() / z.norm();
            v * phase
        }
        None => v,
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

pub fn sample_label<R: Rng + ?Sized>(policy: &SendPolicy, rng: &mut R) -> SendLabel {
    let u: f64 = rng.random();
    if u < policy.p_control() {
        SendLabel::Compute
    } else if u < policy.p_control() + policy.p_decoy() {
        SendLabel::Decoy(sample_index(&policy.decoy_weights, rng))
    } else {
        SendLabel::Verify(rng.random_range(0..policy.n()))
    }
}

pub fn sample_send<R: Rng + ?Sized>(policy: &SendPolicy, rng: &mut R) -> (SendLabel, QuantumState) {
    let label = sample_label(policy, rng);
    let state = policy.state_for(label).expect("sampled labels are in range");
    (label, state)
}
