use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::decoy::{sample_index, sample_label, SendLabel, SendPolicy};
use super::teleport::{bell_postselect, epr_pairs, teleport_corrected, EprPair};
use crate::lcc::{apply_path_lcc, build_control_state, check_input, LinearCombinationSpec, SpecFile, StateEntry};
use crate::qcore::{
    apply_to_subsystems, hadamard, kron_all, partial_trace, project_branch, state_fidelity, CMatrix, CVector,
    QuantumState,
};
use crate::registry;
use crate::{Error, Result};

/// Basis an intercepting party measures the in-flight control register in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterceptBasis {
    /// Leaves verification states `|i⟩` untouched, so it is never detected.
    Computational,
    /// Product Hadamard basis.
    #[default]
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServerBehavior {
    Honest,
    /// Reports LCC success without measuring its halves of the control
    /// channels, keeping them entangled with the register.
    SkipMeasurement,
    /// On each attempt, with probability `fraction`, the control register is
    /// measured in `basis` and resent in the observed basis state.
    Intercept {
        fraction: f64,
        #[serde(default)]
        basis: InterceptBasis,
    },
}

/// How the client audits verification rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    /// One projective measurement onto `V_i|ψ⟩`: passes with probability
    /// equal to the fidelity of the returned state.
    Projective,
    /// Passes when the exact fidelity is at least the threshold.
    Threshold(f64),
}

impl Default for VerifyMode {
    fn default() -> Self {
        VerifyMode::Threshold(1.0 - 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub rounds: usize,
    pub include_input_teleport: bool,
    pub include_output_teleport: bool,
    pub verify: VerifyMode,
    /// Cap on attempts per round, and on LCC repetitions per attempt.
    pub max_attempts: usize,
}

impl SessionConfig {
    pub fn new(rounds: usize) -> Self {
        Self {
            rounds,
            include_input_teleport: false,
            include_output_teleport: false,
            verify: VerifyMode::default(),
            max_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    #[serde(flatten)]
    pub label: SendLabel,
    pub success: bool,
    pub attempts: usize,
    pub input_teleport_runs: usize,
    pub lcc_runs: usize,
    pub intercepted: usize,
    pub server_message: &'static str,
    pub client_outcome: Vec<u8>,
    pub output_teleport_outcomes: Vec<[usize; 2]>,
    /// Fidelity with the expected output `Σ_j s_j V_j|ψ⟩` for sent state `s`.
    pub fidelity: Option<f64>,
    pub verify_passed: Option<bool>,
    /// Amplitudes of the client's final state when it is pure.
    pub final_state: Option<Vec<[f64; 2]>>,
    pub final_purity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSummary {
    pub rounds: usize,
    pub compute_rounds: usize,
    pub decoy_rounds: usize,
    pub verify_rounds: usize,
    pub failed_rounds: usize,
    pub verify_failures: usize,
    pub first_detection_round: Option<usize>,
    pub attempts: usize,
    pub lcc_runs: usize,
    pub input_teleport_runs: usize,
    pub intercepted_attempts: usize,
    pub empirical_lcc_success: f64,
    pub empirical_teleport_success: f64,
    pub min_compute_fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolTranscript {
    pub records: Vec<RoundRecord>,
    pub summary: SessionSummary,
}

impl ProtocolTranscript {
    /// One JSON object per round followed by a `{"summary": …}` line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        #[derive(Serialize)]
        struct Wrapped<'a> {
            summary: &'a SessionSummary,
        }
        out.push_str(&serde_json::to_string(&Wrapped { summary: &self.summary }).expect("summary serializes"));
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum SentKey {
    Label(SendLabel),
    Intercepted(InterceptBasis, usize),
}

#[derive(Debug, Clone)]
struct ClientStage {
    probability: f64,
    output: Option<QuantumState>,
}

fn qubits_for(d: usize) -> usize {
    d.next_power_of_two().trailing_zeros() as usize
}

fn pad(state: &QuantumState, q: usize) -> Result<QuantumState> {
    let mut v = CVector::zeros(1 << q);
    let amps = state.amplitudes().ok_or_else(|| Error::InvalidInput("expected a statevector".into()))?;
    v.rows_mut(0, amps.len()).copy_from(amps);
    QuantumState::pure(vec![2; q], v)
}

/// Stage-by-stage simulator for one spec, input and server behavior, caching
/// each stage's outcome probability and post-selected state.
pub struct SessionEngine<'a> {
    spec: &'a LinearCombinationSpec,
    input: QuantumState,
    behavior: ServerBehavior,
    input_teleport_probability: f64,
    lcc_probability: f64,
    /// `[client halves × k]([server halves × k] if unmeasured)[logical…]`.
    server_state: QuantumState,
    cache: HashMap<SentKey, ClientStage>,
}

impl<'a> SessionEngine<'a> {
    pub fn new(spec: &'a LinearCombinationSpec, input: &QuantumState, behavior: ServerBehavior) -> Result<Self> {
        check_input(spec, input)?;
        if let ServerBehavior::Intercept { fraction, .. } = behavior {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::InvalidParameter(format!("intercept fraction {fraction} outside [0, 1]")));
            }
        }
        let (input_teleport_probability, delivered) = Self::teleport_input(input)?;
        let k = spec.k();
        let joint = epr_pairs(k)
            .tensor(&QuantumState::basis(vec![2; k], &vec![0; k])?)
            .tensor(&delivered);
        let server_halves: Vec<usize> = (k..2 * k).collect();
        let target: Vec<usize> = (2 * k..3 * k + delivered.dims().len()).collect();
        let mut s = apply_path_lcc(spec, &joint, &server_halves, &target)?;
        let path: Vec<usize> = (2 * k..3 * k).collect();
        let (measured, lcc_probability) = match behavior {
            ServerBehavior::SkipMeasurement => (path, 1.0),
            _ => {
                for &q in &server_halves {
                    s = apply_to_subsystems(&s, &hadamard(), &[q])?;
                }
                let measured: Vec<usize> = server_halves.iter().chain(&path).copied().collect();
                let p = project_branch(&s, &measured, &vec![0; measured.len()])?.weight();
                (measured, p)
            }
        };
        let branch = project_branch(&s, &measured, &vec![0; measured.len()])?;
        let server_state = if branch.weight() > 0.0 { branch.normalized()? } else { branch };
        Ok(Self {
            spec,
            input: input.clone(),
            behavior,
            input_teleport_probability,
            lcc_probability,
            server_state,
            cache: HashMap::new(),
        })
    }

    /// Postselected teleportation of the input over `⌈log₂ d⌉` channels.
    fn teleport_input(input: &QuantumState) -> Result<(f64, QuantumState)> {
        let q = qubits_for(input.dim());
        if q == 0 {
            return Ok((1.0, input.clone()));
        }
        let joint = pad(input, q)?.tensor(&epr_pairs(q));
        let pairs: Vec<(usize, usize)> = (0..q).map(|i| (i, q + i)).collect();
        let out = bell_postselect(&joint, &pairs)?;
        let received = out.remainder.ok_or_else(|| Error::InvalidInput("input teleport failed".into()))?;
        let amps = received.amplitudes().expect("pure input stays pure");
        let delivered = QuantumState::pure(input.dims().to_vec(), amps.rows(0, input.dim()).into_owned())?;
        Ok((out.probability, delivered))
    }

    pub fn spec(&self) -> &LinearCombinationSpec {
        self.spec
    }

    pub fn input_teleport_probability(&self) -> f64 {
        self.input_teleport_probability
    }

    /// Success probability of one server LCC run.
    pub fn lcc_probability(&self) -> f64 {
        self.lcc_probability
    }

    fn logical_count(&self) -> usize {
        self.input.dims().len()
    }

    fn intercept_basis_state(&self, basis: InterceptBasis, f: usize) -> Result<QuantumState> {
        let k = self.spec.k();
        let e = QuantumState::basis(vec![2; k], &bits(f, k))?;
        Ok(match basis {
            InterceptBasis::Computational => e,
            InterceptBasis::Fourier => {
                let h = kron_all(std::iter::repeat_n(&hadamard(), k).collect::<Vec<_>>());
                QuantumState::pure(vec![2; k], &h * e.amplitudes().unwrap())?
            }
        })
    }

    /// Outcome distribution of an intercept measurement on `sent`.
    fn intercept_distribution(&self, basis: InterceptBasis, sent: &QuantumState) -> Result<Vec<f64>> {
        let rho = sent.density_matrix();
        (0..self.spec.n())
            .map(|f| {
                let b = self.intercept_basis_state(basis, f)?;
                let v = b.amplitudes().unwrap();
                Ok(v.dotc(&(&rho * v)).re.max(0.0))
            })
            .collect()
    }

    fn client_stage(&mut self, key: SentKey, sent: &QuantumState) -> Result<ClientStage> {
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let k = self.spec.k();
        let joint = sent.tensor(&self.server_state);
        let pairs: Vec<(usize, usize)> = (0..k).map(|i| (i, k + i)).collect();
        let out = bell_postselect(&joint, &pairs)?;
        let output = match out.remainder {
            Some(r) if r.dims().len() > self.logical_count() => {
                let start = r.dims().len() - self.logical_count();
                let keep: Vec<usize> = (start..r.dims().len()).collect();
                Some(partial_trace(&r, &keep)?)
            }
            other => other,
        };
        let stage = ClientStage { probability: out.probability, output };
        self.cache.insert(key, stage.clone());
        Ok(stage)
    }

    /// Probability that the client's control-teleport succeeds for `sent`,
    /// and the client's register on success.
    pub fn teleport_stage(&mut self, label: SendLabel, sent: &QuantumState) -> Result<(f64, Option<QuantumState>)> {
        let s = self.client_stage(SentKey::Label(label), sent)?;
        Ok((s.probability, s.output))
    }

    /// `Σ_j s_j V_j|ψ⟩` normalized, for a pure sent state `s`.
    pub fn expected_output(&self, sent: &QuantumState) -> Option<QuantumState> {
        let s = sent.amplitudes()?;
        let psi = self.input.amplitudes()?;
        let mut v = CVector::zeros(self.spec.d());
        for (j, g) in self.spec.gates().iter().enumerate() {
            v += g * psi * s[j];
        }
        QuantumState::pure(self.input.dims().to_vec(), v).ok()?.normalized().ok()
    }

    /// Probability that a verification round for basis state `|i⟩` is
    /// flagged, averaged over intercepted and clean attempts weighted by their
    /// teleport success.
    pub fn detection_probability(&mut self, i: usize, verify: VerifyMode) -> Result<f64> {
        let n = self.spec.n();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, count: n });
        }
        let sent = QuantumState::basis(vec![2; self.spec.k()], &bits(i, self.spec.k()))?;
        let expected = self.expected_output(&sent).ok_or_else(|| Error::InvalidInput("V_i|ψ⟩ vanishes".into()))?;
        let mut branches: Vec<(f64, SentKey, QuantumState)> = Vec::new();
        let (fraction, basis) = match self.behavior {
            ServerBehavior::Intercept { fraction, basis } => (fraction, basis),
            _ => (0.0, InterceptBasis::default()),
        };
        branches.push((1.0 - fraction, SentKey::Label(SendLabel::Verify(i)), sent.clone()));
        if fraction > 0.0 {
            for (f, p) in self.intercept_distribution(basis, &sent)?.into_iter().enumerate() {
                branches.push((fraction * p, SentKey::Intercepted(basis, f), self.intercept_basis_state(basis, f)?));
            }
        }
        let (mut total, mut flagged) = (0.0, 0.0);
        for (prior, key, state) in branches {
            if prior <= 0.0 {
                continue;
            }
            let stage = self.client_stage(key, &state)?;
            let Some(out) = stage.output else { continue };
            let w = prior * stage.probability;
            let fid = state_fidelity(&out, &expected)?;
            let miss = match verify {
                VerifyMode::Projective => 1.0 - fid,
                VerifyMode::Threshold(t) => f64::from(u8::from(fid < t)),
            };
            total += w;
            flagged += w * miss;
        }
        Ok(if total > 0.0 { flagged / total } else { 0.0 })
    }
}

fn bits(value: usize, k: usize) -> Vec<usize> {
    (0..k).map(|b| (value >> (k - 1 - b)) & 1).collect()
}

fn coin<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}

/// Per-verification-round detection probability averaged over the basis
/// states, which are sent with equal probability.
pub fn analytic_detection_rate(
    spec: &LinearCombinationSpec,
    input: &QuantumState,
    behavior: ServerBehavior,
    verify: VerifyMode,
) -> Result<f64> {
    let mut engine = SessionEngine::new(spec, input, behavior)?;
    let n = spec.n();
    let mut total = 0.0;
    for i in 0..n {
        total += engine.detection_probability(i, verify)?;
    }
    Ok(total / n as f64)
}

/// `1/n · (1/4)^k · (4^{-⌈log₂ d⌉} if the input is teleported)`. The
/// corrected output teleportation always succeeds.
pub fn success_probability_account(spec: &LinearCombinationSpec, include_input_teleport: bool, _include_output_teleport: bool) -> f64 {
    let n = spec.n() as f64;
    let mut p = (1.0 / n) * 0.25f64.powi(spec.k() as i32);
    if include_input_teleport {
        p *= 0.25f64.powi(qubits_for(spec.d()) as i32);
    }
    p
}

/// Monte Carlo over single protocol attempts with the spec's own control
/// state: an attempt succeeds when the input teleport (if any), one server
/// LCC run and the control teleport all succeed. Returns the success count.
pub fn monte_carlo_success<R: Rng + ?Sized>(
    spec: &LinearCombinationSpec,
    input: &QuantumState,
    include_input_teleport: bool,
    trials: usize,
    rng: &mut R,
) -> Result<usize> {
    let mut engine = SessionEngine::new(spec, input, ServerBehavior::Honest)?;
    let control = build_control_state(spec);
    let (p_control, _) = engine.teleport_stage(SendLabel::Compute, &control)?;
    let p_in = engine.input_teleport_probability();
    let p_lcc = engine.lcc_probability();
    let mut hits = 0;
    for _ in 0..trials {
        let ok = (!include_input_teleport || coin(p_in, rng)) && coin(p_lcc, rng) && coin(p_control, rng);
        hits += usize::from(ok);
    }
    Ok(hits)
}

fn amplitudes_record(state: &QuantumState) -> Option<Vec<[f64; 2]>> {
    state.amplitudes().map(|v| v.iter().map(|z| [z.re, z.im]).collect())
}

fn purity(state: &QuantumState) -> f64 {
    let rho = state.density_matrix();
    (&rho * &rho).trace().re
}

/// Deterministic teleportation of the client's output over `⌈log₂ d⌉`
/// corrected channels.
fn teleport_output<R: Rng + ?Sized>(state: &QuantumState, rng: &mut R) -> Result<(QuantumState, Vec<[usize; 2]>)> {
    let d = state.dim();
    let q = qubits_for(d);
    let rho = state.density_matrix();
    let mut padded = CMatrix::zeros(1 << q, 1 << q);
    padded.view_mut((0, 0), (d, d)).copy_from(&rho);
    let mut s = if state.is_pure() && (1 << q) == d {
        QuantumState::pure(vec![2; q], state.amplitudes().unwrap().clone())?
    } else {
        QuantumState::density(vec![2; q], padded)?
    };
    let mut outcomes = Vec::with_capacity(q);
    for _ in 0..q {
        // Register `[remaining source qubits][received qubits]`: teleport the
        // first qubit through a fresh pair appended at the end.
        let width = s.dims().len();
        let joint = s.tensor(&epr_pairs(1));
        let (next, m) = teleport_corrected(&joint, 0, EprPair { sender: width, receiver: width + 1 }, true, rng)?;
        s = next;
        outcomes.push(m);
    }
    let out = if state.is_pure() && (1 << q) == d {
        QuantumState::pure(state.dims().to_vec(), s.amplitudes().unwrap().clone())?
    } else {
        let r = s.density_matrix();
        QuantumState::density(state.dims().to_vec(), r.view((0, 0), (d, d)).into_owned())?
    };
    Ok((out, outcomes))
}

/// Runs `config.rounds` protocol rounds. Each round samples what the client
/// sends, then repeats attempts (server LCC until it reports success, then
/// the postselected control teleport) until the client's teleport succeeds.
pub fn run_session<R: Rng + ?Sized>(
    spec: &LinearCombinationSpec,
    input: &QuantumState,
    policy: &SendPolicy,
    behavior: ServerBehavior,
    config: &SessionConfig,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    if policy.n() != spec.n() {
        return Err(Error::Dimension(format!(
            "policy over {} control states for a spec with {} terms",
            policy.n(),
            spec.n()
        )));
    }
    let mut engine = SessionEngine::new(spec, input, behavior)?;
    let k = spec.k();
    let server_message = match behavior {
        ServerBehavior::SkipMeasurement => "lcc-claimed",
        _ => "lcc-succeeded",
    };
    let mut records = Vec::with_capacity(config.rounds);
    for round in 0..config.rounds {
        let label = sample_label(policy, rng);
        let sent = policy.state_for(label)?;
        let mut rec = RoundRecord {
            round,
            label,
            success: false,
            attempts: 0,
            input_teleport_runs: 0,
            lcc_runs: 0,
            intercepted: 0,
            server_message,
            client_outcome: vec![0; 2 * k],
            output_teleport_outcomes: Vec::new(),
            fidelity: None,
            verify_passed: None,
            final_state: None,
            final_purity: None,
        };
        let mut output = None;
        'attempts: while rec.attempts < config.max_attempts {
            rec.attempts += 1;
            if config.include_input_teleport {
                loop {
                    rec.input_teleport_runs += 1;
                    if coin(engine.input_teleport_probability(), rng) {
                        break;
                    }
                    if rec.input_teleport_runs >= config.max_attempts * config.max_attempts {
                        break 'attempts;
                    }
                }
            }
            let mut lcc_ok = false;
            for _ in 0..config.max_attempts {
                rec.lcc_runs += 1;
                if coin(engine.lcc_probability(), rng) {
                    lcc_ok = true;
                    break;
                }
            }
            if !lcc_ok {
                break;
            }
            let (key, state) = match behavior {
                ServerBehavior::Intercept { fraction, basis } if coin(fraction, rng) => {
                    rec.intercepted += 1;
                    let dist = engine.intercept_distribution(basis, &sent)?;
                    let f = sample_index(&dist, rng);
                    (SentKey::Intercepted(basis, f), engine.intercept_basis_state(basis, f)?)
                }
                _ => (SentKey::Label(label), sent.clone()),
            };
            let stage = engine.client_stage(key, &state)?;
            if stage.output.is_some() && coin(stage.probability, rng) {
                output = stage.output;
                break;
            }
        }
        if let Some(mut out) = output {
            rec.success = true;
            if config.include_output_teleport {
                let (moved, outcomes) = teleport_output(&out, rng)?;
                out = moved;
                rec.output_teleport_outcomes = outcomes;
            }
            if let Some(expected) = engine.expected_output(&sent) {
                let fid = state_fidelity(&out, &expected)?;
                rec.fidelity = Some(fid);
                if matches!(label, SendLabel::Verify(_)) {
                    rec.verify_passed = Some(match config.verify {
                        VerifyMode::Projective => coin(fid, rng),
                        VerifyMode::Threshold(t) => fid >= t,
                    });
                }
            }
            rec.final_purity = Some(purity(&out));
            rec.final_state = amplitudes_record(&out);
        }
        records.push(rec);
    }
    let summary = summarize(&records);
    Ok(ProtocolTranscript { records, summary })
}

fn summarize(records: &[RoundRecord]) -> SessionSummary {
    let count = |f: &dyn Fn(&RoundRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let attempts: usize = records.iter().map(|r| r.attempts).sum();
    let lcc_runs: usize = records.iter().map(|r| r.lcc_runs).sum();
    let successes = count(&|r| r.success);
    let min_compute_fidelity = records
        .iter()
        .filter(|r| r.label == SendLabel::Compute)
        .filter_map(|r| r.fidelity)
        .reduce(f64::min);
    SessionSummary {
        rounds: records.len(),
        compute_rounds: count(&|r| r.label == SendLabel::Compute),
        decoy_rounds: count(&|r| matches!(r.label, SendLabel::Decoy(_))),
        verify_rounds: count(&|r| matches!(r.label, SendLabel::Verify(_))),
        failed_rounds: records.len() - successes,
        verify_failures: count(&|r| r.verify_passed == Some(false)),
        first_detection_round: records.iter().find(|r| r.verify_passed == Some(false)).map(|r| r.round),
        attempts,
        lcc_runs,
        input_teleport_runs: records.iter().map(|r| r.input_teleport_runs).sum(),
        intercepted_attempts: records.iter().map(|r| r.intercepted).sum(),
        empirical_lcc_success: if lcc_runs > 0 { attempts as f64 / lcc_runs as f64 } else { 0.0 },
        empirical_teleport_success: if attempts > 0 { successes as f64 / attempts as f64 } else { 0.0 },
        min_compute_fidelity,
    }
}

fn default_tau() -> f64 {
    0.5
}

fn default_behavior() -> ServerBehavior {
    ServerBehavior::Honest
}

/// Scenario file: either a named `gate` (`U1`–`U12`) or an inline `spec`,
/// plus policy, server behavior and round count.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub gate: Option<String>,
    #[serde(default)]
    pub spec: Option<SpecFile>,
    #[serde(default)]
    pub input_state: Option<StateEntry>,
    /// Defaults to `1/(n−1)`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_behavior")]
    pub behavior: ServerBehavior,
    pub rounds: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub verify: VerifyMode,
    #[serde(default)]
    pub input_teleport: bool,
    #[serde(default)]
    pub output_teleport: bool,
}

/// A scenario resolved into simulator inputs.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub spec: LinearCombinationSpec,
    pub input: QuantumState,
    pub policy: SendPolicy,
    pub behavior: ServerBehavior,
    pub config: SessionConfig,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let spec = match (&self.gate, &self.spec) {
            (Some(name), None) => registry::named_spec(name)?,
            (None, Some(file)) => file.spec()?,
            _ => return Err(Error::InvalidInput("scenario needs exactly one of `gate` and `spec`".into())),
        };
        let input = match (&self.input_state, self.spec.as_ref().and_then(|s| s.input_state.as_ref())) {
            (Some(s), _) | (None, Some(s)) => s.resolve()?,
            (None, None) => QuantumState::basis(vec![spec.d()], &[0])?,
        };
        let n = spec.n();
        let epsilon = self.epsilon.unwrap_or(1.0 / (n as f64 - 1.0).max(1.0));
        let policy = SendPolicy::new(build_control_state(&spec), epsilon, self.tau)?;
        let mut config = SessionConfig::new(self.rounds);
        config.verify = self.verify;
        config.include_input_teleport = self.input_teleport;
        config.include_output_teleport = self.output_teleport;
        Ok(ResolvedScenario { spec, input, policy, behavior: self.behavior, config, seed: self.seed })
    }
}
