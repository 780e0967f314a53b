//! Single-qubit process tomography: simulated data from four preparations and
//! three Pauli measurements, linear inversion, and a maximum-likelihood χ
//! reconstruction over `χ = T†T` with `T` lower triangular.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::kak::pauli_coefficients;
use crate::qcore::{c, hermitian_eigen, pauli, CMatrix, C64};
use crate::{Error, Result};

pub const PREPARATIONS: [&str; 4] = ["0", "1", "+", "+i"];
pub const BASES: [&str; 3] = ["X", "Y", "Z"];

/// Iteration cap of the likelihood ascent.
pub const MAX_ITERATIONS: usize = 10_000;
/// Stopping threshold on the gradient norm.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

type M2 = Matrix2<C64>;
type M4 = Matrix4<C64>;

fn to_m2(m: &CMatrix) -> M2 {
    M2::from_fn(|i, j| m[(i, j)])
}

fn sigma(m: usize) -> M2 {
    to_m2(&pauli(m))
}

/// Process matrix in the `{I, X, Y, Z}` basis:
/// `E(ρ) = Σ_{mn} χ_{mn} σ_m ρ σ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix(M4);

impl ChiMatrix {
    pub fn new(m: &CMatrix) -> Result<Self> {
        if m.shape() != (4, 4) {
            return Err(Error::Dimension(format!("χ must be 4x4, got {}x{}", m.nrows(), m.ncols())));
        }
        let dev = (m - m.adjoint()).camax();
        if dev > 1e-10 {
            return Err(Error::InvalidInput(format!("χ is not Hermitian (deviation {dev:e})")));
        }
        Ok(Self(M4::from_fn(|i, j| m[(i, j)])))
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| self.0[(i, j)])
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix()).0
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol && self.eigenvalues()[0] >= -tol
    }

    fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > 0.0) {
            return Err(Error::InvalidInput("χ has zero trace".into()));
        }
        Ok(Self(self.0 / c(t, 0.)))
    }
}

/// Rank-one χ of `ρ ↦ op ρ op†`, optionally scaled to unit trace.
pub fn ideal_chi(op: &CMatrix, normalize: bool) -> Result<ChiMatrix> {
    let coeffs = pauli_coefficients(op)?;
    let v = nalgebra::Vector4::from_column_slice(&coeffs);
    let chi = ChiMatrix(v * v.adjoint());
    if chi.trace() <= 1e-300 {
        return Err(Error::InvalidInput("zero operator has no process matrix".into()));
    }
    if normalize { chi.normalized() } else { Ok(chi) }
}

/// `Re Tr(a b)`, clamped to `[0, 1]`. Both inputs must have unit trace.
pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    for x in [a, b] {
        if (x.trace() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!("χ has trace {}, expected 1", x.trace())));
        }
    }
    Ok((a.0 * b.0).trace().re.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    None,
    /// `ρ ↦ (1−p) ρ + p Tr(ρ) 𝟙/2` applied after the operation.
    Depolarizing(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataMode {
    /// Counts are exact expectations `shots · p`.
    Analytic,
    /// Counts are sampled, outcome by outcome, with losses for
    /// non-trace-preserving operations.
    Sampled,
}

/// Counts indexed by preparation, basis and outcome. Outcome 0 is the +1
/// eigenstate of the measured Pauli.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    pub shots: u64,
    pub mode: DataMode,
    pub counts: [[[f64; 2]; 3]; 4],
}

fn preparation(s: usize) -> M2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = match s {
        0 => [c(1., 0.), c(0., 0.)],
        1 => [c(0., 0.), c(1., 0.)],
        2 => [c(h, 0.), c(h, 0.)],
        _ => [c(h, 0.), c(0., h)],
    };
    let k = nalgebra::Vector2::new(v[0], v[1]);
    k * k.adjoint()
}

/// Projector onto the `outcome` eigenstate of basis `b` (0 = X, 1 = Y, 2 = Z).
fn projector(b: usize, outcome: usize) -> M2 {
    let sign = if outcome == 0 { 1.0 } else { -1.0 };
    (M2::identity() + sigma(b + 1) * c(sign, 0.)) * c(0.5, 0.)
}

/// `M[n][m] = Tr(Π σ_m ρ σ_n)`, so that a probability is `Tr(χ M)`.
fn design(s: usize, b: usize, o: usize) -> M4 {
    let (rho, pi) = (preparation(s), projector(b, o));
    M4::from_fn(|n, m| (pi * sigma(m) * rho * sigma(n)).trace())
}

fn designs() -> Vec<((usize, usize, usize), M4)> {
    let mut out = Vec::with_capacity(24);
    for s in 0..4 {
        for b in 0..3 {
            for o in 0..2 {
                out.push(((s, b, o), design(s, b, o)));
            }
        }
    }
    out
}

/// Outcome probabilities of `op` followed by `noise`. Non-trace-preserving
/// operations are scaled by the largest eigenvalue of `op†op`, so the
/// missing probability is a postselection loss.
pub fn outcome_probabilities(op: &CMatrix, noise: Noise) -> Result<[[[f64; 2]; 3]; 4]> {
    if op.shape() != (2, 2) {
        return Err(Error::Dimension(format!("expected a 2x2 operator, got {}x{}", op.nrows(), op.ncols())));
    }
    let p = match noise {
        Noise::None => 0.0,
        Noise::Depolarizing(p) if (0.0..=1.0).contains(&p) => p,
        Noise::Depolarizing(p) => return Err(Error::InvalidParameter(format!("depolarizing p = {p} outside [0, 1]"))),
    };
    let o = to_m2(op);
    let gain = *hermitian_eigen(&(op.adjoint() * op)).0.last().unwrap();
    if gain <= 1e-300 {
        return Err(Error::InvalidInput("zero operator".into()));
    }
    let mut probs = [[[0.0; 2]; 3]; 4];
    for (s, row) in probs.iter_mut().enumerate() {
        let out = o * preparation(s) * o.adjoint() / c(gain, 0.);
        let out = out * c(1.0 - p, 0.) + M2::identity() * c(p * out.trace().re / 2.0, 0.);
        for (b, pair) in row.iter_mut().enumerate() {
            for (k, v) in pair.iter_mut().enumerate() {
                *v = (projector(b, k) * out).trace().re.clamp(0.0, 1.0);
            }
        }
    }
    Ok(probs)
}

pub fn simulate_dataset<R: Rng + ?Sized>(
    op: &CMatrix,
    shots: u64,
    noise: Noise,
    mode: DataMode,
    rng: &mut R,
) -> Result<TomographyDataset> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let probs = outcome_probabilities(op, noise)?;
    let mut counts = [[[0.0; 2]; 3]; 4];
    for s in 0..4 {
        for b in 0..3 {
            let [p0, p1] = probs[s][b];
            counts[s][b] = match mode {
                DataMode::Analytic => [shots as f64 * p0, shots as f64 * p1],
                DataMode::Sampled => {
                    let n0 = Binomial::new(shots, p0.min(1.0)).expect("valid binomial").sample(rng);
                    let rest = 1.0 - p0;
                    let q = if rest > 0.0 { (p1 / rest).clamp(0.0, 1.0) } else { 0.0 };
                    let n1 = Binomial::new(shots - n0, q).expect("valid binomial").sample(rng);
                    [n0 as f64, n1 as f64]
                }
            };
        }
    }
    Ok(TomographyDataset { shots, mode, counts })
}

impl TomographyDataset {
    /// `# shots=<n> mode=<analytic|sampled>` followed by
    /// `prep,basis,outcome,count` rows.
    pub fn to_text(&self) -> String {
        let mode = match self.mode {
            DataMode::Analytic => "analytic",
            DataMode::Sampled => "sampled",
        };
        let mut out = format!("# shots={} mode={mode}\nprep,basis,outcome,count\n", self.shots);
        for (s, prep) in PREPARATIONS.iter().enumerate() {
            for (b, basis) in BASES.iter().enumerate() {
                for o in 0..2 {
                    out.push_str(&format!("{prep},{basis},{o},{}\n", self.counts[s][b][o]));
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse(msg);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| bad("empty dataset".into()))?;
        let mut shots = None;
        let mut mode = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("shots", v)) => shots = Some(v.parse::<u64>().map_err(|e| bad(format!("shots: {e}")))?),
                Some(("mode", "analytic")) => mode = Some(DataMode::Analytic),
                Some(("mode", "sampled")) => mode = Some(DataMode::Sampled),
                _ => return Err(bad(format!("unexpected header field `{field}`"))),
            }
        }
        let (shots, mode) = shots.zip(mode).ok_or_else(|| bad("header needs shots= and mode=".into()))?;
        let mut counts = [[[f64::NAN; 2]; 3]; 4];
        for line in lines {
            if line.starts_with("prep") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let [prep, basis, outcome, count] = cols[..] else {
                return Err(bad(format!("expected 4 columns in `{line}`")));
            };
            let s = PREPARATIONS.iter().position(|p| *p == prep).ok_or_else(|| bad(format!("preparation `{prep}`")))?;
            let b = BASES.iter().position(|p| p.eq_ignore_ascii_case(basis)).ok_or_else(|| bad(format!("basis `{basis}`")))?;
            let o: usize = outcome.parse().ok().filter(|&o| o < 2).ok_or_else(|| bad(format!("outcome `{outcome}`")))?;
            let n: f64 = count.parse().map_err(|e| bad(format!("count `{count}`: {e}")))?;
            if !(n >= 0.0 && n.is_finite()) {
                return Err(bad(format!("count `{count}` must be a nonnegative number")));
            }
            counts[s][b][o] = n;
        }
        if counts.iter().flatten().flatten().any(|n| n.is_nan()) {
            return Err(bad("dataset is missing rows".into()));
        }
        Ok(Self { shots, mode, counts })
    }

    fn frequencies(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(24);
        for s in 0..4 {
            for b in 0..3 {
                for o in 0..2 {
                    f.push(self.counts[s][b][o] / self.shots as f64);
                }
            }
        }
        f
    }
}

/// 16 real Hermitian basis elements of 4×4 matrices.
fn hermitian_basis() -> Vec<M4> {
    let mut out = Vec::with_capacity(16);
    for a in 0..4 {
        let mut m = M4::zeros();
        m[(a, a)] = c(1., 0.);
        out.push(m);
    }
    for a in 0..4 {
        for b in a + 1..4 {
            let mut s = M4::zeros();
            s[(a, b)] = c(1., 0.);
            s[(b, a)] = c(1., 0.);
            out.push(s);
            let mut t = M4::zeros();
            t[(a, b)] = c(0., 1.);
            t[(b, a)] = c(0., -1.);
            out.push(t);
        }
    }
    out
}

fn expectation(chi: &M4, m: &M4) -> f64 {
    chi.component_mul(&m.transpose()).sum().re
}

/// Least-squares χ from the measured frequencies, normalized to unit trace.
/// Not constrained to be positive.
pub fn linear_inversion(data: &TomographyDataset) -> Result<ChiMatrix> {
    let chi = unnormalized_inversion(data)?;
    ChiMatrix(chi).normalized()
}

fn unnormalized_inversion(data: &TomographyDataset) -> Result<M4> {
    let basis = hermitian_basis();
    let rows = designs();
    let a = DMatrix::from_fn(rows.len(), 16, |i, k| expectation(&basis[k], &rows[i].1));
    let f = DVector::from_vec(data.frequencies());
    let x = a.svd(true, true).solve(&f, 1e-12).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(basis.iter().zip(x.iter()).fold(M4::zeros(), |acc, (g, &w)| acc + g * c(w, 0.)))
}

const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

/// Lower-triangular `T` from 16 reals: four real diagonal entries, then real
/// and imaginary parts of the strictly lower entries row by row.
pub fn cholesky_factor(params: &[f64; 16]) -> Matrix4<C64> {
    let mut t = M4::zeros();
    for a in 0..4 {
        t[(a, a)] = c(params[a], 0.);
    }
    for (k, &(a, b)) in OFF_DIAGONAL.iter().enumerate() {
        t[(a, b)] = c(params[4 + 2 * k], params[5 + 2 * k]);
    }
    t
}

fn factor_params(t: &M4) -> [f64; 16] {
    let mut p = [0.0; 16];
    for a in 0..4 {
        p[a] = t[(a, a)].re;
    }
    for (k, &(a, b)) in OFF_DIAGONAL.iter().enumerate() {
        p[4 + 2 * k] = t[(a, b)].re;
        p[5 + 2 * k] = t[(a, b)].im;
    }
    p
}

/// Lower-triangular `T` with real nonnegative diagonal and `T†T = X†X`.
fn lower_factor(x: &M4) -> M4 {
    // QL of X through QR of the row-and-column reversed matrix.
    let flip = |m: &M4| M4::from_fn(|i, j| m[(3 - i, 3 - j)]);
    let r = flip(&flip(x).qr().r());
    let mut t = r;
    for a in 0..4 {
        let d = t[(a, a)];
        if d.norm() > 0.0 {
            let phase = d.conj() / d.norm();
            for b in 0..4 {
                t[(a, b)] *= phase;
            }
        }
    }
    t
}

/// Poisson log-likelihood with free overall scale,
/// `Σᵢ fᵢ ln λᵢ − λᵢ` with `λᵢ = Tr(T†T Mᵢ)` and `fᵢ` the per-setting
/// frequencies.
pub struct MleObjective {
    freqs: Vec<f64>,
    designs: Vec<M4>,
}

impl MleObjective {
    pub fn new(data: &TomographyDataset) -> Result<Self> {
        let freqs = data.frequencies();
        if freqs.iter().all(|&f| f == 0.0) {
            return Err(Error::InvalidInput("dataset has no counts".into()));
        }
        for (b, basis) in BASES.iter().enumerate() {
            if data.counts.iter().map(|prep| prep[b].iter().sum::<f64>()).sum::<f64>() <= 0.0 {
                return Err(Error::InvalidInput(format!("no counts in basis {basis}")));
            }
        }
        Ok(Self { freqs, designs: designs().into_iter().map(|(_, m)| m).collect() })
    }

    fn rates(&self, t: &M4) -> Vec<f64> {
        let chi = t.adjoint() * t;
        self.designs.iter().map(|m| expectation(&chi, m)).collect()
    }

    pub fn value(&self, params: &[f64; 16]) -> f64 {
        let rates = self.rates(&cholesky_factor(params));
        let mut total = 0.0;
        for (&f, &l) in self.freqs.iter().zip(&rates) {
            if f > 0.0 {
                if l <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                total += f * l.ln();
            }
            total -= l;
        }
        total
    }

    /// `∂/∂Re T_ab = 2 Re (TW)_ab`, `∂/∂Im T_ab = 2 Im (TW)_ab` with
    /// `W = Σᵢ (fᵢ/λᵢ − 1) Mᵢ`.
    pub fn gradient(&self, params: &[f64; 16]) -> [f64; 16] {
        let t = cholesky_factor(params);
        let rates = self.rates(&t);
        let mut w = M4::zeros();
        for ((&f, &l), m) in self.freqs.iter().zip(&rates).zip(&self.designs) {
            let factor = if f > 0.0 { f / l - 1.0 } else { -1.0 };
            w += m * c(factor, 0.);
        }
        let tw = t * w * c(2.0, 0.);
        let mut g = [0.0; 16];
        for a in 0..4 {
            g[a] = tw[(a, a)].re;
        }
        for (k, &(a, b)) in OFF_DIAGONAL.iter().enumerate() {
            g[4 + 2 * k] = tw[(a, b)].re;
            g[5 + 2 * k] = tw[(a, b)].im;
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct MleFit {
    /// Unit-trace estimate.
    pub chi: ChiMatrix,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective at every accepted iterate, starting point first.
    pub objective_history: Vec<f64>,
}

fn norm(v: &[f64; 16]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Starting point: the linear-inversion estimate with its spectrum floored
/// to keep every direction open, scaled to the observed total rate.
fn initial_params(data: &TomographyDataset, objective: &MleObjective) -> Result<[f64; 16]> {
    let lin = unnormalized_inversion(data)?;
    let (values, vectors) = hermitian_eigen(&CMatrix::from_fn(4, 4, |i, j| lin[(i, j)]));
    let top = values[3].max(1e-12);
    let floor = 1e-6 * top;
    let mut x = M4::zeros();
    for (k, &v) in values.iter().enumerate() {
        let s = v.max(floor).sqrt();
        for j in 0..4 {
            x[(k, j)] = vectors[(j, k)].conj() * s;
        }
    }
    let t = lower_factor(&x);
    let total: f64 = objective.freqs.iter().sum();
    let predicted: f64 = objective.rates(&t).iter().sum();
    let scale = (total / predicted).sqrt();
    Ok(factor_params(&(t * c(scale, 0.))))
}

/// Gradient ascent with a backtracking (Armijo) line search on the Cholesky
/// parameters, starting from linear inversion.
pub fn reconstruct_mle(data: &TomographyDataset) -> Result<MleFit> {
    let objective = MleObjective::new(data)?;
    let mut x = initial_params(data, &objective)?;
    let mut fx = objective.value(&x);
    let mut history = vec![fx];
    let mut step = 1.0;
    let mut g = objective.gradient(&x);
    let mut gn = norm(&g);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && gn >= GRADIENT_TOLERANCE {
        iterations += 1;
        let mut accepted = false;
        while step > 1e-20 {
            let trial: [f64; 16] = std::array::from_fn(|i| x[i] + step * g[i]);
            let ft = objective.value(&trial);
            if ft >= fx + 1e-4 * step * gn * gn {
                x = trial;
                fx = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(fx);
        step *= 2.0;
        g = objective.gradient(&x);
        gn = norm(&g);
    }
    let t = cholesky_factor(&x);
    let chi = ChiMatrix(t.adjoint() * t).normalized()?;
    Ok(MleFit { chi, iterations, gradient_norm: gn, converged: gn < GRADIENT_TOLERANCE, objective_history: history })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub std: f64,
    pub resamples: usize,
}

/// Fidelity spread under Poisson resampling of every count. Analytic data
/// stands for the infinite-shot limit, so its resamples are the data itself.
pub fn bootstrap_error<R: Rng + ?Sized>(
    data: &TomographyDataset,
    reference: &ChiMatrix,
    resamples: usize,
    rng: &mut R,
) -> Result<BootstrapSummary> {
    if resamples < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least 2 resamples".into()));
    }
    if data.mode == DataMode::Analytic {
        let f = process_fidelity(&reconstruct_mle(data)?.chi, reference)?;
        return Ok(BootstrapSummary { mean: f, std: 0.0, resamples });
    }
    let mut fids = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut sample = data.clone();
        for n in sample.counts.iter_mut().flatten().flatten() {
            if *n > 0.0 {
                *n = Poisson::new(*n).expect("positive rate").sample(rng);
            }
        }
        fids.push(process_fidelity(&reconstruct_mle(&sample)?.chi, reference)?);
    }
    let mean = fids.iter().sum::<f64>() / resamples as f64;
    let var = fids.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(BootstrapSummary { mean, std: var.sqrt(), resamples })
}
