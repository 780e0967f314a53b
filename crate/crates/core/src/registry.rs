//! Named gates and states.
//!
//! `A` and `B` are the two experimental building blocks; `U1`–`U12` are the
//! targets realized as two-term combinations of them (or of Paulis). `U12`,
//! `(X + iZ)/√2`, is deliberately non-unitary. Coefficients
//! use the exact values `cos(π/8)`, `sin(π/8)` and `1/√2`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};

use crate::lcc::LinearCombinationSpec;
use crate::qcore::{c, cnot, hadamard, identity, pauli_x, pauli_y, pauli_z, CMatrix, QuantumState, C64};
use crate::{Error, Result};

pub fn gate_a() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(h, -h), c(0., 0.), c(0., 0.), c(-h, -h)])
}

pub fn gate_b() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(h, h), c(h, -h), c(0., 0.)])
}

/// Names accepted by [`named_gate`].
pub const GATE_NAMES: &[&str] = &[
    "I", "X", "Y", "Z", "H", "A", "B", "CNOT", "U1", "U2", "U3", "U4", "U5", "U6", "U7", "U8", "U9",
    "U10", "U11", "U12",
];

/// Two-term definition of `U1`–`U12`: coefficients and gates.
pub fn named_combination(name: &str) -> Result<(Vec<C64>, Vec<CMatrix>)> {
    let (cp, sp, h) = (FRAC_PI_8.cos(), FRAC_PI_8.sin(), FRAC_1_SQRT_2);
    let ab = |a: f64, b: f64| (vec![c(a, 0.), c(b, 0.)], vec![gate_a(), gate_b()]);
    let out = match name.to_ascii_uppercase().as_str() {
        "U1" => ab(cp, sp),
        "U2" => ab(h, h),
        "U3" => ab(-sp, cp),
        "U4" => ab(1.0, 0.0),
        "U5" => ab(sp, cp),
        "U6" => ab(0.0, 1.0),
        "U7" => ab(-h, h),
        "U8" => ab(-cp, sp),
        "U9" => (vec![c(h, 0.), c(0., h)], vec![identity(2), pauli_z()]),
        "U10" => (vec![c(h, 0.), c(0., -h)], vec![identity(2), pauli_z()]),
        "U11" => (vec![c(h, 0.), c(h, 0.)], vec![pauli_x(), pauli_z()]),
        "U12" => (vec![c(h, 0.), c(0., h)], vec![pauli_x(), pauli_z()]),
        _ => return Err(Error::UnknownName(name.to_string())),
    };
    Ok(out)
}

pub fn named_spec(name: &str) -> Result<LinearCombinationSpec> {
    let (coefficients, gates) = named_combination(name)?;
    LinearCombinationSpec::new(coefficients, gates)
}

pub fn named_gate(name: &str) -> Result<CMatrix> {
    let upper = name.to_ascii_uppercase();
    let m = match upper.as_str() {
        "I" => identity(2),
        "X" => pauli_x(),
        "Y" => pauli_y(),
        "Z" => pauli_z(),
        "H" => hadamard(),
        "A" => gate_a(),
        "B" => gate_b(),
        "CNOT" => cnot(),
        _ => return Ok(named_spec(&upper)?.combination()),
    };
    Ok(m)
}

/// Single-qubit states `0`, `1`, `+`, `-`, `+i`, `-i`.
pub fn named_state(name: &str) -> Result<QuantumState> {
    let h = FRAC_1_SQRT_2;
    let amps = match name {
        "0" => [c(1., 0.), c(0., 0.)],
        "1" => [c(0., 0.), c(1., 0.)],
        "+" => [c(h, 0.), c(h, 0.)],
        "-" => [c(h, 0.), c(-h, 0.)],
        "+i" => [c(h, 0.), c(0., h)],
        "-i" => [c(h, 0.), c(0., -h)],
        _ => return Err(Error::UnknownName(name.to_string())),
    };
    QuantumState::ket(&amps)
}
