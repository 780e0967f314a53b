//! Plain-text matrix and state literals.
//!
//! One matrix row per line, entries written as `re+imj` and separated by
//! whitespace. Lines starting with `#` are comments, except a
//! `# dims: d1 d2 ...` header which is required for states. A state file with
//! a single column is a statevector; a square one is a density matrix.

use super::{CMatrix, CVector, QuantumState, C64};
use crate::{Error, Result};

/// Parses `re+imj`, `re-imj`, a bare real `re` or a bare imaginary `imj`.
pub fn parse_complex(token: &str) -> Result<C64> {
    let t = token.trim();
    let bad = || Error::Parse(format!("malformed complex entry {token:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let Some(body) = t.strip_suffix('j') else {
        return Ok(C64::new(num(t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => Ok(C64::new(num(&body[..i])?, num(&body[i..])?)),
        None => Ok(C64::new(0.0, num(body)?)),
    }
}

pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}j", z.re, sign, z.im.abs())
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (line_no, line) in data_lines(text) {
        let row = line
            .split_whitespace()
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Parse(format!("line {line_no}: {e}")))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {line_no}: expected {} entries, found {}",
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no matrix rows".into()));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(CMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn parse_dims(text: &str) -> Result<Vec<usize>> {
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix('#') {
            if let Some(list) = rest.trim().strip_prefix("dims:") {
                return list
                    .split_whitespace()
                    .map(|d| match d.parse::<usize>() {
                        Ok(v) if v > 0 => Ok(v),
                        _ => Err(Error::Parse(format!("bad dimension {d:?} in dims header"))),
                    })
                    .collect();
            }
        }
    }
    Err(Error::Parse("missing `# dims:` header".into()))
}

pub fn parse_state(text: &str) -> Result<QuantumState> {
    let dims = parse_dims(text)?;
    let m = parse_matrix(text)?;
    if m.ncols() == 1 {
        QuantumState::pure(dims, CVector::from_iterator(m.nrows(), m.iter().cloned()))
    } else {
        QuantumState::density(dims, m)
    }
}

pub fn format_state(state: &QuantumState) -> String {
    let dims: Vec<String> = state.dims().iter().map(|d| d.to_string()).collect();
    let mut out = format!("# dims: {}\n", dims.join(" "));
    match state.amplitudes() {
        Some(v) => {
            for z in v.iter() {
                out.push_str(&format_complex(*z));
                out.push('\n');
            }
        }
        None => out.push_str(&format_matrix(&state.density_matrix())),
    }
    out
}
