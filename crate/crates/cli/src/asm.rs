//! Line-oriented gate assembly.
//!
//! One instruction per line: a gate name, qubit operands `q<k>`, then
//! numeric parameters, e.g. `U2 q0 0 3.14159` or `CX q0 q1`. `#` starts a
//! comment. Gate names are case-insensitive and lowered to lowercase.

use qpulse::Instruction;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct AsmError {
    pub line: usize,
    pub message: String,
}

pub fn parse_program(name: &str, text: &str) -> Result<Instruction, AsmError> {
    let mut children = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| AsmError { line: i + 1, message };
        let mut tokens = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
        let gate = tokens.next().expect("non-empty line").to_ascii_lowercase();
        if !gate.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(err(format!("invalid gate name `{gate}`")));
        }
        let mut qubits = Vec::new();
        let mut params = Vec::new();
        for tok in tokens {
            if let Some(idx) = tok.strip_prefix('q').or_else(|| tok.strip_prefix('Q')) {
                if !params.is_empty() {
                    return Err(err(format!("qubit `{tok}` after parameters")));
                }
                let q = idx.parse::<usize>().map_err(|_| err(format!("invalid qubit `{tok}`")))?;
                qubits.push(q);
            } else {
                let v = parse_param(tok).ok_or_else(|| err(format!("invalid parameter `{tok}`")))?;
                params.push(v);
            }
        }
        if qubits.is_empty() {
            return Err(err(format!("`{gate}` has no qubit operands")));
        }
        for (k, q) in qubits.iter().enumerate() {
            if qubits[..k].contains(q) {
                return Err(err(format!("qubit q{q} repeated")));
            }
        }
        children.push(Instruction::gate(&gate, &qubits, &params));
    }
    Ok(Instruction::composite(name, children))
}

/// Numbers, `pi`, and `pi/<n>`, `-pi/<n>`, `<k>*pi`.
fn parse_param(tok: &str) -> Option<f64> {
    if let Ok(v) = tok.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (sign, body) = match tok.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, tok),
    };
    let pi = std::f64::consts::PI;
    let v = if body.eq_ignore_ascii_case("pi") {
        pi
    } else if let Some(den) = body.to_ascii_lowercase().strip_prefix("pi/") {
        pi / den.parse::<f64>().ok()?
    } else if let Some(k) = body.to_ascii_lowercase().strip_suffix("*pi") {
        k.parse::<f64>().ok()? * pi
    } else {
        return None;
    };
    Some(sign * v)
}
