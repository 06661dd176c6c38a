//! Parser for a single (already `_SUM`-expanded) h_str entry.
//!
//! An entry is an arithmetic expression mixing scalars and operator tokens.
//! It is evaluated into a sum of weighted operator products; scalar
//! subexpressions fold to numbers as they are combined.

use std::collections::BTreeMap;

use super::{EntryErrorKind, Operator, OperatorKind, OperatorProduct};

/// Error location inside the entry text plus its cause.
pub(crate) type EntryError = (usize, EntryErrorKind);

pub(crate) struct Context<'a> {
    pub vars: &'a BTreeMap<String, f64>,
    pub dims: &'a BTreeMap<usize, usize>,
}

/// Parses an operator expression like `0.5*alpha*O0*O0` or `O*(SM0 + SP0)`.
pub(crate) fn parse_operator_sum(text: &str, ctx: &Context<'_>) -> Result<Vec<OperatorProduct>, EntryError> {
    let mut p = Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        ctx,
    };
    let value = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err((p.pos, EntryErrorKind::Syntax("unexpected trailing input".into())));
    }
    if value.is_empty() {
        return Err((0, EntryErrorKind::Syntax("empty expression".into())));
    }
    Ok(value)
}

type Poly = Vec<OperatorProduct>;

fn scalar(v: f64) -> Poly {
    vec![OperatorProduct {
        weight: v,
        factors: Vec::new(),
    }]
}

/// Adds `src` into `dst`, merging products with identical factor lists.
fn accumulate(dst: &mut Poly, src: Poly) {
    for term in src {
        match dst.iter_mut().find(|t| t.factors == term.factors) {
            Some(existing) => existing.weight += term.weight,
            None => dst.push(term),
        }
    }
}

fn multiply(a: &Poly, b: &Poly) -> Poly {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            let mut factors = x.factors.clone();
            factors.extend_from_slice(&y.factors);
            accumulate(
                &mut out,
                vec![OperatorProduct {
                    weight: x.weight * y.weight,
                    factors,
                }],
            );
        }
    }
    out
}

fn as_scalar(p: &Poly) -> Option<f64> {
    match p.as_slice() {
        [only] if only.factors.is_empty() => Some(only.weight),
        _ => None,
    }
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    ctx: &'a Context<'a>,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn syntax(&self, msg: &str) -> EntryError {
        (self.pos, EntryErrorKind::Syntax(msg.to_string()))
    }

    fn expr(&mut self) -> Result<Poly, EntryError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    accumulate(&mut acc, rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    accumulate(&mut acc, multiply(&scalar(-1.0), &rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, EntryError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = multiply(&acc, &rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let rhs = self.unary()?;
                    let d = as_scalar(&rhs).ok_or((at, EntryErrorKind::NonScalarDivisor))?;
                    acc = multiply(&acc, &scalar(1.0 / d));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Poly, EntryError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                let v = self.unary()?;
                Ok(multiply(&scalar(-1.0), &v))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Poly, EntryError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of entry")),
        }
    }

    fn number(&mut self) -> Result<Poly, EntryError> {
        let start = self.pos;
        let b = self.bytes;
        while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < b.len() && (b[look] == b'+' || b[look] == b'-') {
                look += 1;
            }
            if look < b.len() && b[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < b.len() && b[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let lit = &self.text[start..self.pos];
        lit.parse::<f64>()
            .map(scalar)
            .map_err(|_| (start, EntryErrorKind::Syntax(format!("malformed number `{lit}`"))))
    }

    fn identifier(&mut self) -> Result<Poly, EntryError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        if let Some(v) = self.ctx.vars.get(name) {
            return Ok(scalar(*v));
        }
        if name == "pi" {
            return Ok(scalar(std::f64::consts::PI));
        }
        match operator_token(name) {
            Some(op) => {
                if !self.ctx.dims.contains_key(&op.subsystem) {
                    return Err((start, EntryErrorKind::MissingSubsystem(op.subsystem)));
                }
                Ok(vec![OperatorProduct {
                    weight: 1.0,
                    factors: vec![op],
                }])
            }
            None if looks_like_operator(name) => Err((start, EntryErrorKind::UnknownOperator(name.to_string()))),
            None => Err((start, EntryErrorKind::UnknownVariable(name.to_string()))),
        }
    }
}

/// Recognizes `X0`, `sm1`, `Sp0`, `O2`, ... (case-insensitive).
pub(crate) fn operator_token(name: &str) -> Option<Operator> {
    let split = name.find(|c: char| c.is_ascii_digit())?;
    let (letters, digits) = name.split_at(split);
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let kind = match letters.to_ascii_uppercase().as_str() {
        "I" => OperatorKind::PauliI,
        "X" => OperatorKind::PauliX,
        "Y" => OperatorKind::PauliY,
        "Z" => OperatorKind::PauliZ,
        "SM" => OperatorKind::LoweringSM,
        "SP" => OperatorKind::RaisingSP,
        "O" => OperatorKind::ProjectorO,
        "N" => OperatorKind::NumberN,
        _ => return None,
    };
    let subsystem = digits.parse().ok()?;
    Some(Operator { kind, subsystem })
}

// Short all-caps letters followed by an index read as an operator attempt
// (`Q0`, `SX1`) rather than a forgotten variable.
fn looks_like_operator(name: &str) -> bool {
    match name.find(|c: char| c.is_ascii_digit()) {
        Some(split) if split > 0 && split <= 2 => {
            name[..split].bytes().all(|b| b.is_ascii_uppercase()) && name[split..].bytes().all(|b| b.is_ascii_digit())
        }
        _ => false,
    }
}
