//! OpenPulse backend Hamiltonians.
//!
//! A model is read from the `h_str` / `vars` / `qub` JSON object. Each h_str
//! entry (after `_SUM` expansion) becomes one [`HamiltonianTerm`]; an entry
//! with a `||D<i>` or `||U<i>` suffix is driven by that channel.

mod operators;
mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::sparse::CsrMatrix;

pub use operators::{operator_matrix, operator_sum_matrix, product_matrix, term_matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("invalid Hamiltonian JSON: {0}")]
    Json(String),
    #[error("h_str is empty")]
    Empty,
    #[error("invalid subsystem dimensions: {0}")]
    InvalidDimension(String),
    #[error("h_str[{entry}] `{text}`, offset {offset}: {kind}")]
    Entry {
        entry: usize,
        text: String,
        offset: usize,
        kind: EntryErrorKind,
    },
    #[error("operator expression `{text}`, offset {offset}: {kind}")]
    Operator {
        text: String,
        offset: usize,
        kind: EntryErrorKind,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntryErrorKind {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("malformed _SUM: {0}")]
    MalformedSum(String),
    #[error("subsystem {0} is not declared in qub")]
    MissingSubsystem(usize),
    #[error("channel suffix appears more than once")]
    DuplicateChannel,
    #[error("invalid channel `{0}`")]
    InvalidChannel(String),
    #[error("division by an operator")]
    NonScalarDivisor,
    #[error("coefficient is not finite")]
    NonFinite,
    #[error("{0}")]
    Syntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OperatorKind {
    PauliI,
    PauliX,
    PauliY,
    PauliZ,
    LoweringSM,
    RaisingSP,
    ProjectorO,
    NumberN,
}

impl OperatorKind {
    pub fn symbol(self) -> &'static str {
        match self {
            OperatorKind::PauliI => "I",
            OperatorKind::PauliX => "X",
            OperatorKind::PauliY => "Y",
            OperatorKind::PauliZ => "Z",
            OperatorKind::LoweringSM => "SM",
            OperatorKind::RaisingSP => "SP",
            OperatorKind::ProjectorO => "O",
            OperatorKind::NumberN => "N",
        }
    }
}

/// An operator acting on one subsystem, e.g. `SM1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Operator {
    pub kind: OperatorKind,
    pub subsystem: usize,
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.symbol(), self.subsystem)
    }
}

impl FromStr for Operator {
    type Err = HamiltonianError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parser::operator_token(s.trim()).ok_or_else(|| HamiltonianError::Operator {
            text: s.to_string(),
            offset: 0,
            kind: EntryErrorKind::UnknownOperator(s.trim().to_string()),
        })
    }
}

/// `weight * factors[0] * factors[1] * ...`; an empty factor list is the
/// identity.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorProduct {
    pub weight: f64,
    pub factors: Vec<Operator>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelKind {
    Drive,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId {
    pub kind: ChannelKind,
    pub index: usize,
}

impl ChannelId {
    pub fn drive(index: usize) -> Self {
        Self {
            kind: ChannelKind::Drive,
            index,
        }
    }

    pub fn control(index: usize) -> Self {
        Self {
            kind: ChannelKind::Control,
            index,
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.kind {
            ChannelKind::Drive => 'd',
            ChannelKind::Control => 'u',
        };
        write!(f, "{prefix}{}", self.index)
    }
}

impl FromStr for ChannelId {
    type Err = EntryErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || EntryErrorKind::InvalidChannel(s.to_string());
        let mut chars = t.chars();
        let kind = match chars.next().map(|c| c.to_ascii_lowercase()) {
            Some('d') => ChannelKind::Drive,
            Some('u') => ChannelKind::Control,
            _ => return Err(bad()),
        };
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let index = digits.parse().map_err(|_| bad())?;
        Ok(Self { kind, index })
    }
}

impl Serialize for ChannelId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChannelId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One additive piece of H(t): static when `channel` is `None`, otherwise
/// multiplied by that channel's drive signal.
///
/// The operator part is a sum of weighted products so that entries like
/// `O*(SM0 + SP0)||D0` stay a single term. When all products share one
/// weight it is folded into `coefficient`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub channel: Option<ChannelId>,
    pub coefficient: f64,
    pub products: Vec<OperatorProduct>,
}

impl HamiltonianTerm {
    fn from_products(channel: Option<ChannelId>, mut products: Vec<OperatorProduct>) -> Self {
        let first = products[0].weight;
        let shared = products.iter().all(|p| p.weight.to_bits() == first.to_bits());
        let coefficient = if shared {
            products.iter_mut().for_each(|p| p.weight = 1.0);
            first
        } else {
            1.0
        };
        Self {
            channel,
            coefficient,
            products,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        self.channel.is_some()
    }

    /// The operator list of a single-product term.
    pub fn operators(&self) -> Option<&[Operator]> {
        match self.products.as_slice() {
            [only] => Some(&only.factors),
            _ => None,
        }
    }

    /// Text form accepted back by the parser, without `_SUM` or variables.
    pub fn to_h_str(&self) -> String {
        let mut body = format_number(self.coefficient);
        let factors = |p: &OperatorProduct| p.factors.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("*");
        match self.products.as_slice() {
            [only] if only.weight == 1.0 => {
                if !only.factors.is_empty() {
                    body = format!("{body}*{}", factors(only));
                }
            }
            products => {
                let parts: Vec<String> = products
                    .iter()
                    .map(|p| match (p.weight == 1.0, p.factors.is_empty()) {
                        (true, true) => "1".to_string(),
                        (true, false) => factors(p),
                        (false, true) => format_number(p.weight),
                        (false, false) => format!("{}*{}", format_number(p.weight), factors(p)),
                    })
                    .collect();
                body = format!("{body}*({})", parts.join(" + "));
            }
        }
        match self.channel {
            Some(ch) => format!("{body}||{}", ch.to_string().to_uppercase()),
            None => body,
        }
    }
}

fn format_number(v: f64) -> String {
    if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
        format!("({v:?})")
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianModel {
    pub description: String,
    pub terms: Vec<HamiltonianTerm>,
    pub dims: BTreeMap<usize, usize>,
    pub vars: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct RawModel {
    #[serde(default)]
    description: String,
    h_str: Vec<String>,
    #[serde(default)]
    vars: BTreeMap<String, f64>,
    qub: BTreeMap<String, usize>,
}

pub fn parse_hamiltonian(json_text: &str) -> Result<HamiltonianModel, HamiltonianError> {
    let raw: RawModel = serde_json::from_str(json_text).map_err(|e| HamiltonianError::Json(e.to_string()))?;
    HamiltonianModel::from_parts(raw.description, &raw.h_str, raw.vars, raw.qub)
}

impl HamiltonianModel {
    /// Builds a model from already-decoded JSON fields; `qub` keys are
    /// subsystem indices as strings.
    pub fn from_parts(
        description: String,
        h_str: &[String],
        vars: BTreeMap<String, f64>,
        qub: BTreeMap<String, usize>,
    ) -> Result<Self, HamiltonianError> {
        if h_str.is_empty() {
            return Err(HamiltonianError::Empty);
        }
        let mut dims = BTreeMap::new();
        for (key, dim) in qub {
            let idx: usize = key
                .trim()
                .parse()
                .map_err(|_| HamiltonianError::InvalidDimension(format!("qub key `{key}` is not an index")))?;
            if dim < 2 {
                return Err(HamiltonianError::InvalidDimension(format!(
                    "subsystem {idx} has dimension {dim}, need at least 2"
                )));
            }
            dims.insert(idx, dim);
        }
        if dims.is_empty() {
            return Err(HamiltonianError::InvalidDimension("qub is empty".into()));
        }
        let ctx = parser::Context {
            vars: &vars,
            dims: &dims,
        };
        let mut terms = Vec::new();
        for (entry, text) in h_str.iter().enumerate() {
            let expanded = expand_sum(text).map_err(|(offset, kind)| HamiltonianError::Entry {
                entry,
                text: text.clone(),
                offset,
                kind,
            })?;
            for piece in expanded {
                let term = parse_entry(&piece, &ctx).map_err(|(offset, kind)| HamiltonianError::Entry {
                    entry,
                    text: piece.clone(),
                    offset,
                    kind,
                })?;
                terms.push(term);
            }
        }
        Ok(Self {
            description,
            terms,
            dims,
            vars,
        })
    }

    /// Total Hilbert-space dimension D = Π dims.
    pub fn dimension(&self) -> usize {
        operators::total_dimension(&self.dims)
    }

    /// Subsystem dimensions in tensor order (subsystem 0 first).
    pub fn subsystem_dims(&self) -> Vec<usize> {
        self.dims.values().copied().collect()
    }

    pub fn static_terms(&self) -> impl Iterator<Item = &HamiltonianTerm> {
        self.terms.iter().filter(|t| t.channel.is_none())
    }

    pub fn driven_terms(&self) -> impl Iterator<Item = &HamiltonianTerm> {
        self.terms.iter().filter(|t| t.channel.is_some())
    }

    /// Distinct driving channels in sorted order.
    pub fn channels(&self) -> Vec<ChannelId> {
        let mut out: Vec<ChannelId> = self.terms.iter().filter_map(|t| t.channel).collect();
        out.sort();
        out.dedup();
        out
    }

    /// H₀, the sum of all static term matrices.
    pub fn static_hamiltonian(&self) -> Result<CsrMatrix, HamiltonianError> {
        let d = self.dimension();
        let mut acc = CsrMatrix::zeros(d, d);
        for t in self.static_terms() {
            acc = acc.add(&term_matrix(t, &self.dims)?);
        }
        Ok(acc)
    }

    /// H_j per channel: the sum of every term driven by that channel.
    pub fn channel_hamiltonians(&self) -> Result<Vec<(ChannelId, CsrMatrix)>, HamiltonianError> {
        let d = self.dimension();
        let mut out = Vec::new();
        for ch in self.channels() {
            let mut acc = CsrMatrix::zeros(d, d);
            for t in self.terms.iter().filter(|t| t.channel == Some(ch)) {
                acc = acc.add(&term_matrix(t, &self.dims)?);
            }
            out.push((ch, acc));
        }
        Ok(out)
    }

    /// Parses a standalone operator expression (collapse operators, control
    /// Hamiltonians) against this model's variables and dimensions.
    pub fn parse_operator(&self, text: &str) -> Result<Vec<OperatorProduct>, HamiltonianError> {
        parse_operator_expression(text, &self.vars, &self.dims)
    }

    /// OpenPulse JSON with one fully expanded, variable-free entry per term.
    pub fn to_json(&self) -> String {
        let h_str: Vec<String> = self.terms.iter().map(HamiltonianTerm::to_h_str).collect();
        let qub: BTreeMap<String, usize> = self.dims.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let value = serde_json::json!({
            "description": self.description,
            "h_str": h_str,
            "osc": {},
            "qub": qub,
            "vars": self.vars,
        });
        serde_json::to_string_pretty(&value).expect("model serializes")
    }
}

pub fn parse_operator_expression(
    text: &str,
    vars: &BTreeMap<String, f64>,
    dims: &BTreeMap<usize, usize>,
) -> Result<Vec<OperatorProduct>, HamiltonianError> {
    let ctx = parser::Context { vars, dims };
    parser::parse_operator_sum(text, &ctx).map_err(|(offset, kind)| HamiltonianError::Operator {
        text: text.to_string(),
        offset,
        kind,
    })
}

fn parse_entry(text: &str, ctx: &parser::Context<'_>) -> Result<HamiltonianTerm, parser::EntryError> {
    let mut pieces = text.split("||");
    let body = pieces.next().unwrap_or_default();
    let channel = match pieces.next() {
        None => None,
        Some(ch) => {
            if pieces.next().is_some() {
                let second = body.len() + 2 + ch.len() + 2;
                return Err((second, EntryErrorKind::DuplicateChannel));
            }
            let at = body.len() + 2;
            Some(ch.parse::<ChannelId>().map_err(|k| (at, k))?)
        }
    };
    let products = parser::parse_operator_sum(body, ctx)?;
    if products.iter().any(|p| !p.weight.is_finite()) {
        return Err((0, EntryErrorKind::NonFinite));
    }
    Ok(HamiltonianTerm::from_products(channel, products))
}

/// Expands `_SUM[i,lo,hi,body]` by textual `{i}` substitution. Entries
/// without the prefix pass through unchanged.
fn expand_sum(text: &str) -> Result<Vec<String>, parser::EntryError> {
    let lead = text.len() - text.trim_start().len();
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("_SUM") else {
        return Ok(vec![text.to_string()]);
    };
    let malformed = |at: usize, msg: &str| (at, EntryErrorKind::MalformedSum(msg.to_string()));
    let open = lead + 4;
    let inner = rest
        .trim_start()
        .strip_prefix('[')
        .ok_or_else(|| malformed(open, "expected `[` after _SUM"))?;
    let inner = inner
        .strip_suffix(']')
        .ok_or_else(|| malformed(lead + trimmed.len(), "expected closing `]`"))?;
    let mut header = inner.splitn(4, ',');
    let (Some(var), Some(lo), Some(hi), Some(body)) = (header.next(), header.next(), header.next(), header.next()) else {
        return Err(malformed(open, "expected `[var,lo,hi,body]`"));
    };
    let var = var.trim();
    if var.is_empty() || !var.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(malformed(open, "summation variable must be an identifier"));
    }
    let lo: i64 = lo.trim().parse().map_err(|_| malformed(open, "lower bound is not an integer"))?;
    let hi: i64 = hi.trim().parse().map_err(|_| malformed(open, "upper bound is not an integer"))?;
    if hi < lo {
        return Err(malformed(open, "upper bound is below lower bound"));
    }
    let placeholder = format!("{{{var}}}");
    let mut out = Vec::new();
    for k in lo..=hi {
        out.extend(expand_sum(&body.replace(&placeholder, &k.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(h_str: &[&str], vars: &[(&str, f64)], qub: &[(usize, usize)]) -> Result<HamiltonianModel, HamiltonianError> {
        HamiltonianModel::from_parts(
            String::new(),
            &h_str.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            vars.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            qub.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        )
    }

    fn op(kind: OperatorKind, subsystem: usize) -> Operator {
        Operator { kind, subsystem }
    }

    const TWO_QUBIT: &str = r#"{
        "description": "Qubits are modelled as a two level system. System of 2 qubits.",
        "h_str": ["_SUM[i,0,1,wq{i}/2*Z{i}]", "_SUM[i,0,1,omegad{i}*X{i}||D{i}]", "jq0q1*Sp0*Sm1", "jq0q1*Sm0*Sp1"],
        "osc": {},
        "qub": {"0": 2, "1": 2},
        "vars": {"omegad0": 1.303125, "omegad1": 0.97, "wq0": 30.91270129264568, "wq1": 30.36010168900955, "jq0q1": 0.04}
    }"#;

    const QUTRIT: &str = r#"{
        "description": "One-qutrit Hamiltonian.",
        "h_latex": "",
        "h_str": ["(w - 0.5*alpha)*O0", "0.5*alpha*O0*O0", "O*(SM0 + SP0)||D0"],
        "osc": {},
        "qub": {"0": 3},
        "vars": {"w": 31.63772297724, "alpha": -1.47969, "O": 0.0314}
    }"#;

    #[test]
    fn sum_expansion_resolves_variables() {
        let m = model(
            &["_SUM[i,0,1,wq{i}/2*Z{i}]"],
            &[("wq0", 30.91270129264568), ("wq1", 30.36010168900955)],
            &[(0, 2), (1, 2)],
        )
        .unwrap();
        assert_eq!(m.terms.len(), 2);
        assert_eq!(m.terms[0].coefficient, 30.91270129264568 / 2.0);
        assert_eq!(m.terms[0].operators().unwrap(), &[op(OperatorKind::PauliZ, 0)]);
        assert!((m.terms[1].coefficient - 15.180050845).abs() < 1e-8);
        assert_eq!(m.terms[1].operators().unwrap(), &[op(OperatorKind::PauliZ, 1)]);
        assert!(m.terms.iter().all(|t| !t.is_time_dependent()));
    }

    #[test]
    fn channel_suffix_makes_term_driven() {
        let m = model(&["g*X0||D0"], &[("g", 0.1)], &[(0, 2)]).unwrap();
        assert_eq!(m.terms[0].channel, Some(ChannelId::drive(0)));
        assert_eq!(m.terms[0].coefficient, 0.1);
        assert_eq!(m.terms[0].operators().unwrap(), &[op(OperatorKind::PauliX, 0)]);
        let m = model(&["X0||u3"], &[], &[(0, 2)]).unwrap();
        assert_eq!(m.terms[0].channel, Some(ChannelId::control(3)));
    }

    #[test]
    fn zero_coefficient_is_kept() {
        let m = model(&["0*Z0"], &[], &[(0, 2)]).unwrap();
        assert_eq!(m.terms[0].coefficient, 0.0);
        assert_eq!(m.terms[0].operators().unwrap(), &[op(OperatorKind::PauliZ, 0)]);
        assert_eq!(m.static_hamiltonian().unwrap().nnz(), 0);
    }

    #[test]
    fn scalar_subexpressions_fold() {
        let m = parse_hamiltonian(QUTRIT).unwrap();
        assert_eq!(m.terms.len(), 3);
        assert_eq!(m.dimension(), 3);
        assert!((m.terms[0].coefficient - (31.63772297724 + 0.5 * 1.47969)).abs() < 1e-12);
        assert_eq!(m.terms[0].operators().unwrap(), &[op(OperatorKind::ProjectorO, 0)]);
        assert_eq!(m.terms[1].coefficient, 0.5 * -1.47969);
        // the variable `O` shadows nothing: `O0` is still an operator
        let drive = &m.terms[2];
        assert_eq!(drive.channel, Some(ChannelId::drive(0)));
        assert_eq!(drive.coefficient, 0.0314);
        assert_eq!(drive.products.len(), 2);
    }

    #[test]
    fn two_qubit_model_counts() {
        let m = parse_hamiltonian(TWO_QUBIT).unwrap();
        assert_eq!(m.terms.len(), 6);
        assert_eq!(m.static_terms().count(), 4);
        assert_eq!(m.driven_terms().count(), 2);
        assert_eq!(m.dimension(), 4);
        assert_eq!(m.channels(), vec![ChannelId::drive(0), ChannelId::drive(1)]);
        assert!(m.static_hamiltonian().unwrap().hermiticity_defect() < 1e-15);
    }

    #[test]
    fn errors_report_entry_and_offset() {
        let e = model(&["Z0", "g*Z0"], &[], &[(0, 2)]).unwrap_err();
        assert!(matches!(
            e,
            HamiltonianError::Entry { entry: 1, offset: 0, kind: EntryErrorKind::UnknownVariable(ref v), .. } if v == "g"
        ));
        let e = model(&["2*Q0"], &[], &[(0, 2)]).unwrap_err();
        assert!(matches!(
            e,
            HamiltonianError::Entry { offset: 2, kind: EntryErrorKind::UnknownOperator(_), .. }
        ));
        let e = model(&["_SUM[i,0,X{i}]"], &[], &[(0, 2)]).unwrap_err();
        assert!(matches!(e, HamiltonianError::Entry { kind: EntryErrorKind::MalformedSum(_), .. }));
        let e = model(&["_SUM[i,2,1,X{i}]"], &[], &[(0, 2)]).unwrap_err();
        assert!(matches!(e, HamiltonianError::Entry { kind: EntryErrorKind::MalformedSum(_), .. }));
        let e = model(&["X1"], &[], &[(0, 2)]).unwrap_err();
        assert!(matches!(e, HamiltonianError::Entry { kind: EntryErrorKind::MissingSubsystem(1), .. }));
        let e = model(&["X0||D0||D1"], &[], &[(0, 2)]).unwrap_err();
        assert!(matches!(e, HamiltonianError::Entry { offset: 8, kind: EntryErrorKind::DuplicateChannel, .. }));
        assert_eq!(model(&[], &[], &[(0, 2)]).unwrap_err(), HamiltonianError::Empty);
        assert!(matches!(
            model(&["X0/Z0"], &[], &[(0, 2)]).unwrap_err(),
            HamiltonianError::Entry { kind: EntryErrorKind::NonScalarDivisor, .. }
        ));
        assert!(matches!(
            model(&["X0"], &[], &[(0, 1)]).unwrap_err(),
            HamiltonianError::InvalidDimension(_)
        ));
        assert!(parse_hamiltonian("{\"h_str\": [\"X0\"]}").is_err());
    }

    #[test]
    fn channel_ids_round_trip() {
        for text in ["d0", "u12", "D3", "U1"] {
            let ch: ChannelId = text.parse().unwrap();
            assert_eq!(ch.to_string(), text.to_lowercase());
            assert_eq!(ch.to_string().parse::<ChannelId>().unwrap(), ch);
        }
        assert!("x0".parse::<ChannelId>().is_err());
        assert!("d".parse::<ChannelId>().is_err());
    }

    #[test]
    fn example_models_round_trip() {
        for src in [TWO_QUBIT, QUTRIT] {
            let m = parse_hamiltonian(src).unwrap();
            assert_eq!(parse_hamiltonian(&m.to_json()).unwrap(), m);
        }
    }

    fn arb_operator(indices: &'static [&'static str]) -> impl Strategy<Value = String> {
        (
            prop_oneof!["X", "Y", "Z", "SM", "SP", "O", "N", "I", "sp", "Sm"],
            proptest::sample::select(indices),
        )
            .prop_map(|(k, i)| format!("{k}{i}"))
    }

    fn arb_body(indices: &'static [&'static str]) -> impl Strategy<Value = String> {
        let atom = prop_oneof![
            arb_operator(indices),
            (0.01f64..10.0).prop_map(|v| format!("{v}")),
            Just("g".to_string()),
            Just("pi".to_string()),
        ];
        atom.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}*{b}")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
                inner.prop_map(|a| format!("-{a}")),
            ]
        })
    }

    proptest! {
        #[test]
        fn sum_expands_to_bound_count(lo in 0usize..3, span in 0usize..3, indexed in arb_body(&["{k}", "0"])) {
            let hi = lo + span;
            let qub: Vec<(usize, usize)> = (0..=hi + 1).map(|i| (i, 3)).collect();
            let vars = [("g", 0.25)];
            let summed = model(&[&format!("_SUM[k,{lo},{hi},{indexed}]")], &vars, &qub);
            match summed {
                Ok(m) => {
                    prop_assert_eq!(m.terms.len(), hi - lo + 1);
                    for (n, k) in (lo..=hi).enumerate() {
                        let single = model(&[&indexed.replace("{k}", &k.to_string())], &vars, &qub).unwrap();
                        prop_assert_eq!(&m.terms[n], &single.terms[0]);
                    }
                }
                Err(e) => {
                    // bodies that fold to nothing valid must fail for every index
                    let single = model(&[&indexed.replace("{k}", &lo.to_string())], &vars, &qub);
                    prop_assert!(single.is_err(), "{e}");
                }
            }
        }

        #[test]
        fn serialize_round_trips(bodies in proptest::collection::vec((arb_body(&["0", "1"]), proptest::option::of(0usize..2)), 1..5)) {
            let entries: Vec<String> = bodies
                .iter()
                .map(|(b, ch)| match ch {
                    Some(c) => format!("{b}||D{c}"),
                    None => b.clone(),
                })
                .collect();
            let refs: Vec<&str> = entries.iter().map(|s| s.as_str()).collect();
            let m = model(&refs, &[("g", 0.25)], &[(0, 2), (1, 3)]).unwrap();
            let again = parse_hamiltonian(&m.to_json()).unwrap();
            prop_assert_eq!(again, m);
        }
    }
}
