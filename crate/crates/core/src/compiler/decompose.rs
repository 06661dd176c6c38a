use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::DMatrix;

use crate::C64;

/// A rewrite angle: fixed, or taken from the source gate's parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Const(f64),
    Param(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateTemplate {
    pub name: &'static str,
    pub angles: Vec<Angle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rewrite {
    /// Parameters the source gate must carry.
    pub arity: usize,
    pub qubits: usize,
    pub sequence: Vec<GateTemplate>,
}

impl Rewrite {
    pub fn expand(&self, params: &[f64]) -> Vec<(String, Vec<f64>)> {
        self.sequence
            .iter()
            .map(|g| {
                let angles = g
                    .angles
                    .iter()
                    .map(|a| match a {
                        Angle::Const(v) => *v,
                        Angle::Param(i) => params[*i],
                    })
                    .collect();
                (g.name.to_string(), angles)
            })
            .collect()
    }
}

/// Rewrites of common gates into the `u1`/`u2`/`u3`/`cx` basis a backend
/// library calibrates. Gate names are matched case-insensitively.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalDecompositionTable {
    rules: BTreeMap<String, Rewrite>,
}

impl Default for UniversalDecompositionTable {
    fn default() -> Self {
        use Angle::{Const, Param};
        let single = |arity: usize, name: &'static str, angles: Vec<Angle>| Rewrite {
            arity,
            qubits: 1,
            sequence: vec![GateTemplate { name, angles }],
        };
        let mut rules = BTreeMap::new();
        rules.insert("h".into(), single(0, "u2", vec![Const(0.0), Const(PI)]));
        rules.insert("x".into(), single(0, "u3", vec![Const(PI), Const(0.0), Const(PI)]));
        rules.insert("y".into(), single(0, "u3", vec![Const(PI), Const(FRAC_PI_2), Const(FRAC_PI_2)]));
        rules.insert("z".into(), single(0, "u1", vec![Const(PI)]));
        rules.insert("rx".into(), single(1, "u3", vec![Param(0), Const(-FRAC_PI_2), Const(FRAC_PI_2)]));
        rules.insert("ry".into(), single(1, "u3", vec![Param(0), Const(0.0), Const(0.0)]));
        rules.insert("rz".into(), single(1, "u1", vec![Param(0)]));
        rules.insert("s".into(), single(0, "u1", vec![Const(FRAC_PI_2)]));
        rules.insert("t".into(), single(0, "u1", vec![Const(FRAC_PI_4)]));
        // libraries that calibrate only u3 still accept u1/u2
        rules.insert("u2".into(), single(2, "u3", vec![Const(FRAC_PI_2), Param(0), Param(1)]));
        rules.insert("u1".into(), single(1, "u3", vec![Const(0.0), Const(0.0), Param(0)]));
        rules.insert(
            "cnot".into(),
            Rewrite {
                arity: 0,
                qubits: 2,
                sequence: vec![GateTemplate {
                    name: "cx",
                    angles: vec![],
                }],
            },
        );
        Self { rules }
    }
}

impl UniversalDecompositionTable {
    pub fn empty() -> Self {
        Self { rules: BTreeMap::new() }
    }

    pub fn get(&self, name: &str) -> Option<&Rewrite> {
        self.rules.get(&name.to_lowercase())
    }

    pub fn insert(&mut self, name: &str, rewrite: Rewrite) {
        self.rules.insert(name.to_lowercase(), rewrite);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }
}

/// Unitary of a named gate, for the gates the table and the basis know.
/// Two-qubit gates use the first listed qubit as the most significant.
pub fn gate_unitary(name: &str, params: &[f64]) -> Option<DMatrix<C64>> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let m2 = |v: [C64; 4]| DMatrix::from_row_slice(2, 2, &v);
    let p = |i: usize| params.get(i).copied();
    let u3 = |theta: f64, phi: f64, lambda: f64| {
        let (s, co) = (theta / 2.0).sin_cos();
        m2([
            c(co, 0.0),
            -C64::from_polar(s, lambda),
            C64::from_polar(s, phi),
            C64::from_polar(co, phi + lambda),
        ])
    };
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Some(match name.to_lowercase().as_str() {
        "u3" => u3(p(0)?, p(1)?, p(2)?),
        "u2" => u3(FRAC_PI_2, p(0)?, p(1)?),
        "u1" => m2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, p(0)?)]),
        "h" => m2([c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)]),
        "x" => m2([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        "y" => m2([c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        "z" => m2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        "s" => m2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]),
        "t" => m2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, FRAC_PI_4)]),
        "rx" => {
            let (s, co) = (p(0)? / 2.0).sin_cos();
            m2([c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
        }
        "ry" => {
            let (s, co) = (p(0)? / 2.0).sin_cos();
            m2([c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
        }
        "rz" => {
            let t = p(0)?;
            m2([C64::from_polar(1.0, -t / 2.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, t / 2.0)])
        }
        "cx" | "cnot" => {
            let mut m = DMatrix::zeros(4, 4);
            for (r_, c_) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                m[(r_, c_)] = c(1.0, 0.0);
            }
            m
        }
        _ => return None,
    })
}

/// Whether `a = e^{iφ} b` for some φ, elementwise to `tol`.
pub fn equal_up_to_global_phase(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let (idx, _) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("non-empty matrix");
    if b[idx].norm() == 0.0 {
        return a.iter().all(|v| v.norm() <= tol);
    }
    let phase = a[idx] / b[idx];
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    a.iter().zip(b.iter()).all(|(x, y)| (x - phase * y).norm() <= tol)
}
