//! Closed-system optimal control of analytic drive functions.
//!
//! A [`ControlProblem`] names a target unitary, a set of control functions
//! f_j(t; p) and the Hamiltonian terms they modulate. [`optimize`] climbs the
//! gate fidelity with finite-difference gradients.

mod optimizer;

pub use optimizer::{
    fd_gradient, fd_gradient_five_point, optimize, GradientAscent, Objective, OptimizationResult, Optimizer,
    OptimizerConfig,
};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::expr::{BoundExpression, ExprError, TimeExpression};
use crate::hamiltonian::{operator_sum_matrix, parse_operator_expression, HamiltonianError};
use crate::ode::{integrate, integrate_on_grid, OdeError, OdeSystem, Rk23Options};
use crate::sparse::CsrMatrix;
use crate::C64;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid control problem: {0}")]
    InvalidProblem(String),
    #[error("target unitary is not unitary (max |V†V − I| = {0:e})")]
    NotUnitary(f64),
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Expression(#[from] ExprError),
    #[error("integration failed: {0}")]
    Integration(#[from] OdeError),
}

/// Target as given in the problem file: an operator string such as `X0`, or
/// an explicit matrix of `[re, im]` pairs (row major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Operator(String),
    Matrix(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(default)]
    method: Option<String>,
    #[serde(default)]
    optimizer: Option<String>,
    dimension: usize,
    #[serde(rename = "target-U")]
    target: TargetSpec,
    #[serde(rename = "control-params")]
    control_params: Vec<String>,
    #[serde(rename = "control-funcs")]
    control_funcs: Vec<String>,
    #[serde(rename = "control-H")]
    control_h: Vec<String>,
    #[serde(rename = "drift-H", default, skip_serializing_if = "Option::is_none")]
    drift_h: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    vars: BTreeMap<String, f64>,
    #[serde(rename = "initial-parameters")]
    initial_parameters: Vec<f64>,
    #[serde(rename = "max-time")]
    max_time: f64,
}

#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub method: Option<String>,
    pub optimizer: Option<String>,
    pub dimension: usize,
    /// Subsystem dimensions used to resolve operator strings: qubits when
    /// `dimension` is a power of two, otherwise one subsystem.
    pub dims: BTreeMap<usize, usize>,
    pub target_spec: TargetSpec,
    pub target: DMatrix<C64>,
    pub control_params: Vec<String>,
    pub control_funcs: Vec<TimeExpression>,
    pub control_h_text: Vec<String>,
    pub control_h: Vec<CsrMatrix>,
    pub drift_text: Option<String>,
    pub drift: Option<CsrMatrix>,
    pub vars: BTreeMap<String, f64>,
    pub initial_parameters: Vec<f64>,
    pub max_time: f64,
    /// Tighter than the master-equation defaults: unitarity drift grows
    /// roughly as 30·rtol over a gate.
    pub ode: Rk23Options,
}

fn default_dims(dimension: usize) -> BTreeMap<usize, usize> {
    if dimension >= 2 && dimension.is_power_of_two() {
        (0..dimension.trailing_zeros() as usize).map(|q| (q, 2)).collect()
    } else {
        BTreeMap::from([(0, dimension)])
    }
}

fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u - DMatrix::<C64>::identity(n, n);
    g.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

impl ControlProblem {
    pub fn from_json(json_text: &str) -> Result<Self, ControlError> {
        let raw: RawProblem = serde_json::from_str(json_text).map_err(|e| ControlError::InvalidProblem(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawProblem) -> Result<Self, ControlError> {
        let d = raw.dimension;
        if d == 0 {
            return Err(ControlError::InvalidProblem("dimension must be positive".into()));
        }
        if !(raw.max_time.is_finite() && raw.max_time > 0.0) {
            return Err(ControlError::InvalidProblem(format!("max-time must be positive, got {}", raw.max_time)));
        }
        if raw.control_funcs.len() != raw.control_h.len() {
            return Err(ControlError::InvalidProblem(format!(
                "{} control functions but {} control Hamiltonians",
                raw.control_funcs.len(),
                raw.control_h.len()
            )));
        }
        if raw.initial_parameters.len() != raw.control_params.len() {
            return Err(ControlError::ParameterCount {
                expected: raw.control_params.len(),
                got: raw.initial_parameters.len(),
            });
        }
        if let Some(p) = raw.control_params.iter().find(|p| *p == "t") {
            return Err(ControlError::InvalidProblem(format!("`{p}` is reserved for time")));
        }
        let dims = default_dims(d);
        let operator = |text: &str| -> Result<CsrMatrix, ControlError> {
            let products = parse_operator_expression(text, &raw.vars, &dims)?;
            Ok(operator_sum_matrix(&products, &dims)?)
        };

        let target = match &raw.target {
            TargetSpec::Operator(s) => operator(s)?.to_dense(),
            TargetSpec::Matrix(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(ControlError::InvalidProblem(format!("target-U must be {d}x{d}")));
                }
                DMatrix::from_fn(d, d, |r, c| C64::new(rows[r][c][0], rows[r][c][1]))
            }
        };
        let defect = unitarity_defect(&target);
        if defect > 1e-10 {
            return Err(ControlError::NotUnitary(defect));
        }

        let mut names = vec!["t"];
        names.extend(raw.control_params.iter().map(String::as_str));
        let mut control_funcs = Vec::new();
        for f in &raw.control_funcs {
            let e = TimeExpression::parse(f)?;
            e.bind(&names)?;
            control_funcs.push(e);
        }
        let control_h = raw.control_h.iter().map(|h| operator(h)).collect::<Result<Vec<_>, _>>()?;
        let drift = raw.drift_h.as_deref().map(operator).transpose()?;
        Ok(Self {
            method: raw.method,
            optimizer: raw.optimizer,
            dimension: d,
            dims,
            target_spec: raw.target,
            target,
            control_params: raw.control_params,
            control_funcs,
            control_h_text: raw.control_h,
            control_h,
            drift_text: raw.drift_h,
            drift,
            vars: raw.vars,
            initial_parameters: raw.initial_parameters,
            max_time: raw.max_time,
            ode: Rk23Options {
                rtol: 1e-8,
                atol: 1e-10,
                initial_step: raw.max_time * 1e-3,
                ..Rk23Options::default()
            },
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawProblem {
            method: self.method.clone(),
            optimizer: self.optimizer.clone(),
            dimension: self.dimension,
            target: self.target_spec.clone(),
            control_params: self.control_params.clone(),
            control_funcs: self.control_funcs.iter().map(|f| f.source().to_string()).collect(),
            control_h: self.control_h_text.clone(),
            drift_h: self.drift_text.clone(),
            vars: self.vars.clone(),
            initial_parameters: self.initial_parameters.clone(),
            max_time: self.max_time,
        };
        serde_json::to_string_pretty(&raw).expect("problem serializes")
    }

    /// The j-th control function with `params` substituted, leaving `t`.
    pub fn control_expression(&self, j: usize, params: &[f64]) -> TimeExpression {
        let values: Vec<(&str, f64)> = self.control_params.iter().map(String::as_str).zip(params.iter().copied()).collect();
        self.control_funcs[j].substitute(&values)
    }

    fn check_params(&self, params: &[f64]) -> Result<(), ControlError> {
        if params.len() != self.control_params.len() {
            return Err(ControlError::ParameterCount {
                expected: self.control_params.len(),
                got: params.len(),
            });
        }
        Ok(())
    }

    fn system(&self, params: &[f64]) -> Result<Propagator<'_>, ControlError> {
        self.check_params(params)?;
        let mut names = vec!["t"];
        names.extend(self.control_params.iter().map(String::as_str));
        let funcs = self.control_funcs.iter().map(|f| f.bind(&names)).collect::<Result<Vec<_>, _>>()?;
        let mut args = vec![0.0];
        args.extend_from_slice(params);
        Ok(Propagator {
            dim: self.dimension,
            drift: self.drift.as_ref(),
            controls: &self.control_h,
            funcs,
            args,
        })
    }

    /// Adaptive propagation; also returns the accepted step times so that
    /// nearby parameter points can be replayed on the same grid.
    pub fn propagate_with_grid(&self, params: &[f64]) -> Result<(DMatrix<C64>, Vec<f64>), ControlError> {
        let mut sys = self.system(params)?;
        let d = self.dimension;
        let mut y = identity_vec(d);
        let stats = integrate(&mut sys, &mut y, 0.0, self.max_time, &[], &self.ode, |_, _, _| {})?;
        Ok((DMatrix::from_vec(d, d, y), stats.step_times))
    }

    /// Fixed-grid propagation with the third-order scheme.
    pub fn propagate_on_grid(&self, params: &[f64], grid: &[f64]) -> Result<DMatrix<C64>, ControlError> {
        let mut sys = self.system(params)?;
        let d = self.dimension;
        let mut y = identity_vec(d);
        integrate_on_grid(&mut sys, &mut y, 0.0, grid)?;
        Ok(DMatrix::from_vec(d, d, y))
    }
}

fn identity_vec(d: usize) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..d {
        y[k * d + k] = C64::new(1.0, 0.0);
    }
    y
}

/// dU/dt = −i(H_drift + Σ_j f_j(t) H_j) U on column-stacked U.
struct Propagator<'a> {
    dim: usize,
    drift: Option<&'a CsrMatrix>,
    controls: &'a [CsrMatrix],
    funcs: Vec<BoundExpression>,
    args: Vec<f64>,
}

impl OdeSystem for Propagator<'_> {
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        let d = self.dim;
        self.args[0] = t;
        dy.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        let minus_i = C64::new(0.0, -1.0);
        for c in 0..d {
            let col = &y[c * d..(c + 1) * d];
            let out = &mut dy[c * d..(c + 1) * d];
            if let Some(h) = self.drift {
                h.mul_vec_add(minus_i, col, out);
            }
            for (h, f) in self.controls.iter().zip(&self.funcs) {
                let v = f.eval(&self.args);
                if v != 0.0 {
                    h.mul_vec_add(minus_i * v, col, out);
                }
            }
        }
    }
}

/// U(T) for the given control parameters.
pub fn propagate_unitary(problem: &ControlProblem, params: &[f64]) -> Result<DMatrix<C64>, ControlError> {
    Ok(problem.propagate_with_grid(params)?.0)
}

/// |Tr(V†U)|² / D².
pub fn fidelity(u: &DMatrix<C64>, target: &DMatrix<C64>) -> f64 {
    let d = u.nrows() as f64;
    let tr: C64 = target.adjoint().component_mul(&u.transpose()).iter().sum();
    tr.norm_sqr() / (d * d)
}

/// max |U†U − I|.
pub fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    unitarity_defect(u)
}

/// Serializes a result together with the problem's parameter names.
pub fn result_json(problem: &ControlProblem, result: &OptimizationResult) -> String {
    let params: serde_json::Map<String, Value> = problem
        .control_params
        .iter()
        .zip(&result.params)
        .map(|(n, v)| (n.clone(), Value::from(*v)))
        .collect();
    let value = serde_json::json!({
        "fidelity": result.fidelity,
        "converged": result.converged,
        "iterations": result.iterations,
        "evaluations": result.evaluations,
        "parameters": params,
        "best-parameters": result.params,
        "history": result.history.iter().map(|(i, f)| serde_json::json!({"iteration": i, "fidelity": f})).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&value).expect("result serializes")
}
