use serde::Serialize;

use super::{fidelity, ControlError, ControlProblem};

/// A scalar function to maximize.
pub trait Objective {
    fn dimension(&self) -> usize;
    fn value(&mut self, x: &[f64]) -> Result<f64, ControlError>;
    /// Value and gradient at `x`.
    fn gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>), ControlError>;
}

pub trait Optimizer {
    fn maximize(&mut self, objective: &mut dyn Objective, x0: &[f64]) -> Result<OptimizationResult, ControlError>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub params: Vec<f64>,
    pub fidelity: f64,
    /// (iteration, best fidelity so far); iteration 0 is the initial point.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once this value is reached.
    pub target: f64,
    /// Stop when ‖∇F‖ falls below this.
    pub gradient_tolerance: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    pub armijo: f64,
    pub initial_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            target: 0.999,
            gradient_tolerance: 1e-10,
            fd_step: 1e-5,
            armijo: 1e-4,
            initial_step: 1.0,
        }
    }
}

fn fd_steps(x: &[f64], rel: f64) -> Vec<f64> {
    x.iter().map(|v| rel * v.abs().max(1.0)).collect()
}

/// Central differences with step `rel·max(|x_i|, 1)`.
pub fn fd_gradient<F>(mut f: F, x: &[f64], rel: f64) -> Result<Vec<f64>, ControlError>
where
    F: FnMut(&[f64]) -> Result<f64, ControlError>,
{
    let h = fd_steps(x, rel);
    let mut p = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        p[i] = x[i] + h[i];
        let plus = f(&p)?;
        p[i] = x[i] - h[i];
        let minus = f(&p)?;
        p[i] = x[i];
        g.push((plus - minus) / (2.0 * h[i]));
    }
    Ok(g)
}

/// Fourth-order five-point stencil, used to cross-check [`fd_gradient`].
pub fn fd_gradient_five_point<F>(mut f: F, x: &[f64], rel: f64) -> Result<Vec<f64>, ControlError>
where
    F: FnMut(&[f64]) -> Result<f64, ControlError>,
{
    let h = fd_steps(x, rel);
    let mut p = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut at = |k: f64| {
            p[i] = x[i] + k * h[i];
            f(&p)
        };
        let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
        p[i] = x[i];
        g.push((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h[i]));
    }
    Ok(g)
}

/// Gate fidelity as a function of the control parameters.
///
/// Gradients are taken on the step grid of an adaptive solve at the centre
/// point, so all stencil evaluations share one discretization and the
/// difference quotient sees no step-selection noise.
pub struct FidelityObjective<'a> {
    pub problem: &'a ControlProblem,
    pub fd_step: f64,
    pub evaluations: usize,
}

impl Objective for FidelityObjective<'_> {
    fn dimension(&self) -> usize {
        self.problem.control_params.len()
    }

    fn value(&mut self, x: &[f64]) -> Result<f64, ControlError> {
        self.evaluations += 1;
        let (u, _) = self.problem.propagate_with_grid(x)?;
        Ok(fidelity(&u, &self.problem.target))
    }

    fn gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>), ControlError> {
        let (u, grid) = self.problem.propagate_with_grid(x)?;
        self.evaluations += 1;
        let value = fidelity(&u, &self.problem.target);
        let problem = self.problem;
        let mut count = 0;
        let g = fd_gradient(
            |p| {
                count += 1;
                Ok(fidelity(&problem.propagate_on_grid(p, &grid)?, &problem.target))
            },
            x,
            self.fd_step,
        )?;
        self.evaluations += count;
        Ok((value, g))
    }
}

/// Steepest ascent with Armijo backtracking. The trial step starts from
/// twice the last accepted one.
#[derive(Debug, Clone)]
pub struct GradientAscent {
    pub config: OptimizerConfig,
}

impl Optimizer for GradientAscent {
    fn maximize(&mut self, objective: &mut dyn Objective, x0: &[f64]) -> Result<OptimizationResult, ControlError> {
        let cfg = &self.config;
        let mut x = x0.to_vec();
        let (mut fx, mut g) = objective.gradient(&x)?;
        let mut evaluations = 1;
        let mut history = vec![(0, fx)];
        let mut step = cfg.initial_step;
        let mut converged = fx >= cfg.target;
        let mut iterations = 0;

        while !converged && iterations < cfg.max_iterations {
            let g2: f64 = g.iter().map(|v| v * v).sum();
            if g2.sqrt() < cfg.gradient_tolerance {
                break;
            }
            iterations += 1;
            let mut accepted = None;
            let mut alpha = step;
            while alpha * g2.sqrt() > 1e-14 {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + alpha * gi).collect();
                let ft = objective.value(&trial)?;
                evaluations += 1;
                if ft >= fx + cfg.armijo * alpha * g2 {
                    accepted = Some(trial);
                    break;
                }
                alpha *= 0.5;
            }
            let Some(next) = accepted else { break };
            step = alpha * 2.0;
            x = next;
            let (f_new, g_new) = objective.gradient(&x)?;
            evaluations += 1;
            fx = f_new;
            g = g_new;
            history.push((iterations, fx));
            converged = fx >= cfg.target;
        }
        Ok(OptimizationResult {
            params: x,
            fidelity: fx,
            history,
            converged,
            iterations,
            evaluations,
        })
    }
}

/// Maximizes gate fidelity from the problem's initial parameters.
pub fn optimize(problem: &ControlProblem, cfg: &OptimizerConfig) -> Result<OptimizationResult, ControlError> {
    problem.check_params(&problem.initial_parameters)?;
    let mut objective = FidelityObjective {
        problem,
        fd_step: cfg.fd_step,
        evaluations: 0,
    };
    let mut opt = GradientAscent { config: cfg.clone() };
    let mut result = opt.maximize(&mut objective, &problem.initial_parameters)?;
    result.evaluations = objective.evaluations;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn problem(funcs: &str, params: &[&str], init: &[f64], t: f64) -> ControlProblem {
        let json = serde_json::json!({
            "dimension": 2, "target-U": "X0", "control-params": params, "control-funcs": [funcs],
            "control-H": ["X0"], "drift-H": "0.2*Z0", "initial-parameters": init, "max-time": t,
        });
        ControlProblem::from_json(&json.to_string()).unwrap()
    }

    struct Quadratic;

    impl Objective for Quadratic {
        fn dimension(&self) -> usize {
            2
        }
        fn value(&mut self, x: &[f64]) -> Result<f64, ControlError> {
            Ok(1.0 - (x[0] - 1.0).powi(2) - 4.0 * (x[1] + 0.5).powi(2))
        }
        fn gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>), ControlError> {
            Ok((self.value(x)?, vec![-2.0 * (x[0] - 1.0), -8.0 * (x[1] + 0.5)]))
        }
    }

    #[test]
    fn ascent_finds_quadratic_maximum() {
        let mut opt = GradientAscent {
            config: OptimizerConfig {
                target: 1.0 - 1e-12,
                ..Default::default()
            },
        };
        let r = opt.maximize(&mut Quadratic, &[0.0, 0.0]).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.params[0] - 1.0).abs() < 1e-5 && (r.params[1] + 0.5).abs() < 1e-5);
        assert!(r.history.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn optimal_start_is_a_fixed_point() {
        // constant area π/2 gives exp(−iπX/2) = −iX with no drift
        let json = serde_json::json!({
            "dimension": 2, "target-U": "X0", "control-params": ["a"], "control-funcs": ["a"],
            "control-H": ["X0"], "initial-parameters": [std::f64::consts::FRAC_PI_2 / 10.0], "max-time": 10.0,
        });
        let p = ControlProblem::from_json(&json.to_string()).unwrap();
        let r = optimize(&p, &OptimizerConfig::default()).unwrap();
        assert!(r.converged && r.fidelity >= 0.999 && r.iterations <= 2);
        assert_eq!(r.params, p.initial_parameters);
    }

    #[test]
    fn small_problem_converges() {
        let p = problem("a + b*cos(0.5*t)", &["a", "b"], &[0.01, -0.02], 8.0);
        let r = optimize(&p, &OptimizerConfig::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.fidelity >= 0.999);
    }

    #[test]
    fn fd_matches_analytic_derivative() {
        let f = |x: &[f64]| -> Result<f64, ControlError> { Ok(x[0].sin() * x[1].exp()) };
        let g = fd_gradient(f, &[0.3, -0.2], 1e-5).unwrap();
        assert!((g[0] - 0.3f64.cos() * (-0.2f64).exp()).abs() < 1e-9);
        assert!((g[1] - 0.3f64.sin() * (-0.2f64).exp()).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn gradient_is_self_consistent(a in -0.5f64..0.5, b in -0.5f64..0.5, c in -0.5f64..0.5) {
            let p = problem("a + b*cos(0.5*t) + c*sin(t)", &["a", "b", "c"], &[a, b, c], 6.0);
            let x = [a, b, c];
            let (_, grid) = p.propagate_with_grid(&x).unwrap();
            let f = |q: &[f64]| Ok(fidelity(&p.propagate_on_grid(q, &grid)?, &p.target));
            let g2 = fd_gradient(f, &x, 1e-5).unwrap();
            let g5 = fd_gradient_five_point(f, &x, 1e-3).unwrap();
            let scale = g5.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
            for (u, v) in g2.iter().zip(&g5) {
                prop_assert!((u - v).abs() <= 1e-4 * scale, "{g2:?} vs {g5:?}");
            }
        }
    }
}
