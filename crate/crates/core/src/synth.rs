//! Sample arrays from standard shapes or analytic time expressions.

use crate::expr::{ExprError, TimeExpression};
use crate::C64;

pub fn square_pulse(amplitude: f64, n_samples: usize) -> Vec<C64> {
    vec![C64::new(amplitude, 0.0); n_samples]
}

/// `amplitude·exp(−(k − (n−1)/2)² / 2σ²)` for k = 0…n−1; σ in samples.
pub fn gaussian_pulse(amplitude: f64, sigma: f64, n_samples: usize) -> Vec<C64> {
    let center = (n_samples as f64 - 1.0) / 2.0;
    (0..n_samples)
        .map(|k| {
            let x = k as f64 - center;
            C64::new(amplitude * (-x * x / (2.0 * sigma * sigma)).exp(), 0.0)
        })
        .collect()
}

/// Samples `expr` at t = k·dt. Only `t` may appear free.
pub fn pulse_from_expression(expr: &TimeExpression, n_samples: usize, dt: f64) -> Result<Vec<C64>, ExprError> {
    let bound = expr.bind(&["t"])?;
    (0..n_samples)
        .map(|k| bound.eval_checked(&[k as f64 * dt]).map(|v| C64::new(v, 0.0)))
        .collect()
}

/// Pulse JSON in the shape used by library `pulse_library` entries.
pub fn pulse_json(name: &str, samples: &[C64]) -> String {
    let value = serde_json::json!({
        "name": name,
        "samples": samples.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&value).expect("pulse serializes")
}
