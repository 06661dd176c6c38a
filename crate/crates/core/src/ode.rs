//! Bogacki–Shampine 3(2) Runge–Kutta integration of complex-valued ODEs.
//!
//! The integrator can be told about *stop* times where it must land
//! exactly. Right-hand sides may change discontinuously only at stops (zero
//! order hold sample boundaries, frame changes), so no step ever straddles
//! a discontinuity and the FSAL stage is discarded after each stop.

use thiserror::Error;

use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("exceeded {0} steps without reaching the end time")]
    TooManySteps(usize),
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("invalid integration options: {0}")]
    InvalidOptions(String),
}

pub trait OdeSystem {
    /// Called before every step attempt starting at `t`. Systems with
    /// piecewise behavior refresh per-step state here.
    fn begin_step(&mut self, _t: f64) {}

    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk23Options {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Rk23Options {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-8,
            initial_step: 1e-3,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// End time of every accepted step, in order.
    pub step_times: Vec<f64>,
}

struct Workspace {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z.clone(),
            y_new: z,
        }
    }

    /// Third-order stages from (t, y) with step h; k1 must already hold
    /// f(t, y). Leaves the solution in `y_new`.
    fn stages<S: OdeSystem>(&mut self, sys: &mut S, t: f64, y: &[C64], h: f64) {
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k1[i] * (0.5 * h);
        }
        sys.rhs(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k2[i] * (0.75 * h);
        }
        sys.rhs(t + 0.75 * h, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.y_new[i] = y[i] + (self.k1[i] * (2.0 / 9.0) + self.k2[i] * (1.0 / 3.0) + self.k3[i] * (4.0 / 9.0)) * h;
        }
    }
}

fn close_to(a: f64, b: f64) -> bool {
    (a - b).abs() <= 64.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0)
}

/// Adaptive integration of `y` from `t0` to `t_end`.
///
/// `stops` must be sorted; every stop inside `(t0, t_end]` is landed on
/// exactly and reported to `observer` with `true`. Other accepted steps are
/// reported with `false`. `t_end` is always treated as a stop.
pub fn integrate<S, F>(
    sys: &mut S,
    y: &mut [C64],
    t0: f64,
    t_end: f64,
    stops: &[f64],
    opts: &Rk23Options,
    mut observer: F,
) -> Result<IntegrationStats, OdeError>
where
    S: OdeSystem,
    F: FnMut(f64, &[C64], bool),
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0 && opts.initial_step > 0.0 && opts.max_step > 0.0) {
        return Err(OdeError::InvalidOptions(format!("{opts:?}")));
    }
    let mut stats = IntegrationStats::default();
    if t_end <= t0 {
        return Ok(stats);
    }
    let n = y.len();
    let mut ws = Workspace::new(n);
    let mut stop_iter = stops.iter().copied().filter(|&s| s > t0 && !close_to(s, t0) && s < t_end).peekable();
    let mut next_stop = stop_iter.next().unwrap_or(t_end);
    let mut t = t0;
    let mut h = opts.initial_step.min(opts.max_step);
    let mut fsal = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        sys.begin_step(t);
        if !fsal {
            sys.rhs(t, y, &mut ws.k1);
            stats.rhs_evals += 1;
        }
        let h_planned = h.min(opts.max_step);
        let remaining = next_stop - t;
        let lands = h_planned >= remaining || close_to(t + h_planned, next_stop);
        let h_try = if lands { remaining } else { h_planned };
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1e-3);
        if h_try < h_min {
            return Err(OdeError::StepSizeUnderflow { t, h: h_try });
        }

        ws.stages(sys, t, y, h_try);
        let t_new = if lands { next_stop } else { t + h_try };
        sys.rhs(t_new, &ws.y_new, &mut ws.k4);
        stats.rhs_evals += 3;

        let mut acc = 0.0;
        for i in 0..n {
            let e = (ws.k1[i] * (-5.0 / 72.0) + ws.k2[i] * (1.0 / 12.0) + ws.k3[i] * (1.0 / 9.0) + ws.k4[i] * (-1.0 / 8.0)) * h_try;
            let scale = opts.atol + opts.rtol * y[i].norm().max(ws.y_new[i].norm());
            acc += (e.norm() / scale).powi(2);
        }
        let err = if n == 0 { 0.0 } else { (acc / n as f64).sqrt() };
        if !err.is_finite() {
            if ws.y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) && h_try <= h_min * 2.0 {
                return Err(OdeError::NonFinite(t));
            }
            h = h_try * 0.2;
            stats.rejected += 1;
            fsal = true;
            continue;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-1.0 / 3.0)).clamp(0.2, 5.0) };

        if err <= 1.0 {
            y.copy_from_slice(&ws.y_new);
            t = t_new;
            stats.accepted += 1;
            stats.step_times.push(t);
            observer(t, y, lands);
            h = if lands { (h_try * factor).max(h_planned) } else { h_try * factor };
            if lands {
                next_stop = stop_iter.next().unwrap_or(t_end);
                fsal = false;
            } else {
                std::mem::swap(&mut ws.k1, &mut ws.k4);
                fsal = true;
            }
        } else {
            stats.rejected += 1;
            h = h_try * factor;
            // k1 is still f(t, y) for the unchanged state
            fsal = true;
        }
    }
    Ok(stats)
}

/// Fixed-step integration with the third-order Bogacki–Shampine solution
/// over a prescribed grid (for example the step times of an earlier
/// adaptive run). `grid` must be increasing and start after `t0`.
pub fn integrate_on_grid<S: OdeSystem>(sys: &mut S, y: &mut [C64], t0: f64, grid: &[f64]) -> Result<(), OdeError> {
    let mut ws = Workspace::new(y.len());
    let mut t = t0;
    for &t_next in grid {
        let h = t_next - t;
        if h <= 0.0 {
            return Err(OdeError::InvalidOptions(format!("grid is not increasing at {t_next}")));
        }
        sys.begin_step(t);
        sys.rhs(t, y, &mut ws.k1);
        ws.stages(sys, t, y, h);
        if ws.y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(OdeError::NonFinite(t));
        }
        y.copy_from_slice(&ws.y_new);
        t = t_next;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear(C64);

    impl OdeSystem for Linear {
        fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = self.0 * y[0];
        }
    }

    struct Oscillator;

    impl OdeSystem for Oscillator {
        fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn decay_and_rotation_match_closed_forms() {
        let lambda = C64::new(-0.5, 2.0);
        let mut y = vec![c(1.0)];
        let opts = Rk23Options {
            rtol: 1e-9,
            atol: 1e-12,
            ..Default::default()
        };
        integrate(&mut Linear(lambda), &mut y, 0.0, 3.0, &[], &opts, |_, _, _| {}).unwrap();
        assert!((y[0] - (lambda * 3.0).exp()).norm() < 1e-7);

        let mut y = vec![c(1.0), c(0.0)];
        integrate(&mut Oscillator, &mut y, 0.0, 10.0, &[], &opts, |_, _, _| {}).unwrap();
        assert!((y[0].re - 10f64.cos()).abs() < 1e-6);
        assert!((y[1].re + 10f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn lands_exactly_on_stops() {
        let stops = [0.25, 0.5, 1.0 / 3.0, 2.0];
        let mut sorted = stops.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut seen = Vec::new();
        let mut y = vec![c(1.0)];
        let stats = integrate(
            &mut Linear(c(-1.0)),
            &mut y,
            0.0,
            1.5,
            &sorted,
            &Rk23Options::default(),
            |t, _, stop| {
                if stop {
                    seen.push(t)
                }
            },
        )
        .unwrap();
        assert_eq!(seen, vec![0.25, 1.0 / 3.0, 0.5, 1.5]);
        assert_eq!(*stats.step_times.last().unwrap(), 1.5);
        assert!((y[0].re - (-1.5f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn max_step_is_respected() {
        let opts = Rk23Options {
            max_step: 0.01,
            ..Default::default()
        };
        let mut y = vec![c(1.0)];
        let stats = integrate(&mut Linear(c(0.0)), &mut y, 0.0, 1.0, &[], &opts, |_, _, _| {}).unwrap();
        let mut prev = 0.0;
        for t in &stats.step_times {
            assert!(t - prev <= 0.01 + 1e-15);
            prev = *t;
        }
        assert!(stats.accepted >= 100);
    }

    #[test]
    fn fixed_grid_is_third_order() {
        let exact = (-1.0f64).exp();
        let mut errs = Vec::new();
        for n in [20usize, 40, 80] {
            let grid: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
            let mut y = vec![c(1.0)];
            integrate_on_grid(&mut Linear(c(-1.0)), &mut y, 0.0, &grid).unwrap();
            errs.push((y[0].re - exact).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 3.0).abs() < 0.2, "observed order {order}");
        }
    }

    #[test]
    fn blow_up_is_reported() {
        struct Quadratic;
        impl OdeSystem for Quadratic {
            fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) {
                dy[0] = y[0] * y[0];
            }
        }
        let mut y = vec![c(1.0)];
        let err = integrate(&mut Quadratic, &mut y, 0.0, 2.0, &[], &Rk23Options::default(), |_, _, _| {}).unwrap_err();
        assert!(matches!(
            err,
            OdeError::StepSizeUnderflow { .. } | OdeError::NonFinite(_) | OdeError::TooManySteps(_)
        ));
    }

    #[test]
    fn rejects_bad_options() {
        let opts = Rk23Options {
            rtol: 0.0,
            ..Default::default()
        };
        let mut y = vec![c(1.0)];
        assert!(integrate(&mut Linear(c(1.0)), &mut y, 0.0, 1.0, &[], &opts, |_, _, _| {}).is_err());
    }
}
