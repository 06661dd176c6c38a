//! The bundled two-qubit backend: pulse library and cmd-defs calibrated for
//! `assets/two_qubit_hamiltonian.json` at dt = 1 ns.

use qpulse::ir::{CmdDef, CmdDefAction, CmdDefEntry, LibraryError, LinearPhase};
use qpulse::{gaussian_pulse, ChannelId, PulseLibrary, C64};

/// `omegad0`, `omegad1` of the bundled Hamiltonian.
pub const DRIVE_STRENGTHS: [f64; 2] = [1.303125, 0.97];
pub const DT: f64 = 1.0;

pub const PI_PULSE_SAMPLES: usize = 128;
pub const PI_PULSE_SIGMA: f64 = 24.0;
pub const HALF_PI_SAMPLES: usize = 28;
pub const HALF_PI_SIGMA: f64 = 7.0;

/// Amplitude giving rotation angle `theta` for a resonant Gaussian on a
/// term `omegad·X||D`: after mixing, the rotating-frame Rabi rate is
/// omegad·s(t), so θ = omegad·A·Σg·dt.
pub fn gaussian_amplitude(theta: f64, omegad: f64, sigma: f64, n: usize) -> f64 {
    let area: f64 = gaussian_pulse(1.0, sigma, n).iter().map(|s| s.re).sum();
    theta / (omegad * area * DT)
}

fn entry(ch: ChannelId, t0: i64, action: CmdDefAction) -> CmdDefEntry {
    CmdDefEntry { channel: ch, t0, action }
}

fn fc(ch: ChannelId, t0: i64, phase: &str) -> CmdDefEntry {
    entry(ch, t0, CmdDefAction::FrameChange(LinearPhase::parse(phase).expect("static phase expression")))
}

fn pulse(ch: ChannelId, t0: i64, name: &str) -> CmdDefEntry {
    entry(ch, t0, CmdDefAction::Pulse(name.to_string()))
}

pub fn reference_library() -> Result<PulseLibrary, LibraryError> {
    let mut lib = PulseLibrary::new();
    let pi = std::f64::consts::PI;
    for (q, omegad) in DRIVE_STRENGTHS.iter().enumerate() {
        let ch = ChannelId::drive(q);
        let a90 = gaussian_amplitude(pi / 2.0, *omegad, HALF_PI_SIGMA, HALF_PI_SAMPLES);
        let plus = gaussian_pulse(a90, HALF_PI_SIGMA, HALF_PI_SAMPLES);
        let minus: Vec<C64> = plus.iter().map(|s| -s).collect();
        let a180 = gaussian_amplitude(pi, *omegad, PI_PULSE_SIGMA, PI_PULSE_SAMPLES);
        let p = format!("X_PI_2_D{q}p");
        let m = format!("X_PI_2_D{q}m");
        let x = format!("X_PI_D{q}");
        lib.register_samples(&p, plus)?;
        lib.register_samples(&m, minus)?;
        lib.register_samples(&x, gaussian_pulse(a180, PI_PULSE_SIGMA, PI_PULSE_SAMPLES))?;

        // u3(θ, φ, λ) = Rz(φ)·Ry(θ)·Rz(λ) from two π/2 pulses and virtual Z
        let gap = HALF_PI_SAMPLES as i64 + 1;
        lib.add_cmd_def(CmdDef {
            name: "u3".into(),
            qubits: vec![q],
            sequence: vec![
                fc(ch, 0, "-P2"),
                pulse(ch, 0, &p),
                fc(ch, gap, "-P0"),
                pulse(ch, gap, &m),
                fc(ch, 2 * gap - 1, "-P1"),
            ],
        })?;
        lib.add_cmd_def(CmdDef {
            name: "x".into(),
            qubits: vec![q],
            sequence: vec![pulse(ch, 0, &x)],
        })?;
    }
    Ok(lib)
}
