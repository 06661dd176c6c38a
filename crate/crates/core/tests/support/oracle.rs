//! Dense reference for the master-equation solver.
//!
//! Every operator is rebuilt densely from its textbook definition and ρ is
//! propagated with exp(𝓛_k·dt) per piecewise-constant drive segment; nothing
//! here shares code with the sparse assembly or the RK23 integrator.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use qpulse::dynamics::{integrate_master_equation, ChannelConfig, DensityMatrix, LindbladSpec, SimulationOptions};
use qpulse::{ChannelId, Deck, DeckEntry, HamiltonianModel, PulseLibrary, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M = DMatrix<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn local(kind: &str, d: usize) -> M {
    let mut sm = M::zeros(d, d);
    for n in 0..d - 1 {
        sm[(n, n + 1)] = c(((n + 1) as f64).sqrt());
    }
    let sp = sm.transpose();
    match kind {
        "X" => &sm + &sp,
        "Y" => (&sp - &sm) * C64::new(0.0, 1.0),
        "Z" => M::from_fn(d, d, |r, k| if r == k && r < 2 { c(if r == 0 { 1.0 } else { -1.0 }) } else { c(0.0) }),
        "N" => M::from_fn(d, d, |r, k| if r == k { c(r as f64) } else { c(0.0) }),
        "SM" => sm,
        "SP" => sp,
        _ => unreachable!(),
    }
}

/// Embeds single-subsystem factors; subsystem 0 is the leftmost factor.
pub fn embed(dims: &[usize], factors: &[(&str, usize)]) -> M {
    let mut out = M::from_element(1, 1, c(1.0));
    for (s, &d) in dims.iter().enumerate() {
        let mut op = M::identity(d, d);
        for (kind, on) in factors {
            if *on == s {
                op = op * local(kind, d);
            }
        }
        out = out.kronecker(&op);
    }
    out
}

/// Dense generator matrix built column by column from 𝓛(E_rc).
pub fn dense_generator(h: &M, collapse: &[(f64, M)]) -> M {
    let d = h.nrows();
    let i = C64::new(0.0, 1.0);
    let apply = |rho: &M| -> M {
        let mut out = (h * rho - rho * h) * (-i);
        for (g, a) in collapse {
            let ad = a.adjoint();
            out += (a * rho * &ad - (&ad * a * rho + rho * &ad * a) * c(0.5)) * c(*g);
        }
        out
    };
    let mut l = M::zeros(d * d, d * d);
    for col in 0..d * d {
        let mut e = M::zeros(d, d);
        e[(col % d, col / d)] = c(1.0);
        let img = apply(&e);
        for row in 0..d * d {
            l[(row, col)] = img[(row % d, row / d)];
        }
    }
    l
}

pub struct Instance {
    pub dims: Vec<usize>,
    pub h_str: Vec<String>,
    pub static_h: M,
    pub drive_op: M,
    pub collapse: Vec<(f64, String, M)>,
    pub samples: Vec<f64>,
    pub dt: f64,
    pub psi0: Vec<C64>,
}

pub const KINDS: [&str; 3] = ["X", "Y", "Z"];

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: [&[usize]; 6] = [&[2], &[3], &[2, 2], &[3, 2], &[2, 3], &[2, 2, 2]];
    let dims = configs[seed as usize % configs.len()].to_vec();
    let total: usize = dims.iter().product();
    let mut h_str = Vec::new();
    let mut static_h = M::zeros(total, total);
    for s in 0..dims.len() {
        for kind in KINDS {
            let w: f64 = rng.gen_range(-1.0..1.0);
            h_str.push(format!("{w:?}*{kind}{s}"));
            static_h += embed(&dims, &[(kind, s)]) * c(w);
        }
    }
    for s in 1..dims.len() {
        let (ka, kb) = (KINDS[rng.gen_range(0..3)], KINDS[rng.gen_range(0..3)]);
        let w: f64 = rng.gen_range(-0.5..0.5);
        h_str.push(format!("{w:?}*{ka}{}*{kb}{s}", s - 1));
        static_h += embed(&dims, &[(ka, s - 1), (kb, s)]) * c(w);
    }
    let drive_w: f64 = rng.gen_range(0.2..1.0);
    let drive_kind = KINDS[rng.gen_range(0..2)];
    h_str.push(format!("{drive_w:?}*{drive_kind}0||D0"));
    let drive_op = embed(&dims, &[(drive_kind, 0)]) * c(drive_w);

    let mut collapse = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let s = rng.gen_range(0..dims.len());
        let kind = if rng.gen_bool(0.5) { "SM" } else { "Z" };
        let g: f64 = rng.gen_range(0.0..0.1);
        collapse.push((g, format!("{kind}{s}"), embed(&dims, &[(kind, s)])));
    }
    let n = rng.gen_range(4..10);
    let samples = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut psi0: Vec<C64> = (0..total).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi0.iter_mut().for_each(|z| *z /= norm);
    Instance {
        dims,
        h_str,
        static_h,
        drive_op,
        collapse,
        samples,
        dt: rng.gen_range(0.3..1.5),
        psi0,
    }
}

pub fn oracle(inst: &Instance) -> M {
    let total = inst.static_h.nrows();
    let collapse: Vec<(f64, M)> = inst.collapse.iter().map(|(g, _, a)| (*g, a.clone())).collect();
    let mut rho = M::from_fn(total, total, |r, k| inst.psi0[r] * inst.psi0[k].conj());
    let mut v = nalgebra::DVector::from_column_slice(rho.as_slice());
    for s in &inst.samples {
        let h = &inst.static_h + &inst.drive_op * c(*s);
        let l = dense_generator(&h, &collapse) * c(inst.dt);
        v = l.exp() * v;
    }
    rho.copy_from_slice(v.as_slice());
    rho
}

pub fn simulate(inst: &Instance, opts: SimulationOptions) -> qpulse::SimulationResult {
    let qub: BTreeMap<String, usize> = inst.dims.iter().enumerate().map(|(i, d)| (i.to_string(), *d)).collect();
    let model = HamiltonianModel::from_parts(String::new(), &inst.h_str, BTreeMap::new(), qub).unwrap();
    let ops: Vec<(f64, &str)> = inst.collapse.iter().map(|(g, s, _)| (*g, s.as_str())).collect();
    let lind = LindbladSpec::new(&model, &ops).unwrap();
    let mut lib = PulseLibrary::new();
    lib.register_samples("p", inst.samples.iter().map(|s| c(*s)).collect()).unwrap();
    let deck = Deck {
        entries: vec![DeckEntry {
            name: "p".into(),
            channel: ChannelId::drive(0),
            time: 0,
            duration: inst.samples.len() as i64,
            phase: None,
        }],
    };
    let cfg = ChannelConfig::new(inst.dt, vec![0.0]);
    let opts = SimulationOptions {
        initial: Some(DensityMatrix::from_pure(&inst.psi0)),
        ..opts
    };
    integrate_master_equation(&model, &lind, &cfg, &deck, &lib, &opts).unwrap()
}

pub fn tight() -> SimulationOptions {
    SimulationOptions {
        rtol: 1e-8,
        atol: 1e-10,
        ..Default::default()
    }
}


/// Outcome of one random instance against the oracle.
pub struct Comparison {
    pub max_error: f64,
    pub trace_drift: f64,
    pub hermiticity: f64,
    /// Purity of ρ(t_end) when the instance has no dissipation.
    pub closed_purity: Option<f64>,
}

pub fn compare(seed: u64, opts: SimulationOptions) -> Comparison {
    let inst = random_instance(seed);
    let expected = oracle(&inst);
    let result = simulate(&inst, opts);
    let got = result.final_state.to_dense();
    Comparison {
        max_error: (&got - &expected).iter().map(|z| z.norm()).fold(0.0, f64::max),
        trace_drift: result.stats.max_trace_error,
        hermiticity: result.final_state.hermiticity_defect(),
        closed_purity: inst
            .collapse
            .iter()
            .all(|(g, _, _)| *g == 0.0)
            .then(|| result.final_state.purity()),
    }
}

/// Largest |P₁(t) − e^{−γt}| over t = 1…10 for decay from |1⟩.
pub fn amplitude_damping_error(gamma: f64) -> f64 {
    let model = qpulse::parse_hamiltonian(r#"{"h_str": ["0.3*Z0"], "qub": {"0": 2}}"#).unwrap();
    let lind = LindbladSpec::new(&model, &[(gamma, "SM0")]).unwrap();
    let cfg = ChannelConfig::new(1.0, vec![]);
    let opts = SimulationOptions {
        t_max: Some(10.0),
        output_step: Some(1.0),
        initial: Some(DensityMatrix::basis(2, 1)),
        rtol: 1e-9,
        atol: 1e-11,
        ..Default::default()
    };
    let r = integrate_master_equation(&model, &lind, &cfg, &Deck::default(), &PulseLibrary::new(), &opts).unwrap();
    assert_eq!(r.time_grid.len(), 11);
    r.time_grid
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, t)| (r.subsystems[0].levels[1][k] - (-gamma * t).exp()).abs())
        .fold(0.0, f64::max)
}
