//! Fixtures shared by the benchmarks and the scaling check: a chain of
//! `nq` qubits with nearest-neighbour exchange, every qubit driven by the
//! same short Gaussian at resonance.

use std::collections::BTreeMap;

use qpulse::{gaussian_pulse, ChannelConfig, ChannelId, Deck, DeckEntry, HamiltonianModel, PulseLibrary};

pub const PULSE_SAMPLES: usize = 16;

pub fn qubit_frequency(q: usize) -> f64 {
    30.0 + 0.2 * q as f64
}

pub fn chain_model(nq: usize) -> HamiltonianModel {
    assert!(nq >= 1);
    let last = nq - 1;
    let mut h_str = vec![
        format!("_SUM[i,0,{last},wq{{i}}/2*Z{{i}}]"),
        format!("_SUM[i,0,{last},omegad{{i}}*X{{i}}||D{{i}}]"),
    ];
    for q in 0..last {
        h_str.push(format!("j*Sp{q}*Sm{}", q + 1));
        h_str.push(format!("j*Sm{q}*Sp{}", q + 1));
    }
    let mut vars = BTreeMap::from([("j".to_string(), 0.01)]);
    let mut qub = BTreeMap::new();
    for q in 0..nq {
        vars.insert(format!("wq{q}"), qubit_frequency(q));
        vars.insert(format!("omegad{q}"), 1.0);
        qub.insert(q.to_string(), 2);
    }
    HamiltonianModel::from_parts(format!("{nq}-qubit chain"), &h_str, vars, qub).expect("chain model parses")
}

/// Library and deck driving every qubit of the chain at t = 0.
pub fn chain_drive(nq: usize) -> (PulseLibrary, Deck) {
    let mut lib = PulseLibrary::new();
    lib.register_samples("g", gaussian_pulse(0.1, 4.0, PULSE_SAMPLES)).expect("fresh library");
    let entries = (0..nq)
        .map(|q| DeckEntry {
            name: "g".into(),
            channel: ChannelId::drive(q),
            time: 0,
            duration: PULSE_SAMPLES as i64,
            phase: None,
        })
        .collect();
    (lib, Deck { entries })
}

pub fn chain_channels(nq: usize) -> ChannelConfig {
    ChannelConfig::new(1.0, (0..nq).map(qubit_frequency).collect())
}
