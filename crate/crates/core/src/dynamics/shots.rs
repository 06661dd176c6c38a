use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::SimulationError;

/// Multinomial draw of `n_shots` outcomes from `distribution`, deterministic
/// for a given seed. Probabilities are normalized by their sum; outcomes
/// drawn zero times are omitted.
pub fn sample_shots(
    distribution: &BTreeMap<String, f64>,
    n_shots: u64,
    seed: u64,
) -> Result<BTreeMap<String, u64>, SimulationError> {
    if n_shots == 0 {
        return Err(SimulationError::ZeroShots);
    }
    if distribution.values().any(|p| !p.is_finite() || *p < -1e-12) {
        return Err(SimulationError::InvalidOptions("distribution has negative or non-finite entries".into()));
    }
    let total: f64 = distribution.values().map(|p| p.max(0.0)).sum();
    if total <= 0.0 {
        return Err(SimulationError::InvalidOptions("distribution has no probability mass".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = n_shots;
    let mut mass_left = 1.0;
    let mut out = BTreeMap::new();
    let entries: Vec<(&String, f64)> = distribution.iter().map(|(k, p)| (k, p.max(0.0) / total)).collect();
    for (i, (key, p)) in entries.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let count = if i + 1 == entries.len() {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            let draw = Binomial::new(remaining, q).expect("probability in [0, 1]");
            draw.sample(&mut rng)
        };
        if count > 0 {
            out.insert((*key).clone(), count);
        }
        remaining -= count;
        mass_left -= p;
    }
    Ok(out)
}
