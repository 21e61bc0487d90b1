//! Fixtures shared by the benchmarks in `benches/`.

use rdpos_core::contract::{ContractParams, VerifierTypeProfile};
use rdpos_core::{Opinion, ScenarioConfig};

/// `n` uncertain opinions spread over the simplex, deterministic.
pub fn opinions(n: usize) -> Vec<Opinion> {
    (0..n)
        .map(|i| {
            let x = ((i * 7919) % 1000) as f64 / 1000.0;
            let u = 0.05 + 0.9 * ((i * 104_729) % 997) as f64 / 997.0;
            let b = (1.0 - u) * x;
            Opinion::new(b, 1.0 - u - b, u).unwrap()
        })
        .collect()
}

/// Uniform profile of `q` types with the default coefficients, one verifier
/// per type.
pub fn contract_instance(q: usize) -> (VerifierTypeProfile, ContractParams) {
    let profile = VerifierTypeProfile::uniform(q, 1.0).unwrap();
    let params = ContractParams {
        verifier_count: q as f64,
        ..ContractParams::default()
    };
    (profile, params)
}

/// Default scenario cut to `rounds` rounds.
pub fn short_scenario(rounds: u64) -> ScenarioConfig {
    ScenarioConfig {
        rounds,
        ..ScenarioConfig::default()
    }
}
