use serde::{Deserialize, Serialize};

pub const BITS_PER_KILOBYTE: f64 = 8000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// B in Hz.
    pub bandwidth: f64,
    /// Transmit power per verifier, in watts.
    pub tx_power: Vec<f64>,
    /// Channel amplitude gain per verifier.
    pub channel_gain: Vec<f64>,
    /// N₀ in W/Hz.
    pub noise_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationTask {
    pub cpu_cycles: f64,
    /// I_k in bits.
    pub input_size: f64,
    /// O_k in bits.
    pub output_size: f64,
    /// ψ in seconds per (bit · verifier).
    pub broadcast_coeff: f64,
}

impl Default for VerificationTask {
    fn default() -> Self {
        Self {
            cpu_cycles: 1e6,
            input_size: 500.0 * BITS_PER_KILOBYTE,
            output_size: 50.0 * BITS_PER_KILOBYTE,
            broadcast_coeff: 0.5,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

/// Shannon rate of verifier `m` with every other member of `active` treated
/// as interference.
pub fn link_rate(m: usize, radio: &RadioParams, active: &[usize]) -> f64 {
    debug_assert!(active.contains(&m), "verifier {m} is not active");
    let rx = |i: usize| radio.tx_power[i] * radio.channel_gain[i].powi(2);
    let interference: f64 = active.iter().filter(|&&i| i != m).map(|&i| rx(i)).sum();
    let sinr = rx(m) / (interference + radio.noise_density * radio.bandwidth);
    radio.bandwidth * (1.0 + sinr).log2()
}

/// Download, compute, broadcast-and-compare, and feedback time of one
/// verification.
pub fn verification_latency(
    task: &VerificationTask,
    compute: f64,
    rate_down: f64,
    rate_up: f64,
    verifier_count: usize,
) -> f64 {
    task.input_size / rate_down
        + task.cpu_cycles / compute
        + task.broadcast_coeff * task.input_size * verifier_count as f64
        + task.output_size / rate_up
}
