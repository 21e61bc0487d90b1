use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ConsensusError;
use crate::contract::ContractParams;
use crate::ledger::DEFAULT_MAX_AGE_ROUNDS;
use crate::mobility::{BoundingBox, InteractionConfig};
use crate::opinion::{Opinion, ReputationWeights, TslParams};

/// Reputation scheme that drives admission, detection and honest ballots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Interaction counts only; every interaction counts as good.
    None,
    Tsl,
    Mwsl,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::None, Scheme::Tsl, Scheme::Mwsl];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::Tsl => "TSL",
            Scheme::Mwsl => "MWSL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilitySpec {
    /// Directory of per-vehicle trace files; synthetic traces when unset.
    pub trace_dir: Option<PathBuf>,
    pub bbox: BoundingBox,
    pub speed_range_kmh: (f64, f64),
    pub step_s: i64,
    pub start_time: i64,
    pub rsu_radius_m: (f64, f64),
    pub interactions: InteractionConfig,
}

impl Default for MobilitySpec {
    fn default() -> Self {
        Self {
            trace_dir: None,
            bbox: BoundingBox::SAN_FRANCISCO,
            speed_range_kmh: (50.0, 150.0),
            step_s: 30,
            start_time: 1_211_018_400,
            rsu_radius_m: (300.0, 500.0),
            interactions: InteractionConfig {
                rate_scale: 10.0,
                ..InteractionConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSpec {
    pub malicious_candidates: usize,
    /// Seconds of honest behavior before misbehaving.
    pub onset_s: i64,
    /// Compromised vehicles colluding with every malicious candidate.
    pub compromised_vehicles: usize,
    /// Share of the honest vehicles a malicious candidate serves after the
    /// onset that it misbehaves toward (at least one).
    pub victim_share: f64,
    /// Share of active seats malicious candidates capture once misbehaving,
    /// as long as enough of them remain undetected and admitted.
    pub active_collusion_fraction: f64,
    /// Compromised vehicles upload `fake_opinion` on every partner each round.
    pub fake_uploads: bool,
    pub fake_opinion: Opinion,
    /// Probability that an honest manager's block is invalid anyway.
    pub invalid_block_rate: f64,
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self {
            malicious_candidates: 10,
            onset_s: 300,
            compromised_vehicles: 3,
            victim_share: 0.5,
            active_collusion_fraction: 0.0,
            fake_uploads: true,
            fake_opinion: Opinion::from_parts(0.9, 0.0, 0.1),
            invalid_block_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationSpec {
    /// Standby miners take part in block verification.
    pub standby_verification: bool,
    /// Recruit standby verifiers through the screening contract; otherwise
    /// `standby_join_fraction` of the standby list joins.
    pub use_contract: bool,
    pub standby_join_fraction: f64,
    pub standby_cap: Option<usize>,
    /// Number of reputation types standby miners are binned into.
    pub contract_types: usize,
    pub theta_step: f64,
    pub contract: ContractParams,
}

impl Default for VerificationSpec {
    fn default() -> Self {
        Self {
            standby_verification: true,
            use_contract: true,
            standby_join_fraction: 1.0,
            standby_cap: None,
            contract_types: 10,
            theta_step: 1.0,
            contract: ContractParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub vehicles: usize,
    pub candidates: usize,
    pub rounds: u64,
    /// Length of a round (one reputation update period), in seconds.
    pub round_s: i64,
    pub seed: u64,
    /// Active miners.
    pub k: usize,
    /// Miner group size, active plus standby.
    pub y: usize,
    pub weights: ReputationWeights,
    pub tsl: TslParams,
    pub ta_threshold: f64,
    pub detection_threshold: f64,
    pub max_age_rounds: u64,
    pub selection: Scheme,
    pub mobility: MobilitySpec,
    pub attack: AttackSpec,
    pub verification: VerificationSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            vehicles: 60,
            candidates: 40,
            rounds: 60,
            round_s: 60,
            seed: 1,
            k: 9,
            y: 21,
            weights: ReputationWeights {
                recent_horizon_s: 360,
                window_s: 3600,
                ..ReputationWeights::default()
            },
            tsl: TslParams::default(),
            ta_threshold: 0.4,
            detection_threshold: 0.5,
            max_age_rounds: DEFAULT_MAX_AGE_ROUNDS,
            selection: Scheme::Mwsl,
            mobility: MobilitySpec::default(),
            attack: AttackSpec::default(),
            verification: VerificationSpec::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConsensusError {
    ConsensusError::Config(msg.into())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConsensusError> {
        self.weights
            .validate()
            .map_err(|e| invalid(format!("weights: {e}")))?;
        self.tsl.validate().map_err(|e| invalid(format!("tsl: {e}")))?;
        if self.vehicles == 0 || self.candidates == 0 {
            return Err(invalid("vehicles and candidates must be positive"));
        }
        if self.k % 2 == 0 {
            return Err(invalid(format!("k must be odd, got {}", self.k)));
        }
        if !(self.k < self.y && self.y <= self.candidates) {
            return Err(invalid(format!(
                "need k < y <= candidates, got k={} y={} candidates={}",
                self.k, self.y, self.candidates
            )));
        }
        if self.round_s <= 0 {
            return Err(invalid("round_s must be positive"));
        }
        for (name, t) in [
            ("ta_threshold", self.ta_threshold),
            ("detection_threshold", self.detection_threshold),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        let m = &self.mobility;
        m.bbox.validate().map_err(|e| invalid(e.to_string()))?;
        m.interactions
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if m.step_s <= 0 {
            return Err(invalid("mobility.step_s must be positive"));
        }
        let (r0, r1) = m.rsu_radius_m;
        if !(r0 > 0.0 && r0 <= r1) {
            return Err(invalid("rsu_radius_m must be a positive ordered range"));
        }
        let a = &self.attack;
        if a.malicious_candidates > self.candidates {
            return Err(invalid("more malicious candidates than candidates"));
        }
        if a.compromised_vehicles >= self.vehicles {
            return Err(invalid("at least one vehicle must stay honest"));
        }
        if !(0.0..=1.0).contains(&a.victim_share) {
            return Err(invalid("victim_share must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&a.active_collusion_fraction) {
            return Err(invalid("active_collusion_fraction must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&a.invalid_block_rate) {
            return Err(invalid("invalid_block_rate must lie in [0, 1]"));
        }
        let v = &self.verification;
        if !(0.0..=1.0).contains(&v.standby_join_fraction) {
            return Err(invalid("standby_join_fraction must lie in [0, 1]"));
        }
        if v.contract_types == 0 || !(v.theta_step > 0.0) {
            return Err(invalid("contract_types and theta_step must be positive"));
        }
        v.contract
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_even_k_and_small_y() {
        let even = ScenarioConfig {
            k: 8,
            ..ScenarioConfig::default()
        };
        assert!(even.validate().is_err());
        let small = ScenarioConfig {
            y: 9,
            ..ScenarioConfig::default()
        };
        assert!(small.validate().is_err());
    }

    #[test]
    fn rejects_inverted_weights() {
        let mut c = ScenarioConfig::default();
        c.weights.recent_weight = 0.4;
        c.weights.past_weight = 0.6;
        assert!(c.validate().is_err());
    }
}
