//! Round-based delegated proof-of-stake with reputation voting and standby
//! verification.

mod config;
mod metrics;
mod reputation;
mod selection;
mod sim;
mod verify;

pub use config::{AttackSpec, MobilitySpec, Scheme, ScenarioConfig, VerificationSpec};
pub use metrics::{
    correct_block_probability, detection_rate, first_crossing, victim_crossing, victim_view,
    victim_view_crossing,
};
pub use reputation::{
    compute_final_reputations, naive_score, pair_evidence, recommendation_weights, tsl_scores,
    FinalReputation, Observation, PairEvidence,
};
pub use selection::{admit_candidates, rotate_manager, vote_and_select, Ballot, MinerGroup};
pub use sim::{
    run_simulation, CandidateSeries, DetectionEvent, RoundSummary, SeriesPoint,
    SimulationReport,
};
pub use verify::{quorum_reached, verify_block, BlockOutcome};

use thiserror::Error;

use crate::contract::ContractError;
use crate::ids::VehicleId;
use crate::ledger::LedgerError;
use crate::mobility::MobilityError;
use crate::opinion::OpinionError;

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("ballot from {voter} rejected: {reason}")]
    Ballot { voter: VehicleId, reason: String },
    #[error("cannot form miner group: {0}")]
    Group(String),
    #[error("report has no malicious candidates")]
    NoMalicious,
    #[error("report has no blocks")]
    NoBlocks,
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Opinion(#[from] OpinionError),
    #[error(transparent)]
    Contract(#[from] ContractError),
}
