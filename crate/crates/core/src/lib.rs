//! Reputation-enhanced delegated proof-of-stake.
//!
//! Vehicles rate roadside units (miner candidates) with multi-weight
//! subjective-logic opinions kept on an append-only ledger. Candidates are
//! elected by equal-weight reputation ballots, and blocks are cross-checked by
//! standby miners recruited through a screening contract.

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod consensus;
pub mod contract;
pub mod ids;
pub mod ledger;
pub mod mobility;
pub mod opinion;

pub use consensus::{run_simulation, ConsensusError, ScenarioConfig, Scheme, SimulationReport};
pub use ids::{CandidateId, VehicleId};
pub use ledger::{Ledger, LedgerError, ReputationRecord};
pub use opinion::{
    EvidenceCounts, Opinion, OpinionError, Outcome, ReputationWeights, TslParams,
};
