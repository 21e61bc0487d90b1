use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::CandidateId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOutcome {
    pub round: u64,
    pub slot: u64,
    pub manager: CandidateId,
    pub verifiers: Vec<CandidateId>,
    /// Verifiers drawn from the standby list.
    pub standby_verifiers: usize,
    pub valid: bool,
    /// Verifiers reporting the block as valid.
    pub agree_count: usize,
    pub accepted: bool,
    /// The verdict matches the block's actual validity.
    pub truthful: bool,
}

/// Strict two-thirds quorum: `agree > ⌊2n/3⌋`.
pub fn quorum_reached(agree: usize, verifiers: usize) -> bool {
    agree > 2 * verifiers / 3
}

/// Honest verifiers report the block's validity; colluders report the
/// opposite.
pub fn verify_block(
    round: u64,
    slot: u64,
    manager: CandidateId,
    verifiers: &[CandidateId],
    standby_verifiers: usize,
    colluders: &BTreeSet<CandidateId>,
    valid: bool,
) -> BlockOutcome {
    let agree_count = verifiers
        .iter()
        .filter(|v| colluders.contains(v) != valid)
        .count();
    let accepted = quorum_reached(agree_count, verifiers.len());
    BlockOutcome {
        round,
        slot,
        manager,
        verifiers: verifiers.to_vec(),
        standby_verifiers,
        valid,
        agree_count,
        accepted,
        truthful: accepted == valid,
    }
}
