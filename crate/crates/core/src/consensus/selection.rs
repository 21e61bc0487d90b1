use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ConsensusError;
use crate::ids::{CandidateId, VehicleId};
use crate::ledger::Ledger;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinerGroup {
    pub active: Vec<CandidateId>,
    pub standby: Vec<CandidateId>,
}

impl MinerGroup {
    pub fn contains(&self, c: CandidateId) -> bool {
        self.active.contains(&c) || self.standby.contains(&c)
    }

    pub fn check(&self) -> Result<(), ConsensusError> {
        if self.active.len() % 2 == 0 {
            return Err(ConsensusError::Group("active set must have odd size".into()));
        }
        let a: BTreeSet<_> = self.active.iter().collect();
        let s: BTreeSet<_> = self.standby.iter().collect();
        if a.len() != self.active.len() || s.len() != self.standby.len() {
            return Err(ConsensusError::Group("duplicate members".into()));
        }
        if a.intersection(&s).next().is_some() {
            return Err(ConsensusError::Group("active and standby overlap".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub voter: VehicleId,
    pub ranked_choices: Vec<CandidateId>,
}

/// Candidates whose ledger average reputation exceeds `ta_threshold`.
pub fn admit_candidates(
    ledger: &Ledger,
    roster: &[CandidateId],
    ta_threshold: f64,
    uncertainty_effect: f64,
    max_age_rounds: u64,
) -> BTreeSet<CandidateId> {
    roster
        .iter()
        .copied()
        .filter(|&c| ledger.average_reputation(c, uncertainty_effect, max_age_rounds) > ta_threshold)
        .collect()
}

/// Plurality over equal-weight ballots of `y` distinct candidates. Ties go to
/// the lower candidate id. The top `k` become active, the next `y − k`
/// standby.
pub fn vote_and_select(ballots: &[Ballot], k: usize, y: usize) -> Result<MinerGroup, ConsensusError> {
    if k % 2 == 0 || k >= y {
        return Err(ConsensusError::Group(format!("need odd k < y, got k={k} y={y}")));
    }
    let mut votes: BTreeMap<CandidateId, usize> = BTreeMap::new();
    for b in ballots {
        if b.ranked_choices.len() != y {
            return Err(ConsensusError::Ballot {
                voter: b.voter,
                reason: format!("lists {} candidates, expected {y}", b.ranked_choices.len()),
            });
        }
        let distinct: BTreeSet<_> = b.ranked_choices.iter().collect();
        if distinct.len() != y {
            return Err(ConsensusError::Ballot {
                voter: b.voter,
                reason: "repeats a candidate".into(),
            });
        }
        for &c in &b.ranked_choices {
            *votes.entry(c).or_default() += 1;
        }
    }
    if votes.len() < y {
        return Err(ConsensusError::Group(format!(
            "only {} candidates received votes, need {y}",
            votes.len()
        )));
    }
    let mut ranked: Vec<(CandidateId, usize)> = votes.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let chosen: Vec<CandidateId> = ranked.into_iter().take(y).map(|(c, _)| c).collect();
    Ok(MinerGroup {
        active: chosen[..k].to_vec(),
        standby: chosen[k..].to_vec(),
    })
}

pub fn rotate_manager(group: &MinerGroup, slot: u64) -> CandidateId {
    group.active[(slot % group.active.len() as u64) as usize]
}
