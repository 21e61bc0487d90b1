//! Append-only store of signed reputation opinions.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{CandidateId, VehicleId};
use crate::opinion::{reputation_score, Opinion};

/// Reputation assumed for a candidate nobody has rated yet.
pub const NEUTRAL_PRIOR: f64 = 0.5;

/// Default staleness horizon for recommendations, in rounds.
pub const DEFAULT_MAX_AGE_ROUNDS: u64 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("record {rater}->{ratee} is not signed")]
    Unsigned { rater: VehicleId, ratee: CandidateId },
    #[error("round {round} is older than the ledger head {head}")]
    RoundRegression { round: u64, head: u64 },
    #[error("record carries round {record} inside a batch for round {batch}")]
    RoundMismatch { record: u64, batch: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReputationRecord {
    pub rater: VehicleId,
    pub ratee: CandidateId,
    pub opinion: Opinion,
    pub round: u64,
    pub signed: bool,
}

impl ReputationRecord {
    pub fn signed(rater: VehicleId, ratee: CandidateId, opinion: Opinion, round: u64) -> Self {
        Self {
            rater,
            ratee,
            opinion,
            round,
            signed: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    records: Vec<ReputationRecord>,
    head_round: u64,
    /// ratee -> rater -> index of that rater's latest record.
    latest: BTreeMap<CandidateId, BTreeMap<VehicleId, usize>>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[ReputationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn head_round(&self) -> u64 {
        self.head_round
    }

    /// Appends a batch for `round`. The batch is checked as a whole; on error
    /// the ledger is left untouched.
    pub fn append(
        &mut self,
        mut batch: Vec<ReputationRecord>,
        round: u64,
    ) -> Result<(), LedgerError> {
        if round < self.head_round {
            return Err(LedgerError::RoundRegression {
                round,
                head: self.head_round,
            });
        }
        for r in &batch {
            if !r.signed {
                return Err(LedgerError::Unsigned {
                    rater: r.rater,
                    ratee: r.ratee,
                });
            }
            if r.round != round {
                return Err(LedgerError::RoundMismatch {
                    record: r.round,
                    batch: round,
                });
            }
        }
        batch.sort_by_key(|r| (r.rater, r.ratee));
        for r in batch {
            let idx = self.records.len();
            self.latest.entry(r.ratee).or_default().insert(r.rater, idx);
            self.records.push(r);
        }
        self.head_round = round;
        Ok(())
    }

    /// Latest opinion of every other rater on `ratee` that is no older than
    /// `max_age_rounds` behind the head, ordered by rater.
    pub fn recommended_opinions(
        &self,
        ratee: CandidateId,
        exclude_rater: Option<VehicleId>,
        max_age_rounds: u64,
    ) -> Vec<(VehicleId, Opinion)> {
        let oldest = self.head_round.saturating_sub(max_age_rounds);
        let Some(by_rater) = self.latest.get(&ratee) else {
            return Vec::new();
        };
        by_rater
            .iter()
            .filter(|(rater, _)| Some(**rater) != exclude_rater)
            .map(|(rater, &idx)| (*rater, &self.records[idx]))
            .filter(|(_, rec)| rec.round >= oldest)
            .map(|(rater, rec)| (rater, rec.opinion))
            .collect()
    }

    /// Mean reputation score of `ratee` over current opinions, or the neutral
    /// prior when there are none.
    pub fn average_reputation(
        &self,
        ratee: CandidateId,
        uncertainty_effect: f64,
        max_age_rounds: u64,
    ) -> f64 {
        let ops = self.recommended_opinions(ratee, None, max_age_rounds);
        if ops.is_empty() {
            return NEUTRAL_PRIOR;
        }
        ops.iter()
            .map(|(_, o)| reputation_score(*o, uncertainty_effect))
            .sum::<f64>()
            / ops.len() as f64
    }

    /// Writes one `rater,ratee,b,d,u,round` line per record.
    pub fn export_lines<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.rater,
                r.ratee,
                r.opinion.belief(),
                r.opinion.disbelief(),
                r.opinion.uncertainty(),
                r.round
            )?;
        }
        Ok(())
    }
}
