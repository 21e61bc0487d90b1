//! Per-rater reputation pipeline: evidence, local opinion, recommendations,
//! fusion and score.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ids::{CandidateId, VehicleId};
use crate::ledger::Ledger;
use crate::opinion::{
    aggregate_recommendations, fuse_or_local, interaction_frequency, mean_opinion,
    opinion_from_evidence, recommendation_weight, reputation_score, tsl_reputation,
    weighted_counts, EvidenceCounts, Opinion, OpinionError, Outcome, ReputationWeights,
    TslParams,
};

/// One interaction as seen by the vehicle: time, outcome, link quality.
pub type Observation = (i64, Outcome, f64);

/// A rater's evidence about one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEvidence {
    /// Timeliness- and effect-weighted counts inside the window.
    pub weighted: EvidenceCounts,
    /// Plain counts over the whole history.
    pub raw: EvidenceCounts,
}

/// Evidence from `obs` (ascending, all before `now`). Link quality is the
/// mean over the observations each count set covers.
pub fn pair_evidence(
    obs: &[Observation],
    now: i64,
    w: &ReputationWeights,
) -> Result<PairEvidence, OpinionError> {
    let events: Vec<(i64, Outcome)> = obs.iter().map(|&(t, o, _)| (t, o)).collect();
    let mut weighted = weighted_counts(&events, now, w)?;
    let windowed: Vec<f64> = obs
        .iter()
        .filter(|(t, _, _)| now - t <= w.window_s)
        .map(|&(_, _, s)| s)
        .collect();
    weighted.link_quality = mean_or_one(&windowed);
    let positive = obs.iter().filter(|o| o.1 == Outcome::Positive).count() as f64;
    let all: Vec<f64> = obs.iter().map(|o| o.2).collect();
    let raw = EvidenceCounts {
        positive,
        negative: obs.len() as f64 - positive,
        link_quality: mean_or_one(&all),
    };
    Ok(PairEvidence { weighted, raw })
}

fn mean_or_one(v: &[f64]) -> f64 {
    if v.is_empty() {
        1.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Recommendation weight `δ = ρ·IF` of a rater toward every candidate it has
/// evidence on. Empty when the rater has no weighted interactions (its
/// recommendations then carry no weight).
pub fn recommendation_weights(
    evidence: &BTreeMap<CandidateId, PairEvidence>,
    scale: f64,
) -> BTreeMap<CandidateId, f64> {
    let peers: Vec<EvidenceCounts> = evidence
        .values()
        .map(|e| e.weighted)
        .filter(|c| c.total() > 0.0)
        .collect();
    evidence
        .iter()
        .filter_map(|(&c, e)| {
            interaction_frequency(&e.weighted, &peers)
                .ok()
                .map(|f| (c, recommendation_weight(scale, f)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinalReputation {
    pub local: Opinion,
    pub recommended: Option<Opinion>,
    pub opinion: Opinion,
    pub score: f64,
    /// Both opinions were dogmatic and the local one was kept.
    pub fusion_fallback: bool,
}

/// Multi-weight final reputation of each candidate from `rater`'s view:
/// local opinion from its own weighted evidence, recommendations from the
/// ledger weighted by each recommender's `δ`, fused and scored.
pub fn compute_final_reputations(
    rater: VehicleId,
    candidates: &[CandidateId],
    own: &BTreeMap<CandidateId, PairEvidence>,
    ledger: &Ledger,
    deltas: impl Fn(VehicleId, CandidateId) -> f64,
    weights: &ReputationWeights,
    max_age_rounds: u64,
) -> BTreeMap<CandidateId, FinalReputation> {
    candidates
        .iter()
        .map(|&c| {
            let local = own
                .get(&c)
                .map_or(Opinion::VACUOUS, |e| opinion_from_evidence(&e.weighted));
            let recs: Vec<(f64, Opinion)> = ledger
                .recommended_opinions(c, Some(rater), max_age_rounds)
                .into_iter()
                .map(|(x, op)| (deltas(x, c), op))
                .collect();
            let recommended = aggregate_recommendations(&recs).ok();
            let (opinion, fusion_fallback) = match recommended {
                Some(rec) => fuse_or_local(local, rec),
                None => (local, false),
            };
            let fr = FinalReputation {
                local,
                recommended,
                opinion,
                score: reputation_score(opinion, weights.uncertainty_effect),
                fusion_fallback,
            };
            (c, fr)
        })
        .collect()
}

/// Linear-blend baseline: mean of the other raters' opinions blended with
/// the rater's own latest opinion from plain counts.
pub fn tsl_scores(
    rater: VehicleId,
    candidates: &[CandidateId],
    own: &BTreeMap<CandidateId, PairEvidence>,
    ledger: &Ledger,
    params: TslParams,
    max_age_rounds: u64,
) -> BTreeMap<CandidateId, f64> {
    candidates
        .iter()
        .map(|&c| {
            let latest = own
                .get(&c)
                .map_or(Opinion::VACUOUS, |e| opinion_from_evidence(&e.raw));
            let others: Vec<Opinion> = ledger
                .recommended_opinions(c, Some(rater), max_age_rounds)
                .into_iter()
                .map(|(_, op)| op)
                .collect();
            (c, tsl_reputation(mean_opinion(&others), latest, params))
        })
        .collect()
}

/// Count-only score `(n+1)/(n+2)` where every interaction counts as good.
pub fn naive_score(interactions: usize) -> f64 {
    (interactions as f64 + 1.0) / (interactions as f64 + 2.0)
}
