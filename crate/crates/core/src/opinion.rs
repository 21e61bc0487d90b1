//! Multi-weight subjective logic.
//!
//! An [`Opinion`] is a (belief, disbelief, uncertainty) triple summing to one.
//! Local opinions come from weighted interaction evidence; recommendations from
//! other raters are combined by an interaction-frequency weighted mean and then
//! fused with the local opinion by the consensus operator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for the `b + d + u = 1` invariant.
pub const OPINION_TOLERANCE: f64 = 1e-9;

/// Default effect of uncertainty on a reputation score.
pub const DEFAULT_UNCERTAINTY_EFFECT: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpinionError {
    #[error("opinion component out of [0, 1]: b={0}, d={1}, u={2}")]
    ComponentRange(f64, f64, f64),
    #[error("opinion components sum to {0}, expected 1")]
    Sum(f64),
    #[error("invalid evidence: {0}")]
    Evidence(&'static str),
    #[error("event at t={event} lies after evaluation time t={now}")]
    FutureEvent { event: i64, now: i64 },
    #[error("rater has no interactions in the window")]
    NoInteractions,
    #[error("no recommendation carries positive weight")]
    NoRecommendations,
    #[error("both opinions are dogmatic, fusion is undefined")]
    DogmaticConflict,
    #[error("invalid weights: {0}")]
    Weights(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Opinion {
    belief: f64,
    disbelief: f64,
    uncertainty: f64,
}

impl Opinion {
    /// The opinion held in the absence of any evidence.
    pub const VACUOUS: Opinion = Opinion {
        belief: 0.0,
        disbelief: 0.0,
        uncertainty: 1.0,
    };

    pub fn new(belief: f64, disbelief: f64, uncertainty: f64) -> Result<Self, OpinionError> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(in_unit(belief) && in_unit(disbelief) && in_unit(uncertainty)) {
            return Err(OpinionError::ComponentRange(belief, disbelief, uncertainty));
        }
        let sum = belief + disbelief + uncertainty;
        if (sum - 1.0).abs() > OPINION_TOLERANCE {
            return Err(OpinionError::Sum(sum));
        }
        Ok(Self {
            belief,
            disbelief,
            uncertainty,
        })
    }

    /// Builds an opinion from arithmetic that preserves the invariant
    /// algebraically; clamps sub-ulp negative drift.
    pub(crate) fn from_parts(belief: f64, disbelief: f64, uncertainty: f64) -> Self {
        let o = Self {
            belief: belief.clamp(0.0, 1.0),
            disbelief: disbelief.clamp(0.0, 1.0),
            uncertainty: uncertainty.clamp(0.0, 1.0),
        };
        debug_assert!(
            (o.belief + o.disbelief + o.uncertainty - 1.0).abs() <= OPINION_TOLERANCE,
            "opinion invariant violated: {o:?}"
        );
        o
    }

    pub fn belief(&self) -> f64 {
        self.belief
    }

    pub fn disbelief(&self) -> f64 {
        self.disbelief
    }

    pub fn uncertainty(&self) -> f64 {
        self.uncertainty
    }

    pub fn is_dogmatic(&self) -> bool {
        self.uncertainty == 0.0
    }

    pub fn is_vacuous(&self) -> bool {
        self.uncertainty == 1.0
    }

    /// Expected belief: `b + γ·u`.
    pub fn score(&self, uncertainty_effect: f64) -> f64 {
        reputation_score(*self, uncertainty_effect)
    }
}

impl Default for Opinion {
    fn default() -> Self {
        Self::VACUOUS
    }
}

impl TryFrom<[f64; 3]> for Opinion {
    type Error = OpinionError;

    fn try_from(v: [f64; 3]) -> Result<Self, Self::Error> {
        Opinion::new(v[0], v[1], v[2])
    }
}

impl From<Opinion> for [f64; 3] {
    fn from(o: Opinion) -> Self {
        [o.belief, o.disbelief, o.uncertainty]
    }
}

/// Weighted positive/negative interaction counts plus the link's packet
/// delivery probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceCounts {
    pub positive: f64,
    pub negative: f64,
    pub link_quality: f64,
}

impl EvidenceCounts {
    pub fn new(positive: f64, negative: f64, link_quality: f64) -> Result<Self, OpinionError> {
        let c = Self {
            positive,
            negative,
            link_quality,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), OpinionError> {
        if !(self.positive >= 0.0 && self.positive.is_finite()) {
            return Err(OpinionError::Evidence("positive count must be finite and >= 0"));
        }
        if !(self.negative >= 0.0 && self.negative.is_finite()) {
            return Err(OpinionError::Evidence("negative count must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.link_quality) {
            return Err(OpinionError::Evidence("link quality must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Total weighted interaction count `α + β`.
    pub fn total(&self) -> f64 {
        self.positive + self.negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Positive,
    Negative,
}

/// Weights of the multi-weight local opinion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReputationWeights {
    /// Weight of interactions no older than `recent_horizon_s`.
    pub recent_weight: f64,
    pub past_weight: f64,
    pub positive_weight: f64,
    /// Negative interactions weigh more than positive ones.
    pub negative_weight: f64,
    /// Scale applied to interaction frequency to obtain a recommendation weight.
    pub scale: f64,
    pub uncertainty_effect: f64,
    pub recent_horizon_s: i64,
    /// Observation window; older interactions are ignored.
    pub window_s: i64,
}

impl Default for ReputationWeights {
    fn default() -> Self {
        Self {
            recent_weight: 0.6,
            past_weight: 0.4,
            positive_weight: 0.4,
            negative_weight: 0.6,
            scale: 1.0,
            uncertainty_effect: DEFAULT_UNCERTAINTY_EFFECT,
            recent_horizon_s: 3 * 24 * 3600,
            window_s: 30 * 24 * 3600,
        }
    }
}

impl ReputationWeights {
    pub fn validate(&self) -> Result<(), OpinionError> {
        const EPS: f64 = 1e-9;
        let all = [
            self.recent_weight,
            self.past_weight,
            self.positive_weight,
            self.negative_weight,
        ];
        if all.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(OpinionError::Weights("interaction weights must lie in [0, 1]"));
        }
        if (self.recent_weight + self.past_weight - 1.0).abs() > EPS {
            return Err(OpinionError::Weights("recent_weight + past_weight must equal 1"));
        }
        if self.recent_weight <= self.past_weight {
            return Err(OpinionError::Weights("recent_weight must exceed past_weight"));
        }
        if (self.positive_weight + self.negative_weight - 1.0).abs() > EPS {
            return Err(OpinionError::Weights("positive_weight + negative_weight must equal 1"));
        }
        if self.positive_weight >= self.negative_weight {
            return Err(OpinionError::Weights("positive_weight must be below negative_weight"));
        }
        if !(0.0..=1.0).contains(&self.scale) {
            return Err(OpinionError::Weights("scale must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.uncertainty_effect) {
            return Err(OpinionError::Weights("uncertainty_effect must lie in [0, 1]"));
        }
        if self.recent_horizon_s < 0 || self.window_s <= 0 {
            return Err(OpinionError::Weights("horizons must be positive"));
        }
        Ok(())
    }
}

/// Blend between the average recommended opinion and the rater's latest local
/// opinion in the linear baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TslParams {
    pub blend: f64,
}

impl Default for TslParams {
    fn default() -> Self {
        Self { blend: 0.5 }
    }
}

impl TslParams {
    pub fn validate(&self) -> Result<(), OpinionError> {
        if !(0.0..=1.0).contains(&self.blend) {
            return Err(OpinionError::Weights("blend must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Maps interaction evidence to an opinion. No evidence yields the vacuous
/// opinion whatever the link quality.
pub fn opinion_from_evidence(counts: &EvidenceCounts) -> Opinion {
    debug_assert!(counts.validate().is_ok(), "invalid evidence {counts:?}");
    let total = counts.total();
    if total <= 0.0 {
        return Opinion::VACUOUS;
    }
    let uncertainty = 1.0 - counts.link_quality;
    let certainty = counts.link_quality;
    let belief = certainty * counts.positive / total;
    // Derive disbelief from the remainder so the triple sums to one to the ulp.
    let disbelief = (certainty - belief).max(0.0);
    Opinion::from_parts(belief, disbelief, uncertainty)
}

pub fn reputation_score(op: Opinion, uncertainty_effect: f64) -> f64 {
    op.belief + uncertainty_effect * op.uncertainty
}

/// Splits `events` into recent and past interactions relative to `now` and
/// applies the timeliness and effect weights. Events older than the window
/// are ignored. The returned link quality is 1; callers set it.
pub fn weighted_counts(
    events: &[(i64, Outcome)],
    now: i64,
    w: &ReputationWeights,
) -> Result<EvidenceCounts, OpinionError> {
    let (mut pos_recent, mut pos_past, mut neg_recent, mut neg_past) = (0.0, 0.0, 0.0, 0.0);
    for &(t, outcome) in events {
        if t > now {
            return Err(OpinionError::FutureEvent { event: t, now });
        }
        let age = now - t;
        if age > w.window_s {
            continue;
        }
        let recent = age <= w.recent_horizon_s;
        match (outcome, recent) {
            (Outcome::Positive, true) => pos_recent += 1.0,
            (Outcome::Positive, false) => pos_past += 1.0,
            (Outcome::Negative, true) => neg_recent += 1.0,
            (Outcome::Negative, false) => neg_past += 1.0,
        }
    }
    Ok(EvidenceCounts {
        positive: w.recent_weight * w.positive_weight * pos_recent
            + w.past_weight * w.positive_weight * pos_past,
        negative: w.recent_weight * w.negative_weight * neg_recent
            + w.past_weight * w.negative_weight * neg_past,
        link_quality: 1.0,
    })
}

/// Ratio of the rater's weighted interactions with the target to its mean
/// weighted interactions over every RSU it dealt with (`peers` includes the
/// target).
pub fn interaction_frequency(
    target: &EvidenceCounts,
    peers: &[EvidenceCounts],
) -> Result<f64, OpinionError> {
    if peers.is_empty() {
        return Err(OpinionError::NoInteractions);
    }
    let mean = peers.iter().map(EvidenceCounts::total).sum::<f64>() / peers.len() as f64;
    if mean <= 0.0 {
        return Err(OpinionError::NoInteractions);
    }
    Ok(target.total() / mean)
}

/// Recommendation weight `δ = ρ · IF`.
pub fn recommendation_weight(scale: f64, interaction_frequency: f64) -> f64 {
    scale * interaction_frequency
}

/// Weighted arithmetic mean of recommended opinions.
pub fn aggregate_recommendations(recs: &[(f64, Opinion)]) -> Result<Opinion, OpinionError> {
    let total: f64 = recs.iter().map(|(w, _)| w.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(OpinionError::NoRecommendations);
    }
    let (mut b, mut d) = (0.0, 0.0);
    for &(w, op) in recs {
        let w = w.max(0.0);
        b += w * op.belief;
        d += w * op.disbelief;
    }
    let (b, d) = (b / total, d / total);
    // Uncertainty as the remainder keeps the invariant tight; it equals the
    // weighted mean of the uncertainties algebraically.
    let u = (1.0 - b - d).max(0.0);
    Ok(Opinion::from_parts(b, d, u))
}

/// Consensus fusion of a local opinion with a recommended opinion.
///
/// A vacuous recommendation leaves the local opinion unchanged and a dogmatic
/// local opinion dominates any uncertain recommendation; both cases return the
/// local opinion bit-for-bit.
pub fn fuse(local: Opinion, rec: Opinion) -> Result<Opinion, OpinionError> {
    if local.is_dogmatic() && rec.is_dogmatic() {
        return Err(OpinionError::DogmaticConflict);
    }
    if rec.is_vacuous() || local.is_dogmatic() {
        return Ok(local);
    }
    if local.is_vacuous() || rec.is_dogmatic() {
        return Ok(rec);
    }
    let (ul, ur) = (local.uncertainty, rec.uncertainty);
    let denom = ul + ur * (1.0 - ul);
    let b = (local.belief * ur + rec.belief * ul) / denom;
    let d = (local.disbelief * ur + rec.disbelief * ul) / denom;
    let u = ur * ul / denom;
    Ok(Opinion::from_parts(b, d, u))
}

/// [`fuse`], falling back to the local opinion when both are dogmatic. The
/// flag reports whether the fallback fired.
pub fn fuse_or_local(local: Opinion, rec: Opinion) -> (Opinion, bool) {
    match fuse(local, rec) {
        Ok(op) => (op, false),
        Err(_) => {
            log::warn!("dogmatic-dogmatic fusion, keeping local opinion {local:?}");
            (local, true)
        }
    }
}

/// Linear-blend baseline reputation: `(1-κ)(b_avg + u_avg/2) + κ(b_las + u_las/2)`.
pub fn tsl_reputation(avg: Opinion, latest: Opinion, p: TslParams) -> f64 {
    let t_avg = avg.belief + 0.5 * avg.uncertainty;
    let t_las = latest.belief + 0.5 * latest.uncertainty;
    (1.0 - p.blend) * t_avg + p.blend * t_las
}

/// Mean of opinions with equal weight; vacuous when `ops` is empty.
pub fn mean_opinion(ops: &[Opinion]) -> Opinion {
    if ops.is_empty() {
        return Opinion::VACUOUS;
    }
    let recs: Vec<(f64, Opinion)> = ops.iter().map(|&o| (1.0, o)).collect();
    aggregate_recommendations(&recs).unwrap_or(Opinion::VACUOUS)
}
