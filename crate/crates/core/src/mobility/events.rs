use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MobilityError, RsuSite, TracePoint};
use crate::ids::{CandidateId, VehicleId};
use crate::opinion::Outcome;

const SECONDS_PER_WEEK: f64 = 7.0 * 24.0 * 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorMode {
    Honest,
    Malicious,
}

/// `mode` holds on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorWindow {
    pub start: i64,
    pub end: i64,
    pub mode: BehaviorMode,
}

/// Vehicles a malicious RSU misbehaves toward.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Victims {
    All,
    Only(BTreeSet<VehicleId>),
}

impl Victims {
    pub fn contains(&self, v: VehicleId) -> bool {
        match self {
            Victims::All => true,
            Victims::Only(set) => set.contains(&v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    pub entity: CandidateId,
    /// Non-overlapping windows; the RSU is honest outside them.
    pub schedule: Vec<BehaviorWindow>,
    pub victims: Victims,
    pub collusion_partners: BTreeSet<VehicleId>,
}

impl BehaviorProfile {
    pub fn honest(entity: CandidateId) -> Self {
        Self {
            entity,
            schedule: Vec::new(),
            victims: Victims::All,
            collusion_partners: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        let mut windows = self.schedule.clone();
        windows.sort_by_key(|w| w.start);
        if windows.iter().any(|w| w.start >= w.end) {
            return Err(MobilityError::Config("behavior window must have start < end"));
        }
        if windows.windows(2).any(|p| p[0].end > p[1].start) {
            return Err(MobilityError::Config("behavior windows overlap"));
        }
        Ok(())
    }

    pub fn mode_at(&self, t: i64) -> BehaviorMode {
        self.schedule
            .iter()
            .find(|w| w.start <= t && t < w.end)
            .map_or(BehaviorMode::Honest, |w| w.mode)
    }

    /// Outcome a vehicle experiences when interacting at time `t`.
    pub fn outcome(&self, vehicle: VehicleId, t: i64) -> Outcome {
        let misbehaves = self.mode_at(t) == BehaviorMode::Malicious
            && !self.collusion_partners.contains(&vehicle)
            && self.victims.contains(vehicle);
        if misbehaves {
            Outcome::Negative
        } else {
            Outcome::Positive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub vehicle: VehicleId,
    pub rsu: CandidateId,
    pub timestamp: i64,
    pub outcome: Outcome,
    pub link_quality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    /// Per-pair interaction frequency band, in interactions per week.
    pub weekly_frequency: (f64, f64),
    /// Range of the packet delivery probability.
    pub link_quality: (f64, f64),
    /// Multiplier on the weekly frequency, to compress weeks of contact into
    /// a short simulated horizon.
    pub rate_scale: f64,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self {
            weekly_frequency: (50.0, 200.0),
            link_quality: (0.6, 1.0),
            rate_scale: 1.0,
        }
    }
}

impl InteractionConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        let (f0, f1) = self.weekly_frequency;
        if !(f0 >= 0.0 && f0 <= f1 && f1.is_finite()) {
            return Err(MobilityError::Config("weekly_frequency must be an ordered range >= 0"));
        }
        let (l0, l1) = self.link_quality;
        if !(0.0 <= l0 && l0 <= l1 && l1 <= 1.0) {
            return Err(MobilityError::Config("link_quality must be an ordered range in [0, 1]"));
        }
        if !(self.rate_scale >= 0.0 && self.rate_scale.is_finite()) {
            return Err(MobilityError::Config("rate_scale must be >= 0"));
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo < hi {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Interactions between vehicles and the RSUs whose coverage they pass
/// through. Every in-coverage trace point is an epoch at which the pair
/// interacts with a probability chosen so that the pair's expected count
/// over the vehicle's trace span matches a frequency drawn from the
/// configured weekly band. Each pair uses its own random stream, so the
/// result does not depend on iteration order. Sorted by
/// `(timestamp, vehicle, rsu)`.
pub fn interaction_events(
    points: &[TracePoint],
    sites: &[RsuSite],
    behaviors: &[BehaviorProfile],
    cfg: &InteractionConfig,
    seed: u64,
) -> Vec<InteractionRecord> {
    let profiles: BTreeMap<CandidateId, &BehaviorProfile> =
        behaviors.iter().map(|b| (b.entity, b)).collect();
    let mut by_vehicle: BTreeMap<VehicleId, Vec<&TracePoint>> = BTreeMap::new();
    for p in points {
        by_vehicle.entry(p.vehicle).or_default().push(p);
    }
    let mut out = Vec::new();
    for (vehicle, mut pts) in by_vehicle {
        pts.sort_by_key(|p| p.timestamp);
        let span = (pts[pts.len() - 1].timestamp - pts[0].timestamp) as f64;
        let span_weeks = span / SECONDS_PER_WEEK;
        for site in sites {
            let epochs: Vec<&TracePoint> = pts
                .iter()
                .copied()
                .filter(|p| site.covers(p.latitude, p.longitude))
                .collect();
            if epochs.is_empty() {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((u64::from(vehicle.0) << 32) | u64::from(site.rsu.0));
            let weekly = draw(&mut rng, cfg.weekly_frequency);
            let p = (weekly * cfg.rate_scale * span_weeks / epochs.len() as f64).clamp(0.0, 1.0);
            for e in epochs {
                if !rng.gen_bool(p) {
                    continue;
                }
                let outcome = profiles
                    .get(&site.rsu)
                    .map_or(Outcome::Positive, |b| b.outcome(vehicle, e.timestamp));
                out.push(InteractionRecord {
                    vehicle,
                    rsu: site.rsu,
                    timestamp: e.timestamp,
                    outcome,
                    link_quality: draw(&mut rng, cfg.link_quality),
                });
            }
        }
    }
    out.sort_by_key(|r| (r.timestamp, r.vehicle, r.rsu));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(vehicle: u32, t: i64, lat: f64, lon: f64) -> TracePoint {
        TracePoint {
            vehicle: VehicleId(vehicle),
            latitude: lat,
            longitude: lon,
            timestamp: t,
        }
    }

    fn site(id: u32, lat: f64, lon: f64) -> RsuSite {
        RsuSite {
            rsu: CandidateId(id),
            latitude: lat,
            longitude: lon,
            coverage_radius: 400.0,
        }
    }

    fn certain() -> InteractionConfig {
        InteractionConfig {
            rate_scale: 1e9,
            ..InteractionConfig::default()
        }
    }

    #[test]
    fn out_of_coverage_yields_nothing() {
        let pts = [point(0, 0, 37.70, -122.40), point(0, 60, 37.70, -122.40)];
        let sites = [site(0, 37.80, -122.40)];
        assert!(interaction_events(&pts, &sites, &[], &certain(), 1).is_empty());
    }

    #[test]
    fn honest_rsu_gives_positive() {
        let pts = [point(0, 0, 37.75, -122.40), point(0, 60, 37.70, -122.40)];
        let sites = [site(0, 37.75, -122.40)];
        let ev = interaction_events(&pts, &sites, &[], &certain(), 1);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].outcome, Outcome::Positive);
        assert_eq!(ev[0].timestamp, 0);
        assert!((0.6..=1.0).contains(&ev[0].link_quality));
    }

    #[test]
    fn malicious_rsu_spares_partners() {
        let pts = [
            point(0, 0, 37.75, -122.40),
            point(0, 60, 37.75, -122.40),
            point(1, 0, 37.75, -122.40),
            point(1, 60, 37.75, -122.40),
        ];
        let sites = [site(0, 37.75, -122.40)];
        let b = BehaviorProfile {
            entity: CandidateId(0),
            schedule: vec![BehaviorWindow {
                start: 0,
                end: 1000,
                mode: BehaviorMode::Malicious,
            }],
            victims: Victims::All,
            collusion_partners: [VehicleId(1)].into_iter().collect(),
        };
        let ev = interaction_events(&pts, &sites, &[b], &certain(), 1);
        assert_eq!(ev.len(), 4);
        for e in ev {
            let expected = if e.vehicle == VehicleId(1) {
                Outcome::Positive
            } else {
                Outcome::Negative
            };
            assert_eq!(e.outcome, expected);
        }
    }

    #[test]
    fn schedule_validation_and_lookup() {
        let mut b = BehaviorProfile::honest(CandidateId(0));
        b.schedule = vec![
            BehaviorWindow {
                start: 0,
                end: 10,
                mode: BehaviorMode::Honest,
            },
            BehaviorWindow {
                start: 10,
                end: 20,
                mode: BehaviorMode::Malicious,
            },
        ];
        b.validate().unwrap();
        assert_eq!(b.mode_at(9), BehaviorMode::Honest);
        assert_eq!(b.mode_at(10), BehaviorMode::Malicious);
        assert_eq!(b.mode_at(20), BehaviorMode::Honest);
        b.schedule[0].end = 11;
        assert!(b.validate().is_err());
    }
}
