use std::collections::{BTreeMap, BTreeSet};

use log::{debug, warn};
use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::reputation::{
    compute_final_reputations, naive_score, pair_evidence, recommendation_weights, tsl_scores,
    FinalReputation, Observation, PairEvidence,
};
use super::selection::{admit_candidates, rotate_manager, vote_and_select, Ballot, MinerGroup};
use super::verify::{verify_block, BlockOutcome};
use super::{ConsensusError, Scheme, ScenarioConfig};
use crate::contract::{
    solve_optimal_contract, verifier_utility, ContractParams, VerifierTypeProfile,
};
use crate::ids::{CandidateId, VehicleId};
use crate::ledger::{Ledger, ReputationRecord};
use crate::mobility::{
    deploy_rsus, filter_region, interaction_events, load_trace_dir, synthetic_traces,
    BehaviorMode, BehaviorProfile, BehaviorWindow, InteractionRecord, SyntheticTraceConfig,
    TracePoint, Victims,
};
use crate::opinion::{opinion_from_evidence, Outcome};

const TRACE_STREAM: u64 = 1;
const SITE_STREAM: u64 = 2;
const ATTACK_STREAM: u64 = 3;
const EVENT_STREAM: u64 = 4;
const BLOCK_STREAM: u64 = 5;

/// Scores of one malicious candidate at the end of a round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub round: u64,
    /// The observer's view under each scheme.
    pub none: Option<f64>,
    pub tsl: Option<f64>,
    pub mwsl: Option<f64>,
    /// Victims that have experienced misbehavior so far.
    pub witnesses: usize,
    /// Mean over the vehicles the candidate misbehaves toward.
    pub victim_none: Option<f64>,
    pub victim_tsl: Option<f64>,
    pub victim_mwsl: Option<f64>,
    /// System average: mean over every honest vehicle.
    pub honest_none: f64,
    pub honest_tsl: f64,
    pub honest_mwsl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSeries {
    pub candidate: CandidateId,
    /// The victim with the most bad interactions over the run.
    pub observer: Option<VehicleId>,
    pub observer_bad_interactions: usize,
    pub points: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DetectionEvent {
    pub round: u64,
    pub candidate: CandidateId,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundSummary {
    pub round: u64,
    pub admitted: usize,
    pub group: Option<MinerGroup>,
    pub standby_joined: usize,
    pub colluders: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub rounds: u64,
    pub round_s: i64,
    pub start_time: i64,
    pub malicious: Vec<CandidateId>,
    pub compromised: Vec<VehicleId>,
    pub series: Vec<CandidateSeries>,
    pub detections: Vec<DetectionEvent>,
    pub round_summaries: Vec<RoundSummary>,
    pub blocks: Vec<BlockOutcome>,
    pub events: Vec<InteractionRecord>,
    /// Dogmatic-dogmatic fusions that fell back to the local opinion.
    pub fusion_fallbacks: u64,
    #[serde(skip)]
    pub ledger: Ledger,
    #[serde(skip)]
    pub tsl_ledger: Ledger,
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

fn load_points(cfg: &ScenarioConfig) -> Result<Vec<TracePoint>, ConsensusError> {
    let m = &cfg.mobility;
    let duration = cfg.rounds as i64 * cfg.round_s;
    let points = match &m.trace_dir {
        Some(dir) => {
            let set = load_trace_dir(dir)?;
            let end = m.start_time + duration;
            filter_region(&set.points, &m.bbox)
                .into_iter()
                .filter(|p| (p.vehicle.0 as usize) < cfg.vehicles)
                .filter(|p| (m.start_time..=end).contains(&p.timestamp))
                .collect()
        }
        None => synthetic_traces(
            &SyntheticTraceConfig {
                n_vehicles: cfg.vehicles,
                bbox: m.bbox,
                speed_range_kmh: m.speed_range_kmh,
                duration_s: duration,
                step_s: m.step_s,
                start_time: m.start_time,
            },
            sub_seed(cfg.seed, TRACE_STREAM),
        )?,
    };
    Ok(points)
}

struct World {
    events: Vec<InteractionRecord>,
    malicious: BTreeSet<CandidateId>,
    compromised: BTreeSet<VehicleId>,
    victims: BTreeMap<CandidateId, BTreeSet<VehicleId>>,
}

fn build_world(cfg: &ScenarioConfig) -> Result<World, ConsensusError> {
    let a = &cfg.attack;
    let start = cfg.mobility.start_time;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, ATTACK_STREAM));
    let malicious: BTreeSet<CandidateId> = sample(&mut rng, cfg.candidates, a.malicious_candidates)
        .into_iter()
        .map(|i| CandidateId(i as u32))
        .collect();
    let compromised: BTreeSet<VehicleId> = sample(&mut rng, cfg.vehicles, a.compromised_vehicles)
        .into_iter()
        .map(|i| VehicleId(i as u32))
        .collect();
    let points = load_points(cfg)?;
    let sites = deploy_rsus(
        cfg.candidates,
        &cfg.mobility.bbox,
        cfg.mobility.rsu_radius_m,
        sub_seed(cfg.seed, SITE_STREAM),
    );
    let mut events = interaction_events(
        &points,
        &sites,
        &[],
        &cfg.mobility.interactions,
        sub_seed(cfg.seed, EVENT_STREAM),
    );
    // Victims are drawn from the honest vehicles each candidate serves once
    // it turns.
    let onset = start + a.onset_s;
    let mut served: BTreeMap<CandidateId, BTreeSet<VehicleId>> = BTreeMap::new();
    for e in &events {
        if e.timestamp >= onset && malicious.contains(&e.rsu) && !compromised.contains(&e.vehicle) {
            served.entry(e.rsu).or_default().insert(e.vehicle);
        }
    }
    let mut victims: BTreeMap<CandidateId, BTreeSet<VehicleId>> = BTreeMap::new();
    for &m in &malicious {
        let pool: Vec<VehicleId> = served.remove(&m).unwrap_or_default().into_iter().collect();
        let n = ((a.victim_share * pool.len() as f64).round() as usize)
            .max(1)
            .min(pool.len());
        debug!("{m} misbehaves toward {n} of the {} vehicles it serves", pool.len());
        let chosen = sample(&mut rng, pool.len(), n).into_iter().map(|i| pool[i]).collect();
        victims.insert(m, chosen);
    }
    let behaviors: BTreeMap<CandidateId, BehaviorProfile> = victims
        .iter()
        .map(|(&m, vs)| {
            let profile = BehaviorProfile {
                entity: m,
                schedule: vec![BehaviorWindow {
                    start: onset,
                    end: i64::MAX,
                    mode: BehaviorMode::Malicious,
                }],
                victims: Victims::Only(vs.clone()),
                collusion_partners: compromised.clone(),
            };
            (m, profile)
        })
        .collect();
    for e in &mut events {
        if let Some(b) = behaviors.get(&e.rsu) {
            e.outcome = b.outcome(e.vehicle, e.timestamp);
        }
    }
    Ok(World {
        events,
        malicious,
        compromised,
        victims,
    })
}

/// Victim with the most bad interactions with `m`, then the most
/// interactions, then the lowest id.
fn pick_observer(
    m: CandidateId,
    victims: &BTreeSet<VehicleId>,
    obs: &BTreeMap<(VehicleId, CandidateId), Vec<Observation>>,
) -> Option<VehicleId> {
    victims
        .iter()
        .map(|&v| {
            let seen = obs.get(&(v, m)).map_or(&[][..], Vec::as_slice);
            let bad = seen.iter().filter(|o| o.1 == Outcome::Negative).count();
            (bad, seen.len(), std::cmp::Reverse(v))
        })
        .max()
        .map(|(_, _, std::cmp::Reverse(v))| v)
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.into_iter().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Puts at least `seats.len()` of `seats` into the active set, displacing the
/// lowest-ranked members that are not in `captors`.
fn capture_seats(
    group: &MinerGroup,
    seats: &[CandidateId],
    captors: &BTreeSet<CandidateId>,
) -> MinerGroup {
    let k = group.active.len();
    let standby_len = group.standby.len();
    let present = group.active.iter().filter(|c| captors.contains(c)).count();
    let needed = seats.len().saturating_sub(present);
    let newcomers: Vec<CandidateId> = seats
        .iter()
        .copied()
        .filter(|c| !group.active.contains(c))
        .take(needed)
        .collect();
    let mut displaced = Vec::new();
    let mut active = group.active.clone();
    for _ in 0..newcomers.len() {
        if let Some(pos) = active.iter().rposition(|c| !captors.contains(c)) {
            displaced.push(active.remove(pos));
        }
    }
    displaced.reverse();
    active.extend(newcomers.iter().copied().take(k - active.len()));
    let standby: Vec<CandidateId> = displaced
        .into_iter()
        .chain(group.standby.iter().copied())
        .filter(|c| !active.contains(c))
        .take(standby_len)
        .collect();
    MinerGroup { active, standby }
}

/// Standby miners that take part in verification this round.
fn recruit_standby(
    cfg: &ScenarioConfig,
    standby: &[CandidateId],
    reputation: impl Fn(CandidateId) -> f64,
) -> Vec<CandidateId> {
    let v = &cfg.verification;
    if !v.standby_verification || standby.is_empty() {
        return Vec::new();
    }
    let mut joined: Vec<CandidateId> = if v.use_contract {
        contract_signers(cfg, standby, &reputation)
    } else {
        let n = (v.standby_join_fraction * standby.len() as f64).ceil() as usize;
        standby.iter().copied().take(n).collect()
    };
    if let Some(cap) = v.standby_cap {
        joined.truncate(cap);
    }
    joined
}

/// Bins the standby list into equal-frequency reputation types, offers the
/// optimal menu and returns the members whose item leaves them no worse off,
/// highest reputation first.
fn contract_signers(
    cfg: &ScenarioConfig,
    standby: &[CandidateId],
    reputation: &impl Fn(CandidateId) -> f64,
) -> Vec<CandidateId> {
    let v = &cfg.verification;
    let n = standby.len();
    let q = v.contract_types.min(n);
    let mut ranked: Vec<(f64, CandidateId)> = standby.iter().map(|&c| (reputation(c), c)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let bins: Vec<usize> = (0..n).map(|i| i * q / n).collect();
    let types: Vec<f64> = (1..=q).map(|t| t as f64 * v.theta_step).collect();
    let mut priors = vec![0.0; q];
    for &b in &bins {
        priors[b] += 1.0 / n as f64;
    }
    let params = ContractParams {
        verifier_count: n as f64,
        ..v.contract
    };
    let menu = VerifierTypeProfile::new(types.clone(), priors)
        .map_err(ConsensusError::from)
        .and_then(|p| solve_optimal_contract(&p, &params).map_err(ConsensusError::from));
    let menu = match menu {
        Ok(m) => m,
        Err(e) => {
            warn!("no standby contract this round: {e}");
            return Vec::new();
        }
    };
    let mut signed: Vec<CandidateId> = ranked
        .iter()
        .zip(&bins)
        .filter(|(_, &b)| verifier_utility(types[b], &menu.items[b], params.unit_cost) >= -1e-9)
        .map(|((_, c), _)| *c)
        .collect();
    signed.reverse();
    signed
}

/// Largest odd number below `y`, used when fewer than `y` candidates are
/// admitted.
fn shrink_k(k: usize, y: usize) -> usize {
    if k < y {
        k
    } else {
        let x = y - 1;
        if x % 2 == 0 {
            x - 1
        } else {
            x
        }
    }
}

fn ranked_ballot(
    voter: VehicleId,
    admitted: &BTreeSet<CandidateId>,
    y: usize,
    score: impl Fn(CandidateId) -> f64,
) -> Ballot {
    let mut cands: Vec<(f64, CandidateId)> = admitted.iter().map(|&c| (score(c), c)).collect();
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ballot {
        voter,
        ranked_choices: cands.into_iter().take(y).map(|(_, c)| c).collect(),
    }
}

/// Runs the scenario. Each round: gather the evidence known by its end,
/// score every candidate from every honest vehicle's view under all three
/// schemes, admit and elect the miner group with the selected scheme, let
/// the active miners produce and verify `k` blocks, then append this round's
/// opinions to the ledgers.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<SimulationReport, ConsensusError> {
    cfg.validate()?;
    let world = build_world(cfg)?;
    let start = cfg.mobility.start_time;
    let attack = &cfg.attack;
    let candidates: Vec<CandidateId> = (0..cfg.candidates as u32).map(CandidateId).collect();
    let vehicles: Vec<VehicleId> = (0..cfg.vehicles as u32).map(VehicleId).collect();
    let honest: Vec<VehicleId> = vehicles
        .iter()
        .copied()
        .filter(|v| !world.compromised.contains(v))
        .collect();

    let mut obs: BTreeMap<(VehicleId, CandidateId), Vec<Observation>> = BTreeMap::new();
    for e in &world.events {
        obs.entry((e.vehicle, e.rsu))
            .or_default()
            .push((e.timestamp, e.outcome, e.link_quality));
    }
    let observers: BTreeMap<CandidateId, Option<VehicleId>> = world
        .victims
        .iter()
        .map(|(&m, vs)| (m, pick_observer(m, vs, &obs)))
        .collect();
    let mut series: Vec<CandidateSeries> = world
        .malicious
        .iter()
        .map(|&m| {
            let observer = observers[&m];
            let bad = observer
                .and_then(|o| obs.get(&(o, m)))
                .map_or(0, |seen| seen.iter().filter(|x| x.1 == Outcome::Negative).count());
            CandidateSeries {
                candidate: m,
                observer,
                observer_bad_interactions: bad,
                points: Vec::new(),
            }
        })
        .collect();

    let mut ledger = Ledger::new();
    let mut tsl_ledger = Ledger::new();
    let mut detected: BTreeMap<Scheme, BTreeSet<CandidateId>> = BTreeMap::new();
    let mut detections = Vec::new();
    let mut summaries = Vec::new();
    let mut blocks = Vec::new();
    let mut fusion_fallbacks = 0u64;
    let mut block_rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, BLOCK_STREAM));
    let fake = attack.fake_opinion;

    for round in 0..cfg.rounds {
        let end = start + (round as i64 + 1) * cfg.round_s;
        let round_start = end - cfg.round_s;
        let attacking = end > start + attack.onset_s;

        let mut evidence: BTreeMap<VehicleId, BTreeMap<CandidateId, PairEvidence>> =
            BTreeMap::new();
        let mut counts: BTreeMap<(VehicleId, CandidateId), usize> = BTreeMap::new();
        let mut fresh: BTreeMap<VehicleId, BTreeSet<CandidateId>> = BTreeMap::new();
        let mut witnesses: BTreeMap<CandidateId, Vec<VehicleId>> = BTreeMap::new();
        for (&(v, c), seen) in &obs {
            let seen = &seen[..seen.partition_point(|o| o.0 < end)];
            let Some(last) = seen.last() else { continue };
            evidence
                .entry(v)
                .or_default()
                .insert(c, pair_evidence(seen, end, &cfg.weights)?);
            counts.insert((v, c), seen.len());
            if last.0 >= round_start {
                fresh.entry(v).or_default().insert(c);
            }
            if !world.compromised.contains(&v) && seen.iter().any(|o| o.1 == Outcome::Negative) {
                witnesses.entry(c).or_default().push(v);
            }
        }
        let empty = BTreeMap::new();
        let deltas: BTreeMap<VehicleId, BTreeMap<CandidateId, f64>> = evidence
            .iter()
            .map(|(&v, e)| (v, recommendation_weights(e, cfg.weights.scale)))
            .collect();
        let delta = |x: VehicleId, c: CandidateId| {
            deltas.get(&x).and_then(|d| d.get(&c)).copied().unwrap_or(0.0)
        };

        let mut mwsl: BTreeMap<VehicleId, BTreeMap<CandidateId, FinalReputation>> =
            BTreeMap::new();
        let mut tsl: BTreeMap<VehicleId, BTreeMap<CandidateId, f64>> = BTreeMap::new();
        for &v in &honest {
            let own = evidence.get(&v).unwrap_or(&empty);
            let finals = compute_final_reputations(
                v,
                &candidates,
                own,
                &ledger,
                delta,
                &cfg.weights,
                cfg.max_age_rounds,
            );
            fusion_fallbacks += finals.values().filter(|f| f.fusion_fallback).count() as u64;
            mwsl.insert(v, finals);
            tsl.insert(
                v,
                tsl_scores(v, &candidates, own, &tsl_ledger, cfg.tsl, cfg.max_age_rounds),
            );
        }
        let naive = |v: VehicleId, c: CandidateId| naive_score(counts.get(&(v, c)).copied().unwrap_or(0));

        for s in &mut series {
            let m = s.candidate;
            let ws = witnesses.get(&m).map_or(&[][..], Vec::as_slice);
            let vs = &world.victims[&m];
            let point = SeriesPoint {
                round,
                none: s.observer.map(|o| naive(o, m)),
                tsl: s.observer.map(|o| tsl[&o][&m]),
                mwsl: s.observer.map(|o| mwsl[&o][&m].score),
                witnesses: ws.len(),
                victim_none: mean(vs.iter().map(|&w| naive(w, m))),
                victim_tsl: mean(vs.iter().map(|w| tsl[w][&m])),
                victim_mwsl: mean(vs.iter().map(|w| mwsl[w][&m].score)),
                honest_none: mean(honest.iter().map(|&v| naive(v, m))).unwrap_or(0.5),
                honest_tsl: mean(honest.iter().map(|v| tsl[v][&m])).unwrap_or(0.5),
                honest_mwsl: mean(honest.iter().map(|v| mwsl[v][&m].score)).unwrap_or(0.5),
            };
            for (scheme, value) in [(Scheme::Tsl, point.honest_tsl), (Scheme::Mwsl, point.honest_mwsl)] {
                let set = detected.entry(scheme).or_default();
                if value < cfg.detection_threshold && set.insert(m) {
                    detections.push(DetectionEvent {
                        round,
                        candidate: m,
                        scheme,
                    });
                }
            }
            s.points.push(point);
        }

        let selection_ledger = match cfg.selection {
            Scheme::Tsl => &tsl_ledger,
            _ => &ledger,
        };
        let excluded = detected.get(&cfg.selection).cloned().unwrap_or_default();
        let admitted: BTreeSet<CandidateId> = match cfg.selection {
            Scheme::None => candidates.iter().copied().collect(),
            _ => admit_candidates(
                selection_ledger,
                &candidates,
                cfg.ta_threshold,
                cfg.weights.uncertainty_effect,
                cfg.max_age_rounds,
            ),
        }
        .difference(&excluded)
        .copied()
        .collect();

        let mut summary = RoundSummary {
            round,
            admitted: admitted.len(),
            group: None,
            standby_joined: 0,
            colluders: 0,
        };
        let y = cfg.y.min(admitted.len());
        if y >= 2 {
            let k = shrink_k(cfg.k, y);
            let partners: Vec<CandidateId> = world
                .malicious
                .iter()
                .copied()
                .filter(|m| admitted.contains(m))
                .collect();
            let ballots: Vec<Ballot> = vehicles
                .iter()
                .map(|&v| {
                    if world.compromised.contains(&v) {
                        ranked_ballot(v, &admitted, y, |c| {
                            if partners.contains(&c) {
                                1.0
                            } else {
                                0.0
                            }
                        })
                    } else {
                        match cfg.selection {
                            Scheme::None => ranked_ballot(v, &admitted, y, |c| naive(v, c)),
                            Scheme::Tsl => ranked_ballot(v, &admitted, y, |c| tsl[&v][&c]),
                            Scheme::Mwsl => ranked_ballot(v, &admitted, y, |c| mwsl[&v][&c].score),
                        }
                    }
                })
                .collect();
            let mut group = vote_and_select(&ballots, k, y)?;
            if attacking && attack.active_collusion_fraction > 0.0 {
                let seats = ((attack.active_collusion_fraction * k as f64).ceil() as usize)
                    .min(partners.len());
                group = capture_seats(&group, &partners[..seats], &world.malicious);
            }
            group.check()?;
            let colluders: BTreeSet<CandidateId> = if attacking {
                group
                    .active
                    .iter()
                    .chain(&group.standby)
                    .copied()
                    .filter(|c| world.malicious.contains(c))
                    .collect()
            } else {
                BTreeSet::new()
            };
            let joined = recruit_standby(cfg, &group.standby, |c| {
                selection_ledger.average_reputation(
                    c,
                    cfg.weights.uncertainty_effect,
                    cfg.max_age_rounds,
                )
            });
            let verifiers: Vec<CandidateId> =
                group.active.iter().chain(&joined).copied().collect();
            for slot in 0..k as u64 {
                let manager = rotate_manager(&group, slot);
                let valid = !colluders.contains(&manager)
                    && !(attack.invalid_block_rate > 0.0
                        && block_rng.gen_bool(attack.invalid_block_rate));
                blocks.push(verify_block(
                    round,
                    slot,
                    manager,
                    &verifiers,
                    joined.len(),
                    &colluders,
                    valid,
                ));
            }
            summary.standby_joined = joined.len();
            summary.colluders = colluders.len();
            summary.group = Some(group);
        }
        summaries.push(summary);

        let mut batch = Vec::new();
        let mut tsl_batch = Vec::new();
        for &v in &vehicles {
            let faking = attacking && attack.fake_uploads && world.compromised.contains(&v);
            if faking {
                for &m in &world.malicious {
                    batch.push(ReputationRecord::signed(v, m, fake, round));
                    tsl_batch.push(ReputationRecord::signed(v, m, fake, round));
                }
            }
            let Some(cs) = fresh.get(&v) else { continue };
            for &c in cs {
                if faking && world.malicious.contains(&c) {
                    continue;
                }
                let e = &evidence[&v][&c];
                batch.push(ReputationRecord::signed(v, c, opinion_from_evidence(&e.weighted), round));
                tsl_batch.push(ReputationRecord::signed(v, c, opinion_from_evidence(&e.raw), round));
            }
        }
        ledger.append(batch, round)?;
        tsl_ledger.append(tsl_batch, round)?;
    }

    Ok(SimulationReport {
        seed: cfg.seed,
        rounds: cfg.rounds,
        round_s: cfg.round_s,
        start_time: start,
        malicious: world.malicious.into_iter().collect(),
        compromised: world.compromised.into_iter().collect(),
        series,
        detections,
        round_summaries: summaries,
        blocks,
        events: world.events,
        fusion_fallbacks,
        ledger,
        tsl_ledger,
    })
}
