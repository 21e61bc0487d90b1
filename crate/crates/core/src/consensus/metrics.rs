use super::sim::{CandidateSeries, SeriesPoint, SimulationReport};
use super::{ConsensusError, Scheme};
use crate::ledger::NEUTRAL_PRIOR;

fn system_score(p: &SeriesPoint, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::None => p.honest_none,
        Scheme::Tsl => p.honest_tsl,
        Scheme::Mwsl => p.honest_mwsl,
    }
}

fn victim_score(p: &SeriesPoint, scheme: Scheme) -> Option<f64> {
    match scheme {
        Scheme::None => p.victim_none,
        Scheme::Tsl => p.victim_tsl,
        Scheme::Mwsl => p.victim_mwsl,
    }
}

fn observer_score(p: &SeriesPoint, scheme: Scheme) -> Option<f64> {
    match scheme {
        Scheme::None => p.none,
        Scheme::Tsl => p.tsl,
        Scheme::Mwsl => p.mwsl,
    }
}

/// Share of malicious candidates whose system-average reputation (mean over
/// honest vehicles) drops strictly below `threshold` during the first
/// `horizon` rounds.
pub fn detection_rate(
    report: &SimulationReport,
    scheme: Scheme,
    threshold: f64,
    horizon: u64,
) -> Result<f64, ConsensusError> {
    if report.series.is_empty() {
        return Err(ConsensusError::NoMalicious);
    }
    let hits = report
        .series
        .iter()
        .filter(|s| {
            s.points
                .iter()
                .filter(|p| p.round < horizon)
                .any(|p| system_score(p, scheme) < threshold)
        })
        .count();
    Ok(hits as f64 / report.series.len() as f64)
}

/// First round at which the observer's score falls strictly below
/// `threshold`.
pub fn first_crossing(series: &CandidateSeries, scheme: Scheme, threshold: f64) -> Option<u64> {
    series
        .points
        .iter()
        .find(|p| observer_score(p, scheme).is_some_and(|x| x < threshold))
        .map(|p| p.round)
}

/// First round at which the victims' average view falls strictly below
/// `threshold`.
pub fn victim_crossing(series: &CandidateSeries, scheme: Scheme, threshold: f64) -> Option<u64> {
    series
        .points
        .iter()
        .find(|p| victim_score(p, scheme).is_some_and(|x| x < threshold))
        .map(|p| p.round)
}

/// Per-round reputation of the malicious candidates as seen by the vehicles
/// they misbehave toward: the victims' mean view, averaged over candidates.
pub fn victim_view(report: &SimulationReport, scheme: Scheme) -> Vec<f64> {
    (0..report.rounds as usize)
        .map(|i| {
            let views: Vec<f64> = report
                .series
                .iter()
                .filter_map(|s| victim_score(&s.points[i], scheme))
                .collect();
            if views.is_empty() {
                NEUTRAL_PRIOR
            } else {
                views.iter().sum::<f64>() / views.len() as f64
            }
        })
        .collect()
}

/// First round at which [`victim_view`] falls strictly below `threshold`.
pub fn victim_view_crossing(report: &SimulationReport, scheme: Scheme, threshold: f64) -> Option<u64> {
    victim_view(report, scheme)
        .iter()
        .position(|&x| x < threshold)
        .map(|i| i as u64)
}

/// Share of blocks whose verdict matches the block's actual validity.
pub fn correct_block_probability(report: &SimulationReport) -> Result<f64, ConsensusError> {
    if report.blocks.is_empty() {
        return Err(ConsensusError::NoBlocks);
    }
    let ok = report.blocks.iter().filter(|b| b.truthful).count();
    Ok(ok as f64 / report.blocks.len() as f64)
}
