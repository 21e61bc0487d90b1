//! Table generators. Every table is built in memory; nothing touches disk.

use anyhow::{Context, Result};
use rayon::prelude::*;
use rdpos_core::consensus::{correct_block_probability, detection_rate, victim_view};
use rdpos_core::contract::{
    manager_profit, security_latency_metric, solve_with, stackelberg_symmetric,
    utility_matrix, verifier_utility, ContractMenu, VerifierTypeProfile,
};
use rdpos_core::{run_simulation, ScenarioConfig, Scheme, SimulationReport};

use crate::spec::{AnalysisSpec, ContractSweep, TableName};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: TableName,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: TableName, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated text: a `# config_hash=` line, the header, the rows.
    pub fn render(&self, config_hash: &str) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = String::from_utf8(w.into_inner().context("flushing table")?)?;
        Ok(format!("# config_hash={config_hash}\n{body}"))
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Runs `cfgs` in parallel, keeping their order.
pub fn run_all(cfgs: &[ScenarioConfig]) -> Result<Vec<SimulationReport>> {
    cfgs.par_iter()
        .map(|c| run_simulation(c).with_context(|| format!("simulation with seed {}", c.seed)))
        .collect()
}

pub fn replicate_configs(base: &ScenarioConfig, replicates: u64) -> Vec<ScenarioConfig> {
    (0..replicates)
        .map(|i| ScenarioConfig {
            seed: base.seed.wrapping_add(i),
            ..base.clone()
        })
        .collect()
}

/// Victims' view of the malicious candidates per minute and scheme,
/// averaged over replicates.
pub fn reputation_timeseries(runs: &[SimulationReport]) -> Table {
    let mut t = Table::new(
        TableName::ReputationTimeseries,
        &["minute", "scheme", "reputation"],
    );
    let views: Vec<Vec<Vec<f64>>> = Scheme::ALL
        .iter()
        .map(|&s| runs.iter().map(|r| victim_view(r, s)).collect())
        .collect();
    let rounds = runs.first().map_or(0, |r| r.rounds as usize);
    let minutes_per_round = runs.first().map_or(1.0, |r| r.round_s as f64 / 60.0);
    for i in 0..rounds {
        for (s, per_run) in Scheme::ALL.iter().zip(&views) {
            let at: Vec<f64> = per_run.iter().map(|v| v[i]).collect();
            t.push(vec![
                num((i + 1) as f64 * minutes_per_round),
                s.label().into(),
                num(mean(&at)),
            ]);
        }
    }
    t
}

pub fn detection_rates(runs: &[SimulationReport], a: &AnalysisSpec) -> Result<Table> {
    let mut t = Table::new(TableName::DetectionRate, &["threshold", "scheme", "rate"]);
    for &th in &a.thresholds {
        for s in Scheme::ALL {
            let rates = runs
                .iter()
                .map(|r| detection_rate(r, s, th, r.rounds))
                .collect::<Result<Vec<f64>, _>>()
                .context("detection rate")?;
            t.push(vec![num(th), s.label().into(), num(mean(&rates))]);
        }
    }
    Ok(t)
}

/// Variants compared in the block-correctness table.
pub const BLOCK_VARIANTS: [(&str, Scheme, bool); 4] = [
    ("MWSL+standby", Scheme::Mwsl, true),
    ("MWSL", Scheme::Mwsl, false),
    ("TSL", Scheme::Tsl, false),
    ("none", Scheme::None, false),
];

pub fn variant_config(base: &ScenarioConfig, threshold: f64, selection: Scheme, standby: bool) -> ScenarioConfig {
    let mut c = base.clone();
    c.detection_threshold = threshold;
    c.selection = selection;
    c.verification.standby_verification = standby;
    c
}

pub fn block_probabilities(base: &ScenarioConfig, a: &AnalysisSpec) -> Result<Table> {
    let mut cells = Vec::new();
    let mut cfgs = Vec::new();
    for &th in &a.thresholds {
        for (label, scheme, standby) in BLOCK_VARIANTS {
            let v = variant_config(base, th, scheme, standby);
            cells.push((th, label, cfgs.len(), a.replicates as usize));
            cfgs.extend(replicate_configs(&v, a.replicates));
        }
    }
    let runs = run_all(&cfgs)?;
    let mut t = Table::new(
        TableName::CorrectBlockProbability,
        &["threshold", "variant", "probability"],
    );
    for (th, label, from, n) in cells {
        let ps = runs[from..from + n]
            .iter()
            .map(correct_block_probability)
            .collect::<Result<Vec<f64>, _>>()
            .context("block correctness")?;
        t.push(vec![num(th), label.into(), num(mean(&ps))]);
    }
    Ok(t)
}

pub fn ledger_dump(run: &SimulationReport) -> Table {
    let mut t = Table::new(
        TableName::LedgerDump,
        &["rater", "ratee", "belief", "disbelief", "uncertainty", "round"],
    );
    for r in run.ledger.records() {
        t.push(vec![
            r.rater.0.to_string(),
            r.ratee.0.to_string(),
            num(r.opinion.belief()),
            num(r.opinion.disbelief()),
            num(r.opinion.uncertainty()),
            r.round.to_string(),
        ]);
    }
    t
}

pub fn event_dump(run: &SimulationReport) -> Table {
    let mut t = Table::new(
        TableName::EventDump,
        &["timestamp", "vehicle", "rsu", "outcome", "link_quality"],
    );
    for e in &run.events {
        let outcome = match e.outcome {
            rdpos_core::Outcome::Positive => "positive",
            rdpos_core::Outcome::Negative => "negative",
        };
        t.push(vec![
            e.timestamp.to_string(),
            e.vehicle.0.to_string(),
            e.rsu.0.to_string(),
            outcome.into(),
            num(e.link_quality),
        ]);
    }
    t
}

fn solve(sweep: &ContractSweep, q: usize) -> Result<(VerifierTypeProfile, ContractMenu)> {
    let profile = VerifierTypeProfile::uniform(q, sweep.theta_step)?;
    let menu = solve_with(&profile, &sweep.params_for(q), sweep.budget_method)
        .with_context(|| format!("solving the contract for {q} types"))?;
    Ok((profile, menu))
}

pub fn contract_menu(sweep: &ContractSweep) -> Result<Table> {
    let (profile, menu) = solve(sweep, sweep.types)?;
    let params = sweep.params_for(sweep.types);
    let mut t = Table::new(
        TableName::ContractMenu,
        &["q", "theta", "prior", "reward", "inv_latency", "utility", "profit"],
    );
    for (q, item) in menu.items.iter().enumerate() {
        let (theta, p) = (profile.types()[q], profile.priors()[q]);
        let phi = security_latency_metric(theta, p, params.verifier_count, item.latency(), &params);
        let profit = params.verifier_count
            * p
            * (params.gain * phi - params.reward_weight * item.reward);
        t.push(vec![
            (q + 1).to_string(),
            num(theta),
            num(p),
            num(item.reward),
            num(item.inv_latency),
            num(verifier_utility(theta, item, params.unit_cost)),
            num(profit),
        ]);
    }
    Ok(t)
}

pub fn verifier_utilities(sweep: &ContractSweep) -> Result<Table> {
    let (profile, menu) = solve(sweep, sweep.types)?;
    let u = utility_matrix(&menu, &profile, sweep.params.unit_cost);
    let mut t = Table::new(
        TableName::VerifierUtilities,
        &["chooser_type", "item_type", "utility"],
    );
    for (i, row) in u.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            t.push(vec![(i + 1).to_string(), (j + 1).to_string(), num(x)]);
        }
    }
    Ok(t)
}

pub fn profit_vs_types(sweep: &ContractSweep) -> Result<Table> {
    let mut t = Table::new(TableName::ProfitVsTypes, &["Q", "model", "profit"]);
    for &q in &sweep.type_counts {
        let (profile, menu) = solve(sweep, q)?;
        let params = sweep.params_for(q);
        let sym = stackelberg_symmetric(&profile, &params)?;
        t.push(vec![
            q.to_string(),
            "contract".into(),
            num(manager_profit(&menu, &profile, &params)?),
        ]);
        t.push(vec![
            q.to_string(),
            "stackelberg_sym".into(),
            num(manager_profit(&sym, &profile, &params)?),
        ]);
    }
    Ok(t)
}
