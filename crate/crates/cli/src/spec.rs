//! Experiment specs: what to simulate or solve, and which tables to emit.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use rdpos_core::contract::{BudgetMethod, ContractParams, VerificationTask};
use rdpos_core::ScenarioConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable that overrides the scenario's trace directory.
pub const TRACE_DIR_ENV: &str = "RDPOS_TRACE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableName {
    ReputationTimeseries,
    DetectionRate,
    CorrectBlockProbability,
    VerifierUtilities,
    ProfitVsTypes,
    ContractMenu,
    LedgerDump,
    EventDump,
}

impl TableName {
    pub const ALL: [TableName; 8] = [
        TableName::ReputationTimeseries,
        TableName::DetectionRate,
        TableName::CorrectBlockProbability,
        TableName::VerifierUtilities,
        TableName::ProfitVsTypes,
        TableName::ContractMenu,
        TableName::LedgerDump,
        TableName::EventDump,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TableName::ReputationTimeseries => "reputation_timeseries",
            TableName::DetectionRate => "detection_rate",
            TableName::CorrectBlockProbability => "correct_block_probability",
            TableName::VerifierUtilities => "verifier_utilities",
            TableName::ProfitVsTypes => "profit_vs_types",
            TableName::ContractMenu => "contract_menu",
            TableName::LedgerDump => "ledger_dump",
            TableName::EventDump => "event_dump",
        }
    }

    /// Tables computed from simulation runs rather than contract solves.
    pub fn needs_scenario(self) -> bool {
        matches!(
            self,
            TableName::ReputationTimeseries
                | TableName::DetectionRate
                | TableName::CorrectBlockProbability
                | TableName::LedgerDump
                | TableName::EventDump
        )
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.as_str())
    }
}

impl fmt::Display for TableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TableName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        TableName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .with_context(|| {
                let known: Vec<&str> = TableName::ALL.iter().map(|t| t.as_str()).collect();
                format!("unknown table {s:?}; known tables: {}", known.join(", "))
            })
    }
}

/// Post-processing of simulation runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// Independent runs with seeds `seed, seed+1, …`; tables average over them.
    pub replicates: u64,
    /// Reputation thresholds for the detection and block-correctness tables.
    pub thresholds: Vec<f64>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            replicates: 1,
            thresholds: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

/// Contract solves over a uniform type ladder `θ_q = q·theta_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractSweep {
    pub params: ContractParams,
    /// Type count of the menu and utility tables.
    pub types: usize,
    /// Type counts of the profit sweep.
    pub type_counts: Vec<usize>,
    pub theta_step: f64,
    /// When set, the verifier population is `types · verifiers_per_type`,
    /// overriding `params.verifier_count`.
    pub verifiers_per_type: Option<f64>,
    pub budget_method: BudgetMethod,
    pub task: VerificationTask,
}

impl Default for ContractSweep {
    fn default() -> Self {
        Self {
            params: ContractParams::default(),
            types: 10,
            type_counts: vec![2, 4, 6, 8, 10],
            theta_step: 1.0,
            verifiers_per_type: Some(1.0),
            budget_method: BudgetMethod::default(),
            task: VerificationTask::default(),
        }
    }
}

impl ContractSweep {
    /// Contract parameters for a ladder of `q` types.
    pub fn params_for(&self, q: usize) -> ContractParams {
        match self.verifiers_per_type {
            Some(n) => ContractParams {
                verifier_count: n * q as f64,
                ..self.params
            },
            None => self.params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Master seed; replaces the scenario's own seed.
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub outputs: Vec<TableName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract: Option<ContractSweep>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

fn default_seed() -> u64 {
    1
}

/// Command-line overrides applied on top of a spec file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tables: Option<Vec<TableName>>,
    pub trace_dir: Option<PathBuf>,
}

impl Overrides {
    /// `--seed`/`--tables` values plus the trace directory from the environment.
    pub fn from_env(seed: Option<u64>, tables: Option<Vec<TableName>>) -> Self {
        Self {
            seed,
            tables,
            trace_dir: std::env::var_os(TRACE_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from),
        }
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// The spec that actually runs: overrides applied and the master seed
    /// pushed into the scenario.
    pub fn effective(mut self, o: &Overrides) -> Self {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(tables) = &o.tables {
            self.outputs = tables.clone();
        }
        if let Some(s) = &mut self.scenario {
            s.seed = self.seed;
            if let Some(dir) = &o.trace_dir {
                s.mobility.trace_dir = Some(dir.clone());
            }
        }
        self
    }

    /// Checks every invariant of the embedded configs without running.
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.name.trim().is_empty(), "name must not be empty");
        ensure!(
            self.name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)),
            "name {:?} must use only letters, digits, '-', '_' and '.'",
            self.name
        );
        ensure!(!self.outputs.is_empty(), "no output tables requested");
        match (&self.scenario, &self.contract) {
            (Some(_), Some(_)) => bail!("a spec holds either [scenario] or [contract], not both"),
            (None, None) => bail!("a spec needs a [scenario] or a [contract] table"),
            _ => {}
        }
        for t in &self.outputs {
            if t.needs_scenario() {
                ensure!(self.scenario.is_some(), "table {t} needs a [scenario]");
            } else {
                ensure!(self.contract.is_some(), "table {t} needs a [contract] sweep");
            }
        }
        if let Some(s) = &self.scenario {
            s.validate().context("scenario")?;
            let a = &self.analysis;
            ensure!(a.replicates >= 1, "analysis.replicates must be at least 1");
            ensure!(
                a.thresholds.iter().all(|t| (0.0..=1.0).contains(t)),
                "analysis.thresholds must lie in [0, 1]"
            );
            let needs_thresholds = self.outputs.iter().any(|t| {
                matches!(t, TableName::DetectionRate | TableName::CorrectBlockProbability)
            });
            ensure!(
                !needs_thresholds || !a.thresholds.is_empty(),
                "analysis.thresholds must not be empty"
            );
        }
        if let Some(c) = &self.contract {
            c.params.validate().context("contract.params")?;
            ensure!(c.types >= 1, "contract.types must be at least 1");
            ensure!(
                c.type_counts.iter().all(|&q| q >= 1),
                "contract.type_counts must be positive"
            );
            ensure!(
                c.theta_step.is_finite() && c.theta_step > 0.0,
                "contract.theta_step must be positive"
            );
            if let Some(n) = c.verifiers_per_type {
                ensure!(n.is_finite() && n > 0.0, "contract.verifiers_per_type must be positive");
            }
            let t = &c.task;
            ensure!(
                [t.cpu_cycles, t.input_size, t.output_size, t.broadcast_coeff]
                    .iter()
                    .all(|x| x.is_finite() && *x > 0.0),
                "contract.task fields must be positive"
            );
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the spec.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Contract parameters shown by `validate`: the sweep's, or the ones the
    /// scenario uses to recruit standby verifiers.
    pub fn contract_params(&self) -> (ContractParams, VerificationTask) {
        match (&self.contract, &self.scenario) {
            (Some(c), _) => (c.params, c.task),
            (None, Some(s)) => (s.verification.contract, VerificationTask::default()),
            (None, None) => (ContractParams::default(), VerificationTask::default()),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

/// Parses a comma-separated table list.
pub fn parse_table_list(s: &str) -> Result<Vec<TableName>> {
    let tables = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(TableName::from_str)
        .collect::<Result<Vec<_>>>()?;
    ensure!(!tables.is_empty(), "empty table list");
    Ok(tables)
}
