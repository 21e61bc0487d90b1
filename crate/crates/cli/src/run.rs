//! Running specs and writing their outputs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::spec::{ExperimentSpec, Overrides, TableName};
use crate::tables::{self, Table};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableEntry {
    pub name: TableName,
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    pub versions: Versions,
    pub tables: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Versions {
    pub rdpos: &'static str,
    pub rdpos_core: &'static str,
}

pub const VERSIONS: Versions = Versions {
    rdpos: env!("CARGO_PKG_VERSION"),
    rdpos_core: rdpos_core::VERSION,
};

/// Rendered outputs of one experiment, ready to be written.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub manifest: Manifest,
    /// (file name, contents), tables first, manifest last.
    pub files: Vec<(String, String)>,
}

/// Computes every requested table of a validated, effective spec.
pub fn build_tables(spec: &ExperimentSpec) -> Result<Vec<Table>> {
    let wanted: BTreeSet<TableName> = spec.outputs.iter().copied().collect();
    let mut out = Vec::new();
    if let Some(base) = &spec.scenario {
        let a = &spec.analysis;
        let needs_runs = wanted.iter().any(|t| {
            t.needs_scenario() && *t != TableName::CorrectBlockProbability
        });
        let runs = if needs_runs {
            info!("{}: {} simulation run(s)", spec.name, a.replicates);
            tables::run_all(&tables::replicate_configs(base, a.replicates))?
        } else {
            Vec::new()
        };
        for &t in &wanted {
            let table = match t {
                TableName::ReputationTimeseries => tables::reputation_timeseries(&runs),
                TableName::DetectionRate => tables::detection_rates(&runs, a)?,
                TableName::CorrectBlockProbability => {
                    info!(
                        "{}: block correctness over {} threshold(s)",
                        spec.name,
                        a.thresholds.len()
                    );
                    tables::block_probabilities(base, a)?
                }
                TableName::LedgerDump => tables::ledger_dump(&runs[0]),
                TableName::EventDump => tables::event_dump(&runs[0]),
                _ => continue,
            };
            out.push(table);
        }
    }
    if let Some(sweep) = &spec.contract {
        for &t in &wanted {
            let table = match t {
                TableName::ContractMenu => tables::contract_menu(sweep)?,
                TableName::VerifierUtilities => tables::verifier_utilities(sweep)?,
                TableName::ProfitVsTypes => tables::profit_vs_types(sweep)?,
                _ => continue,
            };
            out.push(table);
        }
    }
    out.sort_by_key(|t| t.name);
    Ok(out)
}

fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Validates `spec` and renders all of its outputs in memory.
pub fn execute(spec: &ExperimentSpec) -> Result<Outputs> {
    spec.validate()
        .with_context(|| format!("invalid spec {:?}", spec.name))?;
    let hash = spec.config_hash();
    let tables = build_tables(spec)?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for t in &tables {
        let text = t.render(&hash)?;
        entries.push(TableEntry {
            name: t.name,
            file: t.name.file_name(),
            rows: t.rows.len(),
            sha256: sha256_hex(text.as_bytes()),
        });
        files.push((t.name.file_name(), text));
    }
    let manifest = Manifest {
        name: spec.name.clone(),
        seed: spec.seed,
        config_hash: hash,
        versions: VERSIONS,
        tables: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    files.push((MANIFEST_FILE.to_string(), json));
    Ok(Outputs { manifest, files })
}

/// Writes `outputs` into `dir` through a staging directory so that a failure
/// leaves no partial file behind.
pub fn write_outputs(outputs: &Outputs, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let staging = tempfile::Builder::new()
        .prefix(".rdpos-staging-")
        .tempdir_in(dir)
        .with_context(|| format!("creating a staging directory in {}", dir.display()))?;
    for (name, text) in &outputs.files {
        fs::write(staging.path().join(name), text)
            .with_context(|| format!("writing {name}"))?;
    }
    for (name, _) in &outputs.files {
        fs::rename(staging.path().join(name), dir.join(name))
            .with_context(|| format!("moving {name} into {}", dir.display()))?;
    }
    Ok(())
}

/// Loads, overrides, runs and writes one spec file.
pub fn run_file(path: &Path, overrides: &Overrides, out: &Path) -> Result<Manifest> {
    let spec = ExperimentSpec::load(path)?.effective(overrides);
    let outputs = execute(&spec)?;
    write_outputs(&outputs, out)?;
    Ok(outputs.manifest)
}

/// Spec files (`*.toml`) of a directory, sorted by path.
pub fn spec_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "toml") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("no .toml specs in {}", dir.display());
    }
    Ok(files)
}

/// Result of one spec in a sweep.
#[derive(Debug)]
pub struct SweepItem {
    pub path: PathBuf,
    pub result: Result<Manifest>,
}

/// Runs every spec of `dir` in parallel, each into `out/<name>`. Specs are
/// all parsed first; a parse failure or duplicate name aborts the sweep
/// before anything runs.
pub fn sweep_dir(dir: &Path, overrides: &Overrides, out: &Path) -> Result<Vec<SweepItem>> {
    let specs = spec_files(dir)?
        .into_iter()
        .map(|p| {
            let spec = ExperimentSpec::load(&p)?.effective(overrides);
            spec.validate()
                .with_context(|| format!("invalid spec {}", p.display()))?;
            Ok((p, spec))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut names = BTreeSet::new();
    for (p, s) in &specs {
        if !names.insert(s.name.clone()) {
            bail!("duplicate experiment name {:?} in {}", s.name, p.display());
        }
    }
    Ok(specs
        .into_par_iter()
        .map(|(path, spec)| {
            let result = execute(&spec).and_then(|o| {
                write_outputs(&o, &out.join(&spec.name))?;
                Ok(o.manifest)
            });
            SweepItem { path, result }
        })
        .collect())
}
