//! Experiment runner: loads TOML experiment specs, runs simulations and
//! contract solves, and writes comma-separated tables plus a manifest.

pub mod run;
pub mod spec;
pub mod tables;

pub use run::{execute, run_file, sweep_dir, write_outputs, Manifest, Outputs};
pub use spec::{parse_table_list, ExperimentSpec, Overrides, TableName, TRACE_DIR_ENV};

use std::fmt::Write as _;

/// Human-readable validation report of an effective spec: the verdict, the
/// contract coefficients in force and the full parameter set with defaults.
pub fn validation_report(spec: &ExperimentSpec) -> (bool, String) {
    let mut out = String::new();
    let ok = match spec.validate() {
        Ok(()) => {
            writeln!(out, "spec {}: ok", spec.name).unwrap();
            true
        }
        Err(e) => {
            writeln!(out, "spec {}: invalid: {e:#}", spec.name).unwrap();
            false
        }
    };
    writeln!(out, "config_hash={}", spec.config_hash()).unwrap();
    let (c, task) = spec.contract_params();
    writeln!(
        out,
        "contract: g1={} e1={} e2={} z1={} z2={} l={} l'={} T_max={} R_max={} psi={}",
        c.gain,
        c.scale_coeff,
        c.latency_coeff,
        c.scale_exp,
        c.latency_exp,
        c.reward_weight,
        c.unit_cost,
        c.max_latency,
        c.budget,
        task.broadcast_coeff
    )
    .unwrap();
    match spec.to_toml() {
        Ok(t) => write!(out, "# effective parameters\n{t}").unwrap(),
        Err(e) => writeln!(out, "# effective parameters unavailable: {e}").unwrap(),
    }
    (ok, out)
}
