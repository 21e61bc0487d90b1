use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use rdpos_cli::{parse_table_list, run_file, sweep_dir, validation_report, ExperimentSpec, Overrides, TableName};

#[derive(Parser)]
#[command(name = "rdpos", version, about = "Reputation-enhanced DPoS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Master seed, replacing the spec's.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated tables, replacing the spec's outputs.
    #[arg(long, value_parser = parse_tables)]
    tables: Option<TableList>,
}

/// One `--tables` value; a bare `Vec` would make clap expect repeated flags.
#[derive(Clone)]
struct TableList(Vec<TableName>);

fn parse_tables(s: &str) -> Result<TableList, String> {
    parse_table_list(s).map(TableList).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Run one spec and write its tables.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check a spec and print its effective parameters.
    Validate { spec: PathBuf },
    /// Run every spec of a directory, each into its own output directory.
    Sweep {
        spec_dir: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { spec, flags } => {
            let overrides = Overrides::from_env(flags.seed, flags.tables.map(|t| t.0));
            let name = ExperimentSpec::load(&spec)?.name;
            let out = flags.out.unwrap_or_else(|| PathBuf::from("results").join(&name));
            let m = run_file(&spec, &overrides, &out)?;
            for t in &m.tables {
                println!("{}\t{} rows\t{}", out.join(&t.file).display(), t.rows, t.sha256);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { spec } => {
            let s = ExperimentSpec::load(&spec)?.effective(&Overrides::from_env(None, None));
            let (ok, report) = validation_report(&s);
            print!("{report}");
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sweep { spec_dir, flags } => {
            let overrides = Overrides::from_env(flags.seed, flags.tables.map(|t| t.0));
            let out = flags.out.unwrap_or_else(|| PathBuf::from("results"));
            let items = sweep_dir(&spec_dir, &overrides, &out)?;
            let mut failed = 0;
            for item in &items {
                match &item.result {
                    Ok(m) => println!("{}\tok\t{} table(s)\t{}", item.path.display(), m.tables.len(), m.config_hash),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}\tfailed\t{e:#}", item.path.display());
                    }
                }
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
