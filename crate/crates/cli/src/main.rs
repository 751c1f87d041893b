//! `opo-qtraj <command> --config run.toml [--out DIR] [--seed N] [--no-timestamp]`
//!
//! Writes `<command>.json` and, where a command produces time series,
//! `<command>_<series>.csv` into the output directory. Failures print
//! `{"error": {"category": ..., "message": ...}}` on stderr and exit nonzero.

mod commands;
mod config;
mod error;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use commands::{Command, Series};
use config::{load_config, Format, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "opo-qtraj", version, about = "Quantum trajectories of atoms in a weakly driven OPO cavity")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Omit the timestamp so identical runs give identical bytes.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    artifact: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    input: &'a RunConfig,
    warnings: Vec<String>,
    results: Value,
    outputs: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write_csv(path: &Path, series: &Series) -> Result<(), CliError> {
    let mut text = String::from("time");
    for c in &series.columns {
        text.push(',');
        text.push_str(c);
    }
    text.push('\n');
    for row in &series.rows {
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            write!(text, "{x:.16e}").expect("writing to a String");
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut config = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.sim.seed = Some(seed);
    }
    let dir = match &cli.out {
        Some(d) => d.clone(),
        None => PathBuf::from(config.output.directory.as_deref().unwrap_or(".")),
    };
    let outcome = commands::run(cli.command, &config)?;
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let name = cli.command.name();
    let mut written = Vec::new();
    let mut outputs = Vec::new();
    if config.formats().contains(&Format::Csv) {
        for s in &outcome.series {
            let file = format!("{name}_{}.csv", s.name);
            let path = dir.join(&file);
            write_csv(&path, s)?;
            outputs.push(file);
            written.push(path);
        }
    }
    if config.formats().contains(&Format::Json) {
        let timestamp = (!cli.no_timestamp)
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        let report = Report {
            artifact: "opo-qtraj",
            version: env!("CARGO_PKG_VERSION"),
            command: name,
            seed: config.seed(),
            timestamp,
            input: &config,
            warnings: outcome.warnings,
            results: outcome.results,
            outputs,
        };
        let path = dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn main() {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
