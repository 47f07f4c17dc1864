//! Batch driver: builds instances from a config, runs one mode, emits JSON lines.

pub mod config;
pub mod records;
pub mod run;
pub mod suite;

use std::io::Write;

use config::{ExperimentConfig, Mode};
use records::{summarize, Record, SummaryRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] kisin_models::Error),
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Enumerate => "enumerate",
        Mode::Tower => "tower",
        Mode::OracleCheck => "oracle-check",
        Mode::Suite => "suite",
    }
}

/// Validate, run, and append the summary record.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Vec<Record>, SummaryRecord), CliError> {
    cfg.validate()?;
    let records = match cfg.mode {
        Mode::Enumerate => run::run_enumerate(cfg),
        Mode::Tower => run::run_tower(cfg),
        Mode::OracleCheck => run::run_oracle_check(cfg),
        Mode::Suite => suite::run_suite(cfg.seed),
    };
    let summary = summarize(mode_name(cfg.mode), &records);
    Ok((records, summary))
}

pub fn write_stream<W: Write>(out: &mut W, records: &[Record], summary: &SummaryRecord) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_line())?;
    }
    writeln!(out, "{}", Record::Summary(summary.clone()).to_line())?;
    out.flush()
}
