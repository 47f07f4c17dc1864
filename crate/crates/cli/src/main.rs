use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kisin_cli::config::{ExperimentConfig, Generator, Mode};
use kisin_cli::records::EXIT_CONFIG;
use kisin_cli::{execute, write_stream, CliError};

#[derive(Parser)]
#[command(name = "kisin", version, about = "Enumerate and check finite-height models of etale phi-modules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate all models of each instance and check the torsion bound.
    Enumerate(Opts),
    /// Build model towers and run the compatibility/limit checks.
    Tower(Opts),
    /// Compare the closure search with brute force on small quotients.
    OracleCheck(Opts),
    /// Run the fixed acceptance battery.
    Suite(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    f: Option<u32>,
    #[arg(long)]
    g: Option<u32>,
    #[arg(long)]
    e: Option<u32>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: Option<u64>,
    /// Use random modules instead of planted ones.
    #[arg(long)]
    random: bool,
    /// Write the record stream here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(mode: Mode, o: &Opts) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.mode = mode;
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = o.$field { cfg.$field = v; })* };
    }
    set!(p, f, g, e, d, n, depth, seed, count);
    if o.f.is_some() && o.g.is_none() && cfg.g < cfg.f {
        cfg.g = cfg.f;
    }
    if o.random {
        cfg.generator = Generator::Random;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, opts) = match &cli.command {
        Command::Enumerate(o) => (Mode::Enumerate, o),
        Command::Tower(o) => (Mode::Tower, o),
        Command::OracleCheck(o) => (Mode::OracleCheck, o),
        Command::Suite(o) => (Mode::Suite, o),
    };
    let result = load(mode, opts).and_then(|cfg| execute(&cfg));
    let (records, summary) = match result {
        Ok(x) => x,
        Err(e) => {
            eprintln!("kisin: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let written = match &opts.out {
        Some(path) => fs::File::create(path).and_then(|f| write_stream(&mut io::BufWriter::new(f), &records, &summary)),
        None => write_stream(&mut io::stdout().lock(), &records, &summary),
    };
    if let Err(e) = written {
        let _ = writeln!(io::stderr(), "kisin: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(summary.exit_code as u8)
}
