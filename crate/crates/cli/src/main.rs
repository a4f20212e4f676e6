use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "dpnct", version, about = "Private smart-meter aggregation simulator and attack harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic household trace CSV.
    GenData {
        #[arg(long)]
        meters: usize,
        #[arg(long)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulation and write load, bill, attack and metric reports.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Skip writing the transcript directory used by the attack commands.
        #[arg(long)]
        no_transcript: bool,
    },
    /// Moving-average filtering attack with a best-fit window search.
    AttackFiltering {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long, default_value_t = 1)]
        p_min: usize,
        #[arg(long, default_value_t = 100)]
        p_max: usize,
        /// Comma-separated meter ids (default: all).
        #[arg(long, value_delimiter = ',')]
        meters: Vec<usize>,
        /// Clamp negative readings before filtering.
        #[arg(long)]
        clamp: bool,
        /// Write attacks.csv rows here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collusion attack by malicious master meters.
    AttackCollusion {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        malicious_count: usize,
        /// Re-run the recorded scenario for each master count in this range, e.g. `1..6`.
        #[arg(long)]
        sweep_masters: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vary one config parameter and emit a metric curve as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        vary: String,
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Trace CSV; a synthetic trace is generated from the config seed when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize metrics.json from a simulate output directory.
    Report {
        #[arg(long)]
        in_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData { meters, days, seed, out } => commands::gen_data(meters, days, seed, &out),
        Command::Simulate { config, trace, out_dir, no_transcript } => {
            commands::simulate(&config, &trace, &out_dir, !no_transcript)
        }
        Command::AttackFiltering { transcript, p_min, p_max, meters, clamp, out } => {
            if p_min > p_max {
                bail!("--p-min ({p_min}) exceeds --p-max ({p_max})");
            }
            commands::attack_filtering(&transcript, p_min..=p_max, &meters, clamp, out.as_deref())
        }
        Command::AttackCollusion { transcript, malicious_count, sweep_masters, out } => {
            let sweep = sweep_masters.as_deref().map(parse_range).transpose()?;
            commands::attack_collusion(&transcript, malicious_count, sweep, out.as_deref())
        }
        Command::Sweep { config, vary, values, trace, out } => {
            if values.is_empty() {
                bail!("--values needs at least one value");
            }
            commands::sweep(&config, &vary, &values, trace.as_deref(), out.as_deref())
        }
        Command::Report { in_dir } => commands::report(&in_dir),
    }
}

/// Parses `a..b` (inclusive), `a..=b` or a comma list.
fn parse_range(s: &str) -> Result<Vec<usize>> {
    let parse = |v: &str| v.trim().parse::<usize>().with_context(|| format!("invalid --sweep-masters value `{v}`"));
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (parse(a)?, parse(b)?);
        if a == 0 || a > b {
            bail!("invalid --sweep-masters range `{s}`");
        }
        Ok((a..=b).collect())
    } else {
        s.split(',').map(parse).collect()
    }
}

pub(crate) fn ensure_exists(path: &Path, flag: &str) -> Result<()> {
    if !path.exists() {
        bail!("{flag}: {} does not exist", path.display());
    }
    Ok(())
}
