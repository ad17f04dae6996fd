//! `diskwalk`: command-line driver for the walk experiments.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use output::{render_csv, render_json, summary_json, write_atomic, Format};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] diskwalk::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => e.exit_code() as u8,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "diskwalk", version = output::VERSION, about = "Disk-step random walks and the first-order correction to discrete harmonic measure")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Master seed of all random streams.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Omit run-dependent header fields (timestamp, thread count).
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Also write the JSON summary to this file.
    #[arg(long, global = true)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// The constant K by angular quadrature of Monte Carlo overshoot means.
    KConstant(commands::KConstantArgs),
    /// Mean overshoot u(y) along increasing start heights.
    KLimit(commands::KLimitArgs),
    /// Potential kernel a(x) and its logarithmic residual.
    Potential(commands::PotentialArgs),
    /// Boundary density rho and sigma_D on the circle.
    Density(commands::DensityArgs),
    /// Correction-slope sweep over step radii.
    Sweep(commands::SweepArgs),
    /// Occupation-density Green's function against 8 G_D.
    Greens(commands::GreensArgs),
    /// Boundary-layer discrete Laplacian against its closed form.
    Blayer(commands::BlayerArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.common;
    let threads = common.threads.map(|t| t.max(1));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build()?;
    let report = pool.install(|| match cli.command {
        Command::KConstant(a) => commands::k_constant(&common, &a),
        Command::KLimit(a) => commands::k_limit(&common, &a),
        Command::Potential(a) => commands::potential(&common, &a),
        Command::Density(a) => commands::density(&common, &a),
        Command::Sweep(a) => commands::sweep(&common, &a),
        Command::Greens(a) => commands::greens(&common, &a),
        Command::Blayer(a) => commands::blayer(&common, &a),
    })?;
    let bytes = match common.format {
        Format::Csv => render_csv(&report, common.deterministic)?,
        Format::Json => render_json(&report, common.deterministic)?,
    };
    match &common.out {
        Some(path) => write_atomic(path, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    if let Some(path) = &common.summary {
        let mut text = serde_json::to_vec_pretty(&summary_json(&report, common.deterministic))?;
        text.push(b'\n');
        write_atomic(path, &text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("diskwalk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
