//! `orbitcox`: sample constellations, tabulate closed-form statistics and
//! run Monte Carlo checks from a TOML config.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "orbitcox", version, about = "Cox point process model of LEO constellations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides output.path; `-` writes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides output.format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one snapshot and list its satellites.
    Sample(Common),
    /// Tabulate run.quantity from the closed forms.
    Analytic(Common),
    /// Estimate run.quantity by Monte Carlo.
    Mc(Common),
    /// Join two evaluations of run.quantity and report their deviation.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Config for the right-hand side; defaults to --config.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Coverage of Cox models at fixed lambda * mu, with envelope.
    Sweep(Common),
}

fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.run.trials = trials;
    }
    if let Some(out) = &common.out {
        cfg.output.path = (out.as_os_str() != "-").then(|| out.clone());
    }
    if let Some(format) = common.format {
        cfg.output.format = format;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, against) = match &cli.command {
        Command::Sample(c) | Command::Analytic(c) | Command::Mc(c) | Command::Sweep(c) => (c, None),
        Command::Compare { common, against } => (common, against.as_ref()),
    };
    let cfg = resolve(common)?;
    let table = match &cli.command {
        Command::Sample(_) => commands::sample(&cfg)?,
        Command::Analytic(_) => commands::analytic(&cfg)?,
        Command::Mc(_) => commands::mc(&cfg)?,
        Command::Sweep(_) => commands::sweep(&cfg)?,
        Command::Compare { .. } => {
            let right = against.map(|p| RunConfig::load(p)).transpose()?;
            commands::compare(&cfg, right.as_ref())?
        }
    };
    let text = output::render(&table, cfg.output.format);
    match &cfg.output.path {
        Some(path) => output::write_atomic(path, &text)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))?;
        }
    }
    let failed = commands::failed_rows(&table);
    if failed > 0 {
        return Err(CliError::Numerical(format!(
            "{failed} row(s) did not converge; they are marked in the output"
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("orbitcox: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
