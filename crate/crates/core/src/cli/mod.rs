//! Configuration, analysis drivers and the `satrelay` command line.

pub mod config;
pub mod output;
pub mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{OutputFormat, RunConfig, SweepAxis, SweepSpec};
pub use run::{
    analyze, simulate, sweep, validate, AnalysisReport, LaserBranch, SimulationReport, SweepTable,
    ValidateOptions, ValidationReport,
};

use crate::error::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "satrelay",
    version,
    about = "Buffered hybrid RF/laser LEO relay performance"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration; the built-in reference configuration when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub slots: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-weather and combined metrics at the configured operating point.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Metrics over a grid of alpha, buffer_packets or tx_power (dBm).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Option<SweepAxis>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Monte Carlo simulation of the laser branches next to the closed form.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Branches to simulate (default: all).
        #[arg(long, value_enum)]
        branch: Vec<LaserBranch>,
        /// Per-epoch trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Cross-checks closed forms against the linear solve, simulator and replay.
    Validate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Number of consecutive seeds to simulate.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Perturb P(0) by 1e-6 to exercise the failure path.
        #[arg(long)]
        perturb: bool,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::from_path(p),
        None => Ok(RunConfig::default_config()),
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn apply_sim(cfg: &mut RunConfig, sim: &SimArgs) -> Result<()> {
    if let Some(s) = sim.seed {
        cfg.seed = s;
    }
    if let Some(n) = sim.slots {
        if n == 0 {
            return Err(Error::Config {
                path: "--slots".into(),
                reason: "must be >= 1".into(),
            });
        }
        cfg.slots = n;
    }
    Ok(())
}

/// Runs one command and returns the process exit code.
pub fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze { common } => {
            let cfg = load(&common)?;
            let report = analyze(&cfg)?;
            let mut out = sink(&common.output)?;
            output::write_analysis(&mut out, &report, common.format.unwrap_or(cfg.format))?;
            out.flush()?;
        }
        Command::Sweep {
            common,
            axis,
            from,
            to,
            step,
        } => {
            let cfg = load(&common)?;
            let base = cfg.sweep.unwrap_or(SweepSpec {
                axis: SweepAxis::Alpha,
                from: 0.5,
                to: 10.0,
                step: 0.5,
            });
            let spec = SweepSpec {
                axis: axis.unwrap_or(base.axis),
                from: from.unwrap_or(base.from),
                to: to.unwrap_or(base.to),
                step: step.unwrap_or(base.step),
            };
            let table = sweep(&cfg, &spec)?;
            let mut out = sink(&common.output)?;
            output::write_sweep(&mut out, &table, common.format.unwrap_or(cfg.format))?;
            out.flush()?;
        }
        Command::Simulate {
            common,
            sim,
            branch,
            trace,
        } => {
            let mut cfg = load(&common)?;
            apply_sim(&mut cfg, &sim)?;
            let branches = if branch.is_empty() {
                LaserBranch::ALL.to_vec()
            } else {
                branch
            };
            let report = match trace {
                Some(path) => {
                    let mut tw = output::TraceWriter::new(BufWriter::new(File::create(path)?))?;
                    let r = simulate(&cfg, &branches, |b, rec| tw.record(b.name(), rec))?;
                    tw.finish()?;
                    r
                }
                None => simulate(&cfg, &branches, |_, _| Ok(()))?,
            };
            let mut out = sink(&common.output)?;
            output::write_simulation(&mut out, &report, common.format.unwrap_or(cfg.format))?;
            out.flush()?;
        }
        Command::Validate {
            common,
            sim,
            seeds,
            perturb,
        } => {
            let mut cfg = load(&common)?;
            apply_sim(&mut cfg, &sim)?;
            let report = validate(&cfg, &ValidateOptions { seeds, perturb })?;
            output::print_validation(io::stdout().lock(), &report)?;
            if let Some(path) = &common.output {
                let mut out = BufWriter::new(File::create(path)?);
                output::write_validation(&mut out, &report, common.format.unwrap_or(cfg.format))?;
                out.flush()?;
            }
            if !report.passed() {
                return Ok(EXIT_VALIDATION);
            }
        }
    }
    Ok(EXIT_OK)
}
