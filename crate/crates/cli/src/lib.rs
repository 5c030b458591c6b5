//! Command-line front end for the compact pairwise SIS engine.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{CommonArgs, DegreeEntry, IntegrationArgs, Overrides, RunConfig};
pub use error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "cpsis",
    version,
    about = "Compact pairwise SIS epidemics on degree-heterogeneous networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degree moments, epidemic threshold and certificate assumptions as JSON.
    Moments {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Integrate the full system; CSV trajectory plus JSON summary.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        integration: IntegrationArgs,
        /// Summary file; defaults to stdout when the CSV goes to --out,
        /// stderr otherwise.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Endemic equilibrium and its stability as JSON.
    Equilibrium {
        #[command(flatten)]
        common: CommonArgs,
        /// Below threshold, report the unphysical continuation of the branch.
        #[arg(long)]
        allow_virtual: bool,
    },
    /// Bifurcation table over a τ grid as CSV.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        tau_min: Option<f64>,
        #[arg(long)]
        tau_max: Option<f64>,
        /// Number of grid intervals.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        allow_virtual: bool,
    },
    /// Global stability certificate of the disease-free state as JSON.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        /// Target level for the iterated bound.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        max_iter: Option<u64>,
        /// Cross-check every certified bound along a simulated trajectory.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        integration: IntegrationArgs,
    },
}

impl Command {
    pub fn overrides(&self) -> Overrides {
        match self {
            Command::Moments { common } => Overrides {
                common: common.clone(),
                ..Default::default()
            },
            Command::Simulate {
                common, integration, ..
            } => Overrides {
                common: common.clone(),
                integration: integration.clone(),
                ..Default::default()
            },
            Command::Equilibrium { common, allow_virtual } => Overrides {
                common: common.clone(),
                allow_virtual: *allow_virtual,
                ..Default::default()
            },
            Command::Sweep {
                common,
                tau_min,
                tau_max,
                steps,
                allow_virtual,
            } => Overrides {
                common: common.clone(),
                tau_min: *tau_min,
                tau_max: *tau_max,
                steps: *steps,
                allow_virtual: *allow_virtual,
                ..Default::default()
            },
            Command::Certify {
                common,
                eps,
                max_iter,
                verify,
                integration,
            } => Overrides {
                common: common.clone(),
                integration: integration.clone(),
                eps: *eps,
                max_iter: *max_iter,
                verify: *verify,
                ..Default::default()
            },
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Moments { common }
            | Command::Simulate { common, .. }
            | Command::Equilibrium { common, .. }
            | Command::Sweep { common, .. }
            | Command::Certify { common, .. } => common,
        }
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path.display().to_string(), e))
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Resolves the config, writes `--emit-config` if asked, and runs the verb.
pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = cli.command.overrides().resolve()?;
    let common = cli.command.common();
    if let Some(path) = &common.emit_config {
        std::fs::write(path, cfg.to_toml()?).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    let out = common.out.as_deref();
    match &cli.command {
        Command::Moments { .. } => output::write_json(sink(out)?, &commands::moments(&cfg)?),
        Command::Simulate { summary, .. } => {
            let sim = commands::simulate(&cfg)?;
            output::write_trajectory_csv(sink(out)?, &sim.trajectory, sim.model.dist())?;
            match (summary, out) {
                (Some(p), _) => output::write_json(create(p)?, &sim.summary),
                (None, Some(_)) => output::write_json(io::stdout().lock(), &sim.summary),
                (None, None) => output::write_json(io::stderr().lock(), &sim.summary),
            }
        }
        Command::Equilibrium { .. } => output::write_json(sink(out)?, &commands::equilibrium(&cfg)?),
        Command::Sweep { .. } => output::write_sweep_csv(sink(out)?, &commands::sweep(&cfg)?),
        Command::Certify { .. } => output::write_json(sink(out)?, &commands::certify(&cfg)?),
    }
}
