//! Command-line driver for the `ddmag` solvers.

// `!(x > 0.0)` rejects NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ddmag",
    version,
    about = "Data-driven 2D magnetostatics of an E-I inductor"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Use measured `H,B` samples from this file as the material.
    #[arg(long, global = true, value_name = "PATH")]
    pub material_csv: Option<PathBuf>,
    /// Number of Brauer samples, overriding the config.
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<usize>,
    /// Only log errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Triangulate the geometry and write the mesh.
    Mesh,
    /// Run the data-driven solver.
    SolveDd,
    /// Run the Newton reference solver.
    SolveNewton,
    /// Newton once, then the data-driven solver for each data set size.
    Sweep {
        /// Ascending data set sizes, at least three.
        #[arg(long, value_delimiter = ',', required = true, value_name = "N,N,...")]
        n_list: Vec<usize>,
    },
    /// Compare a data-driven field file against a Newton field file.
    Compare {
        #[arg(long, value_name = "PATH")]
        dd: PathBuf,
        #[arg(long, value_name = "PATH")]
        newton: PathBuf,
    },
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(path) = &args.material_csv {
        if args.samples.is_some() {
            return Err(CliError::Usage(
                "--samples applies to Brauer data, not to --material-csv".into(),
            ));
        }
        cfg.material = config::MaterialSource::Csv { path: path.clone() };
    }
    if let Some(n) = args.samples {
        match &mut cfg.material {
            config::MaterialSource::Brauer { samples, .. } => *samples = n,
            config::MaterialSource::Csv { .. } => {
                return Err(CliError::Usage(
                    "--samples needs a Brauer material source".into(),
                ))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.common)?;
    match &cli.command {
        Command::Mesh => commands::cmd_mesh(&cfg),
        Command::SolveDd => commands::cmd_solve_dd(&cfg),
        Command::SolveNewton => commands::cmd_solve_newton(&cfg),
        Command::Sweep { n_list } => commands::cmd_sweep(&cfg, n_list),
        Command::Compare { dd, newton } => commands::cmd_compare(&cfg, dd, newton),
    }
}
