//! Command-line driver: one JSON config per run, one subcommand per stage.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig, SensitivitySettings};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "causal-bma", version, about = "Bayesian causal discovery and intervention ranking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of MCMC chains.
    #[arg(long)]
    pub chains: Option<usize>,
    /// MCMC steps per chain.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// PC skeleton and CPDAG.
    Discover(Common),
    /// MCMC over DAGs: posterior, trace and edge marginals.
    Sample(Common),
    /// Model-averaged value and risk of each intervention, with the Pareto front.
    Decide(Common),
    /// Sweep the prior probability of one edge.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Edge to sweep, `FROM,TO` by column name.
        #[arg(long, value_delimiter = ',')]
        edge: Option<Vec<String>>,
        /// Prior values, comma separated.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// End-to-end check against a known truth model.
    Validate(Common),
}

fn load(common: &Common) -> CliResult<RunConfig> {
    let ov = Overrides {
        seed: common.seed,
        out: common.out.clone(),
        chains: common.chains,
        steps: common.steps,
    };
    RunConfig::load(&common.config, &ov)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Discover(c) => commands::discover(&load(&c)?),
        Command::Sample(c) => commands::sample(&load(&c)?),
        Command::Decide(c) => commands::decide(&load(&c)?),
        Command::Sensitivity { common, edge, grid } => {
            let mut cfg = load(&common)?;
            if edge.is_some() || grid.is_some() {
                let base = cfg.sensitivity.take();
                let edge = match (edge, &base) {
                    (Some(e), _) if e.len() == 2 => [e[0].clone(), e[1].clone()],
                    (Some(_), _) => return Err(CliError::Config("`--edge`: expected FROM,TO".into())),
                    (None, Some(b)) => b.edge.clone(),
                    (None, None) => return Err(CliError::Config("`sensitivity.edge`: not given".into())),
                };
                cfg.sensitivity = Some(SensitivitySettings {
                    edge,
                    grid: grid.or_else(|| base.as_ref().map(|b| b.grid.clone())).unwrap_or_else(config::default_grid),
                    pair: base.and_then(|b| b.pair),
                });
                cfg.check()?;
            }
            commands::sensitivity(&cfg)
        }
        Command::Validate(c) => commands::validate(&load(&c)?),
    }
}
