use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use fe_bandit::commands::{cmd_bounds, cmd_compare, cmd_run, cmd_sweep, Overrides, SweepAxis};
use fe_bandit::policy::PolicySpec;

#[derive(Parser)]
#[command(name = "fe-bandit", version, about = "Forced-exploration bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides the config and FE_BANDIT_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Replication count override.
    #[arg(long)]
    replications: Option<usize>,
    /// Worker threads (0 uses every core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl From<Common> for Overrides {
    fn from(c: Common) -> Self {
        Self {
            out: c.out,
            seed: c.seed,
            replications: c.replications,
            workers: c.workers,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Replicate every policy of a config and write curves plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print regret bounds of the forced-exploration policies of a config.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rerun a config across horizons (T) or breakpoint counts (B_T).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a config, optionally replacing its policies, and rank the results.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Policy replacing the config's list; repeat for several.
        #[arg(long = "policy")]
        policies: Vec<PolicySpec>,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, common } => {
            let dir = cmd_run(&config, &common.into())?;
            eprintln!("wrote {}", dir.display());
        }
        Command::Bounds { config } => {
            cmd_bounds(&config)?;
        }
        Command::Sweep {
            config,
            axis,
            values,
            common,
        } => {
            let dir = cmd_sweep(&config, axis, &values, &common.into())?;
            eprintln!("wrote {}", dir.join("sweep.csv").display());
        }
        Command::Compare {
            config,
            policies,
            common,
        } => {
            let policies = (!policies.is_empty()).then_some(policies);
            let dir = cmd_compare(&config, policies, &common.into())?;
            eprintln!("wrote {}", dir.display());
        }
    }
    Ok(())
}
