use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dilemma::cli::{cmd_compare, cmd_run, cmd_sweep, load_config};
use dilemma::{ConditionKind, ExperimentConfig, GroupAttribute};

#[derive(Parser)]
#[command(name = "dilemma", version, about = "Multi-agent Q-learning on an apple/garbage commons grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare learning conditions and population attributes.
    Compare {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the experiment over several reward-window lengths.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Window lengths to sweep, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50")]
        taus: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ConditionArg {
    Dynamic,
    Fixed,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum AttributeArg {
    Heterogeneous,
    HomogeneousHigh,
    HomogeneousLow,
}

/// Config source and field overrides; flags win over the file.
#[derive(Args)]
struct Overrides {
    /// JSON config file. Omitted fields keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    condition: Option<ConditionArg>,
    #[arg(long)]
    attribute: Option<AttributeArg>,
    /// Base seed; replica k uses base_seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replica seeds.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Steps per episode.
    #[arg(long)]
    trials: Option<usize>,
    /// Reward-window length.
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    agents: Option<usize>,
}

impl Overrides {
    fn build(&self) -> dilemma::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(c) = self.condition {
            cfg.condition = match c {
                ConditionArg::Dynamic => ConditionKind::Dynamic,
                ConditionArg::Fixed => ConditionKind::Fixed,
                ConditionArg::Random => ConditionKind::Random,
            };
        }
        if let Some(a) = self.attribute {
            cfg.attribute = match a {
                AttributeArg::Heterogeneous => GroupAttribute::Heterogeneous,
                AttributeArg::HomogeneousHigh => GroupAttribute::HomogeneousHigh,
                AttributeArg::HomogeneousLow => GroupAttribute::HomogeneousLow,
            };
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(n) = self.seeds {
            cfg.n_seeds = n;
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(n) = self.agents {
            cfg.n_agents = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> dilemma::Result<()> {
    let paths = match cli.command {
        Command::Run { overrides, out } => cmd_run(&overrides.build()?, &out)?,
        Command::Compare { overrides, out } => cmd_compare(&overrides.build()?, &out)?,
        Command::Sweep { overrides, taus, out } => cmd_sweep(&overrides.build()?, &taus, &out)?,
    };
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            eprintln!("  caused by: {s}");
            source = s.source();
        }
        std::process::exit(1);
    }
}
