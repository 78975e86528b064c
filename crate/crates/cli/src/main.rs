use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use lochain::{execute, Experiment, RunConfig};

#[derive(Parser)]
#[command(name = "lochain", version, about = "LO chain, phase-noise and multi-user uplink experiments")]
struct Cli {
    /// TOML run configuration; omitted keys take baseline values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides LOCHAIN_OUT_DIR and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo trials per simulated point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Symbols per user per trial.
    #[arg(long, global = true)]
    symbols: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Total LO power against elements per PLL.
    PowerSweep {
        /// Array size; the panel keeps a 4 mm pitch unless dimensions are set.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Required transmit power for each link column.
    LinkBudget,
    /// SINR against mm-wave PLL bandwidth.
    PllBwSweep,
    /// SINR against number of users, with the interference model fit.
    UserSweep {
        #[arg(long)]
        n_per_pll: Option<usize>,
    },
    /// SINR against elements per PLL for each user separation.
    SubarraySweep,
    /// BER against SNR with and without phase noise.
    BerCurve,
    /// One simulation with per-user metrics.
    SingleRun {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n_per_pll: Option<usize>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(t) = cli.trials {
        cfg.sim.n_trials = t;
    }
    if let Some(n) = cli.symbols {
        cfg.sim.n_symbols = n;
    }
    let exp = match cli.command {
        Command::PowerSweep { m } => {
            if let Some(m) = m {
                cfg.power.m = m;
            }
            Experiment::PowerSweep
        }
        Command::LinkBudget => Experiment::LinkBudget,
        Command::PllBwSweep => Experiment::PllBwSweep,
        Command::UserSweep { n_per_pll } => {
            if let Some(n) = n_per_pll {
                cfg.sim.n_per_pll = n;
            }
            Experiment::UserSweep
        }
        Command::SubarraySweep => Experiment::SubarraySweep,
        Command::BerCurve => Experiment::BerCurve,
        Command::SingleRun { k, n_per_pll } => {
            if let Some(k) = k {
                cfg.sim.k = k;
            }
            if let Some(n) = n_per_pll {
                cfg.sim.n_per_pll = n;
            }
            Experiment::SingleRun
        }
    };
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os("LOCHAIN_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| cfg.out_dir.clone());
    cfg.out_dir = out_dir.clone();

    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .context("configuring worker pool")?;
    }

    let outcome = execute(exp, &cfg, &out_dir)?;
    println!("{}", outcome.digest);
    log::info!(
        "run {} (config {}) wrote {} and {}",
        outcome.run_id,
        outcome.config_hash,
        outcome.csv.display(),
        outcome.json.display()
    );
    Ok(())
}
