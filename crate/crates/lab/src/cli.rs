//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::commands::{self, EpisodeRequest, RunOptions};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

#[derive(Debug, Parser)]
#[command(name = "perch", version, about = "Dynamic-perching experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Checkpoint to evaluate.
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Output directory; defaults to a timestamped run directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy and write a checkpoint.
    Train,
    /// Success maps of a checkpoint on every configured surface.
    Map,
    /// Model-based minimum normal velocity per acceleration limit.
    Threshold,
    /// Cell-wise difference of two map CSVs.
    Compare { a: PathBuf, b: PathBuf },
    /// Success maps under every hinge stiffness and damping pair.
    HingeSweep,
    /// One recorded episode.
    Episode {
        #[arg(long)]
        speed_m_s: f64,
        #[arg(long)]
        angle_deg: f64,
        #[arg(long, default_value_t = 0.0)]
        surface_deg: f64,
    },
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| LabError::Config(format!("`--{flag}` is required for this command")))
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let opts = RunOptions {
        seed: g.seed,
        workers: g.workers,
        out: g.out.clone(),
    };
    if let Command::Compare { a, b } = &cli.command {
        let (dir, s) = commands::cmd_compare(a, b, &opts)?;
        info!("mean |diff| {:.4}, max {:.4}", s.mean_abs_diff, s.max_abs_diff);
        println!("{}", dir.display());
        return Ok(());
    }
    let cfg = ExperimentConfig::load(need(&g.config, "config")?)?;
    let dir = match &cli.command {
        Command::Train => commands::cmd_train(&cfg, &opts)?.dir,
        Command::Map => commands::cmd_map(&cfg, need(&g.checkpoint, "checkpoint")?, &opts)?.dir,
        Command::Threshold => commands::cmd_threshold(&cfg, &opts)?.dir,
        Command::HingeSweep => {
            commands::cmd_hinge_sweep(&cfg, need(&g.checkpoint, "checkpoint")?, &opts)?.dir
        }
        Command::Episode {
            speed_m_s,
            angle_deg,
            surface_deg,
        } => commands::cmd_episode(
            &cfg,
            need(&g.checkpoint, "checkpoint")?,
            EpisodeRequest {
                speed_m_s: *speed_m_s,
                angle_deg: *angle_deg,
                surface_deg: *surface_deg,
            },
            &opts,
        )?,
        Command::Compare { .. } => unreachable!(),
    };
    println!("{}", dir.display());
    Ok(())
}
