//! The `bvol` experiment runner: config-driven training, boundary-volume
//! measurement, geometry checks and plotting.

pub mod arch;
pub mod commands;
pub mod config;
pub mod datasets;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{load, Overrides, PlotCommand};

#[derive(Debug, Parser)]
#[command(name = "bvol", version, about = "Decision-boundary volume experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config for the command; every field has a default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (for `plot`, the SVG file).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Checkpoint to read, or for `train` to write.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write its checkpoint and history.
    Train,
    /// Bvol, TrainBvol and LAdvBvol estimates for a checkpoint.
    Measure,
    /// An ε-sweep over one shared sample set, with an optional convergence table.
    Sweep,
    /// Train and measure over dropout rates and seeds.
    DropoutSweep,
    /// Run the geometry check suite; exits nonzero on any failure.
    Verify,
    /// Pairwise-distance statistics of a dataset.
    Diagnose,
    /// Render a CSV as an SVG plot.
    Plot(PlotArgs),
}

#[derive(Debug, Default, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    /// Error-bar half-width column.
    #[arg(long)]
    pub err: Option<String>,
    #[arg(long)]
    pub series: Option<String>,
    #[arg(long)]
    pub log_x: bool,
    #[arg(long)]
    pub log_y: bool,
    #[arg(long)]
    pub title: Option<String>,
}

impl PlotArgs {
    fn apply(&self, cfg: &mut PlotCommand) {
        if let Some(c) = &self.csv {
            cfg.csv = c.clone();
        }
        if let Some(x) = &self.x {
            cfg.x = x.clone();
        }
        if let Some(y) = &self.y {
            cfg.y = y.clone();
        }
        if let Some(e) = &self.err {
            cfg.err = Some(e.clone()).filter(|e| !e.is_empty());
        }
        if let Some(s) = &self.series {
            cfg.series = Some(s.clone());
        }
        cfg.log_x |= self.log_x;
        cfg.log_y |= self.log_y;
        if let Some(t) = &self.title {
            cfg.title = Some(t.clone());
        }
    }
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            model: self.model.clone(),
            data: self.data.clone(),
        }
    }
}

/// Runs one command, on a dedicated pool when `--threads` is given.
pub fn run(cli: &Cli) -> Result<()> {
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let cfg_path = cli.config.as_deref();
    let ov = cli.overrides();
    match &cli.command {
        Command::Train => {
            let o = commands::cmd_train(&load(cfg_path, &ov)?)?;
            let s = &o.summary;
            println!("model {} ({})", o.model.display(), s.model_hash);
            println!(
                "train accuracy {:.4}, test accuracy {}",
                s.train_accuracy,
                s.test_accuracy.map_or("n/a".into(), |a| format!("{a:.4}"))
            );
        }
        Command::Measure => {
            for r in commands::cmd_measure(&load(cfg_path, &ov)?)? {
                println!("{} eps={} p_hat={} ±{:.2e}", r.measure, r.epsilon, r.p_hat, r.clt_halfwidth_95);
            }
        }
        Command::Sweep => {
            let o = commands::cmd_sweep(&load(cfg_path, &ov)?)?;
            println!("{} sweep rows, {} convergence rows", o.sweep.len(), o.convergence.len());
        }
        Command::DropoutSweep => {
            let o = commands::cmd_dropout_sweep(&load(cfg_path, &ov)?)?;
            let failed = o.cells.iter().filter(|c| c.status != "ok").count();
            println!("{} rates, {} cells, {failed} failed", o.rates.len(), o.cells.len());
        }
        Command::Verify => {
            let report = commands::cmd_verify(&load(cfg_path, &ov)?)?;
            let failures: Vec<String> = report
                .failures()
                .map(|c| format!("  {}: expected {}, got {} (tolerance {}) {}", c.name, c.expected, c.actual, c.tolerance, c.detail))
                .collect();
            println!("{} checks, {} failed", report.checks.len(), failures.len());
            if !failures.is_empty() {
                bail!("geometry checks failed:\n{}", failures.join("\n"));
            }
        }
        Command::Diagnose => {
            let o = commands::cmd_diagnose(&load(cfg_path, &ov)?)?;
            if let Some(s) = &o.spread {
                println!("relative spread {:?} (min {}, max {})", s.statistic, s.min_distance, s.max_distance);
            }
            for ((a, b), s) in &o.min_distances {
                println!("classes {a}/{b}: min l∞ distance {}", s.min);
            }
        }
        Command::Plot(args) => {
            let ov = Overrides {
                out: cli.out.clone(),
                ..Overrides::default()
            };
            let mut cfg: PlotCommand = load(cfg_path, &ov)?;
            args.apply(&mut cfg);
            plot::cmd_plot(&cfg)?;
            println!("wrote {}", cfg.out.display());
        }
    }
    Ok(())
}
